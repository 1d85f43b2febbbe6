use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use depthfuse::io::{write_ply, write_poses, write_report_csv, write_report_text};
use depthfuse::pipeline;
use depthfuse::{Error, Result};

#[derive(Args)]
pub struct RefineArgs {
    /// Dataset manifest
    #[arg(long)]
    pub manifest: PathBuf,
    /// Run configuration file
    #[arg(long)]
    pub config: PathBuf,
    /// Override one configuration value; repeatable
    #[arg(long = "set", value_name = "SECTION.KEY=VALUE")]
    pub set: Vec<String>,
    /// Output cloud
    #[arg(long, default_value = "cloud.ply")]
    pub out: PathBuf,
    /// Write the cloud as ASCII PLY instead of binary
    #[arg(long)]
    pub ascii: bool,
    /// Write the refined poses here
    #[arg(long, default_value = "poses_refined.txt")]
    pub poses_out: PathBuf,
    /// Write the per-iteration CSV report here
    #[arg(long)]
    pub report_csv: Option<PathBuf>,
    /// Write the key-value run summary here
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Keep each round's cloud as iter_NN.ply in this directory
    #[arg(long)]
    pub intermediate_dir: Option<PathBuf>,
}

pub fn run(args: RefineArgs) -> Result<()> {
    let started = Instant::now();
    let (mut cfg, maps) = super::load_run(&args.manifest, &args.config, &args.set)?;
    if args.intermediate_dir.is_some() {
        cfg.emit_intermediate = true;
    }
    let (cloud, poses, report) = pipeline::run(&maps, &cfg)?;
    write_ply(&args.out, &cloud, !args.ascii)?;
    let listed: Vec<_> = maps.iter().map(|m| m.view).zip(poses).collect();
    write_poses(&args.poses_out, &listed)?;
    if let Some(dir) = &args.intermediate_dir {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (i, c) in report.intermediate.iter().enumerate() {
            write_ply(&dir.join(format!("iter_{:02}.ply", i + 1)), c, !args.ascii)?;
        }
    }
    if let Some(p) = &args.report_csv {
        write_report_csv(p, &report)?;
    }
    if let Some(p) = &args.report {
        write_report_text(p, &report, &cfg)?;
    }

    println!("views = {}", maps.len());
    println!("iterations = {}", report.iterations.len());
    match report.converged_early {
        Some(it) => println!("converged_early = after iteration {it}"),
        None => println!("converged_early = no"),
    }
    // The final round only fuses, so the last pose motion lives in the
    // last round that ran a refine.
    if let Some(last) = report.iterations.iter().rev().find(|it| !it.pose_deltas.is_empty()) {
        println!(
            "last_pose_delta = {:.4} deg / {:.3} mm",
            last.max_rot_delta().to_degrees(),
            last.max_trans_delta() * 1e3
        );
    }
    let failures: usize = report.iterations.iter().map(|it| it.refine_errors.len()).sum();
    println!("refine_failures = {failures}");
    println!("points = {}", cloud.len());
    println!("cloud = {}", args.out.display());
    println!("poses = {}", args.poses_out.display());
    println!("seconds = {:.3}", started.elapsed().as_secs_f64());
    Ok(())
}
