use std::path::PathBuf;
use std::time::Instant;

use clap::Args;
use depthfuse::io::{write_ply, write_report_csv, write_report_text};
use depthfuse::pipeline::{self, reduction_ratio_from_counts};
use depthfuse::Result;

#[derive(Args)]
pub struct FuseArgs {
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
    /// Write the per-iteration CSV report here
    #[arg(long)]
    pub report_csv: Option<PathBuf>,
    /// Write the key-value run summary here
    #[arg(long)]
    pub report: Option<PathBuf>,
}

pub fn run(args: FuseArgs) -> Result<()> {
    let started = Instant::now();
    let (mut cfg, maps) = super::load_run(&args.manifest, &args.config, &args.set)?;
    // A fuse run is exactly one round: no pose refinement happens after it.
    cfg.outer_iterations = 1;
    let input_valid: usize = maps.iter().map(|m| m.valid_count()).sum();
    let (cloud, _, report) = pipeline::run(&maps, &cfg)?;
    write_ply(&args.out, &cloud, !args.ascii)?;
    if let Some(p) = &args.report_csv {
        write_report_csv(p, &report)?;
    }
    if let Some(p) = &args.report {
        write_report_text(p, &report, &cfg)?;
    }

    let removed: usize = report.prefilter.iter().map(|s| s.removed).sum();
    let fused = input_valid - removed;
    println!("views = {}", maps.len());
    println!("input_valid_depths = {input_valid}");
    println!("prefilter_removed = {removed}");
    println!("points = {}", cloud.len());
    println!(
        "reduction_ratio = {:.6}",
        reduction_ratio_from_counts(fused, cloud.len())
    );
    println!("cloud = {}", args.out.display());
    println!("seconds = {:.3}", started.elapsed().as_secs_f64());
    Ok(())
}
