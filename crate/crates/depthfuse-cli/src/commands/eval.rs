use std::path::PathBuf;

use clap::Args;
use depthfuse::evalkit::{
    bounding_box_min, compression_ratio, cumulative_error_curve, jaccard_index,
    rms_plane_distance, voxelize, DEFAULT_GT_SAMPLE_SPACING_M, DEFAULT_VOXEL_SIZES_M,
};
use depthfuse::fusion::FusedCloud;
use depthfuse::io::{read_gt_planes, read_ply};
use depthfuse::{Error, Result};

#[derive(Args)]
pub struct EvalArgs {
    /// Fused cloud (PLY)
    #[arg(long)]
    pub cloud: PathBuf,
    /// Ground-truth plane file
    #[arg(long)]
    pub gt: PathBuf,
    /// Error-curve thresholds, meters
    #[arg(
        long,
        value_delimiter = ',',
        default_value = "0.001,0.002,0.005,0.01,0.02,0.05"
    )]
    pub thresholds: Vec<f64>,
    /// Voxel edge lengths for the overlap metrics, meters
    #[arg(long, value_delimiter = ',')]
    pub voxel_sizes: Option<Vec<f64>>,
    /// Ground-truth sampling spacing, meters
    #[arg(long, default_value_t = DEFAULT_GT_SAMPLE_SPACING_M)]
    pub gt_spacing: f64,
    /// Write the error curve as CSV here
    #[arg(long)]
    pub curve_out: Option<PathBuf>,
    /// Also write the printed metrics here
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
}

pub fn run(args: EvalArgs) -> Result<()> {
    let points = read_ply(&args.cloud)?;
    let gt = read_gt_planes(&args.gt)?;
    // Cell size only drives merge lookups, which eval never performs.
    let mut cloud = FusedCloud::new(0.05);
    let positions: Vec<_> = points.iter().map(|p| p.p).collect();
    for pt in points {
        cloud.insert(pt);
    }

    let rms = rms_plane_distance(&cloud, &gt)?;
    let curve = cumulative_error_curve(&cloud, &gt, &args.thresholds)?;

    let gt_samples = gt.sample(args.gt_spacing)?;
    let origin = bounding_box_min(&gt_samples)?;
    let sizes = args
        .voxel_sizes
        .unwrap_or_else(|| DEFAULT_VOXEL_SIZES_M.to_vec());
    let mut jaccards = Vec::new();
    for &size in &sizes {
        let recon = voxelize(&positions, size, &origin)?;
        let truth = voxelize(&gt_samples, size, &origin)?;
        jaccards.push((size, jaccard_index(&recon, &truth)?));
    }

    let mut metrics = String::new();
    metrics.push_str(&format!("points = {}\n", positions.len()));
    metrics.push_str(&format!("rms_plane_distance_m = {rms}\n"));
    metrics.push_str(&format!("gt_samples = {}\n", gt_samples.len()));
    metrics.push_str(&format!("gt_spacing_m = {}\n", args.gt_spacing));
    metrics.push_str(&format!(
        "compression_ratio = {}\n",
        compression_ratio(gt_samples.len(), positions.len())?
    ));
    for (size, j) in &jaccards {
        metrics.push_str(&format!("jaccard_{size} = {j}\n"));
    }
    for (tau, frac) in &curve {
        metrics.push_str(&format!("within_{tau} = {frac}\n"));
    }
    print!("{metrics}");

    if let Some(p) = &args.metrics_out {
        std::fs::write(p, &metrics).map_err(|e| Error::io(p, e))?;
    }
    if let Some(p) = &args.curve_out {
        let mut csv = String::from("threshold_m,fraction\n");
        for (tau, frac) in &curve {
            csv.push_str(&format!("{tau},{frac}\n"));
        }
        std::fs::write(p, csv).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}
