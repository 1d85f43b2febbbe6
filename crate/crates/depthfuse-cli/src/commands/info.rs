use std::path::{Path, PathBuf};

use clap::Args;
use depthfuse::io::{read_config, read_gt_planes, read_manifest, read_ply, read_poses, read_ppm};
use depthfuse::io::depth::read_depth_file;
use depthfuse::{Error, Result};

#[derive(Args)]
pub struct InfoArgs {
    /// Files to summarize
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
}

fn summarize(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"DPF1") || bytes.starts_with(b"P5") {
        let raster = read_depth_file(path)?;
        let valid: Vec<f64> = raster
            .depths
            .iter()
            .copied()
            .filter(|z| z.is_finite())
            .collect();
        let span = match (
            valid.iter().copied().reduce(f64::min),
            valid.iter().copied().reduce(f64::max),
        ) {
            (Some(lo), Some(hi)) => format!("{lo:.3}..{hi:.3} m"),
            _ => "none".to_string(),
        };
        return Ok(format!(
            "depth raster, {}x{}, {} of {} valid, depths {span}",
            raster.width,
            raster.height,
            valid.len(),
            raster.depths.len()
        ));
    }
    if bytes.starts_with(b"P6") {
        let img = read_ppm(path)?;
        return Ok(format!("color image, {}x{}", img.width, img.height));
    }
    if bytes.starts_with(b"ply") {
        let points = read_ply(path)?;
        let colored = points.iter().filter(|p| p.color.is_some()).count();
        let merges: u64 = points.iter().map(|p| u64::from(p.merges)).sum();
        return Ok(format!(
            "fused cloud, {} points, {merges} merges recorded, {colored} colored",
            points.len()
        ));
    }

    // Text formats: dispatch on the first meaningful token.
    let text = std::str::from_utf8(&bytes)
        .map_err(|_| Error::format(path, "unrecognized binary content"))?;
    let first = text
        .lines()
        .filter_map(|l| l.split('#').next().unwrap_or("").split_whitespace().next())
        .next()
        .unwrap_or("");
    match first {
        "units" | "intrinsics" | "range" | "poses" | "view" => {
            let m = read_manifest(path)?;
            let k = &m.intrinsics;
            Ok(format!(
                "manifest, {} views, {}x{} images, range {}..{} m, poses {}",
                m.views.len(),
                k.width,
                k.height,
                m.range.min,
                m.range.max,
                m.poses.display()
            ))
        }
        "rect" | "plane" => {
            let gt = read_gt_planes(path)?;
            let bounded = gt.planes.iter().filter(|p| p.extent.is_some()).count();
            Ok(format!(
                "ground-truth planes, {} total, {bounded} bounded",
                gt.planes.len()
            ))
        }
        s if s.starts_with('[') => {
            let cfg = read_config(path, &[])?;
            Ok(format!(
                "run configuration, {} variant, {} outer iterations, gate {}",
                cfg.icp.variant, cfg.outer_iterations, cfg.merge.gate
            ))
        }
        s if s.parse::<u32>().is_ok() => {
            let poses = read_poses(path)?;
            Ok(format!("pose list, {} entries", poses.len()))
        }
        _ => Err(Error::format(path, "unrecognized file content")),
    }
}

pub fn run(args: InfoArgs) -> Result<()> {
    for path in &args.paths {
        let line = summarize(path)?;
        println!("{}: {line}", path.display());
    }
    Ok(())
}
