//! File formats and dataset plumbing: depth rasters, pose lists, fused
//! clouds as PLY, ground-truth plane sets, dataset manifests, run
//! configuration, and the per-iteration report. Readers name the byte or
//! line where parsing stopped and reject trailing garbage; writers and
//! readers round-trip losslessly.

pub mod color;
pub mod config;
pub mod depth;
pub mod gtplanes;
pub mod manifest;
pub mod ply;
pub mod poses;
pub mod report;

pub use color::{read_ppm, write_ppm, ColorImage};
pub use config::{parse_config, parse_override, read_config, write_config};
pub use depth::{read_depth_file, write_depth_dpf, DepthRaster};
pub use gtplanes::{read_gt_planes, write_gt_planes};
pub use manifest::{load_dataset, read_manifest, write_manifest, Manifest, ManifestView};
pub use ply::{read_ply, write_ply};
pub use poses::{read_poses, write_poses};
pub use report::{report_csv, report_text, write_report_csv, write_report_text};
