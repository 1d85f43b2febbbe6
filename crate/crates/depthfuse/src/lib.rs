//! Fuses registered depth maps into a non-redundant 3-D point cloud and
//! refines the camera poses against it.
//!
//! Every depth measurement carries an anisotropic covariance from a
//! depth-dependent sensor model, so nearby measurements of the same
//! surface patch can be tested for redundancy with a Mahalanobis gate
//! and merged into a single weighted estimate instead of piling up.
//! After fusion the poses are re-registered to the merged cloud with
//! point-to-plane ICP and the cycle repeats until the pose updates
//! stall.
//!
//! Typical use goes through [`pipeline::run`]:
//!
//! ```no_run
//! use depthfuse::pipeline::{run, PipelineConfig};
//! use depthfuse::sensor::SensorNoiseModel;
//! # fn load_maps() -> Vec<depthfuse::geometry::DepthMap> { Vec::new() }
//!
//! let noise = SensorNoiseModel::new(1.0, 1.0, 2.74e-3, 2.74e-3, 7e-4, 0.0, 8e-4).unwrap();
//! let cfg = PipelineConfig::new(noise);
//! let maps = load_maps();
//! let (cloud, poses, report) = run(&maps, &cfg).unwrap();
//! println!("{} points, {} poses, {} rounds", cloud.len(), poses.len(), report.iterations.len());
//! ```
//!
//! The stages are exposed individually: [`sensor::prefilter`] rejects
//! flying pixels, [`fusion::FusedCloud`] accumulates and merges
//! measurements, [`registration::icp_align`] estimates one rigid
//! correction, [`evalkit`] scores a cloud against ground-truth planes,
//! and [`synth`] renders test scenes. File formats live under [`io`].
//!
//! The heavy loops run on rayon when the default `parallel` feature is
//! on and fall back to plain iteration when it is off; results are
//! identical either way.

pub mod error;
pub mod evalkit;
mod exec;
pub mod fusion;
pub mod geometry;
pub mod io;
pub mod pipeline;
pub mod registration;
pub mod sensor;
pub mod spatial;
pub mod synth;

pub use error::{Error, Result};
pub use fusion::{FusedCloud, FusedPoint, MergeParams};
pub use geometry::{DepthMap, DepthRange, Intrinsics, Pose, ViewId};
pub use pipeline::{PipelineConfig, PipelineReport};
pub use registration::{IcpParams, IcpVariant};
pub use sensor::{FilterParams, SensorNoiseModel};
