pub mod eval;
pub mod fuse;
pub mod info;
pub mod refine;
pub mod synth;

use std::path::Path;

use depthfuse::io::{load_dataset, parse_override, read_config};
use depthfuse::pipeline::PipelineConfig;
use depthfuse::{geometry::DepthMap, Result};

/// Loads the configuration with `--set` overrides applied, then the
/// dataset the manifest names.
pub fn load_run(
    manifest: &Path,
    config: &Path,
    set: &[String],
) -> Result<(PipelineConfig, Vec<DepthMap>)> {
    let overrides = set
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<Vec<_>>>()?;
    let cfg = read_config(config, &overrides)?;
    let (_, maps) = load_dataset(manifest)?;
    Ok((cfg, maps))
}
