//! Run configuration files. Sections mirror the pipeline parameter
//! structs key for key; anything left out keeps its default, except the
//! sensor physics, which have none and must be spelled out. Unknown keys
//! are collected and reported together. `--set section.key=value`
//! overrides go through the same setter as file lines.
//!
//! ```text
//! [sensor]
//! beta_x = 0.00274
//! ...
//! [icp]
//! max_correspondence_dist = auto
//! ```

use std::path::Path;

use crate::error::{Error, Result};
use crate::fusion::MergeParams;
use crate::pipeline::PipelineConfig;
use crate::registration::{IcpParams, IcpVariant};
use crate::sensor::{FilterParams, SensorNoiseModel};

struct Builder {
    lambda1: f64,
    lambda2: f64,
    beta_x: Option<f64>,
    beta_y: Option<f64>,
    alpha2: Option<f64>,
    alpha1: Option<f64>,
    alpha0: Option<f64>,
    filter: FilterParams,
    merge: MergeParams,
    icp: IcpParams,
    outer_iterations: usize,
    rot_eps: f64,
    trans_eps: f64,
    emit_intermediate: bool,
}

impl Default for Builder {
    fn default() -> Self {
        Self {
            lambda1: 1.0,
            lambda2: 1.0,
            beta_x: None,
            beta_y: None,
            alpha2: None,
            alpha1: None,
            alpha0: None,
            filter: FilterParams::default(),
            merge: MergeParams::default(),
            icp: IcpParams::default(),
            outer_iterations: 6,
            rot_eps: 1e-5,
            trans_eps: 1e-5,
            emit_intermediate: false,
        }
    }
}

enum SetErr {
    Unknown,
    Bad(String),
}

fn num(v: &str) -> std::result::Result<f64, SetErr> {
    v.parse()
        .map_err(|_| SetErr::Bad(format!("unreadable number {v:?}")))
}

fn int(v: &str) -> std::result::Result<usize, SetErr> {
    v.parse()
        .map_err(|_| SetErr::Bad(format!("unreadable integer {v:?}")))
}

fn boolean(v: &str) -> std::result::Result<bool, SetErr> {
    match v {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(SetErr::Bad(format!("expected true or false, got {v:?}"))),
    }
}

fn set(b: &mut Builder, section: &str, key: &str, value: &str) -> std::result::Result<(), SetErr> {
    match (section, key) {
        ("sensor", "lambda1") => b.lambda1 = num(value)?,
        ("sensor", "lambda2") => b.lambda2 = num(value)?,
        ("sensor", "beta_x") => b.beta_x = Some(num(value)?),
        ("sensor", "beta_y") => b.beta_y = Some(num(value)?),
        ("sensor", "alpha2") => b.alpha2 = Some(num(value)?),
        ("sensor", "alpha1") => b.alpha1 = Some(num(value)?),
        ("sensor", "alpha0") => b.alpha0 = Some(num(value)?),
        ("filter", "gamma") => b.filter.gamma = num(value)?,
        ("filter", "k") => b.filter.k = int(value)?,
        ("merge", "gate") => b.merge.gate = num(value)?,
        ("merge", "depth_ratio") => b.merge.depth_ratio = num(value)?,
        ("merge", "candidate_radius_sigma") => b.merge.candidate_radius_sigma = num(value)?,
        ("icp", "variant") => {
            b.icp.variant = value.parse::<IcpVariant>().map_err(|e| SetErr::Bad(e.to_string()))?
        }
        ("icp", "max_iterations") => b.icp.max_iterations = int(value)?,
        ("icp", "max_correspondence_dist") => {
            b.icp.max_correspondence_dist = if value == "auto" {
                None
            } else {
                Some(num(value)?)
            }
        }
        ("icp", "convergence_eps") => b.icp.convergence_eps = num(value)?,
        ("icp", "trim_fraction") => b.icp.trim_fraction = num(value)?,
        ("icp", "min_matched_fraction") => b.icp.min_matched_fraction = num(value)?,
        ("pipeline", "outer_iterations") => b.outer_iterations = int(value)?,
        ("pipeline", "rot_eps") => b.rot_eps = num(value)?,
        ("pipeline", "trans_eps") => b.trans_eps = num(value)?,
        ("pipeline", "emit_intermediate") => b.emit_intermediate = boolean(value)?,
        _ => return Err(SetErr::Unknown),
    }
    Ok(())
}

fn finish(path: &Path, b: Builder) -> Result<PipelineConfig> {
    let mut missing = Vec::new();
    for (name, v) in [
        ("sensor.beta_x", b.beta_x),
        ("sensor.beta_y", b.beta_y),
        ("sensor.alpha2", b.alpha2),
        ("sensor.alpha1", b.alpha1),
        ("sensor.alpha0", b.alpha0),
    ] {
        if v.is_none() {
            missing.push(name);
        }
    }
    if !missing.is_empty() {
        return Err(Error::format(
            path,
            format!("missing required keys: {}", missing.join(", ")),
        ));
    }
    let noise = SensorNoiseModel::new(
        b.lambda1,
        b.lambda2,
        b.beta_x.unwrap(),
        b.beta_y.unwrap(),
        b.alpha2.unwrap(),
        b.alpha1.unwrap(),
        b.alpha0.unwrap(),
    )?;
    let cfg = PipelineConfig {
        noise,
        filter: b.filter,
        merge: b.merge,
        icp: b.icp,
        outer_iterations: b.outer_iterations,
        convergence_pose_eps: (b.rot_eps, b.trans_eps),
        emit_intermediate: b.emit_intermediate,
    };
    cfg.validate()?;
    Ok(cfg)
}

/// Splits a `--set` argument of the form `section.key=value`.
pub fn parse_override(arg: &str) -> Result<(String, String, String)> {
    let err = || {
        Error::Config(format!(
            "override {arg:?} must look like section.key=value"
        ))
    };
    let (name, value) = arg.split_once('=').ok_or_else(err)?;
    let (section, key) = name.split_once('.').ok_or_else(err)?;
    if section.is_empty() || key.is_empty() || key.contains('.') {
        return Err(err());
    }
    Ok((section.to_string(), key.to_string(), value.trim().to_string()))
}

/// Parses configuration text, then applies `overrides` on top.
pub fn parse_config(
    path: &Path,
    text: &str,
    overrides: &[(String, String, String)],
) -> Result<PipelineConfig> {
    let mut b = Builder::default();
    let mut section: Option<String> = None;
    let mut unknown = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name.strip_suffix(']').ok_or_else(|| {
                Error::format(path, format!("line {no}: unclosed section header"))
            })?;
            section = Some(name.trim().to_string());
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::format(path, format!("line {no}: expected key = value"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        let section = section.as_deref().ok_or_else(|| {
            Error::format(path, format!("line {no}: key {key:?} before any [section]"))
        })?;
        match set(&mut b, section, key, value) {
            Ok(()) => {}
            Err(SetErr::Unknown) => unknown.push(format!("{section}.{key} (line {no})")),
            Err(SetErr::Bad(why)) => {
                return Err(Error::format(path, format!("line {no}: {section}.{key}: {why}")))
            }
        }
    }
    if !unknown.is_empty() {
        return Err(Error::format(
            path,
            format!("unknown keys: {}", unknown.join(", ")),
        ));
    }
    for (section, key, value) in overrides {
        match set(&mut b, section, key, value) {
            Ok(()) => {}
            Err(SetErr::Unknown) => {
                return Err(Error::Config(format!("unknown override key {section}.{key}")))
            }
            Err(SetErr::Bad(why)) => {
                return Err(Error::Config(format!("override {section}.{key}: {why}")))
            }
        }
    }
    finish(path, b)
}

pub fn read_config(path: &Path, overrides: &[(String, String, String)]) -> Result<PipelineConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(path, &text, overrides)
}

pub fn write_config(path: &Path, cfg: &PipelineConfig) -> Result<()> {
    let n = &cfg.noise;
    let dist = match cfg.icp.max_correspondence_dist {
        Some(d) => format!("{d}"),
        None => "auto".to_string(),
    };
    let out = format!(
        "# run configuration\n\
         \n\
         [sensor]\n\
         # lateral spread: lambda1 * beta * z per axis; axial noise:\n\
         # lambda2 * (alpha2 z^2 + alpha1 z + alpha0) meters\n\
         lambda1 = {}\n\
         lambda2 = {}\n\
         beta_x = {}\n\
         beta_y = {}\n\
         alpha2 = {}\n\
         alpha1 = {}\n\
         alpha0 = {}\n\
         \n\
         [filter]\n\
         # remove a depth sample when its k-th neighbor exceeds gamma times\n\
         # the expected grid spacing\n\
         gamma = {}\n\
         k = {}\n\
         \n\
         [merge]\n\
         gate = {}\n\
         depth_ratio = {}\n\
         candidate_radius_sigma = {}\n\
         \n\
         [icp]\n\
         variant = {}\n\
         max_iterations = {}\n\
         max_correspondence_dist = {dist}\n\
         convergence_eps = {}\n\
         trim_fraction = {}\n\
         min_matched_fraction = {}\n\
         \n\
         [pipeline]\n\
         outer_iterations = {}\n\
         # stop early once every pose moves less than these (radians, meters)\n\
         rot_eps = {}\n\
         trans_eps = {}\n\
         emit_intermediate = {}\n",
        n.lambda1,
        n.lambda2,
        n.beta_x,
        n.beta_y,
        n.alpha2,
        n.alpha1,
        n.alpha0,
        cfg.filter.gamma,
        cfg.filter.k,
        cfg.merge.gate,
        cfg.merge.depth_ratio,
        cfg.merge.candidate_radius_sigma,
        cfg.icp.variant,
        cfg.icp.max_iterations,
        cfg.icp.convergence_eps,
        cfg.icp.trim_fraction,
        cfg.icp.min_matched_fraction,
        cfg.outer_iterations,
        cfg.convergence_pose_eps.0,
        cfg.convergence_pose_eps.1,
        cfg.emit_intermediate,
    );
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
