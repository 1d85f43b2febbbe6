//! End-to-end orchestration: pre-filter every map once, then alternate
//! full refusion with pose refinement until the poses settle or the
//! iteration budget runs out.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::exec;
use crate::fusion::{FusedCloud, MergeParams};
use crate::geometry::{rotation_angle, DepthMap, DepthRange, Pose};
use crate::registration::{refine_all_poses, IcpParams};
use crate::sensor::{prefilter, FilterParams, PrefilterStats, SensorNoiseModel};

/// Everything `run` needs besides the maps themselves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineConfig {
    pub noise: SensorNoiseModel,
    pub filter: FilterParams,
    pub merge: MergeParams,
    pub icp: IcpParams,
    /// Upper bound on fuse-refine rounds.
    pub outer_iterations: usize,
    /// Early-stop thresholds on per-map pose change, as
    /// (rotation radians, translation meters). The loop ends once every
    /// map's refinement step stays below both.
    pub convergence_pose_eps: (f64, f64),
    /// Keep a copy of each round's post-filtered cloud in the report.
    pub emit_intermediate: bool,
}

impl PipelineConfig {
    /// Shipped defaults around the given sensor model: six rounds,
    /// convergence at 1e-5 rad / 1e-5 m.
    pub fn new(noise: SensorNoiseModel) -> Self {
        Self {
            noise,
            filter: FilterParams::default(),
            merge: MergeParams::default(),
            icp: IcpParams::default(),
            outer_iterations: 6,
            convergence_pose_eps: (1e-5, 1e-5),
            emit_intermediate: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.outer_iterations < 1 {
            return Err(Error::Config(
                "outer_iterations must be at least 1".into(),
            ));
        }
        let (rot, trans) = self.convergence_pose_eps;
        if rot < 0.0 || !rot.is_finite() || trans < 0.0 || !trans.is_finite() {
            return Err(Error::Config(format!(
                "convergence thresholds must be finite and nonnegative, got ({rot}, {trans})"
            )));
        }
        self.filter.validate()?;
        self.merge.validate()?;
        self.icp.validate()
    }
}

/// What one fuse-refine round did.
#[derive(Debug, Clone)]
pub struct IterationStats {
    /// 1-based round number.
    pub iteration: usize,
    /// Cloud size after post-filtering.
    pub points: usize,
    /// Merge events during this round's fusion.
    pub merges: usize,
    /// Visibility-violation events during this round's fusion.
    pub violations: usize,
    /// Points dropped by the post-filter.
    pub removed: usize,
    /// Per-map (rotation radians, translation meters) applied by the
    /// refinement step. Empty when the round did not refine (final round).
    pub pose_deltas: Vec<(f64, f64)>,
    /// Maps whose refinement failed, with the reason. Their poses carry
    /// over unchanged.
    pub refine_errors: Vec<(usize, String)>,
    pub fuse_seconds: f64,
    pub postfilter_seconds: f64,
    pub refine_seconds: f64,
}

impl IterationStats {
    /// Largest per-map rotation delta in radians, 0.0 when none.
    pub fn max_rot_delta(&self) -> f64 {
        self.pose_deltas.iter().map(|d| d.0).fold(0.0, f64::max)
    }

    /// Largest per-map translation delta in meters, 0.0 when none.
    pub fn max_trans_delta(&self) -> f64 {
        self.pose_deltas.iter().map(|d| d.1).fold(0.0, f64::max)
    }
}

/// Observability record of a full run.
#[derive(Debug, Clone, Default)]
pub struct PipelineReport {
    /// Per-map pre-filter outcome, in input order.
    pub prefilter: Vec<PrefilterStats>,
    pub prefilter_seconds: f64,
    pub iterations: Vec<IterationStats>,
    /// The round whose refinement left every pose within the convergence
    /// thresholds, when that fired before the iteration budget did.
    pub converged_early: Option<usize>,
    /// Post-filtered cloud of every round, oldest first. Filled only when
    /// `emit_intermediate` is set.
    pub intermediate: Vec<FusedCloud>,
}

fn combined_range(maps: &[DepthMap]) -> Result<DepthRange> {
    let min = maps.iter().map(|m| m.range.min).fold(f64::INFINITY, f64::min);
    let max = maps.iter().map(|m| m.range.max).fold(0.0, f64::max);
    DepthRange::new(min, max)
}

/// Runs the whole pipeline on `maps`: pre-filter once per map, then up to
/// `outer_iterations` rounds of fuse-all, post-filter, refine-poses. Maps
/// fuse in input order, which the merge logic makes result-affecting.
/// Returns the final cloud, the final per-map poses, and the report.
///
/// The loop ends early once a refinement step moves every pose by less
/// than `convergence_pose_eps`; the cloud from that round is final and the
/// sub-threshold refined poses are returned. Identical inputs and config
/// produce bitwise-identical clouds and poses.
///
/// Per-map registration failures are recorded in the report and leave that
/// map's pose unchanged; only an entirely unusable input set is an error.
pub fn run(
    maps: &[DepthMap],
    cfg: &PipelineConfig,
) -> Result<(FusedCloud, Vec<Pose>, PipelineReport)> {
    cfg.validate()?;
    if maps.is_empty() {
        return Err(Error::Input("pipeline needs at least one depth map".into()));
    }

    let t0 = Instant::now();
    let mut work = Vec::with_capacity(maps.len());
    let mut prefilter_stats = Vec::with_capacity(maps.len());
    for outcome in exec::map_slice(maps, |m| prefilter(m, &cfg.filter)) {
        let (dm, stats) = outcome?;
        work.push(dm);
        prefilter_stats.push(stats);
    }
    let prefilter_seconds = t0.elapsed().as_secs_f64();
    if work.iter().map(|m| m.valid_count()).sum::<usize>() == 0 {
        return Err(Error::Input(
            "every depth map is empty after pre-filtering".into(),
        ));
    }

    let range = combined_range(&work)?;
    let icp = cfg.icp.resolved(&cfg.noise, &range)?;
    let mut report = PipelineReport {
        prefilter: prefilter_stats,
        prefilter_seconds,
        ..PipelineReport::default()
    };

    let mut cloud = FusedCloud::for_model(&cfg.noise, &range, &cfg.merge)?;
    for it in 1..=cfg.outer_iterations {
        let t = Instant::now();
        cloud = FusedCloud::for_model(&cfg.noise, &range, &cfg.merge)?;
        let mut merges = 0;
        let mut violations = 0;
        for dm in &work {
            let stats = cloud.fuse_map(dm, &cfg.noise, &cfg.merge)?;
            merges += stats.merged;
            violations += stats.violations;
        }
        let fuse_seconds = t.elapsed().as_secs_f64();

        let t = Instant::now();
        let removed = cloud.postfilter();
        let postfilter_seconds = t.elapsed().as_secs_f64();

        let mut stats = IterationStats {
            iteration: it,
            points: cloud.len(),
            merges,
            violations,
            removed,
            pose_deltas: Vec::new(),
            refine_errors: Vec::new(),
            fuse_seconds,
            postfilter_seconds,
            refine_seconds: 0.0,
        };
        if cfg.emit_intermediate {
            report.intermediate.push(cloud.clone());
        }
        if it == cfg.outer_iterations {
            report.iterations.push(stats);
            break;
        }

        let t = Instant::now();
        let refined = refine_all_poses(&work, &cloud, &icp);
        stats.refine_seconds = t.elapsed().as_secs_f64();
        let (rot_eps, trans_eps) = cfg.convergence_pose_eps;
        let mut all_below = true;
        for (i, r) in refined.into_iter().enumerate() {
            let rot = rotation_angle(&(r.pose.rotation() * work[i].pose.rotation().inverse()));
            let trans = (r.pose.translation() - work[i].pose.translation()).norm();
            stats.pose_deltas.push((rot, trans));
            if let Some(reason) = r.error {
                stats.refine_errors.push((i, reason));
            }
            if rot >= rot_eps || trans >= trans_eps {
                all_below = false;
            }
            work[i].pose = r.pose;
        }
        report.iterations.push(stats);
        if all_below {
            report.converged_early = Some(it);
            break;
        }
    }

    let poses = work.iter().map(|m| m.pose).collect();
    Ok((cloud, poses, report))
}

/// Fraction of the valid input measurements that the cloud no longer
/// carries: `1 - len(cloud) / sum(valid pixels of maps)`. Pass the maps as
/// fused (post-filtering included if that is what fed the fusion). Zero
/// input measurements give 0.0.
pub fn reduction_ratio(maps: &[DepthMap], cloud: &FusedCloud) -> f64 {
    reduction_ratio_from_counts(maps.iter().map(|m| m.valid_count()).sum(), cloud.len())
}

/// `1 - final_points / input_points`, the fraction shed between input
/// measurements and fused cloud. Zero input points give 0.0.
pub fn reduction_ratio_from_counts(input_points: usize, final_points: usize) -> f64 {
    if input_points == 0 {
        return 0.0;
    }
    1.0 - final_points as f64 / input_points as f64
}
