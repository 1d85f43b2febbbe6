//! ICP alignment of backprojected depth maps against the fused cloud.
//!
//! Each map is refined independently: its backprojection is aligned to the
//! cloud with trimmed ICP (point-to-plane by default), and the resulting
//! rigid increment is folded into the camera pose. Alignments that match
//! too few points fail and leave the pose untouched.

use std::str::FromStr;

use nalgebra::{Matrix3, Matrix6, Rotation3, Vector3, Vector6};

use crate::error::{Error, Result};
use crate::exec;
use crate::fusion::FusedCloud;
use crate::geometry::{backproject, DepthMap, DepthRange, OrientedPoint, Pose};
use crate::sensor::SensorNoiseModel;
use crate::spatial::HashGrid;

/// Error metric minimized by the alignment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum IcpVariant {
    /// Distance along the target normal (Chen-Medioni). Converges fast on
    /// scenes dominated by planar structure.
    #[default]
    PointToPlane,
    /// Euclidean distance to the matched point (closed-form orthogonal
    /// alignment per iteration).
    PointToPoint,
}

impl FromStr for IcpVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "point-to-plane" => Ok(IcpVariant::PointToPlane),
            "point-to-point" => Ok(IcpVariant::PointToPoint),
            other => Err(Error::Config(format!(
                "unknown icp variant {other:?}, expected point-to-plane or point-to-point"
            ))),
        }
    }
}

impl std::fmt::Display for IcpVariant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            IcpVariant::PointToPlane => "point-to-plane",
            IcpVariant::PointToPoint => "point-to-point",
        })
    }
}

/// Alignment parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IcpParams {
    /// Upper bound on solve-and-apply steps.
    pub max_iterations: usize,
    /// Correspondence gate in meters. `None` derives it from the sensor
    /// model: five times the median axial sigma over the depth range.
    pub max_correspondence_dist: Option<f64>,
    /// Stop once an accepted step improves RMS by less than this (meters).
    pub convergence_eps: f64,
    pub variant: IcpVariant,
    /// Fraction of worst-residual correspondences excluded from each solve.
    /// Zero disables trimming.
    pub trim_fraction: f64,
    /// Below this matched fraction the alignment fails.
    pub min_matched_fraction: f64,
}

impl Default for IcpParams {
    fn default() -> Self {
        Self {
            max_iterations: 10,
            max_correspondence_dist: None,
            convergence_eps: 1e-6,
            variant: IcpVariant::PointToPlane,
            trim_fraction: 0.10,
            min_matched_fraction: 0.05,
        }
    }
}

impl IcpParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("max_iterations must be at least 1".into()));
        }
        if let Some(d) = self.max_correspondence_dist {
            if !(d > 0.0 && d.is_finite()) {
                return Err(Error::Config(format!(
                    "max_correspondence_dist must be positive and finite, got {d}"
                )));
            }
        }
        if !(self.convergence_eps >= 0.0 && self.convergence_eps.is_finite()) {
            return Err(Error::Config(format!(
                "convergence_eps must be nonnegative, got {}",
                self.convergence_eps
            )));
        }
        if !(0.0..1.0).contains(&self.trim_fraction) {
            return Err(Error::Config(format!(
                "trim_fraction must lie in [0, 1), got {}",
                self.trim_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.min_matched_fraction) {
            return Err(Error::Config(format!(
                "min_matched_fraction must lie in [0, 1], got {}",
                self.min_matched_fraction
            )));
        }
        Ok(())
    }

    /// The correspondence gate in meters: the explicit value when set,
    /// otherwise five times the median axial sigma over `range`.
    pub fn correspondence_dist(
        &self,
        model: &SensorNoiseModel,
        range: &DepthRange,
    ) -> Result<f64> {
        if let Some(d) = self.max_correspondence_dist {
            return Ok(d);
        }
        model.validate_range(range)?;
        let mut sigmas: Vec<f64> = (0..=100)
            .map(|i| model.sigma_z(range.min + (range.max - range.min) * i as f64 / 100.0))
            .collect();
        sigmas.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        Ok(5.0 * sigmas[50])
    }

    /// Copy of `self` with the correspondence gate made explicit.
    pub fn resolved(mut self, model: &SensorNoiseModel, range: &DepthRange) -> Result<Self> {
        self.max_correspondence_dist = Some(self.correspondence_dist(model, range)?);
        Ok(self)
    }
}

/// Outcome of one alignment. The accumulated transform maps the original
/// source points onto the target: `rhat * p + that`.
#[derive(Debug, Clone, Copy)]
pub struct IcpResult {
    pub rhat: Rotation3<f64>,
    pub that: Vector3<f64>,
    /// RMS residual at the initial state, over matched correspondences in
    /// the variant's own metric.
    pub rms_before: f64,
    /// RMS residual at the accepted final state. Never above `rms_before`.
    pub rms_after: f64,
    /// Matched fraction at the accepted final state.
    pub matched_fraction: f64,
    /// Solve-and-apply steps taken.
    pub iterations_run: usize,
}

/// Least-squares rigid increment for correspondences `(p, q, n)` minimizing
/// the point-to-plane error sum(((p' - q) . n)^2) with p' = R p + t,
/// linearized around the identity. `None` when the normal equations are
/// rank-deficient (geometry that does not constrain all six degrees).
pub fn solve_point_to_plane(
    pairs: &[(Vector3<f64>, Vector3<f64>, Vector3<f64>)],
) -> Option<(Rotation3<f64>, Vector3<f64>)> {
    if pairs.is_empty() {
        return None;
    }
    let mut a = Matrix6::<f64>::zeros();
    let mut b = Vector6::<f64>::zeros();
    for (p, q, n) in pairs {
        let c = p.cross(n);
        let mut j = Vector6::zeros();
        j.fixed_rows_mut::<3>(0).copy_from(&c);
        j.fixed_rows_mut::<3>(3).copy_from(n);
        let r = (p - q).dot(n);
        a += j * j.transpose();
        b += -r * j;
    }
    let x = a.cholesky()?.solve(&b);
    let omega = Vector3::new(x[0], x[1], x[2]);
    let t = Vector3::new(x[3], x[4], x[5]);
    Some((Rotation3::from_scaled_axis(omega), t))
}

/// Closed-form rigid transform for correspondences `(p, q)` minimizing
/// sum(|R p + t - q|^2) via SVD of the cross-covariance, with the
/// reflection case corrected. `None` for fewer than three pairs or a
/// failed decomposition.
pub fn solve_point_to_point(
    pairs: &[(Vector3<f64>, Vector3<f64>)],
) -> Option<(Rotation3<f64>, Vector3<f64>)> {
    if pairs.len() < 3 {
        return None;
    }
    let inv_n = 1.0 / pairs.len() as f64;
    let p_bar = pairs.iter().map(|(p, _)| p).sum::<Vector3<f64>>() * inv_n;
    let q_bar = pairs.iter().map(|(_, q)| q).sum::<Vector3<f64>>() * inv_n;
    let mut h = Matrix3::<f64>::zeros();
    for (p, q) in pairs {
        h += (p - p_bar) * (q - q_bar).transpose();
    }
    let svd = h.svd(true, true);
    let u = svd.u?;
    let v = svd.v_t?.transpose();
    let mut d = Matrix3::identity();
    d[(2, 2)] = (v * u.transpose()).determinant().signum();
    let r = Rotation3::from_matrix_unchecked(v * d * u.transpose());
    let t = q_bar - r * p_bar;
    Some((r, t))
}

struct Correspondence {
    src: usize,
    tgt: u32,
    /// Signed distance along the target normal for point-to-plane,
    /// Euclidean distance for point-to-point.
    residual: f64,
}

/// Aligns `source` onto `target`. Iterates: match each source point to its
/// nearest cloud point within the gate, evaluate RMS, solve a rigid
/// increment on the best correspondences, apply. A step that worsens RMS is
/// reverted and ends the loop, so the accepted RMS never increases. The RMS
/// is computed over every matched correspondence; trimming affects only the
/// solve.
pub fn icp_align(
    source: &[OrientedPoint],
    target: &FusedCloud,
    params: &IcpParams,
) -> Result<IcpResult> {
    params.validate()?;
    let Some(max_corr) = params.max_correspondence_dist else {
        return Err(Error::Config(
            "max_correspondence_dist is unset; set a value or derive one from the sensor model"
                .into(),
        ));
    };
    if source.is_empty() {
        return Err(Error::Input("alignment source has no points".into()));
    }
    if target.is_empty() {
        return Err(Error::Input("alignment target cloud is empty".into()));
    }

    let tgt = target.points();
    let grid = HashGrid::build(max_corr, &target.positions());

    let mut cur: Vec<Vector3<f64>> = source.iter().map(|s| s.p).collect();
    let mut rot = Rotation3::identity();
    let mut trans = Vector3::zeros();
    let mut snapshot: Option<(Rotation3<f64>, Vector3<f64>)> = None;
    let mut best_rms = f64::INFINITY;
    let mut rms_before = 0.0;
    let mut matched_fraction = 0.0;
    let mut iterations_run = 0usize;

    loop {
        let hits = exec::map_slice(&cur, |p| grid.nearest_within(p, max_corr));
        let mut corr = Vec::with_capacity(cur.len());
        for (src, hit) in hits.into_iter().enumerate() {
            let Some((id, dist)) = hit else { continue };
            let residual = match params.variant {
                IcpVariant::PointToPlane => {
                    let t = &tgt[id as usize];
                    (cur[src] - t.p).dot(&t.n)
                }
                IcpVariant::PointToPoint => dist,
            };
            corr.push(Correspondence {
                src,
                tgt: id,
                residual,
            });
        }
        let fraction = corr.len() as f64 / source.len() as f64;
        if corr.is_empty() || fraction < params.min_matched_fraction {
            return Err(Error::RegistrationFailed {
                matched: fraction,
                min: params.min_matched_fraction,
            });
        }
        let rms =
            (corr.iter().map(|c| c.residual * c.residual).sum::<f64>() / corr.len() as f64).sqrt();
        if iterations_run == 0 {
            rms_before = rms;
        }
        if rms > best_rms {
            let (r, t) = snapshot.expect("a worse state implies an accepted one");
            rot = r;
            trans = t;
            break;
        }
        let improvement = best_rms - rms;
        best_rms = rms;
        matched_fraction = fraction;
        if improvement < params.convergence_eps || iterations_run == params.max_iterations {
            break;
        }
        snapshot = Some((rot, trans));

        corr.sort_unstable_by(|a, b| {
            (a.residual.abs(), a.src)
                .partial_cmp(&(b.residual.abs(), b.src))
                .unwrap()
        });
        let dropped = (params.trim_fraction * corr.len() as f64).floor() as usize;
        let kept = &corr[..corr.len() - dropped];
        let increment = match params.variant {
            IcpVariant::PointToPlane => {
                let pairs: Vec<_> = kept
                    .iter()
                    .map(|c| {
                        let t = &tgt[c.tgt as usize];
                        (cur[c.src], t.p, t.n)
                    })
                    .collect();
                solve_point_to_plane(&pairs)
            }
            IcpVariant::PointToPoint => {
                let pairs: Vec<_> = kept
                    .iter()
                    .map(|c| (cur[c.src], tgt[c.tgt as usize].p))
                    .collect();
                solve_point_to_point(&pairs)
            }
        };
        // Rank-deficient geometry cannot improve on the accepted state.
        let Some((rhat, that)) = increment else { break };
        for p in &mut cur {
            *p = rhat * *p + that;
        }
        rot = rhat * rot;
        trans = rhat * trans + that;
        iterations_run += 1;
    }

    Ok(IcpResult {
        rhat: rot,
        that: trans,
        rms_before,
        rms_after: best_rms,
        matched_fraction,
        iterations_run,
    })
}

/// One map's refinement outcome. Exactly one of `icp` and `error` is set;
/// on error the pose is the unchanged input pose.
#[derive(Debug, Clone)]
pub struct RefinedPose {
    pub pose: Pose,
    pub icp: Option<IcpResult>,
    pub error: Option<String>,
}

impl RefinedPose {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }
}

/// Refines every map's pose against the cloud. Maps are independent and run
/// in parallel; a failed alignment keeps the input pose and carries the
/// reason.
pub fn refine_all_poses(
    maps: &[DepthMap],
    cloud: &FusedCloud,
    params: &IcpParams,
) -> Vec<RefinedPose> {
    exec::map_slice(maps, |dm| {
        let source = backproject(dm);
        if source.is_empty() {
            return RefinedPose {
                pose: dm.pose,
                icp: None,
                error: Some("map has no valid depths".into()),
            };
        }
        match icp_align(&source, cloud, params) {
            Ok(res) => RefinedPose {
                pose: dm.pose.compose_update(&res.rhat, &res.that),
                icp: Some(res),
                error: None,
            },
            Err(e) => RefinedPose {
                pose: dm.pose,
                icp: None,
                error: Some(e.to_string()),
            },
        }
    })
}
