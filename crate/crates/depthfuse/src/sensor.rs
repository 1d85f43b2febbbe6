//! Depth-dependent measurement uncertainty and the density pre-filter.
//!
//! Each depth measurement carries an anisotropic covariance: lateral
//! variances grow with the pixel footprint (`beta * z / sqrt(12)` per axis,
//! the standard deviation of uniform quantization over one footprint) and
//! the axial variance follows a quadratic depth noise law `sigma_z(z)`.
//! The ellipsoid is expressed with its axial direction along the line of
//! sight of the measurement.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{DepthMap, DepthRange, Intrinsics, Pose};

/// Noise parameters of the depth sensor. Lateral spread scales with
/// `beta_x`/`beta_y` (radians per pixel, usually `1/fx` and `1/fy`); axial
/// noise is `sigma_z(z) = alpha2 z^2 + alpha1 z + alpha0` meters, scaled by
/// `lambda2` (lateral by `lambda1`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorNoiseModel {
    pub lambda1: f64,
    pub lambda2: f64,
    pub beta_x: f64,
    pub beta_y: f64,
    pub alpha2: f64,
    pub alpha1: f64,
    pub alpha0: f64,
}

impl SensorNoiseModel {
    pub fn new(
        lambda1: f64,
        lambda2: f64,
        beta_x: f64,
        beta_y: f64,
        alpha2: f64,
        alpha1: f64,
        alpha0: f64,
    ) -> Result<Self> {
        let model = Self {
            lambda1,
            lambda2,
            beta_x,
            beta_y,
            alpha2,
            alpha1,
            alpha0,
        };
        for (name, v) in [
            ("lambda1", lambda1),
            ("lambda2", lambda2),
            ("beta_x", beta_x),
            ("beta_y", beta_y),
        ] {
            if v <= 0.0 || !v.is_finite() {
                return Err(Error::Model(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(model)
    }

    /// Axial noise standard deviation at depth `z`, meters.
    pub fn sigma_z(&self, z: f64) -> f64 {
        (self.alpha2 * z + self.alpha1) * z + self.alpha0
    }

    /// Ensures `sigma_z` stays positive over the whole working range.
    pub fn validate_range(&self, range: &DepthRange) -> Result<()> {
        let mut worst = self.sigma_z(range.min).min(self.sigma_z(range.max));
        if self.alpha2 != 0.0 {
            let vertex = -self.alpha1 / (2.0 * self.alpha2);
            if vertex > range.min && vertex < range.max {
                worst = worst.min(self.sigma_z(vertex));
            }
        }
        if worst <= 0.0 || worst.is_nan() {
            return Err(Error::Model(format!(
                "sigma_z is non-positive somewhere in [{}, {}]",
                range.min, range.max
            )));
        }
        Ok(())
    }

    /// Camera-frame covariance diagonal of one measurement at depth `z`:
    /// `(lambda1 (beta_x z / sqrt(12))^2, lambda1 (beta_y z / sqrt(12))^2,
    /// lambda2 sigma_z(z)^2)`.
    pub fn covariance_camera(&self, z: f64) -> Result<Vector3<f64>> {
        let sigma = self.sigma_z(z);
        if sigma <= 0.0 || sigma.is_nan() {
            return Err(Error::Model(format!(
                "sigma_z({z}) = {sigma} is not positive"
            )));
        }
        let lx = self.beta_x * z;
        let ly = self.beta_y * z;
        Ok(Vector3::new(
            self.lambda1 * lx * lx / 12.0,
            self.lambda1 * ly * ly / 12.0,
            self.lambda2 * sigma * sigma,
        ))
    }

    /// Warnings when `beta_x`/`beta_y` disagree with `1/fx`/`1/fy` by 5% or
    /// more. Disagreement distorts the lateral footprint model but is not
    /// fatal, so this never errors.
    pub fn consistency_warnings(&self, intr: &Intrinsics) -> Vec<String> {
        let mut warnings = Vec::new();
        for (name, beta, f) in [("beta_x", self.beta_x, intr.fx), ("beta_y", self.beta_y, intr.fy)]
        {
            let rel = (beta - 1.0 / f).abs() / beta;
            if rel >= 0.05 {
                warnings.push(format!(
                    "{name} = {beta:.6e} deviates {:.1}% from 1/f = {:.6e}",
                    rel * 100.0,
                    1.0 / f
                ));
            }
        }
        warnings
    }
}

/// Symmetric positive-definite 3x3 covariance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovarianceEllipsoid(Matrix3<f64>);

impl CovarianceEllipsoid {
    pub fn new(c: Matrix3<f64>) -> Result<Self> {
        let asym = (c - c.transpose()).abs().max();
        if asym > 1e-12 {
            return Err(Error::Domain(format!(
                "covariance asymmetric by {asym:.3e}"
            )));
        }
        if c.cholesky().is_none() {
            return Err(Error::Domain("covariance not positive definite".into()));
        }
        Ok(Self(c))
    }

    pub(crate) fn from_spd_unchecked(c: Matrix3<f64>) -> Self {
        Self(c)
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }
}

/// Rotates a camera-frame covariance diagonal into the world frame with its
/// axial axis along `ray` (a unit world-frame viewing direction). The frame
/// is the camera's axes transported by the minimal rotation taking the
/// optical axis onto `ray`; when `ray` is the optical axis this is exactly
/// the camera-to-world rotation.
pub fn align_to_los(
    c_diag: &Vector3<f64>,
    ray: &Vector3<f64>,
    pose: &Pose,
) -> Result<CovarianceEllipsoid> {
    if (ray.norm() - 1.0).abs() > 1e-6 {
        return Err(Error::Domain(format!(
            "ray must be unit length, norm = {}",
            ray.norm()
        )));
    }
    if [c_diag.x, c_diag.y, c_diag.z].iter().any(|v| *v <= 0.0 || v.is_nan()) {
        return Err(Error::Domain(format!(
            "covariance diagonal must be positive, got {c_diag:?}"
        )));
    }
    let axis_world = pose.cam_dir_to_world(&Vector3::z());
    let swing = Rotation3::rotation_between(&axis_world, ray).ok_or_else(|| {
        Error::Domain("ray is antiparallel to the optical axis".into())
    })?;
    let q = swing * pose.rotation().inverse();
    let m = q * Matrix3::from_diagonal(c_diag) * q.inverse();
    // Symmetrize away the rounding residue of the two rotations.
    Ok(CovarianceEllipsoid::from_spd_unchecked(
        (m + m.transpose()) * 0.5,
    ))
}

/// Density pre-filter parameters: a measurement is removed when its k-th
/// nearest neighbor is farther than `gamma` times the reference spacing of
/// a regular grid at the same depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub gamma: f64,
    pub k: usize,
}

impl Default for FilterParams {
    fn default() -> Self {
        Self { gamma: 1.83, k: 4 }
    }
}

impl FilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.gamma <= 0.0 || !self.gamma.is_finite() {
            return Err(Error::Config(format!(
                "gamma must be positive, got {}",
                self.gamma
            )));
        }
        if self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }
}

/// Expected k-th nearest-neighbor distance for an interior point of a
/// regular grid of backprojected pixels at constant depth `z`. For `k = 4`
/// this is `max(z/fx, z/fy)`.
pub fn reference_distance(z: f64, intr: &Intrinsics, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::Config("k must be at least 1".into()));
    }
    if z <= 0.0 || !z.is_finite() {
        return Err(Error::Domain(format!("depth must be positive, got {z}")));
    }
    let sx = z / intr.fx;
    let sy = z / intr.fy;
    let smin = sx.min(sy);
    // Enumerate lattice offsets until the k-th smallest distance is provably
    // inside the window.
    let mut half = 2i64;
    loop {
        let mut dists = Vec::with_capacity(((2 * half + 1) * (2 * half + 1) - 1) as usize);
        for i in -half..=half {
            for j in -half..=half {
                if i == 0 && j == 0 {
                    continue;
                }
                dists.push((i as f64 * sx).hypot(j as f64 * sy));
            }
        }
        dists.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
        let kth = dists[k - 1];
        if kth <= (half as f64) * smin {
            return Ok(kth);
        }
        half += 1;
    }
}

/// Outcome counters of one pre-filter pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PrefilterStats {
    pub removed: usize,
    /// Set when the map held fewer than `k + 1` valid pixels and everything
    /// was discarded.
    pub emptied: bool,
}

/// Removes low-density measurements from a depth map. Distances are
/// camera-frame 3-D distances between backprojected pixels, so the result
/// is independent of the map's pose. Each pixel's k-th neighbor is searched
/// in a `(2w+1)^2` pixel window with `w = ceil(gamma * k)`; any measurement
/// whose k-th neighbor lies outside that window already exceeds the removal
/// threshold. Single pass: all decisions are made against the input mask.
pub fn prefilter(dm: &DepthMap, params: &FilterParams) -> Result<(DepthMap, PrefilterStats)> {
    params.validate()?;
    let w = dm.width();
    let h = dm.height();
    let total_valid = dm.valid_count();
    let mut out = dm.clone();
    if total_valid < params.k + 1 {
        for v in 0..h {
            for u in 0..w {
                out.set_depth(u, v, f64::NAN);
            }
        }
        return Ok((
            out,
            PrefilterStats {
                removed: total_valid,
                emptied: true,
            },
        ));
    }

    let cam: Vec<Option<Vector3<f64>>> = {
        let rows = exec::map_indexed(h, |v| {
            (0..w)
                .map(|u| {
                    let z = dm.depth(u, v);
                    dm.range
                        .contains(z)
                        .then(|| dm.intrinsics.backproject_pixel(u as f64, v as f64, z))
                })
                .collect::<Vec<_>>()
        });
        rows.into_iter().flatten().collect()
    };

    let unit_ref = reference_distance(1.0, &dm.intrinsics, params.k)?;
    let window = (params.gamma * params.k as f64).ceil() as i64;
    let k = params.k;

    let removed_rows = exec::map_indexed(h, |v| {
        let mut removed = Vec::new();
        let mut dists: Vec<f64> = Vec::new();
        for u in 0..w {
            let Some(center) = cam[v * w + u] else { continue };
            dists.clear();
            let u0 = (u as i64 - window).max(0) as usize;
            let u1 = ((u as i64 + window) as usize).min(w - 1);
            let v0 = (v as i64 - window).max(0) as usize;
            let v1 = ((v as i64 + window) as usize).min(h - 1);
            for vv in v0..=v1 {
                for uu in u0..=u1 {
                    if uu == u && vv == v {
                        continue;
                    }
                    if let Some(p) = cam[vv * w + uu] {
                        dists.push((p - center).norm_squared());
                    }
                }
            }
            let threshold = params.gamma * center.z * unit_ref;
            let over = if dists.len() < k {
                true
            } else {
                let (_, kth, _) = dists
                    .select_nth_unstable_by(k - 1, |a, b| a.partial_cmp(b).unwrap());
                *kth > threshold * threshold
            };
            if over {
                removed.push(u);
            }
        }
        removed
    });

    let mut stats = PrefilterStats::default();
    for (v, row) in removed_rows.iter().enumerate() {
        for &u in row {
            out.set_depth(u, v, f64::NAN);
            stats.removed += 1;
        }
    }
    Ok((out, stats))
}
