//! Merging depth measurements into a non-redundant fused cloud.
//!
//! Every measurement carries a covariance ellipsoid. A new measurement
//! either merges into a compatible existing point (inverse-covariance
//! weighted mean, accepted only when the fused position lies inside the
//! gated covariance regions of both contributors) or is inserted as a new
//! point, after checking existing points on its line of sight for
//! visibility violations. Points whose violations outnumber their merges
//! are dropped by the post-filter.

use nalgebra::{Cholesky, Vector3};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{estimate_normals, DepthMap, OrientedPoint};
use crate::sensor::{align_to_los, CovarianceEllipsoid, SensorNoiseModel};
use crate::spatial::HashGrid;

/// One point of the fused cloud.
#[derive(Debug, Clone, Copy)]
pub struct FusedPoint {
    pub p: Vector3<f64>,
    pub cov: CovarianceEllipsoid,
    /// Unit normal.
    pub n: Vector3<f64>,
    pub merges: u32,
    pub violations: u32,
    pub color: Option<[u8; 3]>,
}

/// Merge and visibility parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MergeParams {
    /// Mahalanobis gate: a merge is accepted when the fused position lies
    /// within `gate` standard deviations of both contributors.
    pub gate: f64,
    /// Relative distance-along-sight tolerance of the visibility test.
    pub depth_ratio: f64,
    /// Candidate search radius in units of the measurement's largest
    /// standard deviation.
    pub candidate_radius_sigma: f64,
}

impl Default for MergeParams {
    fn default() -> Self {
        Self {
            gate: 1.0,
            depth_ratio: 0.1,
            candidate_radius_sigma: 3.0,
        }
    }
}

impl MergeParams {
    pub fn validate(&self) -> Result<()> {
        if self.gate <= 0.0 || self.gate.is_nan() {
            return Err(Error::Config(format!("gate must be positive, got {}", self.gate)));
        }
        if !(self.depth_ratio > 0.0 && self.depth_ratio < 1.0) {
            return Err(Error::Config(format!(
                "depth_ratio must lie in (0, 1), got {}",
                self.depth_ratio
            )));
        }
        if self.candidate_radius_sigma <= 0.0 || self.candidate_radius_sigma.is_nan() {
            return Err(Error::Config(format!(
                "candidate_radius_sigma must be positive, got {}",
                self.candidate_radius_sigma
            )));
        }
        Ok(())
    }
}

/// Result of attempting to merge a measurement into an existing point.
#[derive(Debug, Clone)]
pub enum MergeOutcome {
    Merged(FusedPoint),
    /// The fused position fell outside a contributor's gated region.
    OutsideGate,
    /// A covariance was numerically too close to singular to invert.
    Degenerate,
}

/// Fuses measurement `m` (with covariance `c_m`) into existing point `e`.
/// The merged position is the inverse-covariance weighted mean; it must lie
/// within `params.gate` Mahalanobis units of both contributors. The merged
/// normal is the trace-weighted average; color stays with the first
/// contributor.
pub fn try_merge(
    e: &FusedPoint,
    m: &OrientedPoint,
    c_m: &CovarianceEllipsoid,
    params: &MergeParams,
) -> MergeOutcome {
    let Some(chol_e) = Cholesky::new(*e.cov.matrix()) else {
        return MergeOutcome::Degenerate;
    };
    let Some(chol_m) = Cholesky::new(*c_m.matrix()) else {
        return MergeOutcome::Degenerate;
    };
    let inv_e = chol_e.inverse();
    let inv_m = chol_m.inverse();
    let info = inv_e + inv_m;
    let Some(chol_info) = Cholesky::new(info) else {
        return MergeOutcome::Degenerate;
    };
    let fused_p = chol_info.solve(&(inv_e * e.p + inv_m * m.p));
    let g2 = params.gate * params.gate;
    let de = fused_p - e.p;
    let dm = fused_p - m.p;
    if (inv_e * de).dot(&de) > g2 || (inv_m * dm).dot(&dm) > g2 {
        return MergeOutcome::OutsideGate;
    }
    let fused_cov = chol_info.inverse();
    let fused_cov = (fused_cov + fused_cov.transpose()) * 0.5;
    let we = 1.0 / e.cov.trace();
    let wm = 1.0 / c_m.trace();
    let n_raw = e.n * we + m.n * wm;
    let n = if n_raw.norm() < 1e-12 {
        e.n
    } else {
        n_raw.normalize()
    };
    MergeOutcome::Merged(FusedPoint {
        p: fused_p,
        cov: CovarianceEllipsoid::from_spd_unchecked(fused_cov),
        n,
        merges: e.merges + 1,
        violations: e.violations,
        color: e.color,
    })
}

/// Visibility test between an existing point and a new measurement that
/// project to the same pixel but did not merge. A violation requires both
/// normals to face the camera (angle to the viewing direction strictly
/// below 90 degrees) and the two distances along the line of sight to agree
/// within `depth_ratio` of the measurement's distance: seeing through one
/// surface onto another nearby one is contradictory, while a distant
/// background point behind a foreground point is ordinary occlusion.
pub fn violates_visibility(
    e: &FusedPoint,
    m: &OrientedPoint,
    cam_center: &Vector3<f64>,
    params: &MergeParams,
) -> bool {
    let to_cam_e = cam_center - e.p;
    let to_cam_m = cam_center - m.p;
    let s_e = to_cam_e.norm();
    let s_m = to_cam_m.norm();
    if s_e <= 0.0 || s_m <= 0.0 {
        return false;
    }
    let facing_e = e.n.dot(&to_cam_e) / s_e;
    let facing_m = m.n.dot(&to_cam_m) / s_m;
    facing_e > 0.0 && facing_m > 0.0 && (s_e - s_m).abs() < params.depth_ratio * s_m
}

/// Per-map fusion counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FusionStats {
    pub added: usize,
    pub merged: usize,
    /// Violating pairs detected (each pair increments two point counters).
    pub violations: usize,
    pub degenerate_rejects: usize,
}

/// The fused point cloud plus its spatial index.
#[derive(Debug, Clone)]
pub struct FusedCloud {
    points: Vec<FusedPoint>,
    grid: HashGrid,
}

impl FusedCloud {
    /// `cell` sizes the spatial index; any positive value is correct, a value
    /// near the candidate search radius is fastest.
    pub fn new(cell: f64) -> Self {
        Self {
            points: Vec::new(),
            grid: HashGrid::new(cell),
        }
    }

    /// Index cell sized to the typical candidate radius of `model` over
    /// `range`, evaluated at the range midpoint.
    pub fn for_model(
        model: &SensorNoiseModel,
        range: &crate::geometry::DepthRange,
        params: &MergeParams,
    ) -> Result<Self> {
        let mid = 0.5 * (range.min + range.max);
        let diag = model.covariance_camera(mid)?;
        let sigma_max = diag.max().sqrt();
        Ok(Self::new((params.candidate_radius_sigma * sigma_max).max(1e-6)))
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points(&self) -> &[FusedPoint] {
        &self.points
    }

    pub fn positions(&self) -> Vec<Vector3<f64>> {
        self.points.iter().map(|pt| pt.p).collect()
    }

    pub fn insert(&mut self, pt: FusedPoint) -> u32 {
        let id = self.points.len() as u32;
        self.grid.insert(id, &pt.p);
        self.points.push(pt);
        id
    }

    /// Fuses one depth map into the cloud. Measurements are processed in
    /// row-major pixel order; each one attempts a single merge against the
    /// candidate with the smallest Mahalanobis distance under the
    /// measurement covariance, and otherwise checks candidates on its pixel
    /// for visibility violations before being inserted.
    pub fn fuse_map(
        &mut self,
        dm: &DepthMap,
        model: &SensorNoiseModel,
        params: &MergeParams,
    ) -> Result<FusionStats> {
        params.validate()?;
        model.validate_range(&dm.range)?;
        let cam_center = dm.pose.camera_center();
        let normals = estimate_normals(dm);
        let w = dm.width();

        struct Measurement {
            u: u32,
            v: u32,
            point: OrientedPoint,
            cov: CovarianceEllipsoid,
            radius: f64,
            color: Option<[u8; 3]>,
        }

        // Covariances and normals are independent per pixel; compute them
        // up front, then commit merges sequentially in pixel order.
        let rows: Vec<Result<Vec<Measurement>>> = exec::map_indexed(dm.height(), |v| {
            let mut row = Vec::new();
            for u in 0..w {
                let z = dm.depth(u, v);
                if !dm.range.contains(z) {
                    continue;
                }
                let cam = dm.intrinsics.backproject_pixel(u as f64, v as f64, z);
                let p = dm.pose.cam_to_world(&cam);
                let n_cam = normals[v * w + u].expect("valid pixel has a normal");
                let n = dm.pose.cam_dir_to_world(&n_cam);
                let ray = (p - cam_center).normalize();
                let diag = model.covariance_camera(z)?;
                let cov = align_to_los(&diag, &ray, &dm.pose)?;
                row.push(Measurement {
                    u: u as u32,
                    v: v as u32,
                    point: OrientedPoint {
                        p,
                        n,
                        source_view: dm.view,
                        source_pixel: (u as u32, v as u32),
                    },
                    cov,
                    radius: params.candidate_radius_sigma * diag.max().sqrt(),
                    color: dm.color_at(u, v),
                });
            }
            Ok(row)
        });

        let mut stats = FusionStats::default();
        for row in rows {
            for meas in row? {
                let candidates = self.grid.within_radius(&meas.point.p, meas.radius);
                let best = Cholesky::new(*meas.cov.matrix()).and_then(|chol| {
                    let inv_m = chol.inverse();
                    candidates
                        .iter()
                        .map(|(id, _)| {
                            let d = self.points[*id as usize].p - meas.point.p;
                            ((inv_m * d).dot(&d), *id)
                        })
                        .min_by(|a, b| a.partial_cmp(b).unwrap())
                });
                if let Some((_, id)) = best {
                    match try_merge(&self.points[id as usize], &meas.point, &meas.cov, params) {
                        MergeOutcome::Merged(updated) => {
                            let old = self.points[id as usize].p;
                            self.grid.update(id, &old, &updated.p);
                            self.points[id as usize] = updated;
                            stats.merged += 1;
                            continue;
                        }
                        MergeOutcome::Degenerate => stats.degenerate_rejects += 1,
                        MergeOutcome::OutsideGate => {}
                    }
                }
                let mut new_violations = 0u32;
                for (id, _) in &candidates {
                    let existing = &self.points[*id as usize];
                    if !projects_to_pixel(dm, &existing.p, meas.u, meas.v) {
                        continue;
                    }
                    if violates_visibility(existing, &meas.point, &cam_center, params) {
                        self.points[*id as usize].violations += 1;
                        new_violations += 1;
                        stats.violations += 1;
                    }
                }
                self.insert(FusedPoint {
                    p: meas.point.p,
                    cov: meas.cov,
                    n: meas.point.n,
                    merges: 0,
                    violations: new_violations,
                    color: meas.color,
                });
                stats.added += 1;
            }
        }
        Ok(stats)
    }

    /// Drops every point with more violations than merges. Returns the
    /// number of removed points.
    pub fn postfilter(&mut self) -> usize {
        let before = self.points.len();
        let cell = self.grid.cell_size();
        self.points.retain(|pt| pt.violations <= pt.merges);
        self.grid = HashGrid::new(cell);
        for (i, pt) in self.points.iter().enumerate() {
            self.grid.insert(i as u32, &pt.p);
        }
        before - self.points.len()
    }

    #[cfg(test)]
    pub(crate) fn grid(&self) -> &HashGrid {
        &self.grid
    }
}

/// Whether `p` projects into pixel `(u, v)` of the map's camera (nearest
/// integer pixel, point in front of the camera).
fn projects_to_pixel(dm: &DepthMap, p: &Vector3<f64>, u: u32, v: u32) -> bool {
    let cam = dm.pose.world_to_cam(p);
    if cam.z <= 0.0 {
        return false;
    }
    let (pu, pv, _) = dm.intrinsics.project(&cam);
    pu.round() as i64 == u as i64 && pv.round() as i64 == v as i64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{DepthRange, Intrinsics, Pose, ViewId};
    use approx::assert_relative_eq;
    use nalgebra::Matrix3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn iso_point(p: Vector3<f64>, var: f64) -> FusedPoint {
        FusedPoint {
            p,
            cov: CovarianceEllipsoid::from_spd_unchecked(Matrix3::identity() * var),
            n: Vector3::z(),
            merges: 0,
            violations: 0,
            color: None,
        }
    }

    fn iso_meas(p: Vector3<f64>) -> OrientedPoint {
        OrientedPoint {
            p,
            n: Vector3::z(),
            source_view: ViewId(0),
            source_pixel: (0, 0),
        }
    }

    fn test_model() -> SensorNoiseModel {
        SensorNoiseModel::new(1.0, 1.0, 1.0 / 200.0, 1.0 / 200.0, 0.0, 0.0, 0.004).unwrap()
    }

    fn plane_map(intr: Intrinsics, pose: Pose, z_world_plane: f64) -> DepthMap {
        // Fronto-parallel plane z = const in world; camera looks along +z.
        let mut depths = vec![f64::NAN; intr.width * intr.height];
        let c = pose.camera_center();
        for v in 0..intr.height {
            for u in 0..intr.width {
                let dir = pose.cam_dir_to_world(&intr.ray(u as f64, v as f64));
                let s = (z_world_plane - c.z) / dir.z;
                depths[v * intr.width + u] = s;
            }
        }
        DepthMap::new(ViewId(0), intr, pose, DepthRange::default(), depths).unwrap()
    }

    #[test]
    fn merge_weighted_mean_one_dimensional_analog() {
        // Positions 0 and 1 with isotropic variances 1 and 4: fused position
        // 0.2, nearer the more certain contributor.
        let e = iso_point(Vector3::zeros(), 1.0);
        let m = iso_meas(Vector3::new(1.0, 0.0, 0.0));
        let c_m = CovarianceEllipsoid::from_spd_unchecked(Matrix3::identity() * 4.0);
        match try_merge(&e, &m, &c_m, &MergeParams::default()) {
            MergeOutcome::Merged(f) => {
                assert_relative_eq!(f.p.x, 0.2, max_relative = 1e-12);
                assert_eq!(f.merges, 1);
                let d_e = f.p.x;
                let d_m = 1.0 - f.p.x;
                assert!(d_e <= d_m);
            }
            other => panic!("expected merge, got {other:?}"),
        }
    }

    #[test]
    fn merge_gate_rejects_distant_measurement() {
        let e = iso_point(Vector3::zeros(), 1e-6);
        let m = iso_meas(Vector3::new(0.5, 0.0, 0.0));
        let c_m = CovarianceEllipsoid::from_spd_unchecked(Matrix3::identity() * 1e-6);
        match try_merge(&e, &m, &c_m, &MergeParams::default()) {
            MergeOutcome::OutsideGate => {}
            other => panic!("expected gate rejection, got {other:?}"),
        }
    }

    #[test]
    fn merge_identical_point_is_accepted_exactly() {
        let e = iso_point(Vector3::new(0.3, -0.2, 2.0), 1e-5);
        let m = iso_meas(Vector3::new(0.3, -0.2, 2.0));
        let c_m = e.cov;
        match try_merge(&e, &m, &c_m, &MergeParams::default()) {
            MergeOutcome::Merged(f) => {
                assert_relative_eq!(f.p, e.p, epsilon = 1e-12);
                assert_eq!(f.merges, 1);
            }
            other => panic!("expected merge, got {other:?}"),
        }
    }

    #[test]
    fn merge_pulls_toward_more_certain_contributor() {
        let mut rng = ChaCha8Rng::seed_from_u64(123);
        for _ in 0..500 {
            let var_e = 10f64.powf(rng.gen::<f64>() * 4.0 - 5.0);
            let var_m = 10f64.powf(rng.gen::<f64>() * 4.0 - 5.0);
            let pe = Vector3::new(rng.gen(), rng.gen(), rng.gen());
            let pm = Vector3::new(rng.gen(), rng.gen(), rng.gen());
            let e = iso_point(pe, var_e);
            let m = iso_meas(pm);
            let c_m = CovarianceEllipsoid::from_spd_unchecked(Matrix3::identity() * var_m);
            let params = MergeParams {
                gate: 1e9,
                ..MergeParams::default()
            };
            let MergeOutcome::Merged(f) = try_merge(&e, &m, &c_m, &params) else {
                panic!("open gate must merge")
            };
            let d_e = (f.p - pe).norm();
            let d_m = (f.p - pm).norm();
            if var_e <= var_m {
                assert!(d_e <= d_m + 1e-12);
            } else {
                assert!(d_m <= d_e + 1e-12);
            }
        }
    }

    #[test]
    fn merge_contracts_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let var_e = 10f64.powf(rng.gen::<f64>() * 3.0 - 5.0);
            let var_m = 10f64.powf(rng.gen::<f64>() * 3.0 - 5.0);
            let e = iso_point(Vector3::zeros(), var_e);
            let m = iso_meas(Vector3::zeros());
            let c_m = CovarianceEllipsoid::from_spd_unchecked(Matrix3::identity() * var_m);
            let MergeOutcome::Merged(f) = try_merge(&e, &m, &c_m, &MergeParams::default()) else {
                panic!("coincident points must merge")
            };
            assert!(f.cov.trace() < e.cov.trace().min(c_m.trace()));
        }
    }

    #[test]
    fn merge_rejects_degenerate_covariance() {
        let mut e = iso_point(Vector3::zeros(), 1.0);
        e.cov = CovarianceEllipsoid::from_spd_unchecked(Matrix3::zeros());
        let m = iso_meas(Vector3::zeros());
        let c_m = CovarianceEllipsoid::from_spd_unchecked(Matrix3::identity());
        match try_merge(&e, &m, &c_m, &MergeParams::default()) {
            MergeOutcome::Degenerate => {}
            other => panic!("expected degenerate, got {other:?}"),
        }
    }

    #[test]
    fn visibility_examples() {
        let params = MergeParams::default();
        let cam = Vector3::zeros();
        // Existing at distance 1.00, measurement at 1.05, both camera-facing:
        // |1.00 - 1.05| < 0.1 * 1.05, violation.
        let e = FusedPoint {
            n: -Vector3::z(),
            ..iso_point(Vector3::new(0.0, 0.0, 1.0), 1e-6)
        };
        let m = OrientedPoint {
            n: -Vector3::z(),
            ..iso_meas(Vector3::new(0.0, 0.0, 1.05))
        };
        assert!(violates_visibility(&e, &m, &cam, &params));

        // Distances 1.0 vs 1.2 disagree beyond the tolerance: occlusion, not
        // a violation.
        let m_far = OrientedPoint {
            n: -Vector3::z(),
            ..iso_meas(Vector3::new(0.0, 0.0, 1.2))
        };
        assert!(!violates_visibility(&e, &m_far, &cam, &params));

        // Existing normal perpendicular to the viewing direction: the strict
        // facing test fails.
        let e_side = FusedPoint {
            n: Vector3::x(),
            ..iso_point(Vector3::new(0.0, 0.0, 1.0), 1e-6)
        };
        assert!(!violates_visibility(&e_side, &m, &cam, &params));
    }

    #[test]
    fn fuse_single_map_adds_every_valid_pixel() {
        let intr = Intrinsics::new(200.0, 200.0, 20.0, 15.0, 40, 30).unwrap();
        let dm = plane_map(intr, Pose::identity(), 2.0);
        let model = test_model();
        let params = MergeParams::default();
        let mut cloud = FusedCloud::for_model(&model, &dm.range, &params).unwrap();
        let stats = cloud.fuse_map(&dm, &model, &params).unwrap();
        assert_eq!(stats.added, dm.valid_count());
        assert_eq!(stats.merged, 0);
        assert_eq!(cloud.len(), dm.valid_count());
        assert!(cloud.points().iter().all(|p| p.merges == 0));
    }

    #[test]
    fn fuse_same_map_twice_merges_every_point() {
        let intr = Intrinsics::new(200.0, 200.0, 20.0, 15.0, 40, 30).unwrap();
        let dm = plane_map(intr, Pose::identity(), 2.0);
        let model = test_model();
        let params = MergeParams::default();
        let mut cloud = FusedCloud::for_model(&model, &dm.range, &params).unwrap();
        cloud.fuse_map(&dm, &model, &params).unwrap();
        let n_single = cloud.len();
        let stats = cloud.fuse_map(&dm, &model, &params).unwrap();
        assert_eq!(stats.merged, dm.valid_count());
        assert_eq!(stats.added, 0);
        assert_eq!(cloud.len(), n_single);
        assert!(cloud.points().iter().all(|p| p.merges == 1));
    }

    #[test]
    fn fuse_identical_copies_is_non_redundant() {
        let intr = Intrinsics::new(200.0, 200.0, 20.0, 15.0, 40, 30).unwrap();
        let dm = plane_map(intr, Pose::identity(), 2.0);
        let model = test_model();
        let params = MergeParams::default();
        for k in [2usize, 4, 8] {
            let mut cloud = FusedCloud::for_model(&model, &dm.range, &params).unwrap();
            for _ in 0..k {
                cloud.fuse_map(&dm, &model, &params).unwrap();
            }
            assert_eq!(cloud.len(), dm.valid_count(), "k = {k}");
            assert!(cloud
                .points()
                .iter()
                .all(|p| p.merges == (k - 1) as u32));
        }
    }

    #[test]
    fn fuse_overlapping_views_shrinks_the_union() {
        // Second camera shifted exactly ten pixel footprints along x: its
        // lattice lands on the first one, so the overlap must merge.
        let intr = Intrinsics::new(200.0, 200.0, 20.0, 15.0, 40, 30).unwrap();
        let a = plane_map(intr, Pose::identity(), 2.0);
        let shifted = Pose::new(Matrix3::identity(), Vector3::new(-0.1, 0.0, 0.0)).unwrap();
        let b = plane_map(intr, shifted, 2.0);
        let model = test_model();
        let params = MergeParams::default();
        let mut cloud = FusedCloud::for_model(&model, &a.range, &params).unwrap();
        cloud.fuse_map(&a, &model, &params).unwrap();
        let stats_b = cloud.fuse_map(&b, &model, &params).unwrap();
        assert!(stats_b.merged > 0);
        assert!(cloud.len() < a.valid_count() + b.valid_count());
        assert!(cloud.points().iter().any(|p| p.merges >= 1));
    }

    #[test]
    fn fuse_is_deterministic() {
        let intr = Intrinsics::new(200.0, 200.0, 20.0, 15.0, 40, 30).unwrap();
        let a = plane_map(intr, Pose::identity(), 2.0);
        let shifted = Pose::new(Matrix3::identity(), Vector3::new(-0.093, 0.004, 0.0)).unwrap();
        let b = plane_map(intr, shifted, 2.0);
        let model = test_model();
        let params = MergeParams::default();
        let run = || {
            let mut cloud = FusedCloud::for_model(&model, &a.range, &params).unwrap();
            cloud.fuse_map(&a, &model, &params).unwrap();
            cloud.fuse_map(&b, &model, &params).unwrap();
            cloud
        };
        let c1 = run();
        let c2 = run();
        assert_eq!(c1.len(), c2.len());
        for (p1, p2) in c1.points().iter().zip(c2.points()) {
            assert_eq!(p1.p.x.to_bits(), p2.p.x.to_bits());
            assert_eq!(p1.p.y.to_bits(), p2.p.y.to_bits());
            assert_eq!(p1.p.z.to_bits(), p2.p.z.to_bits());
            assert_eq!(p1.merges, p2.merges);
            assert_eq!(p1.violations, p2.violations);
        }
    }

    #[test]
    fn postfilter_drops_contradicted_points() {
        let mut cloud = FusedCloud::new(0.01);
        let mut keep = iso_point(Vector3::new(0.0, 0.0, 1.0), 1e-6);
        keep.merges = 2;
        keep.violations = 2;
        let mut drop = iso_point(Vector3::new(0.1, 0.0, 1.0), 1e-6);
        drop.merges = 0;
        drop.violations = 1;
        let clean = iso_point(Vector3::new(0.2, 0.0, 1.0), 1e-6);
        cloud.insert(keep);
        cloud.insert(drop);
        cloud.insert(clean);
        let removed = cloud.postfilter();
        assert_eq!(removed, 1);
        assert_eq!(cloud.len(), 2);
        assert!(cloud.points().iter().all(|p| p.violations <= p.merges));
        // Index stays consistent after compaction.
        assert_eq!(cloud.grid().len(), 2);
        let hits = cloud
            .grid()
            .within_radius(&Vector3::new(0.2, 0.0, 1.0), 1e-9);
        assert_eq!(hits.len(), 1);
    }

    #[test]
    fn postfilter_noop_when_all_points_earned_their_keep() {
        let mut cloud = FusedCloud::new(0.01);
        for i in 0..10 {
            let mut pt = iso_point(Vector3::new(i as f64 * 0.1, 0.0, 1.0), 1e-6);
            pt.merges = 1 + (i % 3) as u32;
            pt.violations = pt.merges;
            cloud.insert(pt);
        }
        assert_eq!(cloud.postfilter(), 0);
        assert_eq!(cloud.len(), 10);
    }

    #[test]
    fn fuse_counts_visibility_violations_through_surfaces() {
        // Map A sees a plane at z = 2. Map B, same viewpoint, reports the
        // same pixels 10 mm deeper. With 4 mm axial sigma the same-ray pair
        // sits inside the candidate radius (12 mm) but outside the merge
        // gate (the fused midpoint is 1.26 sigma from each contributor),
        // the sight distances agree within 10%, and both normals face the
        // camera: every pixel of B must record one violation against A's
        // point on its ray, on both sides of the pair.
        let intr = Intrinsics::new(200.0, 200.0, 20.0, 15.0, 40, 30).unwrap();
        let a = plane_map(intr, Pose::identity(), 2.0);
        let b = plane_map(intr, Pose::identity(), 2.01);
        let model = test_model();
        let params = MergeParams::default();
        let mut cloud = FusedCloud::for_model(&model, &a.range, &params).unwrap();
        cloud.fuse_map(&a, &model, &params).unwrap();
        let stats = cloud.fuse_map(&b, &model, &params).unwrap();
        assert_eq!(stats.merged, 0);
        assert_eq!(stats.violations, b.valid_count());
        assert!(cloud
            .points()
            .iter()
            .all(|p| p.violations == 1 && p.merges == 0));
        // Both sides carry the increment: postfilter clears the whole cloud.
        let removed = cloud.postfilter();
        assert_eq!(removed, a.valid_count() + b.valid_count());
        assert!(cloud.is_empty());
    }
}
