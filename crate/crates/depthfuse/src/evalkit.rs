//! Quantitative evaluation against planar ground truth: cumulative
//! error curves, voxel-overlap scores, and compactness ratios.

use std::collections::HashSet;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::exec;
use crate::fusion::FusedCloud;
use crate::synth::{Rect, SceneSpec};

/// Voxel edge lengths (meters) reported by default: 5, 20, 45, 85 mm.
pub const DEFAULT_VOXEL_SIZES_M: [f64; 4] = [0.005, 0.020, 0.045, 0.085];

/// Default ground-truth sampling density: one point per (5 mm)^2 cell.
pub const DEFAULT_GT_SAMPLE_SPACING_M: f64 = 0.005;

/// One ground-truth plane, optionally bounded by a rectangle. Points on the
/// plane satisfy `normal . x = offset`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GtPlane {
    pub normal: Vector3<f64>,
    pub offset: f64,
    /// When set, distances measure to this bounded patch instead of the
    /// infinite plane.
    pub extent: Option<Rect>,
}

impl GtPlane {
    pub fn from_rect(rect: Rect) -> Self {
        Self {
            normal: rect.normal(),
            offset: rect.offset(),
            extent: Some(rect),
        }
    }

    /// Distance from `p` to the plane, or to the closest point of the
    /// bounded patch when an extent is present.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        match &self.extent {
            None => (self.normal.dot(p) - self.offset).abs(),
            Some(rect) => {
                let q = p - rect.origin;
                let s1 = (q.dot(&rect.e1) / rect.e1.norm_squared()).clamp(0.0, 1.0);
                let s2 = (q.dot(&rect.e2) / rect.e2.norm_squared()).clamp(0.0, 1.0);
                let closest = rect.origin + rect.e1 * s1 + rect.e2 * s2;
                (p - closest).norm()
            }
        }
    }
}

/// The planar ground truth of a scene.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruthPlanes {
    pub planes: Vec<GtPlane>,
}

impl GroundTruthPlanes {
    pub fn new(planes: Vec<GtPlane>) -> Result<Self> {
        if planes.is_empty() {
            return Err(Error::Input("ground truth has no planes".into()));
        }
        for (i, pl) in planes.iter().enumerate() {
            if (pl.normal.norm() - 1.0).abs() > 1e-9 {
                return Err(Error::Input(format!(
                    "ground-truth plane {i} normal is not unit length"
                )));
            }
        }
        Ok(Self { planes })
    }

    /// Every face of the scene as a bounded ground-truth plane.
    pub fn from_scene(scene: &SceneSpec) -> Result<Self> {
        Self::new(scene.faces().into_iter().map(GtPlane::from_rect).collect())
    }

    /// Distance from `p` to the nearest plane.
    pub fn distance(&self, p: &Vector3<f64>) -> f64 {
        self.planes
            .iter()
            .map(|pl| pl.distance(p))
            .fold(f64::INFINITY, f64::min)
    }

    /// Lattice sample of every bounded plane, one point per `spacing^2`
    /// cell, at cell centers. Fails on unbounded planes.
    pub fn sample(&self, spacing: f64) -> Result<Vec<Vector3<f64>>> {
        if spacing <= 0.0 || spacing.is_nan() {
            return Err(Error::Config(format!(
                "sample spacing must be positive, got {spacing}"
            )));
        }
        let mut points = Vec::new();
        for (i, pl) in self.planes.iter().enumerate() {
            let Some(rect) = &pl.extent else {
                return Err(Error::Input(format!(
                    "ground-truth plane {i} is unbounded and cannot be sampled"
                )));
            };
            let n1 = (rect.e1.norm() / spacing).round().max(1.0) as usize;
            let n2 = (rect.e2.norm() / spacing).round().max(1.0) as usize;
            for a in 0..n1 {
                for b in 0..n2 {
                    let s1 = (a as f64 + 0.5) / n1 as f64;
                    let s2 = (b as f64 + 0.5) / n2 as f64;
                    points.push(rect.origin + rect.e1 * s1 + rect.e2 * s2);
                }
            }
        }
        Ok(points)
    }
}

/// Per-point distances from the cloud to the ground truth.
fn cloud_errors(cloud: &FusedCloud, gt: &GroundTruthPlanes) -> Result<Vec<f64>> {
    if cloud.is_empty() {
        return Err(Error::Input("cannot evaluate an empty cloud".into()));
    }
    Ok(exec::map_slice(cloud.points(), |fp| gt.distance(&fp.p)))
}

/// Fraction of cloud points within each threshold of the ground truth.
/// Fractions are nondecreasing; the result pairs each threshold with its
/// fraction in input order.
pub fn cumulative_error_curve(
    cloud: &FusedCloud,
    gt: &GroundTruthPlanes,
    thresholds: &[f64],
) -> Result<Vec<(f64, f64)>> {
    let mut errors = cloud_errors(cloud, gt)?;
    errors.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let n = errors.len() as f64;
    Ok(thresholds
        .iter()
        .map(|&tau| {
            let within = errors.partition_point(|e| *e <= tau);
            (tau, within as f64 / n)
        })
        .collect())
}

/// Root mean square distance from cloud points to the ground truth.
pub fn rms_plane_distance(cloud: &FusedCloud, gt: &GroundTruthPlanes) -> Result<f64> {
    let errors = cloud_errors(cloud, gt)?;
    let n = errors.len() as f64;
    Ok((errors.iter().map(|e| e * e).sum::<f64>() / n).sqrt())
}

/// Occupancy grid over a fixed lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    voxel_size: f64,
    origin: Vector3<f64>,
    occupied: HashSet<[i64; 3]>,
}

impl VoxelGrid {
    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn origin(&self) -> Vector3<f64> {
        self.origin
    }

    pub fn len(&self) -> usize {
        self.occupied.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupied.is_empty()
    }

    pub fn occupied(&self) -> &HashSet<[i64; 3]> {
        &self.occupied
    }
}

/// Componentwise minimum over `points`; the canonical shared origin for
/// comparable voxel grids is the ground truth's bounding-box minimum.
pub fn bounding_box_min(points: &[Vector3<f64>]) -> Result<Vector3<f64>> {
    if points.is_empty() {
        return Err(Error::Input("cannot bound an empty point set".into()));
    }
    Ok(points.iter().fold(
        Vector3::repeat(f64::INFINITY),
        |m, p| Vector3::new(m.x.min(p.x), m.y.min(p.y), m.z.min(p.z)),
    ))
}

/// Marks the voxel `floor((p - origin) / voxel_size)` of every point.
pub fn voxelize(points: &[Vector3<f64>], voxel_size: f64, origin: &Vector3<f64>) -> Result<VoxelGrid> {
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::Config(format!(
            "voxel size must be positive, got {voxel_size}"
        )));
    }
    let mut occupied = HashSet::new();
    for p in points {
        let c = (p - origin) / voxel_size;
        occupied.insert([
            c.x.floor() as i64,
            c.y.floor() as i64,
            c.z.floor() as i64,
        ]);
    }
    Ok(VoxelGrid {
        voxel_size,
        origin: *origin,
        occupied,
    })
}

/// Intersection over union of two grids on the same lattice. The lattices
/// must match exactly (equal voxel size and origin).
pub fn jaccard_index(a: &VoxelGrid, b: &VoxelGrid) -> Result<f64> {
    if a.voxel_size != b.voxel_size || a.origin != b.origin {
        return Err(Error::Input(
            "voxel grids use different lattices and cannot be compared".into(),
        ));
    }
    let inter = a.occupied.intersection(&b.occupied).count();
    let union = a.occupied.union(&b.occupied).count();
    if union == 0 {
        return Ok(1.0);
    }
    Ok(inter as f64 / union as f64)
}

/// Ground-truth point count over reconstruction point count. Above 1 the
/// reconstruction is more compact than the reference sampling.
pub fn compression_ratio(gt_point_count: usize, recon_point_count: usize) -> Result<f64> {
    if recon_point_count == 0 {
        return Err(Error::Input(
            "compression ratio needs a nonempty reconstruction".into(),
        ));
    }
    Ok(gt_point_count as f64 / recon_point_count as f64)
}
