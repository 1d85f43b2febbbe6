//! Camera model, rigid poses, depth maps and backprojection.
//!
//! Poses are stored camera-from-world: `X_cam = R * X_world + t`. A depth
//! map pixel `(u, v)` with depth `z` backprojects to the camera-frame point
//! `((u - cx) z / fx, (v - cy) z / fy, z)`; pixel centers sit at integer
//! coordinates, `u` runs along columns and `v` along rows.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};
use crate::exec;

/// Identifier of one captured view within a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ViewId(pub u32);

impl std::fmt::Display for ViewId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Pinhole intrinsics. Focal lengths and the principal point are in pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        if fx <= 0.0 || fy <= 0.0 || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::Config(format!(
                "focal lengths must be positive, got fx={fx} fy={fy}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "image dimensions must be nonzero, got {width}x{height}"
            )));
        }
        if !(0.0..width as f64).contains(&cx) || !(0.0..height as f64).contains(&cy) {
            return Err(Error::Config(format!(
                "principal point ({cx}, {cy}) outside {width}x{height} image"
            )));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    /// Camera-frame ray through pixel `(u, v)`, scaled so its z component is 1.
    pub fn ray(&self, u: f64, v: f64) -> Vector3<f64> {
        Vector3::new((u - self.cx) / self.fx, (v - self.cy) / self.fy, 1.0)
    }

    /// Backprojects pixel `(u, v)` at depth `z` into the camera frame.
    pub fn backproject_pixel(&self, u: f64, v: f64, z: f64) -> Vector3<f64> {
        self.ray(u, v) * z
    }

    /// Projects a camera-frame point, returning `(u, v, z)`. z <= 0 points
    /// project behind the camera; callers must check.
    pub fn project(&self, p: &Vector3<f64>) -> (f64, f64, f64) {
        (
            self.fx * p.x / p.z + self.cx,
            self.fy * p.y / p.z + self.cy,
            p.z,
        )
    }
}

/// Elementwise max-abs of `R^T R - I`; zero for an exact rotation.
pub fn orthonormality_drift(r: &Matrix3<f64>) -> f64 {
    let d = r.transpose() * r - Matrix3::identity();
    d.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

/// Rotation angle of `r` in radians. Robust near 0 and pi, where rounding
/// can push the trace outside the exact [-1, 3] interval.
pub fn rotation_angle(r: &Rotation3<f64>) -> f64 {
    ((r.matrix().trace() - 1.0) * 0.5).clamp(-1.0, 1.0).acos()
}

/// Rigid camera pose, camera-from-world: `X_cam = R * X_world + t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    r: Rotation3<f64>,
    t: Vector3<f64>,
}

impl Pose {
    /// Max tolerated `orthonormality_drift` for a matrix accepted as-is.
    pub const ORTHONORMALITY_TOL: f64 = 1e-9;

    pub fn new(r: Matrix3<f64>, t: Vector3<f64>) -> Result<Self> {
        let drift = orthonormality_drift(&r);
        if drift >= Self::ORTHONORMALITY_TOL || drift.is_nan() {
            return Err(Error::Domain(format!(
                "rotation drift {drift:.3e} exceeds {:.0e}",
                Self::ORTHONORMALITY_TOL
            )));
        }
        if r.determinant() <= 0.0 {
            return Err(Error::Domain("rotation has non-positive determinant".into()));
        }
        Ok(Self {
            r: Rotation3::from_matrix_unchecked(r),
            t,
        })
    }

    pub fn identity() -> Self {
        Self {
            r: Rotation3::identity(),
            t: Vector3::zeros(),
        }
    }

    pub fn from_parts(r: Rotation3<f64>, t: Vector3<f64>) -> Self {
        Self { r, t }
    }

    pub fn rotation(&self) -> &Rotation3<f64> {
        &self.r
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.t
    }

    pub fn world_to_cam(&self, x: &Vector3<f64>) -> Vector3<f64> {
        self.r * x + self.t
    }

    pub fn cam_to_world(&self, d: &Vector3<f64>) -> Vector3<f64> {
        self.r.inverse() * (d - self.t)
    }

    /// Rotates a camera-frame direction into the world frame.
    pub fn cam_dir_to_world(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.r.inverse() * v
    }

    /// Camera center in world coordinates.
    pub fn camera_center(&self) -> Vector3<f64> {
        -(self.r.inverse() * self.t)
    }

    /// Folds an alignment increment into this pose. `(rhat, that)` maps the
    /// pose's current backprojections onto their registered locations
    /// (`x' = rhat * x + that`); the returned pose backprojects directly to
    /// the registered points: `R' = R * rhat^T`, `t' = t - R' * that`.
    pub fn compose_update(&self, rhat: &Rotation3<f64>, that: &Vector3<f64>) -> Pose {
        let r_new = self.r * rhat.inverse();
        let t_new = self.t - r_new * that;
        Pose { r: r_new, t: t_new }
    }
}

/// Working depth range of the sensor; depths outside it are invalid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthRange {
    pub min: f64,
    pub max: f64,
}

impl Default for DepthRange {
    fn default() -> Self {
        Self { min: 0.5, max: 8.0 }
    }
}

impl DepthRange {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !(min > 0.0 && max > min) || !max.is_finite() {
            return Err(Error::Config(format!(
                "depth range [{min}, {max}] must satisfy 0 < min < max"
            )));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, z: f64) -> bool {
        z.is_finite() && z >= self.min && z <= self.max
    }
}

/// One registered depth image. Depths are meters, row-major, NaN = invalid.
#[derive(Debug, Clone)]
pub struct DepthMap {
    pub view: ViewId,
    pub intrinsics: Intrinsics,
    pub pose: Pose,
    pub range: DepthRange,
    depths: Vec<f64>,
    color: Option<Vec<[u8; 3]>>,
}

impl DepthMap {
    pub fn new(
        view: ViewId,
        intrinsics: Intrinsics,
        pose: Pose,
        range: DepthRange,
        depths: Vec<f64>,
    ) -> Result<Self> {
        let expect = intrinsics.width * intrinsics.height;
        if depths.len() != expect {
            return Err(Error::Config(format!(
                "depth buffer holds {} values, intrinsics declare {}x{} = {expect}",
                depths.len(),
                intrinsics.width,
                intrinsics.height
            )));
        }
        Ok(Self {
            view,
            intrinsics,
            pose,
            range,
            depths,
            color: None,
        })
    }

    pub fn with_color(mut self, color: Vec<[u8; 3]>) -> Result<Self> {
        if color.len() != self.depths.len() {
            return Err(Error::Config(format!(
                "color buffer holds {} values, expected {}",
                color.len(),
                self.depths.len()
            )));
        }
        self.color = Some(color);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.intrinsics.width
    }

    pub fn height(&self) -> usize {
        self.intrinsics.height
    }

    pub fn depths(&self) -> &[f64] {
        &self.depths
    }

    pub fn depth(&self, u: usize, v: usize) -> f64 {
        self.depths[v * self.intrinsics.width + u]
    }

    pub fn set_depth(&mut self, u: usize, v: usize, z: f64) {
        self.depths[v * self.intrinsics.width + u] = z;
    }

    pub fn is_valid(&self, u: usize, v: usize) -> bool {
        self.range.contains(self.depth(u, v))
    }

    pub fn valid_count(&self) -> usize {
        self.depths.iter().filter(|z| self.range.contains(**z)).count()
    }

    pub fn color(&self) -> Option<&[[u8; 3]]> {
        self.color.as_deref()
    }

    pub fn color_at(&self, u: usize, v: usize) -> Option<[u8; 3]> {
        self.color
            .as_ref()
            .map(|c| c[v * self.intrinsics.width + u])
    }
}

/// A 3-D point with unit normal and its provenance.
#[derive(Debug, Clone, Copy)]
pub struct OrientedPoint {
    pub p: Vector3<f64>,
    /// Unit normal, oriented toward the observing camera.
    pub n: Vector3<f64>,
    pub source_view: ViewId,
    pub source_pixel: (u32, u32),
}

/// Per-pixel camera-frame normals via central differences of backprojected
/// neighbors; one-sided where only one neighbor is valid. Pixels whose
/// tangents cannot be formed get the negated viewing ray as fallback.
/// Returns one entry per pixel, `None` for invalid pixels.
pub fn estimate_normals(dm: &DepthMap) -> Vec<Option<Vector3<f64>>> {
    let w = dm.width();
    let h = dm.height();
    let cam = |u: usize, v: usize| -> Option<Vector3<f64>> {
        let z = dm.depth(u, v);
        dm.range
            .contains(z)
            .then(|| dm.intrinsics.backproject_pixel(u as f64, v as f64, z))
    };
    let rows = exec::map_indexed(h, |v| {
        let mut row = Vec::with_capacity(w);
        for u in 0..w {
            let Some(center) = cam(u, v) else {
                row.push(None);
                continue;
            };
            let left = (u > 0).then(|| cam(u - 1, v)).flatten();
            let right = (u + 1 < w).then(|| cam(u + 1, v)).flatten();
            let up = (v > 0).then(|| cam(u, v - 1)).flatten();
            let down = (v + 1 < h).then(|| cam(u, v + 1)).flatten();
            let du = match (left, right) {
                (Some(l), Some(r)) => Some(r - l),
                (None, Some(r)) => Some(r - center),
                (Some(l), None) => Some(center - l),
                (None, None) => None,
            };
            let dv = match (up, down) {
                (Some(a), Some(b)) => Some(b - a),
                (None, Some(b)) => Some(b - center),
                (Some(a), None) => Some(center - a),
                (None, None) => None,
            };
            let to_cam = -center.normalize();
            let n = match (du, dv) {
                (Some(du), Some(dv)) => {
                    let raw = du.cross(&dv);
                    let norm = raw.norm();
                    if norm < 1e-12 {
                        to_cam
                    } else {
                        let n = raw / norm;
                        let facing = n.dot(&to_cam);
                        if facing > 0.0 {
                            n
                        } else if facing < 0.0 {
                            -n
                        } else {
                            to_cam
                        }
                    }
                }
                _ => to_cam,
            };
            row.push(Some(n));
        }
        row
    });
    rows.into_iter().flatten().collect()
}

/// Backprojects every valid pixel into an oriented world-frame point, in
/// row-major pixel order.
pub fn backproject(dm: &DepthMap) -> Vec<OrientedPoint> {
    let normals = estimate_normals(dm);
    let w = dm.width();
    let rows = exec::map_indexed(dm.height(), |v| {
        let mut row = Vec::new();
        for u in 0..w {
            let z = dm.depth(u, v);
            if !dm.range.contains(z) {
                continue;
            }
            let cam = dm.intrinsics.backproject_pixel(u as f64, v as f64, z);
            let n_cam = normals[v * w + u].expect("valid pixel has a normal");
            row.push(OrientedPoint {
                p: dm.pose.cam_to_world(&cam),
                n: dm.pose.cam_dir_to_world(&n_cam),
                source_view: dm.view,
                source_pixel: (u as u32, v as u32),
            });
        }
        row
    });
    rows.into_iter().flatten().collect()
}
