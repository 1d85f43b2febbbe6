//! Synthetic scenes: exact depth-map rendering and controlled corruption.
//!
//! Scenes are collections of bounded rectangles and axis-aligned boxes.
//! Rendering ray-casts them exactly; `corrupt` then injects the error
//! sources real captures carry (axial noise, outliers, dropouts, pose
//! drift) from a seeded stream, so every test input has a known ground
//! truth.

use nalgebra::{Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{DepthMap, DepthRange, Intrinsics, Pose, ViewId};
use crate::sensor::SensorNoiseModel;

/// A bounded rectangle: `origin + s*e1 + t*e2` for `s, t` in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rect {
    pub origin: Vector3<f64>,
    pub e1: Vector3<f64>,
    pub e2: Vector3<f64>,
}

impl Rect {
    /// Unit normal `e1 x e2`, normalized.
    pub fn normal(&self) -> Vector3<f64> {
        self.e1.cross(&self.e2).normalize()
    }

    /// Signed plane offset: points on the rectangle satisfy `n . x = d`.
    pub fn offset(&self) -> f64 {
        self.normal().dot(&self.origin)
    }
}

/// Scene building block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Primitive {
    Rect(Rect),
    /// Axis-aligned box, rendered as its six faces.
    Aabb {
        min: Vector3<f64>,
        max: Vector3<f64>,
    },
}

impl Primitive {
    fn faces(&self) -> Vec<Rect> {
        match *self {
            Primitive::Rect(r) => vec![r],
            Primitive::Aabb { min, max } => {
                let d = max - min;
                let dx = Vector3::new(d.x, 0.0, 0.0);
                let dy = Vector3::new(0.0, d.y, 0.0);
                let dz = Vector3::new(0.0, 0.0, d.z);
                vec![
                    Rect { origin: min, e1: dy, e2: dz },
                    Rect { origin: Vector3::new(max.x, min.y, min.z), e1: dy, e2: dz },
                    Rect { origin: min, e1: dx, e2: dz },
                    Rect { origin: Vector3::new(min.x, max.y, min.z), e1: dx, e2: dz },
                    Rect { origin: min, e1: dx, e2: dy },
                    Rect { origin: Vector3::new(min.x, min.y, max.z), e1: dx, e2: dy },
                ]
            }
        }
    }
}

/// A renderable scene.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub primitives: Vec<Primitive>,
}

impl SceneSpec {
    /// Concave corner: back wall at z = 3, left wall at x = -1, floor at
    /// y = 1 (y grows downward), meeting at (-1, 1, 3). Cameras near the
    /// origin see all three faces.
    pub fn corner() -> Self {
        Self {
            primitives: vec![
                Primitive::Rect(Rect {
                    origin: Vector3::new(-1.0, -1.5, 3.0),
                    e1: Vector3::new(2.5, 0.0, 0.0),
                    e2: Vector3::new(0.0, 2.5, 0.0),
                }),
                Primitive::Rect(Rect {
                    origin: Vector3::new(-1.0, -1.5, 0.5),
                    e1: Vector3::new(0.0, 2.5, 0.0),
                    e2: Vector3::new(0.0, 0.0, 2.5),
                }),
                Primitive::Rect(Rect {
                    origin: Vector3::new(-1.0, 1.0, 0.5),
                    e1: Vector3::new(2.5, 0.0, 0.0),
                    e2: Vector3::new(0.0, 0.0, 2.5),
                }),
            ],
        }
    }

    /// The corner plus two boxes resting on the floor.
    pub fn cluttered() -> Self {
        let mut scene = Self::corner();
        scene.primitives.push(Primitive::Aabb {
            min: Vector3::new(0.0, 0.3, 2.2),
            max: Vector3::new(0.5, 1.0, 2.7),
        });
        scene.primitives.push(Primitive::Aabb {
            min: Vector3::new(-0.8, 0.55, 1.6),
            max: Vector3::new(-0.35, 1.0, 2.05),
        });
        scene
    }

    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "corner" => Ok(Self::corner()),
            "cluttered" => Ok(Self::cluttered()),
            other => Err(Error::Config(format!(
                "unknown scene {other:?}, expected corner or cluttered"
            ))),
        }
    }

    /// Every renderable face of the scene.
    pub fn faces(&self) -> Vec<Rect> {
        self.primitives.iter().flat_map(|p| p.faces()).collect()
    }

    /// Whether `p` lies strictly inside a solid primitive. Rectangles have
    /// no interior.
    pub fn contains(&self, p: &Vector3<f64>) -> bool {
        self.primitives.iter().any(|prim| match prim {
            Primitive::Rect(_) => false,
            Primitive::Aabb { min, max } => {
                (0..3).all(|i| p[i] > min[i] && p[i] < max[i])
            }
        })
    }

    /// Point the scene's cameras should look at: the centroid of all face
    /// centers.
    pub fn focus(&self) -> Vector3<f64> {
        let faces = self.faces();
        faces
            .iter()
            .map(|f| f.origin + (f.e1 + f.e2) * 0.5)
            .sum::<Vector3<f64>>()
            / faces.len() as f64
    }
}

/// Pose at `center` looking toward `target`, image-down aligned with world
/// +y. Fails when the view direction is degenerate or (anti)parallel to +y.
pub fn look_at(center: &Vector3<f64>, target: &Vector3<f64>) -> Result<Pose> {
    let f = target - center;
    if f.norm() < 1e-12 {
        return Err(Error::Domain("look_at target coincides with center".into()));
    }
    let f = f.normalize();
    let down = Vector3::y();
    let x = down.cross(&f);
    if x.norm() < 1e-9 {
        return Err(Error::Domain(
            "look_at direction is parallel to the image-down axis".into(),
        ));
    }
    let x = x.normalize();
    let y = f.cross(&x);
    // Columns are the camera axes in world coordinates; the pose rotation is
    // its inverse.
    let r_world_from_cam =
        Rotation3::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[x, y, f]));
    let r = r_world_from_cam.inverse();
    let t = -(r * center);
    Ok(Pose::from_parts(r, t))
}

/// `n` camera poses on a flattened ring of the given radius around the
/// origin, all aimed at `target`.
pub fn camera_ring(n: usize, radius: f64, target: &Vector3<f64>) -> Result<Vec<Pose>> {
    if n == 0 {
        return Err(Error::Config("camera ring needs at least one pose".into()));
    }
    (0..n)
        .map(|k| {
            let theta = 2.0 * std::f64::consts::PI * k as f64 / n as f64;
            let center = Vector3::new(
                radius * theta.cos(),
                0.6 * radius * theta.sin(),
                0.3 * radius * (2.0 * theta).sin(),
            );
            look_at(&center, target)
        })
        .collect()
}

/// Renders the scene into an exact depth map. Depth is the camera-frame z
/// of the nearest hit; rays that miss every face, or hit outside `range`,
/// are invalid.
pub fn render_depth(
    scene: &SceneSpec,
    view: ViewId,
    intr: Intrinsics,
    pose: Pose,
    range: DepthRange,
) -> Result<DepthMap> {
    let center = pose.camera_center();
    if scene.contains(&center) {
        return Err(Error::Input(
            "camera center lies inside a scene primitive".into(),
        ));
    }
    let faces = scene.faces();
    let w = intr.width;
    let rows: Vec<Vec<f64>> = exec::map_indexed(intr.height, |v| {
        let mut row = Vec::with_capacity(w);
        for u in 0..w {
            // The camera-frame ray has z = 1, so the ray parameter of a hit
            // is its depth.
            let d = pose.cam_dir_to_world(&intr.ray(u as f64, v as f64));
            let mut best = f64::INFINITY;
            for f in &faces {
                let n = f.e1.cross(&f.e2);
                let denom = d.dot(&n);
                if denom.abs() < 1e-12 {
                    continue;
                }
                let s = (f.origin - center).dot(&n) / denom;
                if s <= 0.0 || s >= best {
                    continue;
                }
                let q = center + d * s - f.origin;
                let s1 = q.dot(&f.e1) / f.e1.norm_squared();
                let s2 = q.dot(&f.e2) / f.e2.norm_squared();
                if (0.0..=1.0).contains(&s1) && (0.0..=1.0).contains(&s2) {
                    best = s;
                }
            }
            row.push(if range.contains(best) { best } else { f64::NAN });
        }
        row
    });
    DepthMap::new(view, intr, pose, range, rows.concat())
}

/// Controlled corruption of an exact rendering.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CorruptionSpec {
    /// Axial Gaussian noise with std sigma_z(z); `None` disables.
    pub depth_noise: Option<SensorNoiseModel>,
    /// Fraction of valid pixels replaced by a uniform random depth.
    pub outlier_rate: f64,
    /// Fraction of valid pixels invalidated.
    pub dropout_rate: f64,
    /// Std of the pose rotation perturbation angle, radians.
    pub rot_std_rad: f64,
    /// Per-axis std of the camera-center perturbation, meters.
    pub trans_std_m: f64,
}

impl CorruptionSpec {
    pub fn validate(&self) -> Result<()> {
        for (name, rate) in [("outlier_rate", self.outlier_rate), ("dropout_rate", self.dropout_rate)] {
            if !(0.0..=1.0).contains(&rate) {
                return Err(Error::Config(format!("{name} must lie in [0, 1], got {rate}")));
            }
        }
        for (name, std) in [("rot_std_rad", self.rot_std_rad), ("trans_std_m", self.trans_std_m)] {
            if !(std >= 0.0 && std.is_finite()) {
                return Err(Error::Config(format!("{name} must be nonnegative, got {std}")));
            }
        }
        Ok(())
    }
}

/// The random stream for one view: fully determined by `(seed, view)`, so
/// views can be corrupted in parallel without changing results.
fn view_rng(seed: u64, view: ViewId) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..12].copy_from_slice(&view.0.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Applies `spec` to an exact map. Returns the corrupted map (carrying the
/// original pose) and the perturbed pose. Pose draws precede pixel draws;
/// with both pose stds zero the input pose is returned bit-identical.
pub fn corrupt(dm: &DepthMap, spec: &CorruptionSpec, seed: u64) -> Result<(DepthMap, Pose)> {
    spec.validate()?;
    if let Some(model) = &spec.depth_noise {
        model.validate_range(&dm.range)?;
    }
    let mut rng = view_rng(seed, dm.view);

    let perturbed = if spec.rot_std_rad == 0.0 && spec.trans_std_m == 0.0 {
        dm.pose
    } else {
        let unit = Normal::new(0.0, 1.0).expect("unit normal is well-formed");
        let axis = Vector3::new(
            unit.sample(&mut rng),
            unit.sample(&mut rng),
            unit.sample(&mut rng),
        );
        let angle: f64 = unit.sample(&mut rng) * spec.rot_std_rad;
        let delta = Vector3::new(
            unit.sample(&mut rng),
            unit.sample(&mut rng),
            unit.sample(&mut rng),
        ) * spec.trans_std_m;
        let dr = if axis.norm() < 1e-12 {
            Rotation3::identity()
        } else {
            Rotation3::from_axis_angle(&Unit::new_normalize(axis), angle)
        };
        // Perturbation acts about the camera center: the camera tilts in
        // place, then its center drifts.
        let r = dr * dm.pose.rotation();
        let c = dm.pose.camera_center() + delta;
        let t = -(r * c);
        Pose::from_parts(r, t)
    };

    let mut depths = Vec::with_capacity(dm.width() * dm.height());
    for v in 0..dm.height() {
        for u in 0..dm.width() {
            let z = dm.depth(u, v);
            if !dm.range.contains(z) {
                depths.push(f64::NAN);
                continue;
            }
            if spec.dropout_rate > 0.0 && rng.gen::<f64>() < spec.dropout_rate {
                depths.push(f64::NAN);
                continue;
            }
            if spec.outlier_rate > 0.0 && rng.gen::<f64>() < spec.outlier_rate {
                depths.push(rng.gen_range(dm.range.min..dm.range.max));
                continue;
            }
            match &spec.depth_noise {
                Some(model) => {
                    let sigma = model.sigma_z(z);
                    let noise =
                        Normal::new(0.0, sigma).map_err(|e| Error::Model(e.to_string()))?;
                    let noisy = z + noise.sample(&mut rng);
                    depths.push(noisy.clamp(dm.range.min, dm.range.max));
                }
                None => depths.push(z),
            }
        }
    }
    let mut out = DepthMap::new(dm.view, dm.intrinsics, dm.pose, dm.range, depths)?;
    if let Some(color) = dm.color() {
        out = out.with_color(color.to_vec())?;
    }
    Ok((out, perturbed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{backproject, rotation_angle};
    use approx::assert_relative_eq;

    fn intr_small() -> Intrinsics {
        Intrinsics::new(200.0, 200.0, 80.0, 60.0, 160, 120).unwrap()
    }

    fn wall_scene(z: f64) -> SceneSpec {
        SceneSpec {
            primitives: vec![Primitive::Rect(Rect {
                origin: Vector3::new(-5.0, -5.0, z),
                e1: Vector3::new(10.0, 0.0, 0.0),
                e2: Vector3::new(0.0, 10.0, 0.0),
            })],
        }
    }

    #[test]
    fn fronto_parallel_wall_renders_exact_depth() {
        let dm = render_depth(
            &wall_scene(2.0),
            ViewId(0),
            intr_small(),
            Pose::identity(),
            DepthRange::default(),
        )
        .unwrap();
        assert_eq!(dm.valid_count(), 160 * 120);
        for v in 0..120 {
            for u in 0..160 {
                assert_eq!(dm.depth(u, v), 2.0);
            }
        }
    }

    #[test]
    fn corner_backprojections_satisfy_their_plane_equations() {
        let scene = SceneSpec::corner();
        let pose = look_at(&Vector3::new(0.3, -0.2, 0.0), &scene.focus()).unwrap();
        let dm = render_depth(
            &scene,
            ViewId(1),
            intr_small(),
            pose,
            DepthRange::default(),
        )
        .unwrap();
        assert!(dm.valid_count() > 100);
        let planes: Vec<(Vector3<f64>, f64)> = scene
            .faces()
            .iter()
            .map(|f| (f.normal(), f.offset()))
            .collect();
        let mut worst: f64 = 0.0;
        for op in backproject(&dm) {
            let err = planes
                .iter()
                .map(|(n, d)| (n.dot(&op.p) - d).abs())
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(err);
        }
        assert!(worst < 1e-9, "worst plane residual {worst}");
    }

    #[test]
    fn rays_that_miss_are_invalid() {
        // A small distant patch: only central pixels hit it.
        let scene = SceneSpec {
            primitives: vec![Primitive::Rect(Rect {
                origin: Vector3::new(-0.1, -0.1, 2.0),
                e1: Vector3::new(0.2, 0.0, 0.0),
                e2: Vector3::new(0.0, 0.2, 0.0),
            })],
        };
        let dm = render_depth(
            &scene,
            ViewId(0),
            intr_small(),
            Pose::identity(),
            DepthRange::default(),
        )
        .unwrap();
        assert!(dm.is_valid(80, 60));
        assert!(!dm.is_valid(0, 0));
        assert!(dm.valid_count() < 160 * 120 / 2);
    }

    #[test]
    fn boxes_occlude_the_corner_behind_them() {
        let pose = look_at(
            &Vector3::new(0.3, -0.2, 0.0),
            &SceneSpec::corner().focus(),
        )
        .unwrap();
        let range = DepthRange::default();
        let plain = render_depth(&SceneSpec::corner(), ViewId(0), intr_small(), pose, range)
            .unwrap();
        let cluttered =
            render_depth(&SceneSpec::cluttered(), ViewId(0), intr_small(), pose, range).unwrap();
        let mut closer = 0usize;
        for v in 0..120 {
            for u in 0..160 {
                if plain.is_valid(u, v) && cluttered.is_valid(u, v) {
                    assert!(cluttered.depth(u, v) <= plain.depth(u, v) + 1e-12);
                    if cluttered.depth(u, v) < plain.depth(u, v) - 1e-6 {
                        closer += 1;
                    }
                }
            }
        }
        assert!(closer > 50, "only {closer} pixels occluded");
    }

    #[test]
    fn camera_inside_a_box_is_rejected() {
        let scene = SceneSpec {
            primitives: vec![Primitive::Aabb {
                min: Vector3::new(-1.0, -1.0, -1.0),
                max: Vector3::new(1.0, 1.0, 1.0),
            }],
        };
        let res = render_depth(
            &scene,
            ViewId(0),
            intr_small(),
            Pose::identity(),
            DepthRange::default(),
        );
        assert!(matches!(res, Err(Error::Input(_))));
    }

    #[test]
    fn corner_planes_meet_at_the_corner_point() {
        let scene = SceneSpec::corner();
        let faces = scene.faces();
        assert_eq!(faces.len(), 3);
        let corner = Vector3::new(-1.0, 1.0, 3.0);
        for f in &faces {
            let n = f.normal();
            assert_relative_eq!(n.norm(), 1.0, max_relative = 1e-12);
            assert!((n.dot(&corner) - f.offset()).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_spec_is_bitwise_identity() {
        let dm = render_depth(
            &SceneSpec::corner(),
            ViewId(2),
            intr_small(),
            look_at(&Vector3::new(0.1, 0.0, 0.0), &SceneSpec::corner().focus()).unwrap(),
            DepthRange::default(),
        )
        .unwrap();
        let (out, pose) = corrupt(&dm, &CorruptionSpec::default(), 7).unwrap();
        assert_eq!(pose, dm.pose);
        for (a, b) in out.depths().iter().zip(dm.depths()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn outlier_count_is_binomial() {
        let intr = Intrinsics::new(365.0, 365.0, 256.0, 212.0, 512, 424).unwrap();
        let dm = render_depth(
            &wall_scene(2.0),
            ViewId(0),
            intr,
            Pose::identity(),
            DepthRange::default(),
        )
        .unwrap();
        assert_eq!(dm.valid_count(), 512 * 424);
        let spec = CorruptionSpec {
            outlier_rate: 0.01,
            ..CorruptionSpec::default()
        };
        let (out, _) = corrupt(&dm, &spec, 12345).unwrap();
        let altered = out
            .depths()
            .iter()
            .filter(|z| z.is_finite() && **z != 2.0)
            .count();
        let expected = 512.0 * 424.0 * 0.01;
        assert!(
            (altered as f64 - expected).abs() < 150.0,
            "altered {altered}, expected about {expected}"
        );
    }

    #[test]
    fn same_seed_is_bit_identical_and_views_differ() {
        let dm = render_depth(
            &SceneSpec::corner(),
            ViewId(3),
            intr_small(),
            look_at(&Vector3::new(0.0, 0.1, 0.0), &SceneSpec::corner().focus()).unwrap(),
            DepthRange::default(),
        )
        .unwrap();
        let spec = CorruptionSpec {
            depth_noise: Some(
                SensorNoiseModel::new(1.0, 1.0, 1e-3, 1e-3, 7e-4, 0.0, 8e-4).unwrap(),
            ),
            outlier_rate: 0.02,
            dropout_rate: 0.05,
            rot_std_rad: 0.01,
            trans_std_m: 0.005,
        };
        let (a, pa) = corrupt(&dm, &spec, 99).unwrap();
        let (b, pb) = corrupt(&dm, &spec, 99).unwrap();
        assert_eq!(pa, pb);
        for (x, y) in a.depths().iter().zip(b.depths()) {
            assert_eq!(x.to_bits(), y.to_bits());
        }
        // A different view id draws a different stream.
        let mut other = dm.clone();
        other.view = ViewId(4);
        let (c, pc) = corrupt(&other, &spec, 99).unwrap();
        assert_ne!(pa, pc);
        assert!(a
            .depths()
            .iter()
            .zip(c.depths())
            .any(|(x, y)| x.to_bits() != y.to_bits()));
    }

    #[test]
    fn noise_std_tracks_the_model_per_decile() {
        // Depth sweeps 0.6 to 7.5 across columns: each decile of columns
        // holds 24k samples of a nearly constant depth.
        let intr = Intrinsics::new(300.0, 300.0, 300.0, 200.0, 600, 400).unwrap();
        let mut depths = Vec::with_capacity(600 * 400);
        for _v in 0..400 {
            for u in 0..600 {
                depths.push(0.6 + (7.5 - 0.6) * u as f64 / 599.0);
            }
        }
        let dm = DepthMap::new(
            ViewId(0),
            intr,
            Pose::identity(),
            DepthRange::default(),
            depths,
        )
        .unwrap();
        let model = SensorNoiseModel::new(1.0, 1.0, 1e-3, 1e-3, 7e-4, 0.0, 8e-4).unwrap();
        let spec = CorruptionSpec {
            depth_noise: Some(model),
            ..CorruptionSpec::default()
        };
        let (out, _) = corrupt(&dm, &spec, 2024).unwrap();
        for decile in 0..10 {
            let lo = 600 * decile / 10;
            let hi = 600 * (decile + 1) / 10;
            let mut errs = Vec::new();
            let mut sigma_sq_sum = 0.0;
            for v in 0..400 {
                for u in lo..hi {
                    errs.push(out.depth(u, v) - dm.depth(u, v));
                    let s = model.sigma_z(dm.depth(u, v));
                    sigma_sq_sum += s * s;
                }
            }
            let n = errs.len() as f64;
            let mean = errs.iter().sum::<f64>() / n;
            let var = errs.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
            let sample_std = var.sqrt();
            // Depth varies inside a decile, so the expected spread is the
            // root mean square of the per-pixel sigmas.
            let sigma_bar = (sigma_sq_sum / n).sqrt();
            let rel = (sample_std - sigma_bar).abs() / sigma_bar;
            assert!(
                rel < 0.03,
                "decile {decile}: sample std {sample_std:.6}, model {sigma_bar:.6}"
            );
        }
    }

    #[test]
    fn pose_perturbation_is_about_the_camera_center() {
        let scene = SceneSpec::corner();
        let pose = look_at(&Vector3::new(0.2, -0.1, 0.1), &scene.focus()).unwrap();
        let dm = render_depth(&scene, ViewId(5), intr_small(), pose, DepthRange::default())
            .unwrap();
        let spec = CorruptionSpec {
            rot_std_rad: 0.01,
            ..CorruptionSpec::default()
        };
        let (_, perturbed) = corrupt(&dm, &spec, 31).unwrap();
        // Pure rotation: the camera center must not move.
        assert_relative_eq!(
            perturbed.camera_center(),
            pose.camera_center(),
            epsilon = 1e-12
        );
        let delta = rotation_angle(&(perturbed.rotation() * pose.rotation().inverse()));
        assert!(delta > 0.0 && delta < 0.06, "rotation delta {delta}");
    }

    #[test]
    fn look_at_aims_the_optical_axis() {
        let center = Vector3::new(0.3, -0.2, 0.1);
        let target = Vector3::new(-1.0, 1.0, 3.0);
        let pose = look_at(&center, &target).unwrap();
        assert_relative_eq!(pose.camera_center(), center, epsilon = 1e-12);
        // The target sits on the optical axis, at positive depth.
        let cam = pose.world_to_cam(&target);
        assert!(cam.z > 0.0);
        assert!(cam.x.abs() < 1e-12 && cam.y.abs() < 1e-12);
        // Image-down is world +y: a point below the target projects lower.
        let below = pose.world_to_cam(&(target + Vector3::new(0.0, 0.1, 0.0)));
        assert!(below.y > 0.0);
    }

    #[test]
    fn camera_ring_poses_are_valid_and_distinct() {
        let target = SceneSpec::corner().focus();
        let ring = camera_ring(8, 0.25, &target).unwrap();
        assert_eq!(ring.len(), 8);
        for (i, pose) in ring.iter().enumerate() {
            let drift = crate::geometry::orthonormality_drift(pose.rotation().matrix());
            assert!(drift < 1e-12);
            for other in &ring[i + 1..] {
                assert!((pose.camera_center() - other.camera_center()).norm() > 1e-3);
            }
        }
    }
}
