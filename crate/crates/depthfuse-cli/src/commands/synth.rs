use std::path::PathBuf;

use clap::Args;
use depthfuse::geometry::{DepthRange, Intrinsics, ViewId};
use depthfuse::io::{
    write_config, write_depth_dpf, write_gt_planes, write_manifest, write_poses, Manifest,
    ManifestView,
};
use depthfuse::evalkit::GroundTruthPlanes;
use depthfuse::pipeline::PipelineConfig;
use depthfuse::sensor::SensorNoiseModel;
use depthfuse::synth::{camera_ring, corrupt, render_depth, CorruptionSpec, SceneSpec};
use depthfuse::{Error, Result};

#[derive(Args)]
pub struct SynthArgs {
    /// Output directory
    #[arg(long)]
    pub out: PathBuf,
    /// Scene preset: corner or cluttered
    #[arg(long, default_value = "corner")]
    pub scene: String,
    /// Number of ring cameras
    #[arg(long, default_value_t = 8)]
    pub views: usize,
    #[arg(long, default_value_t = 160)]
    pub width: usize,
    #[arg(long, default_value_t = 130)]
    pub height: usize,
    /// Camera ring radius, meters
    #[arg(long, default_value_t = 0.8)]
    pub radius: f64,
    /// Horizontal field of view, degrees
    #[arg(long, default_value_t = 70.0)]
    pub fov_deg: f64,
    #[arg(long, default_value_t = 0.5)]
    pub range_min: f64,
    #[arg(long, default_value_t = 8.0)]
    pub range_max: f64,
    /// Seed for every random draw
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    /// Axial noise at 1 m, millimeters; 0 leaves depths exact
    #[arg(long, default_value_t = 1.5)]
    pub noise_mm_at_1m: f64,
    /// Rotation perturbation written into the initial poses, degrees
    #[arg(long, default_value_t = 0.5)]
    pub rot_perturb_deg: f64,
    /// Translation perturbation written into the initial poses, millimeters
    #[arg(long, default_value_t = 10.0)]
    pub trans_perturb_mm: f64,
    /// Fraction of valid pixels replaced by random depths
    #[arg(long, default_value_t = 0.0)]
    pub outlier_rate: f64,
    /// Fraction of valid pixels dropped
    #[arg(long, default_value_t = 0.0)]
    pub dropout_rate: f64,
}

/// Noise law used both to corrupt depths and as the written sensor
/// model: mostly quadratic in depth with a small constant floor, scaled
/// so sigma_z(1 m) matches the requested value.
fn noise_model(intr: &Intrinsics, sigma_at_1m: f64) -> Result<SensorNoiseModel> {
    SensorNoiseModel::new(
        1.0,
        1.0,
        1.0 / intr.fx,
        1.0 / intr.fy,
        0.8 * sigma_at_1m,
        0.0,
        0.2 * sigma_at_1m,
    )
}

pub fn run(args: SynthArgs) -> Result<()> {
    let scene = SceneSpec::by_name(&args.scene)?;
    let fov = args.fov_deg.to_radians();
    if !(fov > 0.0 && fov < std::f64::consts::PI) {
        return Err(Error::Input(format!(
            "field of view must lie in (0, 180) degrees, got {}",
            args.fov_deg
        )));
    }
    let fx = args.width as f64 / 2.0 / (fov / 2.0).tan();
    let intr = Intrinsics::new(
        fx,
        fx,
        (args.width as f64 - 1.0) / 2.0,
        (args.height as f64 - 1.0) / 2.0,
        args.width,
        args.height,
    )?;
    let range = DepthRange::new(args.range_min, args.range_max)?;
    // The written sensor model keeps a floor even for exact depths, so
    // downstream covariances stay positive definite.
    let sigma_at_1m = (args.noise_mm_at_1m * 1e-3).max(5e-4);
    let noise = noise_model(&intr, sigma_at_1m)?;
    let spec = CorruptionSpec {
        depth_noise: (args.noise_mm_at_1m > 0.0).then_some(noise),
        outlier_rate: args.outlier_rate,
        dropout_rate: args.dropout_rate,
        rot_std_rad: args.rot_perturb_deg.to_radians(),
        trans_std_m: args.trans_perturb_mm * 1e-3,
    };

    let depth_dir = args.out.join("depth");
    std::fs::create_dir_all(&depth_dir).map_err(|e| Error::io(&depth_dir, e))?;

    let rig = camera_ring(args.views, args.radius, &scene.focus())?;
    let mut true_poses = Vec::new();
    let mut init_poses = Vec::new();
    let mut views = Vec::new();
    let mut valid_total = 0usize;
    for (i, pose) in rig.into_iter().enumerate() {
        let id = ViewId(i as u32);
        let exact = render_depth(&scene, id, intr, pose, range)?;
        if exact.valid_count() == 0 {
            return Err(Error::Input(format!(
                "view {id} sees no scene surface; move the ring (radius {})",
                args.radius
            )));
        }
        let (noisy, init_pose) = corrupt(&exact, &spec, args.seed)?;
        valid_total += noisy.valid_count();
        let rel = PathBuf::from(format!("depth/view{:03}.dpf", id.0));
        write_depth_dpf(&args.out.join(&rel), &noisy)?;
        true_poses.push((id, pose));
        init_poses.push((id, init_pose));
        views.push(ManifestView {
            id,
            depth: rel,
            color: None,
        });
    }

    write_poses(&args.out.join("poses_true.txt"), &true_poses)?;
    write_poses(&args.out.join("poses_init.txt"), &init_poses)?;
    write_gt_planes(
        &args.out.join("gt_planes.txt"),
        &GroundTruthPlanes::from_scene(&scene)?,
    )?;
    let manifest = Manifest {
        intrinsics: intr,
        range,
        poses: PathBuf::from("poses_init.txt"),
        views,
    };
    write_manifest(&args.out.join("manifest.txt"), &manifest)?;
    write_config(&args.out.join("config.cfg"), &PipelineConfig::new(noise))?;

    println!("scene = {}", args.scene);
    println!("views = {}", args.views);
    println!("image = {}x{}", args.width, args.height);
    println!("valid_depths = {valid_total}");
    println!("sigma_z_at_1m_mm = {}", sigma_at_1m * 1e3);
    println!("dataset = {}", args.out.display());
    Ok(())
}
