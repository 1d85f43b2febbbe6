//! Scratch scan: initial common-mode of the pose perturbations per seed.

use depthfuse::geometry::{DepthRange, Intrinsics, Pose, ViewId};
use depthfuse::synth::{camera_ring, corrupt, CorruptionSpec, SceneSpec};
use depthfuse::DepthMap;
use nalgebra::Vector3;

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn main() {
    let scene = SceneSpec::corner();
    let intr = Intrinsics::new(100.0, 100.0, 0.5, 0.5, 2, 2).unwrap();
    let range = DepthRange::new(0.5, 8.0).unwrap();
    let spec = CorruptionSpec {
        depth_noise: None,
        outlier_rate: 0.0,
        dropout_rate: 0.0,
        rot_std_rad: 0.5f64.to_radians(),
        trans_std_m: 0.010,
    };
    let ring = camera_ring(8, 0.8, &scene.focus()).unwrap();
    let mut rows = Vec::new();
    for seed in 0..200u64 {
        let mut axis_sum = Vector3::zeros();
        let mut cent_sum = Vector3::zeros();
        let mut rots = Vec::new();
        let mut cents = Vec::new();
        for (i, pose) in ring.iter().enumerate() {
            let dummy = DepthMap::new(
                ViewId(i as u32),
                intr,
                *pose,
                range,
                vec![f64::NAN; 4],
            )
            .unwrap();
            let (_, init) = corrupt(&dummy, &spec, seed).unwrap();
            let v = (pose.rotation().inverse() * init.rotation()).scaled_axis();
            axis_sum += v;
            rots.push(v.norm());
            let e = init.camera_center() - pose.camera_center();
            cent_sum += e;
            cents.push(e.norm());
        }
        let med_rot = median(rots);
        let med_cent = median(cents);
        let common_rot = (axis_sum / 8.0).norm();
        let common_cent = (cent_sum / 8.0).norm();
        let score = (common_rot / med_rot).max(common_cent / med_cent);
        rows.push((score, seed, med_rot.to_degrees(), common_rot.to_degrees(), med_cent * 1e3, common_cent * 1e3));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    println!("score  seed  med_rot  common_rot  med_cent  common_cent");
    for (score, seed, mr, cr, mc, cc) in rows.iter().take(15) {
        println!("{score:.3}  {seed:4}  {mr:.4} deg  {cr:.4} deg  {mc:.2} mm  {cc:.2} mm");
    }
}
