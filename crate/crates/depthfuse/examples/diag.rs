//! Scratch diagnostic for the recovery dataset: per-round pose errors.

use depthfuse::evalkit::{rms_plane_distance, GroundTruthPlanes};
use depthfuse::fusion::FusedCloud;
use depthfuse::geometry::{rotation_angle, DepthRange, Intrinsics, Pose, ViewId};
use depthfuse::registration::refine_all_poses;
use depthfuse::sensor::prefilter;
use depthfuse::synth::{camera_ring, corrupt, render_depth, CorruptionSpec, SceneSpec};
use depthfuse::{DepthMap, PipelineConfig, SensorNoiseModel};

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn errs(maps: &[DepthMap], truth: &[Pose]) -> (Vec<f64>, Vec<f64>) {
    let mut rots = Vec::new();
    let mut trans = Vec::new();
    for (m, t) in maps.iter().zip(truth) {
        rots.push(rotation_angle(&(m.pose.rotation() * t.rotation().inverse())).to_degrees());
        trans.push((m.pose.camera_center() - t.camera_center()).norm() * 1e3);
    }
    (rots, trans)
}

/// Splits pose errors into a shared world-frame offset and what remains of
/// each view's error after that offset is removed.
fn common_mode(maps: &[DepthMap], truth: &[Pose], label: &str) {
    use nalgebra::Vector3;
    let mut axis_sum = Vector3::zeros();
    let mut center_sum = Vector3::zeros();
    let mut d_rots = Vec::new();
    let mut d_cents = Vec::new();
    for (m, t) in maps.iter().zip(truth) {
        let d_r = t.rotation().inverse() * m.pose.rotation();
        let v = d_r.scaled_axis();
        axis_sum += v;
        d_rots.push(v);
        let e = m.pose.camera_center() - t.camera_center();
        center_sum += e;
        d_cents.push(e);
    }
    let mean_v = axis_sum / maps.len() as f64;
    let mean_e = center_sum / maps.len() as f64;
    let rot_resid = median(
        d_rots
            .iter()
            .map(|v| (v - mean_v).norm().to_degrees())
            .collect(),
    );
    let cent_resid = median(d_cents.iter().map(|e| (e - mean_e).norm() * 1e3).collect());
    println!(
        "{label}: common rot {:.4} deg / center {:.2} mm; residual med rot {:.4} deg / center {:.2} mm",
        mean_v.norm().to_degrees(),
        mean_e.norm() * 1e3,
        rot_resid,
        cent_resid,
    );
}

fn main() {
    let mut seed = 404u64;
    let mut lambda = 1.0f64;
    let mut trim = 0.10f64;
    let mut rounds = 6usize;
    let mut gate_mm = 0.0f64;
    let mut w = 160usize;
    let mut h = 130usize;
    let mut fov = 70.0f64;
    let mut ring = 0.8f64;
    let mut no_noise = false;
    for arg in std::env::args().skip(1) {
        if arg == "nonoise" {
            no_noise = true;
            continue;
        }
        let (k, v) = arg.split_once('=').expect("key=value");
        match k {
            "seed" => seed = v.parse().unwrap(),
            "lambda" => lambda = v.parse().unwrap(),
            "trim" => trim = v.parse().unwrap(),
            "rounds" => rounds = v.parse().unwrap(),
            "gate" => gate_mm = v.parse().unwrap(),
            "w" => w = v.parse().unwrap(),
            "h" => h = v.parse().unwrap(),
            "fov" => fov = v.parse().unwrap(),
            "ring" => ring = v.parse().unwrap(),
            other => panic!("unknown key {other}"),
        }
    }

    let scene = SceneSpec::corner();
    let f = (w as f64 / 2.0) / ((fov / 2.0).to_radians()).tan();
    let intr = Intrinsics::new(
        f,
        f,
        (w as f64 - 1.0) / 2.0,
        (h as f64 - 1.0) / 2.0,
        w,
        h,
    )
    .unwrap();
    let range = DepthRange::new(0.5, 8.0).unwrap();
    let s = 1.5e-3;
    let noise = SensorNoiseModel::new(1.0, 1.0, 1.0 / f, 1.0 / f, 0.8 * s, 0.0, 0.2 * s).unwrap();
    let spec = CorruptionSpec {
        depth_noise: if no_noise { None } else { Some(noise) },
        outlier_rate: 0.0,
        dropout_rate: 0.0,
        rot_std_rad: 0.5f64.to_radians(),
        trans_std_m: 0.010,
    };
    let mut maps = Vec::new();
    let mut truth = Vec::new();
    for (i, pose) in camera_ring(8, ring, &scene.focus())
        .unwrap()
        .into_iter()
        .enumerate()
    {
        let exact = render_depth(&scene, ViewId(i as u32), intr, pose, range).unwrap();
        let (mut noisy, init) = corrupt(&exact, &spec, seed).unwrap();
        truth.push(noisy.pose);
        noisy.pose = init;
        maps.push(noisy);
    }
    let gt = GroundTruthPlanes::from_scene(&scene).unwrap();
    let fuse_model =
        SensorNoiseModel::new(lambda, lambda, 1.0 / f, 1.0 / f, 0.8 * s, 0.0, 0.2 * s).unwrap();
    let mut cfg = PipelineConfig::new(fuse_model);
    cfg.icp.trim_fraction = trim;
    let noise = fuse_model;
    println!("seed {seed}  lambda {lambda}  trim {trim}  {w}x{h} fov {fov}  ring {ring}");

    let mut work = Vec::new();
    for m in &maps {
        work.push(prefilter(m, &cfg.filter).unwrap().0);
    }
    common_mode(&work, &truth, "initial");
    let (r0, t0) = errs(&work, &truth);
    println!(
        "initial:  rot med {:.4} deg (spread {:.4}..{:.4})  trans med {:.2} mm (spread {:.2}..{:.2})",
        median(r0.clone()),
        r0.iter().cloned().fold(f64::INFINITY, f64::min),
        r0.iter().cloned().fold(0.0, f64::max),
        median(t0.clone()),
        t0.iter().cloned().fold(f64::INFINITY, f64::min),
        t0.iter().cloned().fold(0.0, f64::max),
    );

    let mut icp = cfg.icp.resolved(&noise, &range).unwrap();
    if gate_mm > 0.0 {
        icp.max_correspondence_dist = Some(gate_mm * 1e-3);
    }
    println!("icp gate: {:.1} mm", icp.max_correspondence_dist.unwrap() * 1e3);

    let mut rms_round1 = 0.0f64;
    let mut rms_last = 0.0f64;
    let mut returned_rot = f64::NAN;
    let mut returned_trans = f64::NAN;
    for round in 1..=rounds {
        let mut cloud = FusedCloud::for_model(&noise, &range, &cfg.merge).unwrap();
        for dm in &work {
            cloud.fuse_map(dm, &noise, &cfg.merge).unwrap();
        }
        cloud.postfilter();
        let input: usize = work.iter().map(|m| m.valid_count()).sum();
        let reduction = 1.0 - cloud.len() as f64 / input as f64;
        let rms = rms_plane_distance(&cloud, &gt).unwrap();
        if round == 1 {
            rms_round1 = rms;
        }
        rms_last = rms;
        let refined = refine_all_poses(&work, &cloud, &icp);
        let mut max_delta_rot = 0.0f64;
        let mut max_delta_trans = 0.0f64;
        let mut iters = Vec::new();
        for (i, r) in refined.into_iter().enumerate() {
            let dr = rotation_angle(&(r.pose.rotation() * work[i].pose.rotation().inverse()));
            let dt = (r.pose.translation() - work[i].pose.translation()).norm();
            max_delta_rot = max_delta_rot.max(dr);
            max_delta_trans = max_delta_trans.max(dt);
            if let Some(icp_res) = &r.icp {
                iters.push(format!(
                    "{}:{}it rms {:.1}->{:.1}mm m{:.2}",
                    i,
                    icp_res.iterations_run,
                    icp_res.rms_before * 1e3,
                    icp_res.rms_after * 1e3,
                    icp_res.matched_fraction
                ));
            }
            if let Some(e) = &r.error {
                iters.push(format!("{i}:ERR {e}"));
            }
            work[i].pose = r.pose;
        }
        let (r, t) = errs(&work, &truth);
        if round + 1 == rounds {
            returned_rot = median(r.clone());
            returned_trans = median(t.clone());
        }
        println!(
            "round {round}: red {reduction:.3}  cloud rms {:.2} mm  rot med {:.4} (spread {:.4}..{:.4})  trans med {:.2} mm  delta {:.4} deg / {:.2} mm",
            rms * 1e3,
            median(r.clone()),
            r.iter().cloned().fold(f64::INFINITY, f64::min),
            r.iter().cloned().fold(0.0, f64::max),
            median(t.clone()),
            max_delta_rot.to_degrees(),
            max_delta_trans * 1e3,
        );
        println!("  icp: {}", iters.join("  "));
    }
    common_mode(&work, &truth, "final");
    println!(
        "SUMMARY seed={seed} lambda={lambda} rot_ratio={:.3} trans_ratio={:.3} rms_ratio={:.3}",
        returned_rot / median(r0.clone()),
        returned_trans / median(t0.clone()),
        rms_last / rms_round1,
    );
    println!("per-view final errors (world frame, mm / deg):");
    for (m, t) in work.iter().zip(&truth) {
        let e = (m.pose.camera_center() - t.camera_center()) * 1e3;
        let v = (t.rotation().inverse() * m.pose.rotation()).scaled_axis();
        println!(
            "  {:?}: center [{:7.2} {:7.2} {:7.2}] |{:6.2}|  rot axis*ang [{:7.4} {:7.4} {:7.4}] |{:.4}|",
            m.view,
            e.x,
            e.y,
            e.z,
            e.norm(),
            v.x.to_degrees(),
            v.y.to_degrees(),
            v.z.to_degrees(),
            v.norm().to_degrees(),
        );
    }
}
