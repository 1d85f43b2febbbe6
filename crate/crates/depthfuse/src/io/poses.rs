//! Camera poses as text: one view per line,
//! `id r11 r12 r13 t1 r21 r22 r23 t2 r31 r32 r33 t3`, camera-from-world
//! with the rotation rows and translation interleaved. '#' starts a
//! comment; values use shortest-round-trip decimal so write and read are
//! exact inverses.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::geometry::{orthonormality_drift, Pose, ViewId};

/// Rotations with drift beyond Pose's own tolerance but below this are
/// snapped to the nearest rotation; anything worse is a format error.
const PROJECT_DRIFT_MAX: f64 = 1e-4;

fn nearest_rotation(m: &Matrix3<f64>) -> Option<Matrix3<f64>> {
    let svd = m.svd(true, true);
    let u = svd.u?;
    let v_t = svd.v_t?;
    let r = u * v_t;
    (r.determinant() > 0.0).then_some(r)
}

/// Parses a pose file. Lines are 1-based in errors; duplicate view ids are
/// rejected.
pub fn read_poses(path: &Path) -> Result<Vec<(ViewId, Pose)>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out: Vec<(ViewId, Pose)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 13 {
            return Err(Error::format(
                path,
                format!("line {line_no}: expected 13 fields, got {}", fields.len()),
            ));
        }
        let id: u32 = fields[0].parse().map_err(|_| {
            Error::format(path, format!("line {line_no}: unreadable view id {:?}", fields[0]))
        })?;
        if out.iter().any(|(v, _)| v.0 == id) {
            return Err(Error::format(
                path,
                format!("line {line_no}: duplicate view id {id}"),
            ));
        }
        let mut vals = [0.0f64; 12];
        for (i, f) in fields[1..].iter().enumerate() {
            vals[i] = f.parse().map_err(|_| {
                Error::format(path, format!("line {line_no}: unreadable number {f:?}"))
            })?;
        }
        let r = Matrix3::new(
            vals[0], vals[1], vals[2],
            vals[4], vals[5], vals[6],
            vals[8], vals[9], vals[10],
        );
        let t = Vector3::new(vals[3], vals[7], vals[11]);
        let drift = orthonormality_drift(&r);
        let r = if drift < Pose::ORTHONORMALITY_TOL {
            r
        } else if drift < PROJECT_DRIFT_MAX {
            nearest_rotation(&r).ok_or_else(|| {
                Error::format(
                    path,
                    format!("line {line_no}: rotation does not project to a proper rotation"),
                )
            })?
        } else {
            return Err(Error::format(
                path,
                format!(
                    "line {line_no}: rotation drifts from orthonormal by {drift:.3e}, limit {PROJECT_DRIFT_MAX:.0e}"
                ),
            ));
        };
        let pose = Pose::new(r, t).map_err(|e| {
            Error::format(path, format!("line {line_no}: {e}"))
        })?;
        out.push((ViewId(id), pose));
    }
    Ok(out)
}

/// Writes poses in the format `read_poses` accepts, one line per view,
/// exact to the bit.
pub fn write_poses(path: &Path, poses: &[(ViewId, Pose)]) -> Result<()> {
    let mut text = String::from(
        "# id r11 r12 r13 t1 r21 r22 r23 t2 r31 r32 r33 t3 (camera-from-world)\n",
    );
    for (view, pose) in poses {
        let r = pose.rotation().matrix();
        let t = pose.translation();
        text.push_str(&format!(
            "{} {} {} {} {} {} {} {} {} {} {} {} {}\n",
            view.0,
            r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x,
            r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y,
            r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z,
        ));
    }
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Rotation3;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use tempfile::tempdir;

    fn write_text(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn identity_line_parses() {
        let dir = tempdir().unwrap();
        let p = write_text(dir.path(), "p.txt", "0 1 0 0 0 0 1 0 0 0 0 1 0\n");
        let poses = read_poses(&p).unwrap();
        assert_eq!(poses.len(), 1);
        assert_eq!(poses[0].0, ViewId(0));
        assert_eq!(poses[0].1, Pose::identity());
    }

    #[test]
    fn round_trip_is_exact() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("rt.txt");
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut poses = Vec::new();
        for i in 0..20 {
            let axis = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>());
            let rot = Rotation3::from_scaled_axis(axis * 2.0 - Vector3::repeat(1.0));
            let t = Vector3::new(rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()) * 10.0;
            poses.push((ViewId(i), Pose::from_parts(rot, t)));
        }
        write_poses(&p, &poses).unwrap();
        let back = read_poses(&p).unwrap();
        assert_eq!(poses.len(), back.len());
        for ((va, pa), (vb, pb)) in poses.iter().zip(&back) {
            assert_eq!(va, vb);
            assert_eq!(pa.rotation().matrix(), pb.rotation().matrix());
            assert_eq!(pa.translation(), pb.translation());
        }
    }

    #[test]
    fn small_drift_projects_large_drift_rejects() {
        let dir = tempdir().unwrap();
        let rot = Rotation3::from_scaled_axis(Vector3::new(0.4, -0.2, 0.9));
        let line = |scale: f64| {
            let mut m = *rot.matrix();
            for c in 0..3 {
                m[(0, c)] *= scale;
            }
            format!(
                "5 {} {} {} 0.5 {} {} {} -1 {} {} {} 2\n",
                m[(0, 0)], m[(0, 1)], m[(0, 2)],
                m[(1, 0)], m[(1, 1)], m[(1, 2)],
                m[(2, 0)], m[(2, 1)], m[(2, 2)],
            )
        };

        // Row inflated by 5e-6: drift ~1e-5, snaps back to the original.
        let p = write_text(dir.path(), "ok.txt", &line(1.0 + 5e-6));
        let poses = read_poses(&p).unwrap();
        let got = poses[0].1.rotation().matrix();
        let err = (got - rot.matrix()).abs().max();
        assert!(err < 1e-9, "projection error {err}");

        // Row inflated by 1%: drift ~1e-2, rejected naming the line.
        let p = write_text(dir.path(), "bad.txt", &line(1.01));
        let err = read_poses(&p).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn malformed_lines_name_their_number() {
        let dir = tempdir().unwrap();
        let good = "0 1 0 0 0 0 1 0 0 0 0 1 0";
        let p = write_text(
            dir.path(),
            "m.txt",
            &format!("# header\n{good}\n1 1 0 0 0 0 1 0 0 0 0 1\n"),
        );
        let err = read_poses(&p).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        assert!(err.to_string().contains("12"), "{err}");

        let p = write_text(dir.path(), "n.txt", &format!("{good}\n0 1 0 0 x 0 1 0 0 0 0 1 0\n"));
        let err = read_poses(&p).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn duplicate_ids_are_rejected() {
        let dir = tempdir().unwrap();
        let good = "7 1 0 0 0 0 1 0 0 0 0 1 0";
        let p = write_text(dir.path(), "d.txt", &format!("{good}\n{good}\n"));
        let err = read_poses(&p).unwrap_err();
        assert!(err.to_string().contains("duplicate view id 7"), "{err}");
    }

    #[test]
    fn comments_and_blanks_are_ignored() {
        let dir = tempdir().unwrap();
        let p = write_text(
            dir.path(),
            "c.txt",
            "# full comment\n\n0 1 0 0 0 0 1 0 0 0 0 1 0 # trailing\n",
        );
        assert_eq!(read_poses(&p).unwrap().len(), 1);
    }
}
