//! Ground-truth planes as text, one plane per line. A bounded face is
//! `rect ox oy oz e1x e1y e1z e2x e2y e2z` (corner plus two edge
//! vectors); an unbounded plane is `plane nx ny nz d` with the normal
//! scaled to unit length on read. Lines starting with '#' are comments.

use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::evalkit::{GroundTruthPlanes, GtPlane};
use crate::synth::Rect;

fn numbers(path: &Path, no: usize, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse().map_err(|_| {
                Error::format(path, format!("line {no}: unreadable number {f:?}"))
            })
        })
        .collect()
}

pub fn read_gt_planes(path: &Path) -> Result<GroundTruthPlanes> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut planes = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        match fields[0] {
            "rect" => {
                if fields.len() != 10 {
                    return Err(Error::format(
                        path,
                        format!("line {no}: rect needs 9 numbers, got {}", fields.len() - 1),
                    ));
                }
                let v = numbers(path, no, &fields[1..])?;
                let rect = Rect {
                    origin: Vector3::new(v[0], v[1], v[2]),
                    e1: Vector3::new(v[3], v[4], v[5]),
                    e2: Vector3::new(v[6], v[7], v[8]),
                };
                if rect.e1.cross(&rect.e2).norm() == 0.0 {
                    return Err(Error::format(
                        path,
                        format!("line {no}: rect edges are parallel or zero"),
                    ));
                }
                planes.push(GtPlane::from_rect(rect));
            }
            "plane" => {
                if fields.len() != 5 {
                    return Err(Error::format(
                        path,
                        format!("line {no}: plane needs 4 numbers, got {}", fields.len() - 1),
                    ));
                }
                let v = numbers(path, no, &fields[1..])?;
                let n = Vector3::new(v[0], v[1], v[2]);
                let len = n.norm();
                if !(len > 0.0 && len.is_finite()) {
                    return Err(Error::format(
                        path,
                        format!("line {no}: plane normal has length {len}"),
                    ));
                }
                planes.push(GtPlane {
                    normal: n / len,
                    offset: v[3] / len,
                    extent: None,
                });
            }
            other => {
                return Err(Error::format(
                    path,
                    format!("line {no}: unknown directive {other:?}, expected rect or plane"),
                ));
            }
        }
    }
    GroundTruthPlanes::new(planes)
        .map_err(|e| Error::format(path, format!("unusable plane set: {e}")))
}

pub fn write_gt_planes(path: &Path, gt: &GroundTruthPlanes) -> Result<()> {
    let mut out = String::from("# ground-truth planes\n");
    for plane in &gt.planes {
        match &plane.extent {
            Some(r) => {
                out.push_str("rect");
                for v in [r.origin, r.e1, r.e2] {
                    out.push_str(&format!(" {} {} {}", v.x, v.y, v.z));
                }
                out.push('\n');
            }
            None => {
                let n = plane.normal;
                out.push_str(&format!("plane {} {} {} {}\n", n.x, n.y, n.z, plane.offset));
            }
        }
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}
