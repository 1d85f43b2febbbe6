//! Fused clouds as PLY. The writer emits x,y,z and nx,ny,nz as float32,
//! optional red,green,blue as uint8, and the merge/violation counters as
//! uint32, in binary little-endian or ASCII. The reader takes any scalar
//! layout of a single vertex element: known property names are converted
//! from whatever scalar type the file declares, unknown ones are skipped.

use std::path::Path;

use nalgebra::{Matrix3, Vector3};

use crate::error::{Error, Result};
use crate::fusion::{FusedCloud, FusedPoint};
use crate::sensor::CovarianceEllipsoid;

/// Files do not carry covariances; points read back get this nominal
/// isotropic stand-in (1 mm std), fine for evaluation and rendering.
fn nominal_cov() -> CovarianceEllipsoid {
    CovarianceEllipsoid::from_spd_unchecked(Matrix3::identity() * 1e-6)
}

/// Writes `cloud` to `path`. Color properties appear iff at least one
/// point carries color; colorless points in a colored cloud write as
/// white.
pub fn write_ply(path: &Path, cloud: &FusedCloud, binary: bool) -> Result<()> {
    let points = cloud.points();
    let with_color = points.iter().any(|p| p.color.is_some());
    let mut head = String::from("ply\n");
    head.push_str(if binary {
        "format binary_little_endian 1.0\n"
    } else {
        "format ascii 1.0\n"
    });
    head.push_str(&format!("element vertex {}\n", points.len()));
    for axis in ["x", "y", "z", "nx", "ny", "nz"] {
        head.push_str(&format!("property float {axis}\n"));
    }
    if with_color {
        for ch in ["red", "green", "blue"] {
            head.push_str(&format!("property uchar {ch}\n"));
        }
    }
    head.push_str("property uint merges\n");
    head.push_str("property uint violations\n");
    head.push_str("end_header\n");

    let mut bytes = head.into_bytes();
    for pt in points {
        let fields = [
            pt.p.x as f32,
            pt.p.y as f32,
            pt.p.z as f32,
            pt.n.x as f32,
            pt.n.y as f32,
            pt.n.z as f32,
        ];
        let color = pt.color.unwrap_or([255, 255, 255]);
        if binary {
            for v in fields {
                bytes.extend_from_slice(&v.to_le_bytes());
            }
            if with_color {
                bytes.extend_from_slice(&color);
            }
            bytes.extend_from_slice(&pt.merges.to_le_bytes());
            bytes.extend_from_slice(&pt.violations.to_le_bytes());
        } else {
            let mut line = fields.map(|v| format!("{v}")).join(" ");
            if with_color {
                line.push_str(&format!(" {} {} {}", color[0], color[1], color[2]));
            }
            line.push_str(&format!(" {} {}\n", pt.merges, pt.violations));
            bytes.extend_from_slice(line.as_bytes());
        }
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Scalar {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl Scalar {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => Scalar::I8,
            "uchar" | "uint8" => Scalar::U8,
            "short" | "int16" => Scalar::I16,
            "ushort" | "uint16" => Scalar::U16,
            "int" | "int32" => Scalar::I32,
            "uint" | "uint32" => Scalar::U32,
            "float" | "float32" => Scalar::F32,
            "double" | "float64" => Scalar::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            Scalar::I8 | Scalar::U8 => 1,
            Scalar::I16 | Scalar::U16 => 2,
            Scalar::I32 | Scalar::U32 | Scalar::F32 => 4,
            Scalar::F64 => 8,
        }
    }

    fn read_le(self, b: &[u8]) -> f64 {
        match self {
            Scalar::I8 => b[0] as i8 as f64,
            Scalar::U8 => b[0] as f64,
            Scalar::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
            Scalar::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
            Scalar::F64 => f64::from_le_bytes([
                b[0], b[1], b[2], b[3], b[4], b[5], b[6], b[7],
            ]),
        }
    }

    /// Snaps an ascii-parsed value to the declared type so both encodings
    /// of the same file yield identical numbers.
    fn normalize(self, v: f64) -> f64 {
        match self {
            Scalar::I8 => v as i8 as f64,
            Scalar::U8 => v as u8 as f64,
            Scalar::I16 => v as i16 as f64,
            Scalar::U16 => v as u16 as f64,
            Scalar::I32 => v as i32 as f64,
            Scalar::U32 => v as u32 as f64,
            Scalar::F32 => v as f32 as f64,
            Scalar::F64 => v,
        }
    }
}

struct Layout {
    binary: bool,
    count: usize,
    props: Vec<(String, Scalar)>,
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<(Layout, usize)> {
    let mut at = 0usize;
    let mut line_no = 0usize;
    let mut next_line = || -> Result<(usize, String)> {
        if at >= bytes.len() {
            return Err(Error::format(path, "header ends before end_header"));
        }
        let start = at;
        while at < bytes.len() && bytes[at] != b'\n' {
            at += 1;
        }
        let s = std::str::from_utf8(&bytes[start..at])
            .map_err(|_| Error::format(path, format!("non-text header at byte {start}")))?
            .trim_end_matches('\r')
            .to_string();
        at = (at + 1).min(bytes.len());
        line_no += 1;
        Ok((line_no, s))
    };

    let (_, magic) = next_line()?;
    if magic != "ply" {
        return Err(Error::format(path, "line 1: expected \"ply\""));
    }
    let mut binary = None;
    let mut count = None;
    let mut props: Vec<(String, Scalar)> = Vec::new();
    let mut in_vertex = false;
    loop {
        let (no, line) = next_line()?;
        let mut words = line.split_whitespace();
        match words.next() {
            Some("comment") | None => {}
            Some("format") => {
                binary = match words.next() {
                    Some("ascii") => Some(false),
                    Some("binary_little_endian") => Some(true),
                    other => {
                        return Err(Error::format(
                            path,
                            format!("line {no}: unsupported format {other:?}"),
                        ))
                    }
                };
            }
            Some("element") => {
                let kind = words.next().unwrap_or("");
                if kind != "vertex" || count.is_some() {
                    return Err(Error::format(
                        path,
                        format!("line {no}: only a single vertex element is supported"),
                    ));
                }
                count = words.next().and_then(|w| w.parse::<usize>().ok());
                if count.is_none() {
                    return Err(Error::format(path, format!("line {no}: bad vertex count")));
                }
                in_vertex = true;
            }
            Some("property") => {
                if !in_vertex {
                    return Err(Error::format(
                        path,
                        format!("line {no}: property outside an element"),
                    ));
                }
                let kind = words.next().unwrap_or("");
                if kind == "list" {
                    return Err(Error::format(
                        path,
                        format!("line {no}: list properties are not supported"),
                    ));
                }
                let scalar = Scalar::parse(kind).ok_or_else(|| {
                    Error::format(path, format!("line {no}: unknown scalar type {kind:?}"))
                })?;
                let name = words.next().ok_or_else(|| {
                    Error::format(path, format!("line {no}: property needs a name"))
                })?;
                props.push((name.to_string(), scalar));
            }
            Some("end_header") => break,
            Some(other) => {
                return Err(Error::format(
                    path,
                    format!("line {no}: unexpected header keyword {other:?}"),
                ));
            }
        }
    }
    let binary =
        binary.ok_or_else(|| Error::format(path, "header declares no format"))?;
    let count =
        count.ok_or_else(|| Error::format(path, "header declares no vertex element"))?;
    if props.is_empty() {
        return Err(Error::format(path, "vertex element declares no properties"));
    }
    Ok((
        Layout {
            binary,
            count,
            props,
        },
        at,
    ))
}

fn build_point(props: &[(String, Scalar)], values: &[f64]) -> FusedPoint {
    let mut p = Vector3::zeros();
    let mut n = Vector3::z();
    let mut color = [None; 3];
    let mut merges = 0u32;
    let mut violations = 0u32;
    for ((name, _), &v) in props.iter().zip(values) {
        match name.as_str() {
            "x" => p.x = v,
            "y" => p.y = v,
            "z" => p.z = v,
            "nx" => n.x = v,
            "ny" => n.y = v,
            "nz" => n.z = v,
            "red" => color[0] = Some(v.clamp(0.0, 255.0) as u8),
            "green" => color[1] = Some(v.clamp(0.0, 255.0) as u8),
            "blue" => color[2] = Some(v.clamp(0.0, 255.0) as u8),
            "merges" => merges = v.max(0.0) as u32,
            "violations" => violations = v.max(0.0) as u32,
            _ => {}
        }
    }
    FusedPoint {
        p,
        cov: nominal_cov(),
        n,
        merges,
        violations,
        color: match color {
            [Some(r), Some(g), Some(b)] => Some([r, g, b]),
            _ => None,
        },
    }
}

/// Reads a PLY vertex cloud. Needs x, y, z; takes nx/ny/nz, red/green/blue,
/// merges, violations when present; skips unknown scalar properties.
/// Covariances are not part of the format, see `nominal_cov`.
pub fn read_ply(path: &Path) -> Result<Vec<FusedPoint>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let (layout, data_at) = parse_header(path, &bytes)?;
    for need in ["x", "y", "z"] {
        if !layout.props.iter().any(|(n, _)| n == need) {
            return Err(Error::format(path, format!("vertex element lacks {need:?}")));
        }
    }
    let mut out = Vec::with_capacity(layout.count);
    if layout.binary {
        let stride: usize = layout.props.iter().map(|(_, s)| s.size()).sum();
        let expect = data_at + stride * layout.count;
        if bytes.len() != expect {
            return Err(Error::format(
                path,
                format!(
                    "{} vertices of {stride} bytes end at byte {expect}, file has {}",
                    layout.count,
                    bytes.len()
                ),
            ));
        }
        let mut values = vec![0.0f64; layout.props.len()];
        let mut at = data_at;
        for _ in 0..layout.count {
            for (i, (_, scalar)) in layout.props.iter().enumerate() {
                values[i] = scalar.read_le(&bytes[at..at + scalar.size()]);
                at += scalar.size();
            }
            out.push(build_point(&layout.props, &values));
        }
    } else {
        let text = std::str::from_utf8(&bytes[data_at..])
            .map_err(|_| Error::format(path, "ascii body is not valid text"))?;
        let mut tokens = text.split_ascii_whitespace();
        let mut values = vec![0.0f64; layout.props.len()];
        for row in 0..layout.count {
            for (i, (name, scalar)) in layout.props.iter().enumerate() {
                let tok = tokens.next().ok_or_else(|| {
                    Error::format(
                        path,
                        format!("vertex {row} ends early, missing {name:?}"),
                    )
                })?;
                let v: f64 = tok.parse().map_err(|_| {
                    Error::format(path, format!("vertex {row}: unreadable value {tok:?}"))
                })?;
                values[i] = scalar.normalize(v);
            }
            out.push(build_point(&layout.props, &values));
        }
        if let Some(extra) = tokens.next() {
            return Err(Error::format(
                path,
                format!("trailing data {extra:?} after the last vertex"),
            ));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use tempfile::tempdir;

    fn demo_cloud(with_color: bool) -> FusedCloud {
        let mut cloud = FusedCloud::new(0.05);
        for i in 0..3u32 {
            let f = i as f64;
            cloud.insert(FusedPoint {
                p: Vector3::new(0.125 * f, -1.5 + f, 2.0 + 0.25 * f),
                cov: nominal_cov(),
                n: Vector3::new(0.0, 0.6, -0.8),
                merges: i,
                violations: 3 - i,
                color: with_color.then_some([10 * i as u8, 20, 255 - i as u8]),
            });
        }
        cloud
    }

    fn assert_same_points(a: &[FusedPoint], b: &[FusedPoint]) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert_eq!(x.p, y.p);
            assert_eq!(x.n, y.n);
            assert_eq!(x.merges, y.merges);
            assert_eq!(x.violations, y.violations);
            assert_eq!(x.color, y.color);
        }
    }

    #[test]
    fn binary_round_trip_preserves_every_field() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.ply");
        let cloud = demo_cloud(true);
        write_ply(&p, &cloud, true).unwrap();
        let back = read_ply(&p).unwrap();
        assert_eq!(back.len(), 3);
        for (orig, got) in cloud.points().iter().zip(&back) {
            // Stored as f32: compare against the narrowed original.
            assert_eq!(got.p.x, orig.p.x as f32 as f64);
            assert_eq!(got.n.y, orig.n.y as f32 as f64);
            assert_eq!(got.merges, orig.merges);
            assert_eq!(got.violations, orig.violations);
            assert_eq!(got.color, orig.color);
        }
    }

    #[test]
    fn ascii_and_binary_parse_identically() {
        let dir = tempdir().unwrap();
        for with_color in [false, true] {
            let cloud = demo_cloud(with_color);
            let pa = dir.path().join(format!("a{with_color}.ply"));
            let pb = dir.path().join(format!("b{with_color}.ply"));
            write_ply(&pa, &cloud, false).unwrap();
            write_ply(&pb, &cloud, true).unwrap();
            assert_same_points(&read_ply(&pa).unwrap(), &read_ply(&pb).unwrap());
        }
    }

    #[test]
    fn empty_cloud_writes_a_valid_file() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("empty.ply");
        write_ply(&p, &FusedCloud::new(0.05), true).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.contains("element vertex 0"));
        assert!(read_ply(&p).unwrap().is_empty());
    }

    #[test]
    fn foreign_layouts_are_tolerated() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("f.ply");
        // Doubles, reordered properties, an unknown extra, no counters.
        std::fs::write(
            &p,
            "ply\nformat ascii 1.0\ncomment made elsewhere\n\
             element vertex 2\n\
             property double z\nproperty double x\nproperty double y\n\
             property float quality\n\
             end_header\n\
             3 1 2 0.5\n6 4 5 0.25\n",
        )
        .unwrap();
        let pts = read_ply(&p).unwrap();
        assert_eq!(pts[0].p, Vector3::new(1.0, 2.0, 3.0));
        assert_eq!(pts[1].p, Vector3::new(4.0, 5.0, 6.0));
        assert_eq!(pts[0].merges, 0);
        assert_eq!(pts[0].color, None);
        assert_eq!(pts[0].n, Vector3::z());
    }

    #[test]
    fn malformed_files_are_rejected() {
        let dir = tempdir().unwrap();
        let write = |name: &str, text: &str| {
            let p = dir.path().join(name);
            std::fs::write(&p, text).unwrap();
            p
        };
        // Wrong magic.
        let p = write("m.ply", "plyx\nformat ascii 1.0\nend_header\n");
        assert!(read_ply(&p).unwrap_err().to_string().contains("line 1"));
        // Big endian.
        let p = write(
            "be.ply",
            "ply\nformat binary_big_endian 1.0\nelement vertex 0\nproperty float x\nproperty float y\nproperty float z\nend_header\n",
        );
        assert!(read_ply(&p).is_err());
        // Missing coordinates.
        let p = write(
            "nc.ply",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nend_header\n1 2\n",
        );
        assert!(read_ply(&p).unwrap_err().to_string().contains("\"z\""));
        // Truncated ascii body.
        let p = write(
            "tr.ply",
            "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3\n",
        );
        assert!(read_ply(&p).unwrap_err().to_string().contains("vertex 1"));
        // Trailing ascii garbage.
        let p = write(
            "tg.ply",
            "ply\nformat ascii 1.0\nelement vertex 1\nproperty float x\nproperty float y\nproperty float z\nend_header\n1 2 3 4\n",
        );
        assert!(read_ply(&p).unwrap_err().to_string().contains("trailing"));
    }

    #[test]
    fn binary_length_must_match_exactly() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.ply");
        write_ply(&p, &demo_cloud(false), true).unwrap();
        let mut bytes = std::fs::read(&p).unwrap();
        bytes.push(0);
        std::fs::write(&p, &bytes).unwrap();
        let err = read_ply(&p).unwrap_err();
        assert!(err.to_string().contains("bytes"), "{err}");
    }
}
