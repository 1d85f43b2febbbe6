//! Dataset manifests. A manifest names everything a run needs: the
//! shared camera intrinsics, the sensor depth range, a pose file, and
//! one depth raster (plus optional color image) per view. Paths are
//! relative to the manifest's own directory; views load in parallel.
//!
//! ```text
//! units meters
//! intrinsics 540 540 319.5 239.5 640 480
//! range 0.5 8
//! poses poses_init.txt
//! view 0 depth/000.dpf
//! view 1 depth/001.dpf color/001.ppm
//! ```

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::exec;
use crate::geometry::{DepthMap, DepthRange, Intrinsics, Pose, ViewId};
use crate::io::color::read_ppm;
use crate::io::depth::read_depth_file;
use crate::io::poses::read_poses;

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestView {
    pub id: ViewId,
    pub depth: PathBuf,
    pub color: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Manifest {
    pub intrinsics: Intrinsics,
    pub range: DepthRange,
    /// Pose file path, relative to the manifest directory.
    pub poses: PathBuf,
    pub views: Vec<ManifestView>,
}

fn parse_numbers(path: &Path, no: usize, what: &str, fields: &[&str]) -> Result<Vec<f64>> {
    fields
        .iter()
        .map(|f| {
            f.parse().map_err(|_| {
                Error::format(path, format!("line {no}: unreadable {what} number {f:?}"))
            })
        })
        .collect()
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut units = false;
    let mut intrinsics = None;
    let mut range = None;
    let mut poses = None;
    let mut views: Vec<ManifestView> = Vec::new();
    let mut seen_ids = HashSet::new();

    for (idx, raw) in text.lines().enumerate() {
        let no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let dup = |name: &str| Error::format(path, format!("line {no}: duplicate {name}"));
        match fields[0] {
            "units" => {
                if units {
                    return Err(dup("units"));
                }
                if fields[1..] != ["meters"] {
                    return Err(Error::format(
                        path,
                        format!("line {no}: depth units must be meters"),
                    ));
                }
                units = true;
            }
            "intrinsics" => {
                if intrinsics.is_some() {
                    return Err(dup("intrinsics"));
                }
                if fields.len() != 7 {
                    return Err(Error::format(
                        path,
                        format!(
                            "line {no}: intrinsics needs fx fy cx cy width height, got {} fields",
                            fields.len() - 1
                        ),
                    ));
                }
                let v = parse_numbers(path, no, "intrinsics", &fields[1..])?;
                if v[4].fract() != 0.0 || v[5].fract() != 0.0 {
                    return Err(Error::format(
                        path,
                        format!("line {no}: image dimensions must be integers"),
                    ));
                }
                let parsed = Intrinsics::new(v[0], v[1], v[2], v[3], v[4] as usize, v[5] as usize)
                    .map_err(|e| Error::format(path, format!("line {no}: {e}")))?;
                intrinsics = Some(parsed);
            }
            "range" => {
                if range.is_some() {
                    return Err(dup("range"));
                }
                if fields.len() != 3 {
                    return Err(Error::format(
                        path,
                        format!("line {no}: range needs min max, got {} fields", fields.len() - 1),
                    ));
                }
                let v = parse_numbers(path, no, "range", &fields[1..])?;
                let parsed = DepthRange::new(v[0], v[1])
                    .map_err(|e| Error::format(path, format!("line {no}: {e}")))?;
                range = Some(parsed);
            }
            "poses" => {
                if poses.is_some() {
                    return Err(dup("poses"));
                }
                if fields.len() != 2 {
                    return Err(Error::format(
                        path,
                        format!("line {no}: poses needs one file path"),
                    ));
                }
                poses = Some(PathBuf::from(fields[1]));
            }
            "view" => {
                if !(3..=4).contains(&fields.len()) {
                    return Err(Error::format(
                        path,
                        format!("line {no}: view needs id and depth path, optional color path"),
                    ));
                }
                let id: u32 = fields[1].parse().map_err(|_| {
                    Error::format(path, format!("line {no}: unreadable view id {:?}", fields[1]))
                })?;
                if !seen_ids.insert(id) {
                    return Err(Error::format(path, format!("line {no}: duplicate view id {id}")));
                }
                views.push(ManifestView {
                    id: ViewId(id),
                    depth: PathBuf::from(fields[2]),
                    color: fields.get(3).map(PathBuf::from),
                });
            }
            other => {
                return Err(Error::format(
                    path,
                    format!(
                        "line {no}: unknown directive {other:?}, expected \
                         units, intrinsics, range, poses, or view"
                    ),
                ));
            }
        }
    }

    let missing = |name: &str| Error::format(path, format!("missing {name} line"));
    if !units {
        return Err(missing("units"));
    }
    let manifest = Manifest {
        intrinsics: intrinsics.ok_or_else(|| missing("intrinsics"))?,
        range: range.ok_or_else(|| missing("range"))?,
        poses: poses.ok_or_else(|| missing("poses"))?,
        views,
    };
    if manifest.views.is_empty() {
        return Err(Error::format(path, "manifest lists no views"));
    }
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let k = &manifest.intrinsics;
    let mut out = String::from("# dataset manifest\nunits meters\n");
    out.push_str(&format!(
        "intrinsics {} {} {} {} {} {}\n",
        k.fx, k.fy, k.cx, k.cy, k.width, k.height
    ));
    out.push_str(&format!("range {} {}\n", manifest.range.min, manifest.range.max));
    out.push_str(&format!("poses {}\n", manifest.poses.display()));
    for v in &manifest.views {
        out.push_str(&format!("view {} {}", v.id.0, v.depth.display()));
        if let Some(c) = &v.color {
            out.push_str(&format!(" {}", c.display()));
        }
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads the manifest at `path` and loads every view it names into a
/// depth map with its pose applied. Views load in parallel.
pub fn load_dataset(path: &Path) -> Result<(Manifest, Vec<DepthMap>)> {
    let manifest = read_manifest(path)?;
    let base = path.parent().unwrap_or(Path::new("."));
    let pose_list = read_poses(&base.join(&manifest.poses))?;
    let pose_of = |id: ViewId| -> Result<Pose> {
        pose_list
            .iter()
            .find(|(pid, _)| *pid == id)
            .map(|(_, p)| *p)
            .ok_or_else(|| {
                Error::format(path, format!("view {id} has no pose in {}", manifest.poses.display()))
            })
    };

    let loaded = exec::map_slice(&manifest.views, |v| -> Result<DepthMap> {
        let raster = read_depth_file(&base.join(&v.depth))?;
        let mut map =
            raster.into_depth_map(v.id, manifest.intrinsics, pose_of(v.id)?, manifest.range)?;
        if let Some(rel) = &v.color {
            let img = read_ppm(&base.join(rel))?;
            if (img.width, img.height) != (map.width(), map.height()) {
                return Err(Error::Input(format!(
                    "view {}: color image is {}x{}, depth is {}x{}",
                    v.id,
                    img.width,
                    img.height,
                    map.width(),
                    map.height()
                )));
            }
            map = map.with_color(img.pixels)?;
        }
        Ok(map)
    });
    let maps = loaded.into_iter().collect::<Result<Vec<_>>>()?;
    Ok((manifest, maps))
}
