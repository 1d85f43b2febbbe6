//! Depth rasters on disk. Two encodings: a raw float format (magic
//! "DPF1", little-endian) holding meters directly, and 16-bit binary PGM
//! holding millimeters with 0 marking invalid pixels.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{DepthMap, DepthRange, Intrinsics, Pose, ViewId};

/// Width, height, and row-major depths in meters; invalid pixels are NaN.
/// A raster is a raw grid awaiting calibration data.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthRaster {
    pub width: usize,
    pub height: usize,
    pub depths: Vec<f64>,
}

impl DepthRaster {
    /// Pairs the raster with its calibration. The intrinsics must declare
    /// the raster's exact dimensions.
    pub fn into_depth_map(
        self,
        view: ViewId,
        intrinsics: Intrinsics,
        pose: Pose,
        range: DepthRange,
    ) -> Result<DepthMap> {
        if intrinsics.width != self.width || intrinsics.height != self.height {
            return Err(Error::Input(format!(
                "raster is {}x{} but intrinsics declare {}x{}",
                self.width, self.height, intrinsics.width, intrinsics.height
            )));
        }
        DepthMap::new(view, intrinsics, pose, range, self.depths)
    }
}

const DPF_MAGIC: &[u8; 4] = b"DPF1";

/// Reads either depth encoding, telling them apart by the leading magic
/// ("DPF1" or the PGM "P5").
pub fn read_depth_file(path: &Path) -> Result<DepthRaster> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(DPF_MAGIC) {
        read_dpf_bytes(path, &bytes)
    } else if bytes.starts_with(b"P5") {
        read_pgm_bytes(path, &bytes)
    } else {
        Err(Error::format(
            path,
            "unknown magic at byte 0, expected \"DPF1\" or \"P5\"",
        ))
    }
}

fn read_dpf_bytes(path: &Path, bytes: &[u8]) -> Result<DepthRaster> {
    if bytes.len() < 8 {
        return Err(Error::format(
            path,
            format!("header needs 8 bytes, file has {}", bytes.len()),
        ));
    }
    let width = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let height = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if width == 0 || height == 0 {
        return Err(Error::format(
            path,
            format!("dimensions {width}x{height} at byte 4 must be nonzero"),
        ));
    }
    let expect = 8 + width * height * 4;
    if bytes.len() != expect {
        return Err(Error::format(
            path,
            format!(
                "{width}x{height} floats end at byte {expect}, file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let depths = bytes[8..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    Ok(DepthRaster {
        width,
        height,
        depths,
    })
}

/// Writes the float encoding. Invalid pixels become NaN; depths are
/// narrowed to f32.
pub fn write_depth_dpf(path: &Path, dm: &DepthMap) -> Result<()> {
    let (w, h) = (dm.width(), dm.height());
    if w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(Error::Input(format!(
            "{w}x{h} exceeds the format's 65535 pixel dimension limit"
        )));
    }
    let mut bytes = Vec::with_capacity(8 + w * h * 4);
    bytes.extend_from_slice(DPF_MAGIC);
    bytes.extend_from_slice(&(w as u16).to_le_bytes());
    bytes.extend_from_slice(&(h as u16).to_le_bytes());
    for &d in dm.depths() {
        bytes.extend_from_slice(&(d as f32).to_le_bytes());
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Netpbm header tokenizer: skips whitespace and '#' comments, returns the
/// next token and the offset just past it.
pub(super) fn pgm_token(bytes: &[u8], mut at: usize) -> Option<(usize, usize)> {
    loop {
        while at < bytes.len() && bytes[at].is_ascii_whitespace() {
            at += 1;
        }
        if at < bytes.len() && bytes[at] == b'#' {
            while at < bytes.len() && bytes[at] != b'\n' {
                at += 1;
            }
            continue;
        }
        break;
    }
    if at == bytes.len() {
        return None;
    }
    let start = at;
    while at < bytes.len() && !bytes[at].is_ascii_whitespace() {
        at += 1;
    }
    Some((start, at))
}

pub(super) fn pgm_number(path: &Path, bytes: &[u8], at: usize, what: &str) -> Result<(usize, usize)> {
    let (start, end) = pgm_token(bytes, at).ok_or_else(|| {
        Error::format(path, format!("missing {what} near byte {at}"))
    })?;
    let text = std::str::from_utf8(&bytes[start..end])
        .ok()
        .and_then(|s| s.parse::<usize>().ok())
        .ok_or_else(|| {
            Error::format(path, format!("unreadable {what} at byte {start}"))
        })?;
    Ok((text, end))
}

fn read_pgm_bytes(path: &Path, bytes: &[u8]) -> Result<DepthRaster> {
    let (width, at) = pgm_number(path, bytes, 2, "width")?;
    let (height, at) = pgm_number(path, bytes, at, "height")?;
    let (maxval, at) = pgm_number(path, bytes, at, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(
            path,
            format!("dimensions {width}x{height} must be nonzero"),
        ));
    }
    if maxval <= 255 || maxval > 65535 {
        return Err(Error::format(
            path,
            format!("maxval {maxval} unsupported, need 16-bit millimeter depth (256..=65535)"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    if at >= bytes.len() || !bytes[at].is_ascii_whitespace() {
        return Err(Error::format(
            path,
            format!("expected whitespace after maxval at byte {at}"),
        ));
    }
    let raster_at = at + 1;
    let expect = raster_at + width * height * 2;
    if bytes.len() != expect {
        return Err(Error::format(
            path,
            format!(
                "{width}x{height} samples end at byte {expect}, file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let mut depths = Vec::with_capacity(width * height);
    for (i, c) in bytes[raster_at..].chunks_exact(2).enumerate() {
        let mm = u16::from_be_bytes([c[0], c[1]]);
        if mm as usize > maxval {
            return Err(Error::format(
                path,
                format!(
                    "sample {mm} at byte {} exceeds maxval {maxval}",
                    raster_at + i * 2
                ),
            ));
        }
        depths.push(if mm == 0 { f64::NAN } else { mm as f64 / 1000.0 });
    }
    Ok(DepthRaster {
        width,
        height,
        depths,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use tempfile::tempdir;

    fn write_bytes(dir: &Path, name: &str, bytes: &[u8]) -> std::path::PathBuf {
        let p = dir.join(name);
        std::fs::write(&p, bytes).unwrap();
        p
    }

    fn sample_map() -> DepthMap {
        let intr = Intrinsics::new(50.0, 50.0, 1.5, 0.5, 4, 2).unwrap();
        let depths = vec![1.25, 2.5, f64::NAN, 0.75, 3.0, 1.0, f64::NAN, 2.0];
        DepthMap::new(
            ViewId(3),
            intr,
            Pose::identity(),
            DepthRange::new(0.5, 8.0).unwrap(),
            depths,
        )
        .unwrap()
    }

    #[test]
    fn float_format_round_trips_bitwise() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("d.dpf");
        let dm = sample_map();
        write_depth_dpf(&path, &dm).unwrap();
        let raster = read_depth_file(&path).unwrap();
        assert_eq!(raster.width, 4);
        assert_eq!(raster.height, 2);
        for (a, b) in raster.depths.iter().zip(dm.depths()) {
            if b.is_nan() {
                assert!(a.is_nan());
            } else {
                // The file narrows to f32; these depths are f32-exact.
                assert_eq!(a, b);
            }
        }
        // Writing what was read reproduces the file byte for byte.
        let again = dir.path().join("d2.dpf");
        let dm2 = raster
            .into_depth_map(
                ViewId(3),
                dm.intrinsics,
                dm.pose,
                dm.range,
            )
            .unwrap();
        write_depth_dpf(&again, &dm2).unwrap();
        assert_eq!(
            std::fs::read(&path).unwrap(),
            std::fs::read(&again).unwrap()
        );
    }

    #[test]
    fn float_format_rejects_size_mismatch() {
        let dir = tempdir().unwrap();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"DPF1");
        bytes.extend_from_slice(&3u16.to_le_bytes());
        bytes.extend_from_slice(&2u16.to_le_bytes());
        for _ in 0..5 {
            bytes.extend_from_slice(&1.0f32.to_le_bytes());
        }
        let p = write_bytes(dir.path(), "short.dpf", &bytes);
        let err = read_depth_file(&p).unwrap_err();
        assert!(matches!(err, Error::Format { .. }), "{err}");
        assert!(err.to_string().contains("byte 32"), "{err}");

        bytes.extend_from_slice(&[0.0f32.to_le_bytes(), [9u8; 4]].concat());
        let p = write_bytes(dir.path(), "long.dpf", &bytes);
        let err = read_depth_file(&p).unwrap_err();
        assert!(err.to_string().contains("36 bytes"), "{err}");
    }

    #[test]
    fn unknown_magic_is_a_format_error() {
        let dir = tempdir().unwrap();
        let p = write_bytes(dir.path(), "x.dpf", b"DPX1aaaaaaaa");
        let err = read_depth_file(&p).unwrap_err();
        assert!(err.to_string().contains("byte 0"), "{err}");
    }

    #[test]
    fn pgm_millimeters_convert_and_zero_is_invalid() {
        let dir = tempdir().unwrap();
        let mut bytes = b"P5 2 1 65535\n".to_vec();
        bytes.extend_from_slice(&1000u16.to_be_bytes());
        bytes.extend_from_slice(&0u16.to_be_bytes());
        let p = write_bytes(dir.path(), "d.pgm", &bytes);
        let raster = read_depth_file(&p).unwrap();
        assert_eq!((raster.width, raster.height), (2, 1));
        assert_relative_eq!(raster.depths[0], 1.0);
        assert!(raster.depths[1].is_nan());
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let dir = tempdir().unwrap();
        let mut bytes = b"P5\n# a comment\n2 # inline\n1\n1000\n".to_vec();
        bytes.extend_from_slice(&500u16.to_be_bytes());
        bytes.extend_from_slice(&250u16.to_be_bytes());
        let p = write_bytes(dir.path(), "c.pgm", &bytes);
        let raster = read_depth_file(&p).unwrap();
        assert_relative_eq!(raster.depths[0], 0.5);
        assert_relative_eq!(raster.depths[1], 0.25);
    }

    #[test]
    fn pgm_eight_bit_is_rejected() {
        let dir = tempdir().unwrap();
        let p = write_bytes(dir.path(), "8.pgm", b"P5 1 1 255\n\x40");
        let err = read_depth_file(&p).unwrap_err();
        assert!(err.to_string().contains("maxval 255"), "{err}");
    }

    #[test]
    fn pgm_truncation_and_trailing_bytes_are_rejected() {
        let dir = tempdir().unwrap();
        let mut bytes = b"P5 2 2 65535\n".to_vec();
        bytes.extend_from_slice(&[0u8; 6]);
        let p = write_bytes(dir.path(), "t.pgm", &bytes);
        let err = read_depth_file(&p).unwrap_err();
        assert!(err.to_string().contains("byte 21"), "{err}");

        bytes.extend_from_slice(&[0u8; 3]);
        let p = write_bytes(dir.path(), "t2.pgm", &bytes);
        assert!(read_depth_file(&p).is_err());
    }

    #[test]
    fn pgm_sample_above_maxval_is_rejected() {
        let dir = tempdir().unwrap();
        let mut bytes = b"P5 1 1 1000\n".to_vec();
        bytes.extend_from_slice(&2000u16.to_be_bytes());
        let p = write_bytes(dir.path(), "m.pgm", &bytes);
        let err = read_depth_file(&p).unwrap_err();
        assert!(err.to_string().contains("sample 2000"), "{err}");
    }

    #[test]
    fn raster_requires_matching_intrinsics() {
        let raster = DepthRaster {
            width: 3,
            height: 2,
            depths: vec![1.0; 6],
        };
        let intr = Intrinsics::new(50.0, 50.0, 1.0, 1.0, 4, 2).unwrap();
        let err = raster
            .into_depth_map(
                ViewId(0),
                intr,
                Pose::identity(),
                DepthRange::default(),
            )
            .unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn missing_file_is_an_io_error_naming_the_path() {
        let err = read_depth_file(Path::new("/nonexistent/depth.dpf")).unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("/nonexistent/depth.dpf"));
    }
}
