//! 8-bit RGB images as binary PPM (P6), the color companion to the
//! depth rasters.

use std::path::Path;

use crate::error::{Error, Result};
use crate::io::depth::pgm_number;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorImage {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 3]>,
}

pub fn read_ppm(path: &Path) -> Result<ColorImage> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if !bytes.starts_with(b"P6") {
        return Err(Error::format(path, "unknown magic at byte 0, expected \"P6\""));
    }
    let (width, at) = pgm_number(path, &bytes, 2, "width")?;
    let (height, at) = pgm_number(path, &bytes, at, "height")?;
    let (maxval, at) = pgm_number(path, &bytes, at, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::format(path, "zero image dimension in header"));
    }
    if maxval == 0 || maxval > 255 {
        return Err(Error::format(
            path,
            format!("maxval {maxval} unsupported, need 8-bit color (1..=255)"),
        ));
    }
    // Exactly one whitespace byte separates the header from the raster.
    let raster_at = at + 1;
    if bytes.get(at).is_none_or(|b| !b.is_ascii_whitespace()) {
        return Err(Error::format(
            path,
            format!("expected whitespace after maxval at byte {at}"),
        ));
    }
    let expect = raster_at + width * height * 3;
    if bytes.len() != expect {
        return Err(Error::format(
            path,
            format!(
                "{width}x{height} pixels end at byte {expect}, file has {} bytes",
                bytes.len()
            ),
        ));
    }
    let pixels = bytes[raster_at..]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok(ColorImage {
        width,
        height,
        pixels,
    })
}

pub fn write_ppm(path: &Path, img: &ColorImage) -> Result<()> {
    if img.pixels.len() != img.width * img.height {
        return Err(Error::Input(format!(
            "pixel buffer holds {} values, header declares {}x{}",
            img.pixels.len(),
            img.width,
            img.height
        )));
    }
    let mut bytes = format!("P6\n{} {}\n255\n", img.width, img.height).into_bytes();
    for p in &img.pixels {
        bytes.extend_from_slice(p);
    }
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}
