use std::fs;
use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use super::{quantize_unit, GrayImage, RgbImage};
use crate::error::{Error, Result};

const PNG_SIGNATURE: &[u8] = &[0x89, b'P', b'N', b'G', b'\r', b'\n', 0x1a, b'\n'];

/// Either raster kind, for [`save_image`].
#[derive(Debug, Clone, Copy)]
pub enum AnyImage<'a> {
    Gray(&'a GrayImage),
    Rgb(&'a RgbImage),
}

impl<'a> From<&'a GrayImage> for AnyImage<'a> {
    fn from(img: &'a GrayImage) -> Self {
        AnyImage::Gray(img)
    }
}

impl<'a> From<&'a RgbImage> for AnyImage<'a> {
    fn from(img: &'a RgbImage) -> Self {
        AnyImage::Rgb(img)
    }
}

/// Loads an 8-bit grayscale/RGB PNG or a binary PGM (P5, maxval 255).
///
/// RGB input is reduced to luminance; intensities are divided by 255.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    Ok(match load_any(path.as_ref())? {
        Loaded::Gray(g) => g,
        Loaded::Rgb(rgb) => rgb.to_gray(),
    })
}

/// Same formats as [`load_image`]; gray input is replicated into three channels.
pub fn load_rgb(path: impl AsRef<Path>) -> Result<RgbImage> {
    Ok(match load_any(path.as_ref())? {
        Loaded::Gray(g) => g.to_rgb(),
        Loaded::Rgb(rgb) => rgb,
    })
}

enum Loaded {
    Gray(GrayImage),
    Rgb(RgbImage),
}

fn load_any(path: &Path) -> Result<Loaded> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(b"P5") {
        return decode_pgm(&bytes, path).map(Loaded::Gray);
    }
    if !bytes.starts_with(PNG_SIGNATURE) {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: "expected PNG or binary PGM (P5)".into(),
        });
    }
    let img = image::load_from_memory_with_format(&bytes, ImageFormat::Png)
        .map_err(|e| Error::corrupt(path, e.to_string()))?;
    match img {
        DynamicImage::ImageLuma8(g) => {
            let (w, h) = g.dimensions();
            let data = g.into_raw().into_iter().map(|b| b as f32 / 255.0).collect();
            GrayImage::new(w as usize, h as usize, data).map(Loaded::Gray)
        }
        DynamicImage::ImageRgb8(rgb) => {
            let (w, h) = rgb.dimensions();
            let data = rgb.into_raw().into_iter().map(|b| b as f32 / 255.0).collect();
            RgbImage::new(w as usize, h as usize, data).map(Loaded::Rgb)
        }
        other => Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("color type {:?} (need 8-bit gray or RGB)", other.color()),
        }),
    }
}

fn decode_pgm(bytes: &[u8], path: &Path) -> Result<GrayImage> {
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // whitespace and comments
        loop {
            match bytes.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::corrupt(path, "truncated PGM header")),
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(|b| b.is_ascii_digit()) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| Error::corrupt(path, "malformed PGM header"))?;
    }
    let [width, height, maxval] = fields;
    if !bytes.get(pos).is_some_and(|b| b.is_ascii_whitespace()) {
        return Err(Error::corrupt(path, "malformed PGM header"));
    }
    pos += 1;
    if maxval != 255 {
        return Err(Error::UnsupportedFormat {
            path: path.into(),
            reason: format!("PGM maxval {maxval} (only 255 supported)"),
        });
    }
    if width == 0 || height == 0 {
        return Err(Error::corrupt(path, "zero PGM dimension"));
    }
    let payload = &bytes[pos..];
    let n = width
        .checked_mul(height)
        .ok_or_else(|| Error::corrupt(path, "PGM dimensions overflow"))?;
    if payload.len() < n {
        return Err(Error::corrupt(
            path,
            format!("PGM payload has {} bytes, expected {n}", payload.len()),
        ));
    }
    let data = payload[..n].iter().map(|&b| b as f32 / 255.0).collect();
    GrayImage::new(width, height, data)
}

/// Writes an 8-bit PNG, or a P5 PGM when the path ends in `.pgm`.
/// Intensity `i` is stored as `round(i * 255)` clamped to `[0, 255]`.
pub fn save_image<'a>(img: impl Into<AnyImage<'a>>, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let img = img.into();
    let is_pgm = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("pgm"));
    let bytes = if is_pgm {
        let gray = match img {
            AnyImage::Gray(g) => g.clone(),
            AnyImage::Rgb(rgb) => rgb.to_gray(),
        };
        encode_pgm(&gray)
    } else {
        encode_png(img).map_err(|e| Error::corrupt(path, e.to_string()))?
    };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn save_rgb(img: &RgbImage, path: impl AsRef<Path>) -> Result<()> {
    save_image(img, path)
}

fn encode_pgm(img: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(img.data().iter().map(|&v| quantize_unit(v)));
    out
}

fn encode_png(img: AnyImage<'_>) -> image::ImageResult<Vec<u8>> {
    let dynamic = match img {
        AnyImage::Gray(g) => {
            let raw = g.data().iter().map(|&v| quantize_unit(v)).collect();
            DynamicImage::ImageLuma8(
                image::GrayImage::from_raw(g.width() as u32, g.height() as u32, raw)
                    .expect("buffer matches dimensions"),
            )
        }
        AnyImage::Rgb(c) => {
            let raw = c.data().iter().map(|&v| quantize_unit(v)).collect();
            DynamicImage::ImageRgb8(
                image::RgbImage::from_raw(c.width() as u32, c.height() as u32, raw)
                    .expect("buffer matches dimensions"),
            )
        }
    };
    let mut buf = Cursor::new(Vec::new());
    dynamic.write_to(&mut buf, ImageFormat::Png)?;
    Ok(buf.into_inner())
}
