//! Magnitude colormaps, arrow overlays and figure strips.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{DisplacementField, RgbImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Colormap {
    Grayscale,
    /// Piecewise linear: dark blue, cyan, yellow, orange, red.
    Jet,
}

const JET_STOPS: [(f32, [f32; 3]); 5] = [
    (0.0, [0.0, 0.0, 0.5]),
    (0.25, [0.0, 1.0, 1.0]),
    (0.5, [1.0, 1.0, 0.0]),
    (0.75, [1.0, 0.5, 0.0]),
    (1.0, [1.0, 0.0, 0.0]),
];

impl Colormap {
    /// Color for `t` in [0, 1] (clamped).
    pub fn map(self, t: f32) -> [f32; 3] {
        let t = if t.is_nan() { 0.0 } else { t.clamp(0.0, 1.0) };
        match self {
            Colormap::Grayscale => [t, t, t],
            Colormap::Jet => {
                let k = JET_STOPS
                    .windows(2)
                    .position(|w| t <= w[1].0)
                    .unwrap_or(JET_STOPS.len() - 2);
                let (t0, c0) = JET_STOPS[k];
                let (t1, c1) = JET_STOPS[k + 1];
                let f = (t - t0) / (t1 - t0);
                [0, 1, 2].map(|i| c0[i] + f * (c1[i] - c0[i]))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Normalization {
    AutoMax,
    /// Magnitude (px) that maps to the top of the colormap.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderConfig {
    pub colormap: Colormap,
    /// Grid points between arrows.
    pub stride: usize,
    /// Display pixels per displacement pixel.
    pub scale: f32,
    pub normalization: Normalization,
}

impl Default for RenderConfig {
    fn default() -> Self {
        Self {
            colormap: Colormap::Jet,
            stride: 16,
            scale: 8.0,
            normalization: Normalization::AutoMax,
        }
    }
}

impl RenderConfig {
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 {
            return Err(Error::param("stride", "must be >= 1"));
        }
        if !(self.scale > 0.0) {
            return Err(Error::param("scale", "must be positive"));
        }
        if let Normalization::Fixed(m) = self.normalization {
            if !(m > 0.0) {
                return Err(Error::param("normalization", "fixed maximum must be positive"));
            }
        }
        Ok(())
    }
}

/// Arrows shorter than this (in displacement pixels) are not drawn.
pub const MIN_ARROW_PX: f32 = 0.05;
/// Length of each arrowhead segment, display pixels.
pub const HEAD_LEN: f32 = 4.0;
const ARROW_COLOR: [f32; 3] = [1.0; 3];

fn magnitude(u: f32, v: f32) -> f64 {
    let (u, v) = (u as f64, v as f64);
    (u * u + v * v).sqrt()
}

/// One pixel per grid point, colored by normalized magnitude. Invalid vectors
/// render as colormap(0).
pub fn magnitude_map(field: &DisplacementField, cfg: &RenderConfig) -> Result<RgbImage> {
    cfg.validate()?;
    let (w, h) = field.dims();
    let mags: Vec<f64> = field
        .u()
        .iter()
        .zip(field.v())
        .enumerate()
        .map(|(i, (&u, &v))| if field.is_valid(i) { magnitude(u, v) } else { 0.0 })
        .collect();
    let top = match cfg.normalization {
        Normalization::AutoMax => mags.iter().copied().fold(0.0, f64::max),
        Normalization::Fixed(m) => m,
    };
    let mut data = Vec::with_capacity(3 * w * h);
    for m in mags {
        let t = if top > 0.0 { (m / top) as f32 } else { 0.0 };
        data.extend_from_slice(&cfg.colormap.map(t));
    }
    RgbImage::new(w, h, data)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrow {
    pub from: (f32, f32),
    pub to: (f32, f32),
}

/// Arrows at every `stride`-th grid point, in source-image coordinates.
pub fn arrows(field: &DisplacementField, cfg: &RenderConfig) -> Vec<Arrow> {
    let (w, h) = field.dims();
    let mut out = Vec::new();
    for j in (0..h).step_by(cfg.stride.max(1)) {
        for i in (0..w).step_by(cfg.stride.max(1)) {
            if !field.is_valid(j * w + i) {
                continue;
            }
            let (u, v) = field.get(i, j);
            if magnitude(u, v) < MIN_ARROW_PX as f64 {
                continue;
            }
            let (x, y) = field.position(i, j);
            let from = (x as f32, y as f32);
            out.push(Arrow {
                from,
                to: (from.0 + cfg.scale * u, from.1 + cfg.scale * v),
            });
        }
    }
    out
}

/// Draws [`arrows`] over `base` with integer line drawing and a two-segment head at ±30°.
pub fn vector_overlay(field: &DisplacementField, base: &RgbImage, cfg: &RenderConfig) -> Result<RgbImage> {
    cfg.validate()?;
    let (fw, fh) = field.dims();
    let (ex, ey) = field.position(fw - 1, fh - 1);
    if base.width() <= ex || base.height() <= ey {
        return Err(Error::DimensionMismatch {
            expected: (ex + 1, ey + 1),
            found: base.dims(),
        });
    }
    let mut out = base.clone();
    for a in arrows(field, cfg) {
        draw_line(&mut out, a.from, a.to);
        let (dx, dy) = (a.to.0 - a.from.0, a.to.1 - a.from.1);
        let back = dy.atan2(dx) + std::f32::consts::PI;
        for side in [-1.0f32, 1.0] {
            let ang = back + side * std::f32::consts::FRAC_PI_6;
            let tip = (a.to.0 + HEAD_LEN * ang.cos(), a.to.1 + HEAD_LEN * ang.sin());
            draw_line(&mut out, a.to, tip);
        }
    }
    Ok(out)
}

/// Bresenham between rounded endpoints; off-raster pixels are skipped.
fn draw_line(img: &mut RgbImage, from: (f32, f32), to: (f32, f32)) {
    let (mut x0, mut y0) = (from.0.round() as i64, from.1.round() as i64);
    let (x1, y1) = (to.0.round() as i64, to.1.round() as i64);
    let dx = (x1 - x0).abs();
    let dy = -(y1 - y0).abs();
    let sx = if x0 < x1 { 1 } else { -1 };
    let sy = if y0 < y1 { 1 } else { -1 };
    let mut err = dx + dy;
    let (w, h) = (img.width() as i64, img.height() as i64);
    loop {
        if (0..w).contains(&x0) && (0..h).contains(&y0) {
            img.set(x0 as usize, y0 as usize, ARROW_COLOR);
        }
        if x0 == x1 && y0 == y1 {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x0 += sx;
        }
        if e2 <= dx {
            err += dx;
            y0 += sy;
        }
    }
}

/// Gutter between panels, pixels.
pub const GUTTER: usize = 4;

/// Horizontal strip of equal-height panels separated by white gutters.
pub fn side_by_side(images: &[RgbImage]) -> Result<RgbImage> {
    let first = images.first().ok_or_else(|| Error::param("images", "need at least one panel"))?;
    let h = first.height();
    if let Some(bad) = images.iter().find(|i| i.height() != h) {
        return Err(Error::DimensionMismatch {
            expected: (bad.width(), h),
            found: bad.dims(),
        });
    }
    let total = images.iter().map(|i| i.width()).sum::<usize>() + GUTTER * (images.len() - 1);
    let mut out = RgbImage::filled(total, h, [1.0; 3]);
    let mut x0 = 0;
    for img in images {
        for y in 0..h {
            for x in 0..img.width() {
                out.set(x0 + x, y, img.get(x, y));
            }
        }
        x0 += img.width() + GUTTER;
    }
    Ok(out)
}

/// `label<TAB>x_offset<TAB>width` per panel, for the text file written next to a strip.
pub fn panel_labels(images: &[RgbImage], labels: &[String]) -> String {
    let mut x0 = 0;
    let mut text = String::new();
    for (img, label) in images.iter().zip(labels) {
        text.push_str(&format!("{label}\t{x0}\t{}\n", img.width()));
        x0 += img.width() + GUTTER;
    }
    text
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_is_uniform_colormap_zero() {
        let img = magnitude_map(&DisplacementField::zeros(5, 4), &RenderConfig::default()).unwrap();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(img.get(x, y), Colormap::Jet.map(0.0));
            }
        }
    }

    #[test]
    fn max_maps_to_top() {
        let f = DisplacementField::from_fn(6, 6, |x, y| (x as f32 * 0.3, y as f32 * -0.1));
        let img = magnitude_map(&f, &RenderConfig::default()).unwrap();
        assert_eq!(img.get(5, 5), Colormap::Jet.map(1.0));
        assert_eq!(Colormap::Jet.map(1.0), [1.0, 0.0, 0.0]);
    }

    #[test]
    fn jet_red_channel_monotone() {
        let reds: Vec<f32> = (0..=1000).map(|i| Colormap::Jet.map(i as f32 / 1000.0)[0]).collect();
        assert!(reds.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(Colormap::Jet.map(0.25), [0.0, 1.0, 1.0]);
        assert_eq!(Colormap::Jet.map(0.5), [1.0, 1.0, 0.0]);
    }

    #[test]
    fn direction_does_not_matter() {
        let f = DisplacementField::from_fn(8, 8, |x, y| (x as f32 * 0.2 - 0.7, y as f32 * 0.1));
        let rotated = f.map(|u, v| (-v, u));
        let cfg = RenderConfig::default();
        assert_eq!(magnitude_map(&f, &cfg).unwrap(), magnitude_map(&rotated, &cfg).unwrap());
    }

    #[test]
    fn fixed_normalization_is_scale_covariant() {
        let f = DisplacementField::from_fn(8, 8, |x, y| (x as f32 * 0.21, y as f32 * -0.13));
        let doubled = f.map(|u, v| (2.0 * u, 2.0 * v));
        let cfg = |m| RenderConfig {
            normalization: Normalization::Fixed(m),
            ..RenderConfig::default()
        };
        assert_eq!(
            magnitude_map(&f, &cfg(1.5)).unwrap(),
            magnitude_map(&doubled, &cfg(3.0)).unwrap()
        );
    }

    #[test]
    fn zero_field_overlay_is_identity() {
        let base = RgbImage::filled(20, 10, [0.2, 0.3, 0.4]);
        let out = vector_overlay(&DisplacementField::zeros(20, 10), &base, &RenderConfig::default()).unwrap();
        assert_eq!(out, base);
    }

    #[test]
    fn single_arrow_geometry() {
        let mut u = vec![0.0; 40 * 12];
        u[6 * 40 + 5] = 2.0;
        let f = DisplacementField::dense(40, 12, u, vec![0.0; 40 * 12]).unwrap();
        let cfg = RenderConfig {
            stride: 1,
            scale: 10.0,
            ..RenderConfig::default()
        };
        let list = arrows(&f, &cfg);
        assert_eq!(list, vec![Arrow { from: (5.0, 6.0), to: (25.0, 6.0) }]);
        let base = RgbImage::filled(40, 12, [0.0; 3]);
        let out = vector_overlay(&f, &base, &cfg).unwrap();
        for x in 5..=25 {
            assert_eq!(out.get(x, 6), ARROW_COLOR, "x = {x}");
        }
        assert_eq!(out.get(4, 6), [0.0; 3]);
        assert_eq!(out.get(26, 6), [0.0; 3]);
        // head segments reach back toward x = 25 - 4 cos 30° above and below the shaft
        assert_eq!(out.get(22, 4), ARROW_COLOR);
        assert_eq!(out.get(22, 8), ARROW_COLOR);
    }

    #[test]
    fn arrow_count_bounded_by_grid() {
        let f = DisplacementField::constant(37, 23, 1.0, 1.0);
        for stride in [1, 4, 7, 16] {
            let cfg = RenderConfig { stride, ..RenderConfig::default() };
            assert!(arrows(&f, &cfg).len() <= 37usize.div_ceil(stride) * 23usize.div_ceil(stride));
        }
    }

    #[test]
    fn overlay_rejects_small_base() {
        let f = DisplacementField::sparse(3, 3, vec![1.0; 9], vec![0.0; 9], 16, (26, 26)).unwrap();
        let small = RgbImage::filled(50, 50, [0.0; 3]);
        assert!(vector_overlay(&f, &small, &RenderConfig::default()).is_err());
        let ok = RgbImage::filled(80, 80, [0.0; 3]);
        assert!(vector_overlay(&f, &ok, &RenderConfig::default()).is_ok());
    }

    #[test]
    fn strips() {
        let a = RgbImage::filled(5, 3, [0.0; 3]);
        let b = RgbImage::filled(7, 3, [0.5; 3]);
        assert_eq!(side_by_side(std::slice::from_ref(&a)).unwrap(), a);
        let s = side_by_side(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(s.dims(), (5 + 4 + 7, 3));
        assert_eq!(s.get(0, 0), [0.0; 3]);
        assert_eq!(s.get(6, 1), [1.0; 3]);
        assert_eq!(s.get(9, 2), [0.5; 3]);
        assert!(side_by_side(&[a, RgbImage::filled(5, 4, [0.0; 3])]).is_err());
        let labels = panel_labels(&[b.clone(), b], &["cc".into(), "hs".into()]);
        assert_eq!(labels, "cc\t0\t7\nhs\t11\t7\n");
    }
}
