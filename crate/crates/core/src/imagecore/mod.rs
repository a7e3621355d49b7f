//! Raster and displacement-field containers, bilinear sampling and file I/O.

pub(crate) mod filter;
mod flow;
mod io;

pub use filter::{box_blur, gaussian_blur, gaussian_kernel, separable_filter};
pub use flow::{read_flow, sidecar_path, write_flow, FLOW_MAGIC};
pub use io::{load_image, load_rgb, save_image, save_rgb, AnyImage};

use crate::error::{Error, Result};

/// Row-major grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_size(width, height, data.len(), 1)?;
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidData(format!(
                "intensity {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f32) -> Self {
        let value = clamp_unit(value);
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel; results are clamped to `[0, 1]`.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(clamp_unit(f(x, y)));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Clamps arbitrary values into range; NaN maps to 0.
    pub fn from_clamped(width: usize, height: usize, mut data: Vec<f32>) -> Result<Self> {
        check_size(width, height, data.len(), 1)?;
        data.iter_mut().for_each(|v| *v = clamp_unit(*v));
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Bilinear interpolation with clamp-to-edge outside the raster.
    #[inline]
    pub fn sample_bilinear(&self, x: f32, y: f32) -> f32 {
        sample_bilinear_raw(&self.data, self.width, self.height, x, y)
    }

    pub fn to_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.clone(),
        }
    }

    pub fn to_rgb(&self) -> RgbImage {
        let data = self.data.iter().flat_map(|&v| [v, v, v]).collect();
        RgbImage {
            width: self.width,
            height: self.height,
            data,
        }
    }

    /// Rounds every intensity to the nearest 8-bit level.
    pub fn quantized(&self) -> Self {
        let data = self.data.iter().map(|&v| quantize_unit(v) as f32 / 255.0).collect();
        Self {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }
}

pub fn sample_bilinear(img: &GrayImage, x: f32, y: f32) -> f32 {
    img.sample_bilinear(x, y)
}

#[inline]
pub(crate) fn sample_bilinear_raw(data: &[f32], width: usize, height: usize, x: f32, y: f32) -> f32 {
    let max_x = (width - 1) as f32;
    let max_y = (height - 1) as f32;
    let x = if x.is_nan() { 0.0 } else { x.clamp(0.0, max_x) };
    let y = if y.is_nan() { 0.0 } else { y.clamp(0.0, max_y) };
    let x0 = x.floor();
    let y0 = y.floor();
    let fx = x - x0;
    let fy = y - y0;
    let x0 = x0 as usize;
    let y0 = y0 as usize;
    let x1 = (x0 + 1).min(width - 1);
    let y1 = (y0 + 1).min(height - 1);
    let r0 = y0 * width;
    let r1 = y1 * width;
    let top = data[r0 + x0] + fx * (data[r0 + x1] - data[r0 + x0]);
    let bottom = data[r1 + x0] + fx * (data[r1 + x1] - data[r1 + x0]);
    top + fy * (bottom - top)
}

#[inline]
pub(crate) fn clamp_unit(v: f32) -> f32 {
    if v.is_nan() {
        0.0
    } else {
        v.clamp(0.0, 1.0)
    }
}

/// `round(v * 255)` clamped to a byte.
#[inline]
pub fn quantize_unit(v: f32) -> u8 {
    let v = if v.is_nan() { 0.0 } else { v };
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

fn check_size(width: usize, height: usize, len: usize, channels: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidData(format!(
            "degenerate raster {width}x{height}"
        )));
    }
    if len != width * height * channels {
        return Err(Error::InvalidData(format!(
            "buffer of {len} values does not match {width}x{height}x{channels}"
        )));
    }
    Ok(())
}

/// Row-major RGB raster, channel intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_size(width, height, data.len(), 3)?;
        if let Some(bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidData(format!(
                "channel value {bad} outside [0, 1]"
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let px = rgb.map(clamp_unit);
        Self {
            width,
            height,
            data: px.iter().copied().cycle().take(3 * width * height).collect(),
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn get(&self, x: usize, y: usize) -> [f32; 3] {
        let i = 3 * (y * self.width + x);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = 3 * (y * self.width + x);
        self.data[i..i + 3].copy_from_slice(&rgb.map(clamp_unit));
    }

    /// 0.299 R + 0.587 G + 0.114 B.
    pub fn to_gray(&self) -> GrayImage {
        let data = self
            .data
            .chunks_exact(3)
            .map(|p| clamp_unit(luminance(p[0], p[1], p[2])))
            .collect();
        GrayImage {
            width: self.width,
            height: self.height,
            data,
        }
    }
}

#[inline]
pub(crate) fn luminance(r: f32, g: f32, b: f32) -> f32 {
    0.299 * r + 0.587 * g + 0.114 * b
}

/// Unconstrained row-major scalar raster used for intermediate quantities
/// (derivatives, magnitudes, polynomial coefficients).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height],
        }
    }

    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        check_size(width, height, data.len(), 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f32 {
        self.data[y * self.width + x]
    }

    /// Clamp-to-edge access with signed coordinates.
    #[inline]
    pub fn get_clamped(&self, x: isize, y: isize) -> f32 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn sample_bilinear(&self, x: f32, y: f32) -> f32 {
        sample_bilinear_raw(&self.data, self.width, self.height, x, y)
    }

    pub fn max(&self) -> f32 {
        self.data.iter().copied().fold(f32::NEG_INFINITY, f32::max)
    }

    pub fn min(&self) -> f32 {
        self.data.iter().copied().fold(f32::INFINITY, f32::min)
    }

    /// Clamps into a [`GrayImage`].
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| clamp_unit(v)).collect(),
        }
    }
}

impl From<&GrayImage> for Plane {
    fn from(img: &GrayImage) -> Self {
        img.to_plane()
    }
}

/// Per-pixel (dense) or per-window (sparse) displacement vectors, in pixels.
///
/// Grid point `(i, j)` sits at source-image coordinate
/// `(origin.0 + i * grid_step, origin.1 + j * grid_step)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
    grid_step: usize,
    origin: (usize, usize),
    valid: Option<Vec<bool>>,
}

impl DisplacementField {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
            grid_step: 1,
            origin: (0, 0),
            valid: None,
        }
    }

    pub fn dense(width: usize, height: usize, u: Vec<f32>, v: Vec<f32>) -> Result<Self> {
        Self::sparse(width, height, u, v, 1, (0, 0))
    }

    pub fn sparse(
        width: usize,
        height: usize,
        u: Vec<f32>,
        v: Vec<f32>,
        grid_step: usize,
        origin: (usize, usize),
    ) -> Result<Self> {
        check_size(width, height, u.len(), 1)?;
        check_size(width, height, v.len(), 1)?;
        if grid_step == 0 {
            return Err(Error::param("grid_step", "must be >= 1"));
        }
        if u.iter().chain(v.iter()).any(|c| !c.is_finite()) {
            return Err(Error::InvalidData("non-finite displacement component".into()));
        }
        Ok(Self {
            width,
            height,
            u,
            v,
            grid_step,
            origin,
            valid: None,
        })
    }

    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        Self {
            u: vec![u; width * height],
            v: vec![v; width * height],
            ..Self::zeros(width, height)
        }
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> (f32, f32),
    ) -> Self {
        let mut u = Vec::with_capacity(width * height);
        let mut v = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                let (a, b) = f(x, y);
                u.push(a);
                v.push(b);
            }
        }
        Self {
            u,
            v,
            ..Self::zeros(width, height)
        }
    }

    pub fn with_validity(mut self, valid: Vec<bool>) -> Result<Self> {
        check_size(self.width, self.height, valid.len(), 1)?;
        self.valid = Some(valid);
        Ok(self)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn grid_step(&self) -> usize {
        self.grid_step
    }

    pub fn origin(&self) -> (usize, usize) {
        self.origin
    }

    pub fn is_dense(&self) -> bool {
        self.grid_step == 1 && self.origin == (0, 0)
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn validity(&self) -> Option<&[bool]> {
        self.valid.as_deref()
    }

    #[inline]
    pub fn is_valid(&self, index: usize) -> bool {
        self.valid.as_ref().is_none_or(|m| m[index])
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f32, f32) {
        let i = y * self.width + x;
        (self.u[i], self.v[i])
    }

    /// Source-image coordinate of grid point `(i, j)`.
    pub fn position(&self, i: usize, j: usize) -> (usize, usize) {
        (
            self.origin.0 + i * self.grid_step,
            self.origin.1 + j * self.grid_step,
        )
    }

    /// Bilinear sample of both components at grid coordinates, clamp-to-edge.
    pub fn sample_bilinear(&self, x: f32, y: f32) -> (f32, f32) {
        (
            sample_bilinear_raw(&self.u, self.width, self.height, x, y),
            sample_bilinear_raw(&self.v, self.width, self.height, x, y),
        )
    }

    pub fn magnitude(&self) -> Plane {
        let data = self
            .u
            .iter()
            .zip(&self.v)
            .map(|(a, b)| a.hypot(*b))
            .collect();
        Plane {
            width: self.width,
            height: self.height,
            data,
        }
    }

    pub fn u_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.u.clone(),
        }
    }

    pub fn v_plane(&self) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.v.clone(),
        }
    }

    /// Applies `f` to every vector, keeping grid layout and validity.
    pub fn map(&self, mut f: impl FnMut(f32, f32) -> (f32, f32)) -> Self {
        let (u, v) = self.u.iter().zip(&self.v).map(|(&a, &b)| f(a, b)).unzip();
        Self {
            u,
            v,
            ..self.clone()
        }
    }

    pub(crate) fn with_components(&self, u: Vec<f32>, v: Vec<f32>) -> Self {
        debug_assert_eq!(u.len(), self.u.len());
        Self {
            u,
            v,
            width: self.width,
            height: self.height,
            grid_step: self.grid_step,
            origin: self.origin,
            valid: self.valid.clone(),
        }
    }

    pub fn into_components(self) -> (Vec<f32>, Vec<f32>) {
        (self.u, self.v)
    }
}

/// Binary region over a raster; `true` marks membership.
#[derive(Debug, Clone, PartialEq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub data: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize, data: Vec<bool>) -> Result<Self> {
        check_size(width, height, data.len(), 1)?;
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn full(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![true; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    /// Axis-aligned rectangle `[x0, x0 + w) × [y0, y0 + h)`, clipped to the raster.
    pub fn rect(width: usize, height: usize, x0: usize, y0: usize, w: usize, h: usize) -> Self {
        Self::from_fn(width, height, |x, y| {
            x >= x0 && x < x0 + w && y >= y0 && y < y0 + h
        })
    }

    /// Annulus `r_in <= |p - c| <= r_out`.
    pub fn annulus(width: usize, height: usize, cx: f64, cy: f64, r_in: f64, r_out: f64) -> Self {
        Self::from_fn(width, height, |x, y| {
            let r = (x as f64 - cx).hypot(y as f64 - cy);
            r >= r_in && r <= r_out
        })
    }

    /// Everything strictly farther than `radius` from the center.
    pub fn outside_circle(width: usize, height: usize, cx: f64, cy: f64, radius: f64) -> Self {
        Self::from_fn(width, height, |x, y| {
            (x as f64 - cx).hypot(y as f64 - cy) > radius
        })
    }

    /// Pixels at least `border` away from every edge.
    pub fn interior(width: usize, height: usize, border: usize) -> Self {
        Self::from_fn(width, height, |x, y| {
            x >= border && y >= border && x + border < width && y + border < height
        })
    }

    /// Nonzero pixels are members.
    pub fn from_image(img: &GrayImage) -> Self {
        Self {
            width: img.width(),
            height: img.height(),
            data: img.data().iter().map(|&v| v > 0.0).collect(),
        }
    }

    pub fn count(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    pub fn intersect(&self, other: &Mask) -> Result<Mask> {
        crate::error::check_dims(self.dims(), other.dims())?;
        Ok(Mask {
            width: self.width,
            height: self.height,
            data: self.data.iter().zip(&other.data).map(|(a, b)| *a && *b).collect(),
        })
    }

    pub fn overlaps(&self, other: &Mask) -> bool {
        self.data.iter().zip(&other.data).any(|(a, b)| *a && *b)
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn to_image(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> GrayImage {
        GrayImage::from_fn(8, 8, |x, y| (x + 8 * y) as f32 / 63.0)
    }

    #[test]
    fn bilinear_exact_on_lattice() {
        let img = ramp();
        assert_eq!(img.sample_bilinear(3.0, 5.0), img.get(3, 5));
    }

    #[test]
    fn bilinear_midpoint() {
        let img = GrayImage::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert_eq!(img.sample_bilinear(0.5, 0.0), 0.5);
    }

    #[test]
    fn bilinear_clamps_to_edge() {
        let img = ramp();
        assert_eq!(img.sample_bilinear(-10.0, -10.0), img.get(0, 0));
        assert_eq!(img.sample_bilinear(100.0, 3.0), img.get(7, 3));
    }

    #[test]
    fn bilinear_is_continuous() {
        let img = ramp();
        let range = 1.0f32;
        for i in 0..50 {
            let x = i as f32 * 0.13;
            let eps = 0.01;
            let a = img.sample_bilinear(x, 2.3);
            let b = img.sample_bilinear(x + eps, 2.3);
            assert!((a - b).abs() <= eps * range + 1e-6);
        }
    }

    #[test]
    fn gray_rejects_out_of_range() {
        assert!(GrayImage::new(1, 1, vec![1.5]).is_err());
        assert!(GrayImage::new(2, 1, vec![0.5]).is_err());
        assert!(GrayImage::new(0, 1, vec![]).is_err());
    }

    #[test]
    fn field_rejects_non_finite() {
        assert!(DisplacementField::dense(1, 1, vec![f32::NAN], vec![0.0]).is_err());
        assert!(DisplacementField::sparse(1, 1, vec![0.0], vec![0.0], 0, (0, 0)).is_err());
    }

    #[test]
    fn rgb_luminance() {
        let img = RgbImage::new(1, 1, vec![1.0, 0.0, 0.0]).unwrap();
        assert!((img.to_gray().get(0, 0) - 0.299).abs() < 1e-6);
        let white = RgbImage::filled(2, 2, [1.0, 1.0, 1.0]).to_gray();
        assert!(white.data().iter().all(|&v| v <= 1.0 && (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn mask_helpers() {
        let m = Mask::rect(10, 10, 2, 3, 4, 2);
        assert_eq!(m.count(), 8);
        let inner = Mask::interior(10, 10, 2);
        assert_eq!(inner.count(), 36);
        assert!(m.overlaps(&inner));
        assert!(!Mask::rect(10, 10, 0, 0, 1, 1).overlaps(&inner));
    }
}
