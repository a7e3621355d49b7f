//! Forward BOS model: refractive-index field -> exact displacement field -> warped
//! background pair. Gradients are analytic so the ground truth has no
//! discretization error.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::imagecore::{DisplacementField, GrayImage};
use crate::optics::{self, BosGeometry, OpticsConstants};
use crate::patterns::{generate_pattern, PatternSpec};
use crate::rng::GaussianSampler;

/// Refractive index distribution over the background image, in background pixels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RefractiveField {
    /// `n = n0 - delta_n * exp(-r^2 / (2 sigma^2))`
    GaussianPlume {
        cx: f64,
        cy: f64,
        sigma: f64,
        delta_n: f64,
        thickness_z: f64,
    },
    Uniform {
        thickness_z: f64,
    },
}

impl RefractiveField {
    pub fn thickness_z(&self) -> f64 {
        match *self {
            RefractiveField::GaussianPlume { thickness_z, .. } => thickness_z,
            RefractiveField::Uniform { thickness_z } => thickness_z,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.thickness_z() > 0.0) {
            return Err(Error::param("thickness_z", "must be positive"));
        }
        if let RefractiveField::GaussianPlume { sigma, delta_n, .. } = *self {
            if !(sigma > 0.0) {
                return Err(Error::param("sigma", "must be positive"));
            }
            if !(delta_n >= 0.0) || !delta_n.is_finite() {
                return Err(Error::param("delta_n", "must be finite and non-negative"));
            }
            if delta_n >= 0.01 {
                log::warn!("delta_n = {delta_n} is implausibly large for a gas plume");
            }
        }
        Ok(())
    }

    pub fn index_at(&self, consts: &OpticsConstants, x: f64, y: f64) -> f64 {
        match *self {
            RefractiveField::GaussianPlume {
                cx,
                cy,
                sigma,
                delta_n,
                ..
            } => {
                let r2 = (x - cx).powi(2) + (y - cy).powi(2);
                consts.n0 - delta_n * (-r2 / (2.0 * sigma * sigma)).exp()
            }
            RefractiveField::Uniform { .. } => consts.n0,
        }
    }

    /// Analytic `(dn/dx, dn/dy)` per background pixel.
    pub fn index_gradient_px(&self, x: f64, y: f64) -> (f64, f64) {
        match *self {
            RefractiveField::GaussianPlume {
                cx,
                cy,
                sigma,
                delta_n,
                ..
            } => {
                let dx = x - cx;
                let dy = y - cy;
                let s2 = sigma * sigma;
                let g = delta_n / s2 * (-(dx * dx + dy * dy) / (2.0 * s2)).exp();
                (g * dx, g * dy)
            }
            RefractiveField::Uniform { .. } => (0.0, 0.0),
        }
    }
}

pub fn index_at(field: &RefractiveField, consts: &OpticsConstants, x: f64, y: f64) -> f64 {
    field.index_at(consts, x, y)
}

/// Largest ground-truth displacement (background px) a plume produces; attained on
/// the circle `r = sigma`.
pub fn plume_peak_displacement_px(
    sigma: f64,
    delta_n: f64,
    thickness_z: f64,
    geom: &BosGeometry,
    consts: &OpticsConstants,
) -> f64 {
    let max_grad_per_m = delta_n / sigma * (-0.5f64).exp() / geom.bg_scale;
    let alpha = thickness_z * max_grad_per_m / consts.n0;
    geom.d2 * alpha / geom.bg_scale
}

/// The `delta_n` that makes [`plume_peak_displacement_px`] equal `peak_px`.
pub fn delta_n_for_peak(
    peak_px: f64,
    sigma: f64,
    thickness_z: f64,
    geom: &BosGeometry,
    consts: &OpticsConstants,
) -> f64 {
    peak_px / plume_peak_displacement_px(sigma, 1.0, thickness_z, geom, consts)
}

/// Apparent background motion per pixel, in background pixels.
pub fn ground_truth_field(
    field: &RefractiveField,
    geom: &BosGeometry,
    consts: &OpticsConstants,
    width: usize,
    height: usize,
) -> Result<DisplacementField> {
    geom.validate()?;
    field.validate()?;
    let z = field.thickness_z();
    let to_px = |grad_px: f64| -> Result<f32> {
        let alpha = optics::deflection_from_index_gradient(grad_px / geom.bg_scale, z, consts)?;
        Ok((optics::background_displacement(alpha, geom) / geom.bg_scale) as f32)
    };
    let mut u = Vec::with_capacity(width * height);
    let mut v = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let (gx, gy) = field.index_gradient_px(x as f64, y as f64);
            u.push(to_px(gx)?);
            v.push(to_px(gy)?);
        }
    }
    DisplacementField::dense(width, height, u, v)
}

/// `out(x) = background(x - δ(x))`, bilinear with clamp-to-edge.
pub fn warp_image(background: &GrayImage, field: &DisplacementField) -> Result<GrayImage> {
    if !field.is_dense() {
        return Err(Error::param("field", "warping needs a dense field"));
    }
    check_dims(background.dims(), field.dims())?;
    let (w, h) = background.dims();
    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let (du, dv) = field.get(x, y);
            *o = background.sample_bilinear(x as f32 - du, y as f32 - dv);
        }
    });
    GrayImage::from_clamped(w, h, out)
}

/// Sub-samples per axis used by [`camera_image`].
pub const CAMERA_SUPERSAMPLE: usize = 4;

/// Photographs a printed background: each sensor pixel `(x, y)` averages the print
/// over `[x, x + 1) / m` by `[y, y + 1) / m` with `m` sensor pixels per print pixel.
/// Exact area averaging whenever `1 / m` is a multiple of `1 / 4`.
pub fn camera_image(print: &GrayImage, m: f64, width: usize, height: usize) -> Result<GrayImage> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(Error::param("magnification", "must be positive"));
    }
    if width == 0 || height == 0 {
        return Err(Error::param("width/height", "must be positive"));
    }
    let (pw, ph) = print.dims();
    let n = CAMERA_SUPERSAMPLE;
    let offsets: Vec<f64> = (0..n).map(|k| (k as f64 + 0.5) / n as f64).collect();
    let mut out = vec![0.0f32; width * height];
    out.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0f64;
            for oy in &offsets {
                let py = (((y as f64 + oy) / m) as usize).min(ph - 1);
                for ox in &offsets {
                    let px = (((x as f64 + ox) / m) as usize).min(pw - 1);
                    acc += print.get(px, py) as f64;
                }
            }
            *o = (acc / (n * n) as f64) as f32;
        }
    });
    GrayImage::from_clamped(width, height, out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Background {
    Pattern(PatternSpec),
    #[serde(skip)]
    Image(GrayImage),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimOptions {
    /// Std of additive Gaussian noise, intensity units.
    pub noise_sigma: f64,
    /// Round both frames to 8-bit levels.
    pub quantize: bool,
    pub noise_seed: u64,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            noise_sigma: 0.0,
            quantize: false,
            noise_seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimMetadata {
    pub width: usize,
    pub height: usize,
    pub pattern: Option<PatternSpec>,
    pub field: RefractiveField,
    pub geometry: BosGeometry,
    pub constants: OpticsConstants,
    pub options: SimOptions,
    pub peak_displacement_px: f64,
    pub convention: String,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub reference: GrayImage,
    pub distorted: GrayImage,
    pub ground_truth: DisplacementField,
    pub metadata: SimMetadata,
}

/// Reference = clean background plus noise; distorted = background warped by the
/// ground truth plus independent noise. Noise for the reference is drawn first.
pub fn simulate_pair(
    background: &Background,
    field: &RefractiveField,
    geom: &BosGeometry,
    consts: &OpticsConstants,
    options: &SimOptions,
) -> Result<SimOutput> {
    if !(options.noise_sigma >= 0.0) {
        return Err(Error::param("noise_sigma", "must be non-negative"));
    }
    let (clean, pattern) = match background {
        Background::Pattern(spec) => (generate_pattern(spec)?, Some(spec.clone())),
        Background::Image(img) => (img.clone(), None),
    };
    let (w, h) = clean.dims();
    let ground_truth = ground_truth_field(field, geom, consts, w, h)?;
    let warped = warp_image(&clean, &ground_truth)?;

    let mut reference = clean;
    let mut distorted = warped;
    if options.noise_sigma > 0.0 {
        let mut gauss = GaussianSampler::new(options.noise_seed);
        reference = add_noise(&reference, options.noise_sigma, &mut gauss);
        distorted = add_noise(&distorted, options.noise_sigma, &mut gauss);
    }
    if options.quantize {
        reference = reference.quantized();
        distorted = distorted.quantized();
    }

    let peak = ground_truth.magnitude().max() as f64;
    let metadata = SimMetadata {
        width: w,
        height: h,
        pattern,
        field: *field,
        geometry: *geom,
        constants: *consts,
        options: *options,
        peak_displacement_px: peak,
        convention: "distorted(x) = reference(x - delta(x))".into(),
    };
    Ok(SimOutput {
        reference,
        distorted,
        ground_truth,
        metadata,
    })
}

fn add_noise(img: &GrayImage, sigma: f64, gauss: &mut GaussianSampler) -> GrayImage {
    let (w, h) = img.dims();
    let data = img
        .data()
        .iter()
        .map(|&v| (v as f64 + sigma * gauss.sample()) as f32)
        .collect();
    GrayImage::from_clamped(w, h, data).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::PatternKind;

    fn plume(delta_n: f64) -> RefractiveField {
        RefractiveField::GaussianPlume {
            cx: 32.0,
            cy: 24.0,
            sigma: 8.0,
            delta_n,
            thickness_z: 0.05,
        }
    }

    fn geom() -> BosGeometry {
        BosGeometry::phone_setup(2e-4)
    }

    #[test]
    fn index_profile() {
        let c = OpticsConstants::default();
        let f = plume(1e-4);
        assert!((f.index_at(&c, 32.0, 24.0) - (c.n0 - 1e-4)).abs() < 1e-15);
        assert!((f.index_at(&c, 1e6, 24.0) - c.n0).abs() < 1e-15);
        let a = f.index_at(&c, 32.0 + 3.0, 24.0 + 4.0);
        let b = f.index_at(&c, 32.0 - 5.0, 24.0);
        assert!((a - b).abs() < 1e-15);
        assert_eq!(RefractiveField::Uniform { thickness_z: 0.1 }.index_at(&c, 3.0, 4.0), c.n0);
    }

    #[test]
    fn analytic_gradient_matches_central_difference() {
        let c = OpticsConstants::default();
        let f = plume(2e-4);
        for &(x, y) in &[(30.0, 20.0), (40.5, 24.0), (20.0, 31.0)] {
            let h = 1e-3;
            let fd_x = (f.index_at(&c, x + h, y) - f.index_at(&c, x - h, y)) / (2.0 * h);
            let fd_y = (f.index_at(&c, x, y + h) - f.index_at(&c, x, y - h)) / (2.0 * h);
            let (gx, gy) = f.index_gradient_px(x, y);
            assert!((gx - fd_x).abs() < 1e-12 && (gy - fd_y).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_field_has_zero_truth() {
        let gt = ground_truth_field(
            &RefractiveField::Uniform { thickness_z: 0.05 },
            &geom(),
            &OpticsConstants::default(),
            16,
            12,
        )
        .unwrap();
        assert!(gt.u().iter().chain(gt.v()).all(|&c| c == 0.0));
    }

    #[test]
    fn truth_peaks_on_sigma_circle_and_is_antisymmetric() {
        let c = OpticsConstants::default();
        let gt = ground_truth_field(&plume(2e-4), &geom(), &c, 64, 48).unwrap();
        let mag = gt.magnitude();
        let (mut best, mut best_r) = (0.0f32, 0.0f64);
        for y in 0..48 {
            for x in 0..64 {
                if mag.get(x, y) > best {
                    best = mag.get(x, y);
                    best_r = (x as f64 - 32.0).hypot(y as f64 - 24.0);
                }
            }
        }
        assert!((best_r - 8.0).abs() <= 0.5, "peak at r = {best_r}");
        for y in 0..48 {
            for dx in 1..32 {
                let (ul, vl) = gt.get(32 - dx, y);
                let (ur, vr) = gt.get(32 + dx, y);
                assert_eq!(ul, -ur);
                assert_eq!(vl, vr);
            }
        }
    }

    #[test]
    fn peak_matches_hand_composed_chain() {
        let c = OpticsConstants::default();
        let g = geom();
        let (sigma, delta_n, z) = (40.0, 2e-4, 0.05);
        // (Z / n0) * max|grad n| * d2 / bg_scale with max|grad n| = delta_n e^{-1/2} / (sigma * bg_scale)
        let max_grad = delta_n * (-0.5f64).exp() / (sigma * 2e-4);
        let expected = z / c.n0 * max_grad * 0.35 / 2e-4;
        let got = plume_peak_displacement_px(sigma, delta_n, z, &g, &c);
        assert!((got - expected).abs() < 1e-12 * expected);
        let field = RefractiveField::GaussianPlume {
            cx: 100.0,
            cy: 100.0,
            sigma,
            delta_n,
            thickness_z: z,
        };
        let gt = ground_truth_field(&field, &g, &c, 200, 200).unwrap();
        let peak = gt.magnitude().max() as f64;
        assert!(peak <= expected * (1.0 + 1e-6));
        assert!(peak > expected * 0.999, "{peak} vs {expected}");
        let dn = delta_n_for_peak(expected, sigma, z, &g, &c);
        assert!((dn - delta_n).abs() < 1e-15);
    }

    #[test]
    fn warp_identity_and_translation() {
        let img = GrayImage::from_fn(10, 6, |x, y| ((x * 3 + y * 5) % 7) as f32 / 6.0);
        assert_eq!(warp_image(&img, &DisplacementField::zeros(10, 6)).unwrap(), img);
        let shifted = warp_image(&img, &DisplacementField::constant(10, 6, 1.0, 0.0)).unwrap();
        for y in 0..6 {
            assert_eq!(shifted.get(0, y), img.get(0, y));
            for x in 1..10 {
                assert_eq!(shifted.get(x, y), img.get(x - 1, y));
            }
        }
        assert!(warp_image(&img, &DisplacementField::zeros(9, 6)).is_err());
    }

    #[test]
    fn half_pixel_shift_of_step_edge() {
        let step = GrayImage::from_fn(8, 2, |x, _| if x < 4 { 0.0 } else { 1.0 });
        let out = warp_image(&step, &DisplacementField::constant(8, 2, 0.5, 0.0)).unwrap();
        assert_eq!(out.get(4, 0), 0.5);
        assert_eq!(out.get(3, 0), 0.0);
        assert_eq!(out.get(5, 0), 1.0);
    }

    #[test]
    fn null_plume_gives_identical_frames() {
        let spec = PatternSpec::new(PatternKind::RandomSquares, 64, 48, 4, 1);
        let out = simulate_pair(
            &Background::Pattern(spec),
            &plume(0.0),
            &geom(),
            &OpticsConstants::default(),
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(out.reference, out.distorted);
    }

    #[test]
    fn quantized_noise_outside_plume() {
        let spec = PatternSpec::new(PatternKind::RandomSquares, 64, 48, 4, 1);
        let sigma_n = 0.01;
        let out = simulate_pair(
            &Background::Pattern(spec),
            &plume(1e-4),
            &geom(),
            &OpticsConstants::default(),
            &SimOptions {
                noise_sigma: sigma_n,
                quantize: true,
                noise_seed: 3,
            },
        )
        .unwrap();
        assert_ne!(out.reference, out.distorted);
        let (mut sum, mut n) = (0.0, 0);
        for y in 0..48 {
            for x in 0..64 {
                if (x as f64 - 32.0).hypot(y as f64 - 24.0) > 24.0 {
                    sum += (out.reference.get(x, y) - out.distorted.get(x, y)).abs() as f64;
                    n += 1;
                }
            }
        }
        assert!(n > 0);
        assert!(sum / n as f64 <= 3.0 * sigma_n);
        for &v in out.reference.data().iter().chain(out.distorted.data()) {
            assert_eq!((v * 255.0).round() / 255.0, v);
        }
    }

    #[test]
    fn deterministic() {
        let spec = PatternSpec::new(PatternKind::RandomDots, 40, 30, 4, 8);
        let opts = SimOptions {
            noise_sigma: 0.02,
            quantize: false,
            noise_seed: 11,
        };
        let run = || {
            simulate_pair(
                &Background::Pattern(spec.clone()),
                &plume(1e-4),
                &geom(),
                &OpticsConstants::default(),
                &opts,
            )
            .unwrap()
        };
        let (a, b) = (run(), run());
        assert_eq!(a.reference, b.reference);
        assert_eq!(a.distorted, b.distorted);
    }

    #[test]
    fn camera_image_area_average() {
        let print = GrayImage::from_fn(8, 6, |x, y| if (x + y) % 2 == 0 { 1.0 } else { 0.0 });
        assert_eq!(camera_image(&print, 1.0, 8, 6).unwrap(), print);
        let half = camera_image(&print, 0.5, 4, 3).unwrap();
        assert!(half.data().iter().all(|&v| v == 0.5));
        let blocks = GrayImage::from_fn(8, 8, |x, _| if x < 4 { 0.0 } else { 1.0 });
        let seen = camera_image(&blocks, 0.5, 4, 4).unwrap();
        assert_eq!((seen.get(1, 0), seen.get(2, 0)), (0.0, 1.0));
        assert!(camera_image(&print, 0.0, 4, 3).is_err());
    }
}
