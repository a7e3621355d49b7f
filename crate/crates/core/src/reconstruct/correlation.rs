//! Interrogation-window cross-correlation with zero-mean normalization (ZNCC).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::imagecore::{DisplacementField, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subpixel {
    /// Per-axis three-point Gaussian fit, parabolic fallback for non-positive samples.
    Gaussian3,
    Parabolic,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrConfig {
    /// Square interrogation window side, pixels.
    pub window: usize,
    /// Largest displacement searched per axis, pixels.
    pub search: usize,
    /// Distance between window centers, pixels.
    pub step: usize,
    pub subpixel: Subpixel,
    /// Windows whose correlation peak is below this are invalid.
    pub min_peak: f64,
}

impl Default for CorrConfig {
    fn default() -> Self {
        Self {
            window: 32,
            search: 10,
            step: 16,
            subpixel: Subpixel::Gaussian3,
            min_peak: 0.3,
        }
    }
}

impl CorrConfig {
    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if self.window < 8 {
            return Err(Error::param("window", format!("{} < 8", self.window)));
        }
        if self.search < 1 {
            return Err(Error::param("search", "must be >= 1"));
        }
        if self.step < 1 {
            return Err(Error::param("step", "must be >= 1"));
        }
        if self.window + 2 * self.search > width.min(height) {
            return Err(Error::param(
                "window/search",
                format!(
                    "window {} + 2 x search {} exceeds image size {width}x{height}",
                    self.window, self.search
                ),
            ));
        }
        Ok(())
    }

    /// Centers along one axis: the first and last positions whose every searched
    /// window stays inside the image.
    fn centers(&self, len: usize) -> Vec<usize> {
        let half = self.window / 2;
        let first = half + self.search;
        let last = len - self.window + half - self.search;
        (first..=last).step_by(self.step).collect()
    }
}

#[derive(Debug, Clone)]
pub struct CorrResult {
    /// Sparse field on the window-center grid, with validity mask.
    pub field: DisplacementField,
    /// Correlation peak per grid point, in [-1, 1].
    pub peak: Vec<f32>,
}

pub fn cross_correlate(
    reference: &GrayImage,
    target: &GrayImage,
    cfg: &CorrConfig,
) -> Result<CorrResult> {
    check_dims(reference.dims(), target.dims())?;
    let (w, h) = reference.dims();
    cfg.validate(w, h)?;
    let xs = cfg.centers(w);
    let ys = cfg.centers(h);
    let integral = Integral::new(target);

    let results: Vec<(f32, f32, f32, bool)> = (0..xs.len() * ys.len())
        .into_par_iter()
        .map(|i| {
            let cx = xs[i % xs.len()];
            let cy = ys[i / xs.len()];
            match_window(reference, target, &integral, cfg, cx, cy)
        })
        .collect();

    let mut u = Vec::with_capacity(results.len());
    let mut v = Vec::with_capacity(results.len());
    let mut peak = Vec::with_capacity(results.len());
    let mut valid = Vec::with_capacity(results.len());
    for (du, dv, p, ok) in results {
        u.push(du);
        v.push(dv);
        peak.push(p);
        valid.push(ok);
    }
    let field = DisplacementField::sparse(xs.len(), ys.len(), u, v, cfg.step, (xs[0], ys[0]))?
        .with_validity(valid)?;
    Ok(CorrResult { field, peak })
}

fn match_window(
    reference: &GrayImage,
    target: &GrayImage,
    integral: &Integral,
    cfg: &CorrConfig,
    cx: usize,
    cy: usize,
) -> (f32, f32, f32, bool) {
    let n = cfg.window;
    let s = cfg.search as isize;
    let x0 = cx - n / 2;
    let y0 = cy - n / 2;
    let (w, _) = reference.dims();
    let rd = reference.data();
    let td = target.data();

    let mut mean = 0.0f64;
    for row in 0..n {
        let start = (y0 + row) * w + x0;
        mean += rd[start..start + n].iter().map(|&v| v as f64).sum::<f64>();
    }
    let count = (n * n) as f64;
    mean /= count;
    let mut centered = Vec::with_capacity(n * n);
    let mut ref_energy = 0.0f64;
    for row in 0..n {
        let start = (y0 + row) * w + x0;
        for &v in &rd[start..start + n] {
            let c = v as f64 - mean;
            ref_energy += c * c;
            centered.push(c as f32);
        }
    }
    // textureless window
    if ref_energy < 1e-10 * count {
        return (0.0, 0.0, 0.0, false);
    }

    let side = (2 * s + 1) as usize;
    let mut surface = vec![0.0f64; side * side];
    for (oy, dy) in (-s..=s).enumerate() {
        for (ox, dx) in (-s..=s).enumerate() {
            let tx = (x0 as isize + dx) as usize;
            let ty = (y0 as isize + dy) as usize;
            let mut num = 0.0f64;
            for row in 0..n {
                let t = &td[(ty + row) * w + tx..(ty + row) * w + tx + n];
                let r = &centered[row * n..(row + 1) * n];
                num += r.iter().zip(t).map(|(a, b)| a * b).sum::<f32>() as f64;
            }
            let (sum, sum2) = integral.window(tx, ty, n);
            let var = sum2 - sum * sum / count;
            surface[oy * side + ox] = if var > 1e-10 * count {
                num / (ref_energy * var).sqrt()
            } else {
                0.0
            };
        }
    }

    let (best, &peak) = surface
        .iter()
        .enumerate()
        .fold((0, &f64::NEG_INFINITY), |acc, (i, c)| if *c > *acc.1 { (i, c) } else { acc });
    let bx = best % side;
    let by = best / side;
    // ZNCC never exceeds 1, so a perfect integer match is already the maximum.
    let exact = peak >= 1.0 - 1e-9;
    let refine = |a: Option<f64>, b: Option<f64>| match (a, b) {
        (Some(m), Some(p)) if !exact => subpixel_offset(m, peak, p, cfg.subpixel),
        _ => 0.0,
    };
    let at = |x: usize, y: usize| surface[y * side + x];
    let fx = refine(
        bx.checked_sub(1).map(|x| at(x, by)),
        (bx + 1 < side).then(|| at(bx + 1, by)),
    );
    let fy = refine(
        by.checked_sub(1).map(|y| at(bx, y)),
        (by + 1 < side).then(|| at(bx, by + 1)),
    );
    if peak < cfg.min_peak {
        return (0.0, 0.0, peak as f32, false);
    }
    let du = bx as f64 - s as f64 + fx;
    let dv = by as f64 - s as f64 + fy;
    (du as f32, dv as f32, peak as f32, true)
}

/// Vertex offset of a three-sample peak `(c(-1), c(0), c(+1))`, within [-0.5, 0.5].
pub fn subpixel_offset(minus: f64, center: f64, plus: f64, kind: Subpixel) -> f64 {
    let parabolic = |m: f64, c: f64, p: f64| {
        let denom = 2.0 * (m - 2.0 * c + p);
        if denom.abs() > 1e-12 {
            (m - p) / denom
        } else {
            0.0
        }
    };
    let delta = match kind {
        Subpixel::None => 0.0,
        Subpixel::Parabolic => parabolic(minus, center, plus),
        Subpixel::Gaussian3 => {
            if minus <= 0.0 || center <= 0.0 || plus <= 0.0 {
                parabolic(minus, center, plus)
            } else {
                let (lm, lc, lp) = (minus.ln(), center.ln(), plus.ln());
                let denom = 2.0 * lm - 4.0 * lc + 2.0 * lp;
                if denom.abs() > 1e-12 {
                    (lm - lp) / denom
                } else {
                    0.0
                }
            }
        }
    };
    delta.clamp(-0.5, 0.5)
}

/// Summed-area tables of `t` and `t^2`.
struct Integral {
    stride: usize,
    sum: Vec<f64>,
    sum2: Vec<f64>,
}

impl Integral {
    fn new(img: &GrayImage) -> Self {
        let (w, h) = img.dims();
        let stride = w + 1;
        let mut sum = vec![0.0; stride * (h + 1)];
        let mut sum2 = vec![0.0; stride * (h + 1)];
        for y in 0..h {
            let (mut row, mut row2) = (0.0, 0.0);
            for x in 0..w {
                let v = img.get(x, y) as f64;
                row += v;
                row2 += v * v;
                sum[(y + 1) * stride + x + 1] = sum[y * stride + x + 1] + row;
                sum2[(y + 1) * stride + x + 1] = sum2[y * stride + x + 1] + row2;
            }
        }
        Self { stride, sum, sum2 }
    }

    fn window(&self, x: usize, y: usize, n: usize) -> (f64, f64) {
        let s = self.stride;
        let rect = |t: &[f64]| t[(y + n) * s + x + n] - t[y * s + x + n] - t[(y + n) * s + x] + t[y * s + x];
        (rect(&self.sum), rect(&self.sum2))
    }
}
