//! Two-frame motion from polynomial expansion, single scale.
//!
//! Every neighborhood is fitted with `f(d) ≈ dᵀA d + bᵀd + c` by Gaussian-weighted
//! least squares. A pure translation `f2(x) = f1(x - δ)` gives `b2 = b1 - 2 A δ`,
//! so `A δ = -(b2 - b1) / 2`. With a prior `δ̃` the second expansion is read at
//! `x + δ̃`; the normal equations `AᵀA δ = Aᵀ Δb` are averaged over a box window
//! before solving, with a small ridge term toward the previous estimate.

use nalgebra::{Matrix6, Vector6};
use rayon::prelude::*;

use super::FlowConfig;
use crate::error::{check_dims, Error, Result};
use crate::imagecore::{box_blur, filter::filter_cols, filter::filter_rows, DisplacementField, GrayImage, Plane};

/// Quadratic-fit coefficients per pixel: `f(dx, dy) ≈ c + bx dx + by dy
/// + axx dx² + ayy dy² + axy dx dy`.
#[derive(Debug, Clone)]
pub struct PolyExpansion {
    pub c: Plane,
    pub bx: Plane,
    pub by: Plane,
    pub axx: Plane,
    pub ayy: Plane,
    pub axy: Plane,
}

/// Weighted least-squares fit over `[-n, n]²` with Gaussian applicability `sigma`.
pub fn poly_expansion(img: &Plane, n: usize, sigma: f64) -> Result<PolyExpansion> {
    let r = n as isize;
    let g: Vec<f64> = (-r..=r)
        .map(|d| (-(d * d) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let k0: Vec<f32> = g.iter().map(|&v| v as f32).collect();
    let k1: Vec<f32> = (-r..=r).zip(&g).map(|(d, &v)| (d as f64 * v) as f32).collect();
    let k2: Vec<f32> = (-r..=r).zip(&g).map(|(d, &v)| ((d * d) as f64 * v) as f32).collect();

    let mut gram = Matrix6::<f64>::zeros();
    for dy in -r..=r {
        for dx in -r..=r {
            let w = g[(dx + r) as usize] * g[(dy + r) as usize];
            let (x, y) = (dx as f64, dy as f64);
            let b = Vector6::new(1.0, x, y, x * x, y * y, x * y);
            gram += w * b * b.transpose();
        }
    }
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::param("poly_n", "polynomial basis is singular"))?;

    let r0 = filter_rows(img, &k0);
    let r1 = filter_rows(img, &k1);
    let r2 = filter_rows(img, &k2);
    let moments = [
        filter_cols(&r0, &k0),
        filter_cols(&r1, &k0),
        filter_cols(&r0, &k1),
        filter_cols(&r2, &k0),
        filter_cols(&r0, &k2),
        filter_cols(&r1, &k1),
    ];

    let (w, h) = img.dims();
    let mut out: Vec<Vec<f32>> = (0..6).map(|_| vec![0.0f32; w * h]).collect();
    let inv32: Vec<f32> = inv.iter().map(|&v| v as f32).collect();
    for (row, coef) in out.iter_mut().enumerate() {
        coef.par_iter_mut().enumerate().for_each(|(i, o)| {
            let mut acc = 0.0f32;
            for (col, m) in moments.iter().enumerate() {
                // column-major storage
                acc += inv32[col * 6 + row] * m.data[i];
            }
            *o = acc;
        });
    }
    let mut planes = out.into_iter().map(|d| Plane { width: w, height: h, data: d });
    let mut next = || planes.next().expect("six planes");
    Ok(PolyExpansion {
        c: next(),
        bx: next(),
        by: next(),
        axx: next(),
        ayy: next(),
        axy: next(),
    })
}

/// Ridge weight relative to the image-mean structure tensor trace; pulls
/// textureless windows toward the previous estimate instead of amplifying noise.
const RIDGE: f64 = 1e-3;

/// Single-scale solve starting from zero flow, refined `cfg.iterations` times.
pub fn farneback_level(
    reference: &GrayImage,
    target: &GrayImage,
    cfg: &FlowConfig,
) -> Result<DisplacementField> {
    check_dims(reference.dims(), target.dims())?;
    let (w, h) = reference.dims();
    let e1 = poly_expansion(&reference.to_plane(), cfg.poly_n, cfg.poly_sigma)?;
    let e2 = poly_expansion(&target.to_plane(), cfg.poly_n, cfg.poly_sigma)?;
    let mut u = vec![0.0f32; w * h];
    let mut v = vec![0.0f32; w * h];
    for _ in 0..cfg.iterations {
        let terms = normal_equations(&e1, &e2, &u, &v);
        let [g11, g12, g22, h1, h2] = terms.map(|p| box_blur(&p, cfg.window));
        let lambda = RIDGE * (g11.data.iter().chain(&g22.data).map(|&g| g as f64).sum::<f64>() / (2 * w * h) as f64);
        u.par_iter_mut()
            .zip(v.par_iter_mut())
            .enumerate()
            .for_each(|(i, (du, dv))| {
                let (a, b, c) = (g11.data[i] as f64 + lambda, g12.data[i] as f64, g22.data[i] as f64 + lambda);
                let p = h1.data[i] as f64 + lambda * *du as f64;
                let q = h2.data[i] as f64 + lambda * *dv as f64;
                let det = a * c - b * b;
                if det > 0.0 {
                    *du = ((c * p - b * q) / det) as f32;
                    *dv = ((a * q - b * p) / det) as f32;
                }
            });
    }
    DisplacementField::dense(w, h, u, v)
}

/// Per-pixel entries of `AᵀA` (g11, g12, g22) and `AᵀΔb` (h1, h2).
fn normal_equations(e1: &PolyExpansion, e2: &PolyExpansion, u: &[f32], v: &[f32]) -> [Plane; 5] {
    let (w, h) = e1.bx.dims();
    let mut planes: Vec<Vec<f32>> = (0..5).map(|_| vec![0.0f32; w * h]).collect();
    let rows: Vec<[Vec<f32>; 5]> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut out: [Vec<f32>; 5] = Default::default();
            for o in out.iter_mut() {
                o.reserve(w);
            }
            for x in 0..w {
                let i = y * w + x;
                let (du, dv) = (u[i], v[i]);
                let sx = x as f32 + du;
                let sy = y as f32 + dv;
                let a11 = 0.5 * (e1.axx.data[i] + e2.axx.sample_bilinear(sx, sy));
                let a22 = 0.5 * (e1.ayy.data[i] + e2.ayy.sample_bilinear(sx, sy));
                let a12 = 0.25 * (e1.axy.data[i] + e2.axy.sample_bilinear(sx, sy));
                let db1 = -0.5 * (e2.bx.sample_bilinear(sx, sy) - e1.bx.data[i]) + a11 * du + a12 * dv;
                let db2 = -0.5 * (e2.by.sample_bilinear(sx, sy) - e1.by.data[i]) + a12 * du + a22 * dv;
                out[0].push(a11 * a11 + a12 * a12);
                out[1].push(a12 * (a11 + a22));
                out[2].push(a12 * a12 + a22 * a22);
                out[3].push(a11 * db1 + a12 * db2);
                out[4].push(a12 * db1 + a22 * db2);
            }
            out
        })
        .collect();
    for (y, row) in rows.into_iter().enumerate() {
        for (k, vals) in row.into_iter().enumerate() {
            planes[k][y * w..(y + 1) * w].copy_from_slice(&vals);
        }
    }
    let mut it = planes.into_iter().map(|data| Plane { width: w, height: h, data });
    [(); 5].map(|_| it.next().expect("five planes"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imagecore::gaussian_blur;
    use crate::patterns::{generate_pattern, PatternKind, PatternSpec};
    use crate::simulate::warp_image;

    #[test]
    fn expansion_reproduces_quadratics() {
        let (cx, cy) = (10.0f32, 9.0f32);
        let f = |x: f32, y: f32| {
            let (dx, dy) = (x - cx, y - cy);
            0.2 + 0.01 * dx - 0.02 * dy + 0.003 * dx * dx + 0.001 * dy * dy + 0.002 * dx * dy
        };
        let data = (0..20 * 18).map(|i| f((i % 20) as f32, (i / 20) as f32)).collect();
        let img = Plane::new(20, 18, data).unwrap();
        let e = poly_expansion(&img, 5, 1.1).unwrap();
        let i = 9 * 20 + 10;
        assert!((e.c.data[i] - 0.2).abs() < 1e-5);
        assert!((e.bx.data[i] - 0.01).abs() < 1e-5);
        assert!((e.by.data[i] + 0.02).abs() < 1e-5);
        assert!((e.axx.data[i] - 0.003).abs() < 1e-5);
        assert!((e.ayy.data[i] - 0.001).abs() < 1e-5);
        assert!((e.axy.data[i] - 0.002).abs() < 1e-5);
    }

    #[test]
    fn identical_frames_give_zero() {
        let img = generate_pattern(&PatternSpec::new(PatternKind::RandomSquares, 48, 40, 4, 1)).unwrap();
        let f = farneback_level(&img, &img, &FlowConfig::farneback()).unwrap();
        assert!(f.u().iter().chain(f.v()).all(|c| c.abs() <= 1e-9));
    }

    #[test]
    fn subpixel_translation() {
        let p = generate_pattern(&PatternSpec::new(PatternKind::RandomGray, 96, 80, 4, 2)).unwrap();
        let img = gaussian_blur(&p.to_plane(), 1.0).to_gray();
        let target = warp_image(&img, &DisplacementField::constant(96, 80, 0.6, -0.3)).unwrap();
        let f = farneback_level(&img, &target, &FlowConfig::farneback()).unwrap();
        let (mut su, mut sv, mut n) = (0.0, 0.0, 0);
        for y in 16..64 {
            for x in 16..80 {
                let (a, b) = f.get(x, y);
                su += a;
                sv += b;
                n += 1;
            }
        }
        let (mu, mv) = (su / n as f32, sv / n as f32);
        assert!((mu - 0.6).abs() < 0.05 && (mv + 0.3).abs() < 0.05, "({mu}, {mv})");
    }
}
