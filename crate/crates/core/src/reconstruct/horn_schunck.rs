//! Horn-Schunck dense flow at a single scale.
//!
//! Minimizes `Σ (Ex u + Ey v + Et)^2 + (α²/4) Σ_edges (|Δu|^2 + |Δv|^2)` by Jacobi
//! sweeps of the classical per-pixel update
//! `u <- ū - Ex (Ex ū + Ey v̄ + Et) / (α² + Ex² + Ey²)`, with 4-neighbor averages
//! and replicated borders. Derivatives use the 2x2x2 cube stencils averaged over
//! both frames, so all three are centered at the same point.

use rayon::prelude::*;

use super::FlowConfig;
use crate::error::{check_dims, Result};
use crate::imagecore::{DisplacementField, GrayImage, Plane};

#[derive(Debug, Clone)]
pub struct HsDerivatives {
    pub ex: Plane,
    pub ey: Plane,
    pub et: Plane,
}

pub fn hs_derivatives(reference: &GrayImage, target: &GrayImage) -> Result<HsDerivatives> {
    check_dims(reference.dims(), target.dims())?;
    let (w, h) = reference.dims();
    let a = reference.to_plane();
    let b = target.to_plane();
    let mut ex = vec![0.0f32; w * h];
    let mut ey = vec![0.0f32; w * h];
    let mut et = vec![0.0f32; w * h];
    ex.par_chunks_mut(w)
        .zip(ey.par_chunks_mut(w))
        .zip(et.par_chunks_mut(w))
        .enumerate()
        .for_each(|(y, ((rx, ry), rt))| {
            let y = y as isize;
            for x in 0..w {
                let x = x as isize;
                let c = |p: &Plane, dx: isize, dy: isize| p.get_clamped(x + dx, y + dy);
                let (a00, a10, a01, a11) = (c(&a, 0, 0), c(&a, 1, 0), c(&a, 0, 1), c(&a, 1, 1));
                let (b00, b10, b01, b11) = (c(&b, 0, 0), c(&b, 1, 0), c(&b, 0, 1), c(&b, 1, 1));
                let i = x as usize;
                rx[i] = 0.25 * ((a10 - a00) + (a11 - a01) + (b10 - b00) + (b11 - b01));
                ry[i] = 0.25 * ((a01 - a00) + (a11 - a10) + (b01 - b00) + (b11 - b10));
                rt[i] = 0.25 * ((b00 - a00) + (b10 - a10) + (b01 - a01) + (b11 - a11));
            }
        });
    Ok(HsDerivatives {
        ex: Plane::new(w, h, ex)?,
        ey: Plane::new(w, h, ey)?,
        et: Plane::new(w, h, et)?,
    })
}

/// Runs `iterations` Jacobi sweeps in place.
pub fn hs_jacobi(der: &HsDerivatives, u: &mut Vec<f32>, v: &mut Vec<f32>, alpha: f64, iterations: usize) {
    let (w, h) = der.ex.dims();
    let a2 = (alpha * alpha) as f32;
    let mut nu = vec![0.0f32; w * h];
    let mut nv = vec![0.0f32; w * h];
    for _ in 0..iterations {
        {
            let (u, v) = (&*u, &*v);
            nu.par_chunks_mut(w)
                .zip(nv.par_chunks_mut(w))
                .enumerate()
                .for_each(|(y, (ru, rv))| {
                    let up = y.saturating_sub(1) * w;
                    let dn = (y + 1).min(h - 1) * w;
                    let row = y * w;
                    for x in 0..w {
                        let l = row + x.saturating_sub(1);
                        let r = row + (x + 1).min(w - 1);
                        let ub = 0.25 * (u[l] + u[r] + u[up + x] + u[dn + x]);
                        let vb = 0.25 * (v[l] + v[r] + v[up + x] + v[dn + x]);
                        let i = row + x;
                        let (gx, gy, gt) = (der.ex.data[i], der.ey.data[i], der.et.data[i]);
                        let k = (gx * ub + gy * vb + gt) / (a2 + gx * gx + gy * gy);
                        ru[x] = ub - gx * k;
                        rv[x] = vb - gy * k;
                    }
                });
        }
        std::mem::swap(u, &mut nu);
        std::mem::swap(v, &mut nv);
    }
}

/// Discrete energy whose per-pixel minimizer is the Jacobi update.
pub fn hs_energy(der: &HsDerivatives, u: &[f32], v: &[f32], alpha: f64) -> f64 {
    let (w, h) = der.ex.dims();
    let mut data = 0.0f64;
    let mut smooth = 0.0f64;
    for y in 0..h {
        for x in 0..w {
            let i = y * w + x;
            let r = der.ex.data[i] as f64 * u[i] as f64
                + der.ey.data[i] as f64 * v[i] as f64
                + der.et.data[i] as f64;
            data += r * r;
            if x + 1 < w {
                smooth += (u[i + 1] as f64 - u[i] as f64).powi(2) + (v[i + 1] as f64 - v[i] as f64).powi(2);
            }
            if y + 1 < h {
                smooth += (u[i + w] as f64 - u[i] as f64).powi(2) + (v[i + w] as f64 - v[i] as f64).powi(2);
            }
        }
    }
    data + alpha * alpha / 4.0 * smooth
}

/// Single-scale solve starting from zero flow.
pub fn horn_schunck_level(
    reference: &GrayImage,
    target: &GrayImage,
    cfg: &FlowConfig,
) -> Result<DisplacementField> {
    let der = hs_derivatives(reference, target)?;
    let (w, h) = reference.dims();
    let mut u = vec![0.0f32; w * h];
    let mut v = vec![0.0f32; w * h];
    hs_jacobi(&der, &mut u, &mut v, cfg.alpha, cfg.iterations);
    DisplacementField::dense(w, h, u, v)
}
