//! Vector-field smoothing that respects the validity mask.

use serde::{Deserialize, Serialize};

use crate::imagecore::{gaussian_kernel, DisplacementField};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostFilter {
    Median3,
    Gaussian { sigma: f32 },
}

/// Component-wise 3x3 median or normalized Gaussian over valid neighbors
/// (edge-replicated). Invalid vectors take the filtered value and become valid when
/// any valid neighbor exists.
pub fn postfilter(field: &DisplacementField, kind: PostFilter) -> DisplacementField {
    let (w, h) = field.dims();
    let (taps, radius) = match kind {
        PostFilter::Median3 => (Vec::new(), 1isize),
        PostFilter::Gaussian { sigma } => {
            let k = gaussian_kernel(sigma.max(1e-3), None);
            let r = (k.len() / 2) as isize;
            (k, r)
        }
    };
    let mut u = Vec::with_capacity(w * h);
    let mut v = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    let mut nu = Vec::new();
    let mut nv = Vec::new();
    for y in 0..h as isize {
        for x in 0..w as isize {
            nu.clear();
            nv.clear();
            let (mut su, mut sv, mut sw) = (0.0f64, 0.0f64, 0.0f64);
            for dy in -radius..=radius {
                for dx in -radius..=radius {
                    let xx = (x + dx).clamp(0, w as isize - 1) as usize;
                    let yy = (y + dy).clamp(0, h as isize - 1) as usize;
                    let i = yy * w + xx;
                    if !field.is_valid(i) {
                        continue;
                    }
                    let (a, b) = field.get(xx, yy);
                    match kind {
                        PostFilter::Median3 => {
                            nu.push(a);
                            nv.push(b);
                        }
                        PostFilter::Gaussian { .. } => {
                            let wt = (taps[(dx + radius) as usize] * taps[(dy + radius) as usize]) as f64;
                            su += wt * a as f64;
                            sv += wt * b as f64;
                            sw += wt;
                        }
                    }
                }
            }
            let i = y as usize * w + x as usize;
            let out = match kind {
                PostFilter::Median3 if !nu.is_empty() => Some((median(&mut nu), median(&mut nv))),
                PostFilter::Gaussian { .. } if sw > 0.0 => Some(((su / sw) as f32, (sv / sw) as f32)),
                _ => None,
            };
            match out {
                Some((a, b)) => {
                    u.push(a);
                    v.push(b);
                    valid.push(true);
                }
                None => {
                    u.push(field.u()[i]);
                    v.push(field.v()[i]);
                    valid.push(false);
                }
            }
        }
    }
    let out = field.with_components(u, v);
    match field.validity() {
        Some(_) => out.with_validity(valid).expect("same grid"),
        None => out,
    }
}

fn median(values: &mut [f32]) -> f32 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_unchanged() {
        let f = DisplacementField::constant(9, 7, 1.5, -0.25);
        for kind in [PostFilter::Median3, PostFilter::Gaussian { sigma: 1.0 }] {
            let g = postfilter(&f, kind);
            for (a, b) in g.u().iter().zip(g.v()) {
                assert!((a - 1.5).abs() < 1e-6 && (b + 0.25).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn median_removes_spike() {
        let mut u = vec![2.0f32; 49];
        u[24] = 50.0;
        let f = DisplacementField::dense(7, 7, u, vec![0.0; 49]).unwrap();
        let g = postfilter(&f, PostFilter::Median3);
        assert!(g.u().iter().all(|&a| a == 2.0));
    }

    #[test]
    fn gaussian_preserves_mean_of_linear_field() {
        let f = DisplacementField::from_fn(40, 30, |x, y| (0.1 * x as f32 - 1.0, 0.05 * y as f32));
        let g = postfilter(&f, PostFilter::Gaussian { sigma: 1.0 });
        let interior = |fl: &DisplacementField| {
            let mut s = 0.0f64;
            let mut n = 0;
            for y in 5..25 {
                for x in 5..35 {
                    s += fl.get(x, y).0 as f64 + fl.get(x, y).1 as f64;
                    n += 1;
                }
            }
            s / n as f64
        };
        assert!((interior(&f) - interior(&g)).abs() < 1e-6);
    }

    #[test]
    fn invalid_vectors_replaced() {
        let f = DisplacementField::constant(5, 5, 1.0, 1.0);
        let (mut u, mut v) = f.clone().into_components();
        u[12] = -9.0;
        v[12] = 9.0;
        let mut valid = vec![true; 25];
        valid[12] = false;
        let f = DisplacementField::dense(5, 5, u, v).unwrap().with_validity(valid).unwrap();
        for kind in [PostFilter::Median3, PostFilter::Gaussian { sigma: 1.0 }] {
            let g = postfilter(&f, kind);
            assert!((g.get(2, 2).0 - 1.0).abs() < 1e-6);
            assert!(g.validity().unwrap().iter().all(|&b| b));
        }
    }
}
