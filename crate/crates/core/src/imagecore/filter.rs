use rayon::prelude::*;

use super::Plane;

/// Normalized Gaussian taps over `[-radius, radius]`; radius defaults to `ceil(3σ)`.
pub fn gaussian_kernel(sigma: f32, radius: Option<usize>) -> Vec<f32> {
    let radius = radius.unwrap_or_else(|| (3.0 * sigma).ceil().max(1.0) as usize) as isize;
    let mut k: Vec<f32> = (-radius..=radius)
        .map(|i| (-(i * i) as f32 / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f32 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Correlates rows with `kx`, then columns with `ky` (both odd length, centered),
/// replicating edge pixels.
pub fn separable_filter(src: &Plane, kx: &[f32], ky: &[f32]) -> Plane {
    let rows = filter_rows(src, kx);
    filter_cols(&rows, ky)
}

pub(crate) fn filter_rows(src: &Plane, k: &[f32]) -> Plane {
    let (w, h) = src.dims();
    let r = (k.len() / 2) as isize;
    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        let line = &src.data[y * w..(y + 1) * w];
        for (x, o) in row.iter_mut().enumerate() {
            let mut acc = 0.0f32;
            for (t, &kv) in k.iter().enumerate() {
                let xx = (x as isize + t as isize - r).clamp(0, w as isize - 1) as usize;
                acc += kv * line[xx];
            }
            *o = acc;
        }
    });
    Plane {
        width: w,
        height: h,
        data: out,
    }
}

pub(crate) fn filter_cols(src: &Plane, k: &[f32]) -> Plane {
    let (w, h) = src.dims();
    let r = (k.len() / 2) as isize;
    let mut out = vec![0.0f32; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (t, &kv) in k.iter().enumerate() {
            let yy = (y as isize + t as isize - r).clamp(0, h as isize - 1) as usize;
            let line = &src.data[yy * w..(yy + 1) * w];
            for (o, &s) in row.iter_mut().zip(line) {
                *o += kv * s;
            }
        }
    });
    Plane {
        width: w,
        height: h,
        data: out,
    }
}

pub fn gaussian_blur(src: &Plane, sigma: f32) -> Plane {
    let k = gaussian_kernel(sigma, None);
    separable_filter(src, &k, &k)
}

/// Mean over a `size × size` box (size odd), edge-replicated.
pub fn box_blur(src: &Plane, size: usize) -> Plane {
    let size = size.max(1) | 1;
    let k = vec![1.0 / size as f32; size];
    separable_filter(src, &k, &k)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_sums_to_one() {
        for s in [0.5, 1.0, 1.1, 3.0] {
            let k = gaussian_kernel(s, None);
            assert!((k.iter().sum::<f32>() - 1.0).abs() < 1e-6);
            assert_eq!(k.len() % 2, 1);
        }
    }

    #[test]
    fn constants_survive_filters() {
        let p = Plane::new(9, 7, vec![0.25; 63]).unwrap();
        for out in [gaussian_blur(&p, 1.0), box_blur(&p, 5)] {
            assert!(out.data.iter().all(|v| (v - 0.25).abs() < 1e-6));
        }
    }

    #[test]
    fn impulse_response_is_kernel() {
        let mut p = Plane::zeros(11, 11);
        p.data[5 * 11 + 5] = 1.0;
        let k = gaussian_kernel(1.0, Some(3));
        let out = separable_filter(&p, &k, &k);
        assert!((out.get(5, 5) - k[3] * k[3]).abs() < 1e-7);
        assert!((out.get(7, 4) - k[1] * k[4]).abs() < 1e-7);
    }
}
