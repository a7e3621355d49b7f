//! Signal-to-noise ratio of result maps and endpoint-error statistics.

use serde::{Deserialize, Serialize};

use crate::error::{check_dims, Error, Result};
use crate::imagecore::{DisplacementField, Mask, Plane};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DbConvention {
    /// 20 log10 (amplitude).
    #[default]
    Amplitude,
    /// 10 log10 (power).
    Power,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SnrReport {
    pub i_sample: f64,
    pub i_bg: f64,
    pub sigma_bg: f64,
    pub linear: f64,
    /// `None` when `linear <= 0`.
    pub db: Option<f64>,
}

/// `(mean(sample) - mean(bg)) / std(bg)` over two disjoint regions of `result`.
pub fn snr(result: &Plane, sample_mask: &Mask, bg_mask: &Mask, convention: DbConvention) -> Result<SnrReport> {
    check_dims(result.dims(), sample_mask.dims())?;
    check_dims(result.dims(), bg_mask.dims())?;
    if sample_mask.count() == 0 || bg_mask.count() == 0 {
        return Err(Error::param("mask", "sample and background regions must be non-empty"));
    }
    if sample_mask.overlaps(bg_mask) {
        return Err(Error::param("mask", "sample and background regions overlap"));
    }
    let select = |m: &Mask| -> Vec<f64> {
        result
            .data
            .iter()
            .zip(&m.data)
            .filter(|(_, &keep)| keep)
            .map(|(&v, _)| v as f64)
            .collect()
    };
    let sample = select(sample_mask);
    let bg = select(bg_mask);
    let i_sample = mean(&sample);
    let i_bg = mean(&bg);
    let sigma_bg = (bg.iter().map(|v| (v - i_bg).powi(2)).sum::<f64>() / bg.len() as f64).sqrt();
    if !(sigma_bg > 1e-12) {
        return Err(Error::param("bg_mask", "background has zero variance"));
    }
    let linear = (i_sample - i_bg) / sigma_bg;
    let db = (linear > 0.0).then(|| match convention {
        DbConvention::Amplitude => 20.0 * linear.log10(),
        DbConvention::Power => 10.0 * linear.log10(),
    });
    Ok(SnrReport {
        i_sample,
        i_bg,
        sigma_bg,
        linear,
        db,
    })
}

/// Sequential f64 sum in slice order.
fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpeReport {
    pub mean: f64,
    pub median: f64,
    pub p95: f64,
    pub max: f64,
    pub count: usize,
}

/// Which points of the estimate enter the aggregate.
#[derive(Debug, Clone, PartialEq)]
pub enum EpeRegion {
    /// Source-image pixels at least this far from every edge.
    Interior { border: usize },
    /// Explicit region in source-image coordinates (intersected with nothing else).
    Mask(Mask),
}

impl Default for EpeRegion {
    fn default() -> Self {
        EpeRegion::Interior { border: DEFAULT_BORDER }
    }
}

/// Half the default interrogation window.
pub const DEFAULT_BORDER: usize = 16;

/// Endpoint error of `estimate` against a dense `truth`. Sparse estimates are
/// compared at their grid points with truth sampled bilinearly there; invalid
/// vectors are skipped.
pub fn endpoint_error(estimate: &DisplacementField, truth: &DisplacementField, region: &EpeRegion) -> Result<EpeReport> {
    if !truth.is_dense() {
        return Err(Error::param("truth", "ground truth must be dense"));
    }
    let (tw, th) = truth.dims();
    if estimate.is_dense() {
        check_dims(truth.dims(), estimate.dims())?;
    } else {
        let (ew, eh) = estimate.dims();
        let (lx, ly) = estimate.position(ew - 1, eh - 1);
        if lx >= tw || ly >= th {
            return Err(Error::DimensionMismatch {
                expected: (tw, th),
                found: (lx + 1, ly + 1),
            });
        }
    }
    let in_region = |x: usize, y: usize| match region {
        EpeRegion::Interior { border } => x >= *border && y >= *border && x + border < tw && y + border < th,
        EpeRegion::Mask(m) => m.data[y * m.width + x],
    };
    if let EpeRegion::Mask(m) = region {
        check_dims(truth.dims(), m.dims())?;
    }

    let (ew, eh) = estimate.dims();
    let mut errors = Vec::with_capacity(ew * eh);
    for j in 0..eh {
        for i in 0..ew {
            let idx = j * ew + i;
            if !estimate.is_valid(idx) {
                continue;
            }
            let (x, y) = estimate.position(i, j);
            if !in_region(x, y) {
                continue;
            }
            let (ue, ve) = estimate.get(i, j);
            let (ut, vt) = if estimate.is_dense() {
                truth.get(x, y)
            } else {
                truth.sample_bilinear(x as f32, y as f32)
            };
            errors.push((ue as f64 - ut as f64).hypot(ve as f64 - vt as f64));
        }
    }
    if errors.is_empty() {
        return Err(Error::param("region", "no points to evaluate"));
    }
    Ok(summarize(errors))
}

fn summarize(mut errors: Vec<f64>) -> EpeReport {
    let count = errors.len();
    let mean = errors.iter().sum::<f64>() / count as f64;
    errors.sort_by(f64::total_cmp);
    let pct = |p: f64| -> f64 {
        // nearest-rank
        let rank = ((p * count as f64).ceil() as usize).clamp(1, count);
        errors[rank - 1]
    };
    let median = if count % 2 == 1 {
        errors[count / 2]
    } else {
        0.5 * (errors[count / 2 - 1] + errors[count / 2])
    };
    EpeReport {
        mean,
        median,
        p95: pct(0.95),
        max: errors[count - 1],
        count,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MagnitudeStats {
    pub min: f64,
    pub mean: f64,
    pub max: f64,
}

/// Euclidean magnitude aggregates over valid vectors (all vectors if none valid).
pub fn magnitude_stats(field: &DisplacementField) -> MagnitudeStats {
    let mags: Vec<f64> = field
        .u()
        .iter()
        .zip(field.v())
        .enumerate()
        .filter(|(i, _)| field.is_valid(*i))
        .map(|(_, (&a, &b))| (a as f64).hypot(b as f64))
        .collect();
    if mags.is_empty() {
        return MagnitudeStats { min: 0.0, mean: 0.0, max: 0.0 };
    }
    MagnitudeStats {
        min: mags.iter().copied().fold(f64::INFINITY, f64::min),
        mean: mags.iter().sum::<f64>() / mags.len() as f64,
        max: mags.iter().copied().fold(0.0, f64::max),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use proptest::prelude::*;

    fn raster(w: usize, h: usize, mut f: impl FnMut(usize, usize) -> f32) -> Plane {
        Plane::new(w, h, (0..w * h).map(|i| f(i % w, i / w)).collect()).unwrap()
    }

    #[test]
    fn snr_by_hand() {
        // left half sample = 10; right half background alternating 1 / 3 (mean 2, std 1)
        let img = raster(8, 4, |x, y| if x < 4 { 10.0 } else if (x + y) % 2 == 0 { 1.0 } else { 3.0 });
        let s = Mask::rect(8, 4, 0, 0, 4, 4);
        let b = Mask::rect(8, 4, 4, 0, 4, 4);
        let r = snr(&img, &s, &b, DbConvention::Amplitude).unwrap();
        assert_eq!((r.i_sample, r.i_bg, r.sigma_bg, r.linear), (10.0, 2.0, 1.0, 8.0));
        assert!((r.db.unwrap() - 18.062).abs() < 1e-3);
        let p = snr(&img, &s, &b, DbConvention::Power).unwrap();
        assert!((p.db.unwrap() - 9.031).abs() < 1e-3);
    }

    #[test]
    fn snr_null_signal_and_errors() {
        let img = raster(8, 4, |x, y| if (x + y) % 2 == 0 { 0.4 } else { 0.6 });
        let s = Mask::rect(8, 4, 0, 0, 4, 4);
        let b = Mask::rect(8, 4, 4, 0, 4, 4);
        let r = snr(&img, &s, &b, DbConvention::Amplitude).unwrap();
        assert!(r.linear.abs() < 1e-12);
        assert!(r.db.is_none());
        assert!(snr(&img, &s, &s, DbConvention::Amplitude).is_err());
        assert!(snr(&img, &Mask::rect(8, 4, 0, 0, 0, 0), &b, DbConvention::Amplitude).is_err());
        let flat = raster(8, 4, |_, _| 0.5);
        assert!(snr(&flat, &s, &b, DbConvention::Amplitude).is_err());
    }

    #[test]
    fn epe_examples() {
        let truth = DisplacementField::from_fn(40, 40, |x, y| (x as f32 * 0.01, -(y as f32) * 0.02));
        let same = endpoint_error(&truth, &truth, &EpeRegion::default()).unwrap();
        assert_eq!((same.mean, same.median, same.p95, same.max), (0.0, 0.0, 0.0, 0.0));
        assert_eq!(same.count, 8 * 8);
        let off = truth.map(|u, v| (u + 3.0, v + 4.0));
        let r = endpoint_error(&off, &truth, &EpeRegion::Interior { border: 0 }).unwrap();
        assert!((r.mean - 5.0).abs() < 1e-5 && (r.median - 5.0).abs() < 1e-5 && (r.max - 5.0).abs() < 1e-5);
        assert!(endpoint_error(&DisplacementField::zeros(10, 10), &truth, &EpeRegion::default()).is_err());
    }

    #[test]
    fn epe_sparse_samples_truth_at_grid_points() {
        let truth = DisplacementField::from_fn(64, 64, |x, _| (x as f32 * 0.1, 0.0));
        let est = DisplacementField::sparse(3, 3, vec![2.0, 3.6, 5.2, 2.0, 3.6, 5.2, 2.0, 3.6, 5.2], vec![0.0; 9], 16, (20, 20)).unwrap();
        let r = endpoint_error(&est, &truth, &EpeRegion::Interior { border: 0 }).unwrap();
        assert!(r.max < 1e-5, "{r:?}");
        let valid = vec![true, true, true, true, false, true, true, true, true];
        let r = endpoint_error(&est.with_validity(valid).unwrap(), &truth, &EpeRegion::Interior { border: 0 }).unwrap();
        assert_eq!(r.count, 8);
    }

    #[test]
    fn epe_matches_elementwise_oracle() {
        let mut rng = SplitMix64::new(99);
        for _ in 0..20 {
            let mut draw = || (rng.next_f64() * 4.0 - 2.0) as f32;
            let a = DisplacementField::from_fn(12, 9, |_, _| (draw(), draw()));
            let b = DisplacementField::from_fn(12, 9, |_, _| (draw(), draw()));
            let r = endpoint_error(&a, &b, &EpeRegion::Interior { border: 0 }).unwrap();
            let mut errs: Vec<f64> = Vec::new();
            for i in 0..a.u().len() {
                let du = a.u()[i] as f64 - b.u()[i] as f64;
                let dv = a.v()[i] as f64 - b.v()[i] as f64;
                errs.push((du * du + dv * dv).sqrt());
            }
            let mean = errs.iter().sum::<f64>() / errs.len() as f64;
            let max = errs.iter().cloned().fold(0.0, f64::max);
            assert!((r.mean - mean).abs() < 1e-9);
            assert!((r.max - max).abs() < 1e-9);
            assert!(r.median <= r.p95 && r.p95 <= r.max && r.mean <= r.max);
        }
    }

    #[test]
    fn magnitude_examples() {
        let z = magnitude_stats(&DisplacementField::zeros(4, 4));
        assert_eq!((z.min, z.mean, z.max), (0.0, 0.0, 0.0));
        let one = magnitude_stats(&DisplacementField::constant(1, 1, 3.0, 4.0));
        assert_eq!(one.max, 5.0);
    }

    proptest! {
        #[test]
        fn snr_affine_invariant(a in 0.1f32..10.0, b in -5.0f32..5.0, seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let img = raster(10, 6, |x, _| if x < 4 { 1.0 } else { 0.0 } + rng.next_f64() as f32 * 0.3);
            let s = Mask::rect(10, 6, 0, 0, 4, 6);
            let bg = Mask::rect(10, 6, 4, 0, 6, 6);
            let scaled = Plane::new(10, 6, img.data.iter().map(|v| a * v + b).collect()).unwrap();
            let r1 = snr(&img, &s, &bg, DbConvention::Amplitude).unwrap();
            let r2 = snr(&scaled, &s, &bg, DbConvention::Amplitude).unwrap();
            prop_assert!((r1.linear - r2.linear).abs() < 1e-3 * r1.linear.abs().max(1.0));
        }

        #[test]
        fn epe_symmetric_and_zero_iff_equal(seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let mut draw = || (rng.next_f64() * 2.0 - 1.0) as f32;
            let a = DisplacementField::from_fn(6, 5, |_, _| (draw(), draw()));
            let b = DisplacementField::from_fn(6, 5, |_, _| (draw(), draw()));
            let region = EpeRegion::Interior { border: 0 };
            let ab = endpoint_error(&a, &b, &region).unwrap();
            let ba = endpoint_error(&b, &a, &region).unwrap();
            prop_assert_eq!(ab.mean, ba.mean);
            prop_assert!(ab.mean > 0.0);
            prop_assert_eq!(endpoint_error(&a, &a, &region).unwrap().max, 0.0);
        }

        #[test]
        fn magnitude_rotation_invariant(seed in any::<u64>()) {
            let mut rng = SplitMix64::new(seed);
            let mut draw = || (rng.next_f64() * 6.0 - 3.0) as f32;
            let f = DisplacementField::from_fn(7, 7, |_, _| (draw(), draw()));
            let r = f.map(|u, v| (-v, u));
            prop_assert_eq!(magnitude_stats(&f), magnitude_stats(&r));
        }
    }
}
