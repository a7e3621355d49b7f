//! Coarse-to-fine wrapper shared by the dense engines.

use super::{farneback_level, horn_schunck_level, FlowConfig, FlowEngine};
use crate::error::{check_dims, Result};
use crate::imagecore::{gaussian_blur, DisplacementField, GrayImage};
use crate::simulate::warp_image;

const MIN_LEVEL_SIZE: usize = 16;

/// Gaussian pyramid, finest first: blur with σ = 1 then resample by `scale`.
/// Levels whose smaller side would drop below 16 px are not built.
pub fn build_pyramid(img: &GrayImage, levels: usize, scale: f64) -> Vec<GrayImage> {
    let mut out = vec![img.clone()];
    while out.len() < levels {
        let last = out.last().unwrap();
        let (w, h) = last.dims();
        let nw = ((w as f64 * scale).round() as usize).max(1);
        let nh = ((h as f64 * scale).round() as usize).max(1);
        if nw.min(nh) < MIN_LEVEL_SIZE {
            log::warn!(
                "pyramid reduced to {} of {levels} levels: next level would be {nw}x{nh}",
                out.len()
            );
            break;
        }
        let blurred = gaussian_blur(&last.to_plane(), 1.0);
        let (sx, sy) = (w as f32 / nw as f32, h as f32 / nh as f32);
        let data = (0..nw * nh)
            .map(|i| {
                let (x, y) = ((i % nw) as f32, (i / nw) as f32);
                blurred.sample_bilinear((x + 0.5) * sx - 0.5, (y + 0.5) * sy - 0.5)
            })
            .collect();
        out.push(GrayImage::from_clamped(nw, nh, data).expect("sized buffer"));
    }
    out
}

/// Resamples a coarse dense field onto a `width x height` grid, scaling the
/// vectors by the size ratio.
pub fn upsample_field(field: &DisplacementField, width: usize, height: usize) -> DisplacementField {
    let (cw, ch) = field.dims();
    let (rx, ry) = (cw as f32 / width as f32, ch as f32 / height as f32);
    DisplacementField::from_fn(width, height, |x, y| {
        let (u, v) = field.sample_bilinear((x as f32 + 0.5) * rx - 0.5, (y as f32 + 0.5) * ry - 0.5);
        (u / rx, v / ry)
    })
}

fn solve_level(engine: FlowEngine, r: &GrayImage, t: &GrayImage, cfg: &FlowConfig) -> Result<DisplacementField> {
    match engine {
        FlowEngine::HornSchunck => horn_schunck_level(r, t, cfg),
        FlowEngine::Farneback => farneback_level(r, t, cfg),
    }
}

/// Solves at the coarsest level, then at each finer level warps the target by the
/// upsampled estimate and adds the engine's residual.
pub fn pyramid_flow(
    engine: FlowEngine,
    reference: &GrayImage,
    target: &GrayImage,
    cfg: &FlowConfig,
) -> Result<DisplacementField> {
    cfg.validate()?;
    check_dims(reference.dims(), target.dims())?;
    let refs = build_pyramid(reference, cfg.levels, cfg.scale);
    let targets = build_pyramid(target, refs.len(), cfg.scale);

    let mut estimate: Option<DisplacementField> = None;
    for (r, t) in refs.iter().zip(&targets).rev() {
        let (w, h) = r.dims();
        estimate = Some(match estimate {
            None => solve_level(engine, r, t, cfg)?,
            Some(coarse) => {
                let init = upsample_field(&coarse, w, h);
                // t(x + init) = r(x - (δ - init)), so the residual is δ - init
                let warped = warp_image(t, &init.map(|u, v| (-u, -v)))?;
                let residual = solve_level(engine, r, &warped, cfg)?;
                let u = init.u().iter().zip(residual.u()).map(|(a, b)| a + b).collect();
                let v = init.v().iter().zip(residual.v()).map(|(a, b)| a + b).collect();
                DisplacementField::dense(w, h, u, v)?
            }
        });
    }
    Ok(estimate.expect("at least one level"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pyramid_shapes() {
        let img = GrayImage::filled(100, 70, 0.5);
        let p = build_pyramid(&img, 3, 0.5);
        let dims: Vec<_> = p.iter().map(|l| l.dims()).collect();
        assert_eq!(dims, vec![(100, 70), (50, 35), (25, 18)]);
        // 25x18 -> 13x9 is too small
        assert_eq!(build_pyramid(&img, 6, 0.5).len(), 3);
    }

    #[test]
    fn upsampled_dims_match_finer_level() {
        let coarse = DisplacementField::constant(25, 18, 1.0, -2.0);
        for (w, h) in [(50, 35), (50, 36), (49, 37)] {
            let up = upsample_field(&coarse, w, h);
            assert_eq!(up.dims(), (w, h));
            let (u, v) = up.get(w / 2, h / 2);
            assert!((u - w as f32 / 25.0).abs() < 1e-5);
            assert!((v + 2.0 * h as f32 / 18.0).abs() < 1e-5);
        }
    }

    #[test]
    fn single_level_equals_bare_engine() {
        use crate::patterns::{generate_pattern, PatternKind, PatternSpec};
        let a = generate_pattern(&PatternSpec::new(PatternKind::RandomSquares, 48, 40, 4, 1)).unwrap();
        let b = warp_image(&a, &DisplacementField::constant(48, 40, 0.3, 0.1)).unwrap();
        for engine in [FlowEngine::HornSchunck, FlowEngine::Farneback] {
            let cfg = FlowConfig { levels: 1, ..FlowConfig::for_engine(engine) };
            let bare = solve_level(engine, &a, &b, &cfg).unwrap();
            assert_eq!(pyramid_flow(engine, &a, &b, &cfg).unwrap(), bare);
        }
    }
}
