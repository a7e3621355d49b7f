use crate::error::{check_dims, Error, Result};
use crate::imagecore::GrayImage;

/// Consecutive frame subtraction: `min(1, gain * |b - a|)` per pixel.
pub fn cfs(frame_a: &GrayImage, frame_b: &GrayImage, gain: f32) -> Result<GrayImage> {
    check_dims(frame_a.dims(), frame_b.dims())?;
    if !(gain >= 1.0) {
        return Err(Error::param("gain", format!("{gain} must be >= 1")));
    }
    let data = frame_a
        .data()
        .iter()
        .zip(frame_b.data())
        .map(|(a, b)| (gain * (b - a).abs()).min(1.0))
        .collect();
    let (w, h) = frame_a.dims();
    GrayImage::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_frames_give_zero() {
        let a = GrayImage::from_fn(7, 5, |x, y| (x * y) as f32 / 24.0);
        let d = cfs(&a, &a, 1.0).unwrap();
        assert!(d.data().iter().all(|&v| v.to_bits() == 0));
    }

    #[test]
    fn constant_offset() {
        let a = GrayImage::filled(4, 4, 0.3);
        let b = GrayImage::filled(4, 4, 0.4);
        let d = cfs(&a, &b, 1.0).unwrap();
        assert!(d.data().iter().all(|&v| (v - 0.1).abs() < 1e-6));
        let g = cfs(&a, &b, 20.0).unwrap();
        assert!(g.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn rejects_bad_input() {
        let a = GrayImage::filled(4, 4, 0.3);
        assert!(cfs(&a, &GrayImage::filled(4, 3, 0.3), 1.0).is_err());
        assert!(cfs(&a, &a, 0.5).is_err());
    }
}
