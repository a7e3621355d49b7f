//! Length flags with optional unit suffixes.

use anyhow::{bail, Context, Result};

/// Parses `4.73mm`, `82cm`, `0.35m`, `1.6um` or a bare number (meters).
pub fn parse_length(text: &str) -> Result<f64> {
    let t = text.trim();
    let (num, scale) = [("mm", 1e-3), ("cm", 1e-2), ("um", 1e-6), ("µm", 1e-6), ("m", 1.0)]
        .iter()
        .find_map(|(suffix, scale)| t.strip_suffix(suffix).map(|n| (n, *scale)))
        .unwrap_or((t, 1.0));
    let value: f64 = num
        .trim()
        .parse()
        .with_context(|| format!("invalid length {text:?}: expected a number with optional m/cm/mm/um suffix"))?;
    if !value.is_finite() {
        bail!("invalid length {text:?}: not finite");
    }
    Ok(value * scale)
}

/// `x,y,w,h` in pixels.
pub fn parse_rect(text: &str) -> Result<[usize; 4]> {
    let parts: Vec<usize> = text
        .split(',')
        .map(|p| p.trim().parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .with_context(|| format!("invalid rectangle {text:?}: expected x,y,w,h"))?;
    match parts.as_slice() {
        [x, y, w, h] => Ok([*x, *y, *w, *h]),
        _ => bail!("invalid rectangle {text:?}: expected x,y,w,h"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lengths() {
        assert_eq!(parse_length("0.35").unwrap(), 0.35);
        assert!((parse_length("4.73mm").unwrap() - 4.73e-3).abs() < 1e-15);
        assert!((parse_length("82cm").unwrap() - 0.82).abs() < 1e-15);
        assert!((parse_length("1.6um").unwrap() - 1.6e-6).abs() < 1e-18);
        assert_eq!(parse_length("2 m").unwrap(), 2.0);
        assert!(parse_length("3ft").is_err());
        assert!(parse_length("").is_err());
    }

    #[test]
    fn rects() {
        assert_eq!(parse_rect("1, 2,30,40").unwrap(), [1, 2, 30, 40]);
        assert!(parse_rect("1,2,3").is_err());
        assert!(parse_rect("a,2,3,4").is_err());
    }
}
