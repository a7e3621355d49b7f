//! Seeded background patterns and the 3-5 px sampling check.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::GrayImage;
use crate::rng::SplitMix64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatternKind {
    /// Each cell an independent uniform gray level.
    RandomGray,
    /// Dark disks of diameter `cell` on white.
    RandomDots,
    /// Black or white cells.
    RandomSquares,
}

impl PatternKind {
    pub const ALL: [PatternKind; 3] = [
        PatternKind::RandomSquares,
        PatternKind::RandomDots,
        PatternKind::RandomGray,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PatternKind::RandomGray => "random_gray",
            PatternKind::RandomDots => "random_dots",
            PatternKind::RandomSquares => "random_squares",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub width: usize,
    pub height: usize,
    /// Pixels per pattern cell.
    pub cell: usize,
    /// Probability that a cell is dark.
    pub fill: f64,
    pub seed: u64,
}

impl PatternSpec {
    pub const DEFAULT_FILL: f64 = 0.5;

    pub fn new(kind: PatternKind, width: usize, height: usize, cell: usize, seed: u64) -> Self {
        Self {
            kind,
            width,
            height,
            cell,
            fill: Self::DEFAULT_FILL,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cell == 0 {
            return Err(Error::param("cell", "must be >= 1"));
        }
        if self.width < self.cell || self.height < self.cell {
            return Err(Error::param(
                "width/height",
                format!(
                    "{}x{} is smaller than one {} px cell",
                    self.width, self.height, self.cell
                ),
            ));
        }
        if !(0.0..=1.0).contains(&self.fill) {
            return Err(Error::param("fill", format!("{} not in [0, 1]", self.fill)));
        }
        Ok(())
    }
}

/// Renders the pattern. Cells are visited in row-major order and each consumes
/// exactly one PRNG draw; trailing partial cells follow the same rule.
pub fn generate_pattern(spec: &PatternSpec) -> Result<GrayImage> {
    spec.validate()?;
    let cell = spec.cell;
    let cells_x = spec.width.div_ceil(cell);
    let cells_y = spec.height.div_ceil(cell);
    let mut rng = SplitMix64::new(spec.seed);
    let mut data = vec![1.0f32; spec.width * spec.height];

    let radius = cell as f64 / 2.0;
    let r2 = radius * radius;
    for cy in 0..cells_y {
        for cx in 0..cells_x {
            let draw = rng.next_f64();
            let x0 = cx * cell;
            let y0 = cy * cell;
            let x1 = (x0 + cell).min(spec.width);
            let y1 = (y0 + cell).min(spec.height);
            match spec.kind {
                PatternKind::RandomSquares => {
                    if draw < spec.fill {
                        for y in y0..y1 {
                            data[y * spec.width + x0..y * spec.width + x1].fill(0.0);
                        }
                    }
                }
                PatternKind::RandomDots => {
                    if draw < spec.fill {
                        let ccx = x0 as f64 + radius;
                        let ccy = y0 as f64 + radius;
                        for y in y0..y1 {
                            let dy = y as f64 + 0.5 - ccy;
                            for x in x0..x1 {
                                let dx = x as f64 + 0.5 - ccx;
                                if dx * dx + dy * dy <= r2 {
                                    data[y * spec.width + x] = 0.0;
                                }
                            }
                        }
                    }
                }
                PatternKind::RandomGray => {
                    let level = draw as f32;
                    for y in y0..y1 {
                        data[y * spec.width + x0..y * spec.width + x1].fill(level);
                    }
                }
            }
        }
    }
    GrayImage::new(spec.width, spec.height, data)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RaffelVerdict {
    Pass,
    Undersampled,
    Oversampled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RaffelCheck {
    pub verdict: RaffelVerdict,
    pub message: String,
}

impl RaffelCheck {
    pub fn passed(&self) -> bool {
        self.verdict == RaffelVerdict::Pass
    }
}

pub const RAFFEL_MIN_PX: f64 = 3.0;
pub const RAFFEL_MAX_PX: f64 = 5.0;

/// Passes when an imaged background feature spans 3 to 5 camera pixels (inclusive).
pub fn check_raffel(cell_px_as_imaged: f64) -> Result<RaffelCheck> {
    if !(cell_px_as_imaged > 0.0) || !cell_px_as_imaged.is_finite() {
        return Err(Error::param(
            "cell_px_as_imaged",
            format!("{cell_px_as_imaged} must be positive and finite"),
        ));
    }
    let (verdict, message) = if cell_px_as_imaged < RAFFEL_MIN_PX {
        (
            RaffelVerdict::Undersampled,
            format!("{cell_px_as_imaged:.2} px per feature is undersampled (need 3-5 px)"),
        )
    } else if cell_px_as_imaged > RAFFEL_MAX_PX {
        (
            RaffelVerdict::Oversampled,
            format!("{cell_px_as_imaged:.2} px per feature is oversampled (need 3-5 px)"),
        )
    } else {
        (
            RaffelVerdict::Pass,
            format!("{cell_px_as_imaged:.2} px per feature is within 3-5 px"),
        )
    };
    Ok(RaffelCheck { verdict, message })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn squares(fill: f64, seed: u64) -> PatternSpec {
        PatternSpec {
            fill,
            ..PatternSpec::new(PatternKind::RandomSquares, 64, 48, 4, seed)
        }
    }

    #[test]
    fn fill_extremes() {
        let white = generate_pattern(&squares(0.0, 1)).unwrap();
        assert!(white.data().iter().all(|&v| v == 1.0));
        let black = generate_pattern(&squares(1.0, 1)).unwrap();
        assert!(black.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dark_fraction_concentrates() {
        for seed in [0, 1, 42, 12345] {
            let spec = PatternSpec::new(PatternKind::RandomSquares, 100, 100, 1, seed);
            let img = generate_pattern(&spec).unwrap();
            let dark = img.data().iter().filter(|&&v| v == 0.0).count() as f64 / 1e4;
            assert!((0.45..=0.55).contains(&dark), "seed {seed}: {dark}");
        }
    }

    #[test]
    fn dark_cells_counted_per_cell() {
        // 100 x 100 cells of 3 px, independent count by cell corners
        let spec = PatternSpec::new(PatternKind::RandomSquares, 300, 300, 3, 77);
        let img = generate_pattern(&spec).unwrap();
        let mut dark = 0;
        for cy in 0..100 {
            for cx in 0..100 {
                let v = img.get(cx * 3, cy * 3);
                assert!((0..3).all(|d| img.get(cx * 3 + d, cy * 3 + 2 - d) == v));
                dark += (v == 0.0) as usize;
            }
        }
        assert!((4500..=5500).contains(&dark), "{dark}");
    }

    #[test]
    fn first_cell_uses_first_draw() {
        let spec = PatternSpec::new(PatternKind::RandomGray, 4, 4, 2, 0);
        let img = generate_pattern(&spec).unwrap();
        let mut r = SplitMix64::new(0);
        let first = r.next_f64() as f32;
        let second = r.next_f64() as f32;
        assert_eq!(img.get(1, 1), first);
        assert_eq!(img.get(2, 0), second);
    }

    #[test]
    fn dots_are_round() {
        let spec = PatternSpec {
            fill: 1.0,
            ..PatternSpec::new(PatternKind::RandomDots, 8, 8, 8, 3)
        };
        let img = generate_pattern(&spec).unwrap();
        assert_eq!(img.get(0, 0), 1.0);
        assert_eq!(img.get(4, 4), 0.0);
        assert_eq!(img.get(0, 4), 0.0);
        let dark = img.data().iter().filter(|&&v| v == 0.0).count();
        // pi * 4^2 ~ 50.3
        assert!((44..=56).contains(&dark), "{dark}");
    }

    #[test]
    fn partial_cells_and_errors() {
        let spec = PatternSpec::new(PatternKind::RandomSquares, 10, 7, 4, 5);
        assert_eq!(generate_pattern(&spec).unwrap().dims(), (10, 7));
        let tiny = PatternSpec::new(PatternKind::RandomSquares, 3, 7, 4, 5);
        assert!(generate_pattern(&tiny).is_err());
        assert!(generate_pattern(&squares(1.2, 0)).is_err());
    }

    #[test]
    fn raffel_examples() {
        assert!(check_raffel(4.0).unwrap().passed());
        assert_eq!(check_raffel(1.0).unwrap().verdict, RaffelVerdict::Undersampled);
        assert_eq!(check_raffel(8.0).unwrap().verdict, RaffelVerdict::Oversampled);
        assert!(check_raffel(3.0).unwrap().passed());
        assert!(check_raffel(5.0).unwrap().passed());
        assert!(check_raffel(0.0).is_err());
        assert!(check_raffel(-2.0).is_err());
    }

    proptest! {
        #[test]
        fn deterministic_and_binary(kind in 0usize..3, seed in any::<u64>(), cell in 1usize..6, fill in 0.0f64..=1.0) {
            let spec = PatternSpec { fill, ..PatternSpec::new(PatternKind::ALL[kind], 23, 17, cell, seed) };
            let a = generate_pattern(&spec).unwrap();
            let b = generate_pattern(&spec).unwrap();
            prop_assert_eq!(&a, &b);
            if spec.kind != PatternKind::RandomGray {
                prop_assert!(a.data().iter().all(|&v| v == 0.0 || v == 1.0));
            }
        }

        #[test]
        fn raffel_partition(x in 1e-3f64..20.0) {
            let pass = check_raffel(x).unwrap().passed();
            prop_assert_eq!(pass, (3.0..=5.0).contains(&x));
        }
    }
}
