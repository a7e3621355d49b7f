//! The synthetic plume experiment shared by `roundtrip` and the acceptance suite:
//! a printed pattern photographed by the phone geometry, a Gaussian plume in front
//! of it, and the sample/background regions used for SNR.

use anyhow::Result;
use serde::{Deserialize, Serialize};

use bos_core::optics::{BosGeometry, OpticsConstants};
use bos_core::patterns::{generate_pattern, PatternKind, PatternSpec};
use bos_core::simulate::{camera_image, delta_n_for_peak, simulate_pair, Background, RefractiveField, SimOptions, SimOutput};
use bos_core::{GrayImage, Mask};

/// Border excluded from background statistics, pixels.
pub const BORDER_PX: usize = 16;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub width: usize,
    pub height: usize,
    /// Plume Gaussian width, image pixels.
    pub plume_sigma_px: f64,
    /// Largest ground-truth displacement, image pixels.
    pub peak_px: f64,
    pub noise_sigma: f64,
    pub quantize: bool,
    /// Pattern cell on the print, print pixels.
    pub print_cell: usize,
    pub fill: f64,
    /// Sensor pixels per print pixel.
    pub magnification: f64,
    /// Line-of-sight plume thickness, meters.
    pub thickness_z: f64,
    pub seed: u64,
}

impl Protocol {
    /// 512x384 frames; an 8-px print cell imaged at 4 px lands mid Raffel window.
    pub fn desk(seed: u64) -> Self {
        Self {
            width: 512,
            height: 384,
            plume_sigma_px: 24.0,
            peak_px: 2.0,
            noise_sigma: 0.005,
            quantize: true,
            print_cell: 8,
            fill: 0.5,
            magnification: 0.5,
            thickness_z: 0.05,
            seed,
        }
    }

    pub fn imaged_cell_px(&self) -> f64 {
        self.print_cell as f64 * self.magnification
    }

    pub fn geometry(&self) -> BosGeometry {
        BosGeometry::phone_setup(BosGeometry::a4_bg_scale(self.width))
    }

    pub fn center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    pub fn plume(&self) -> RefractiveField {
        let (cx, cy) = self.center();
        let delta_n = delta_n_for_peak(
            self.peak_px,
            self.plume_sigma_px,
            self.thickness_z,
            &self.geometry(),
            &OpticsConstants::default(),
        );
        RefractiveField::GaussianPlume {
            cx,
            cy,
            sigma: self.plume_sigma_px,
            delta_n,
            thickness_z: self.thickness_z,
        }
    }

    pub fn print_spec(&self, kind: PatternKind) -> PatternSpec {
        let pw = (self.width as f64 / self.magnification).ceil() as usize + 1;
        let ph = (self.height as f64 / self.magnification).ceil() as usize + 1;
        PatternSpec {
            fill: self.fill,
            ..PatternSpec::new(kind, pw, ph, self.print_cell, self.seed)
        }
    }

    /// The print as seen by the camera with no plume.
    pub fn photographed(&self, kind: PatternKind) -> Result<(GrayImage, GrayImage)> {
        let print = generate_pattern(&self.print_spec(kind))?;
        let seen = camera_image(&print, self.magnification, self.width, self.height)?;
        Ok((print, seen))
    }

    pub fn simulate_with(&self, background: GrayImage) -> Result<SimOutput> {
        let options = SimOptions {
            noise_sigma: self.noise_sigma,
            quantize: self.quantize,
            noise_seed: self.seed,
        };
        Ok(simulate_pair(
            &Background::Image(background),
            &self.plume(),
            &self.geometry(),
            &OpticsConstants::default(),
            &options,
        )?)
    }

    pub fn simulate(&self, kind: PatternKind) -> Result<SimOutput> {
        let (_, seen) = self.photographed(kind)?;
        self.simulate_with(seen)
    }

    /// Annulus `0.5σ..1.5σ` around the plume axis, where the deflection peaks.
    pub fn sample_mask(&self) -> Mask {
        let (cx, cy) = self.center();
        let s = self.plume_sigma_px;
        Mask::annulus(self.width, self.height, cx, cy, 0.5 * s, 1.5 * s)
    }

    /// Beyond `5σ`, where the true displacement is below 1e-4 of its peak.
    pub fn background_mask(&self) -> Mask {
        let (cx, cy) = self.center();
        let outside = Mask::outside_circle(self.width, self.height, cx, cy, 5.0 * self.plume_sigma_px);
        outside
            .intersect(&Mask::interior(self.width, self.height, BORDER_PX))
            .expect("same dimensions")
    }
}

pub fn kind_label(kind: PatternKind) -> &'static str {
    match kind {
        PatternKind::RandomSquares => "squares",
        PatternKind::RandomDots => "dots",
        PatternKind::RandomGray => "gray",
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regions_are_disjoint_and_nonempty() {
        let p = Protocol::desk(0);
        let (s, b) = (p.sample_mask(), p.background_mask());
        assert!(s.count() > 0 && b.count() > 0);
        assert!(!s.overlaps(&b));
    }

    #[test]
    fn imaged_cell_meets_raffel() {
        let p = Protocol::desk(0);
        assert!(bos_core::patterns::check_raffel(p.imaged_cell_px()).unwrap().passed());
    }

    #[test]
    fn ground_truth_peak_matches() {
        let p = Protocol { width: 128, height: 96, plume_sigma_px: 10.0, ..Protocol::desk(1) };
        let sim = p.simulate(PatternKind::RandomSquares).unwrap();
        assert!((sim.metadata.peak_displacement_px - 2.0).abs() < 0.01);
        assert_eq!(sim.reference.dims(), (128, 96));
    }
}
