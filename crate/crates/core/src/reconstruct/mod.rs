//! Displacement reconstruction from a reference/target pair: frame subtraction,
//! interrogation-window cross-correlation and dense optical flow.
//!
//! All methods report displacement in the global convention
//! `target(x) = reference(x - δ(x))`.

mod cfs;
mod correlation;
mod farneback;
mod horn_schunck;
mod postfilter;
mod pyramid;

pub use cfs::cfs;
pub use correlation::{cross_correlate, subpixel_offset, CorrConfig, CorrResult, Subpixel};
pub use farneback::{farneback_level, poly_expansion, PolyExpansion};
pub use horn_schunck::{hs_derivatives, hs_energy, horn_schunck_level, HsDerivatives};
pub use postfilter::{postfilter, PostFilter};
pub use pyramid::{build_pyramid, pyramid_flow, upsample_field};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imagecore::{DisplacementField, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowEngine {
    HornSchunck,
    Farneback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowConfig {
    pub engine: FlowEngine,
    /// Pyramid levels, >= 1.
    pub levels: usize,
    /// Inter-level size factor in (0, 1).
    pub scale: f64,
    /// Solver iterations per level.
    pub iterations: usize,
    /// Horn-Schunck smoothness weight, intensity units.
    pub alpha: f64,
    /// Farneback polynomial neighborhood half-size.
    pub poly_n: usize,
    pub poly_sigma: f64,
    /// Farneback averaging window, pixels.
    pub window: usize,
}

impl FlowConfig {
    pub fn horn_schunck() -> Self {
        Self {
            engine: FlowEngine::HornSchunck,
            levels: 3,
            scale: 0.5,
            iterations: 100,
            alpha: 0.5,
            poly_n: 5,
            poly_sigma: 1.1,
            window: 15,
        }
    }

    pub fn farneback() -> Self {
        Self {
            engine: FlowEngine::Farneback,
            iterations: 3,
            ..Self::horn_schunck()
        }
    }

    pub fn for_engine(engine: FlowEngine) -> Self {
        match engine {
            FlowEngine::HornSchunck => Self::horn_schunck(),
            FlowEngine::Farneback => Self::farneback(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.levels == 0 {
            return Err(Error::param("levels", "must be >= 1"));
        }
        if !(self.scale > 0.0 && self.scale < 1.0) {
            return Err(Error::param("scale", format!("{} not in (0, 1)", self.scale)));
        }
        if self.iterations == 0 {
            return Err(Error::param("iterations", "must be >= 1"));
        }
        if !(self.alpha > 0.0) {
            return Err(Error::param("alpha", "must be positive"));
        }
        if self.poly_n == 0 || !(self.poly_sigma > 0.0) {
            return Err(Error::param("poly_n/poly_sigma", "must be positive"));
        }
        if self.window == 0 {
            return Err(Error::param("window", "must be positive"));
        }
        Ok(())
    }
}

/// Dense optical flow with the engine chosen in `cfg`, coarse to fine.
pub fn optical_flow(
    reference: &GrayImage,
    target: &GrayImage,
    cfg: &FlowConfig,
) -> Result<DisplacementField> {
    pyramid_flow(cfg.engine, reference, target, cfg)
}

pub fn horn_schunck(
    reference: &GrayImage,
    target: &GrayImage,
    cfg: &FlowConfig,
) -> Result<DisplacementField> {
    pyramid_flow(FlowEngine::HornSchunck, reference, target, cfg)
}

pub fn farneback(
    reference: &GrayImage,
    target: &GrayImage,
    cfg: &FlowConfig,
) -> Result<DisplacementField> {
    pyramid_flow(FlowEngine::Farneback, reference, target, cfg)
}
