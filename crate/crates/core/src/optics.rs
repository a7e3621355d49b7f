//! First-order BOS optics: index gradient -> deflection angle -> displacement at the
//! background and sensor planes, and back to density gradients via Gladstone-Dale.
//!
//! Everything here is strict SI. The camera-to-background distance is taken as
//! `d3 = d1 + d2`, and the thin-lens magnification for the background plane is
//! `f / (d3 - f)`. The y direction uses the same formulas as x.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Physical layout of a BOS setup. Distances in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BosGeometry {
    /// Camera to schlieren object.
    pub d1: f64,
    /// Schlieren object to background.
    pub d2: f64,
    /// Focal length.
    pub f: f64,
    /// Sensor pixel size.
    pub pixel_pitch: f64,
    /// Size of one background-image pixel on the background plane, m/px.
    pub bg_scale: f64,
}

/// Width of an A4 sheet, used for the default background scale.
pub const A4_WIDTH_M: f64 = 0.210;

impl BosGeometry {
    pub fn new(d1: f64, d2: f64, f: f64, pixel_pitch: f64, bg_scale: f64) -> Result<Self> {
        let g = Self {
            d1,
            d2,
            f,
            pixel_pitch,
            bg_scale,
        };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("d1", self.d1),
            ("d2", self.d2),
            ("f", self.f),
            ("pixel_pitch", self.pixel_pitch),
            ("bg_scale", self.bg_scale),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::param(name, format!("{v} must be positive")));
            }
        }
        if self.d3() <= self.f {
            return Err(Error::param(
                "f",
                format!(
                    "camera-background distance {} m must exceed focal length {} m",
                    self.d3(),
                    self.f
                ),
            ));
        }
        Ok(())
    }

    /// Camera to background.
    pub fn d3(&self) -> f64 {
        self.d1 + self.d2
    }

    /// Sensor size of an object at the background plane per unit object size.
    pub fn magnification(&self) -> f64 {
        self.f / (self.d3() - self.f)
    }

    /// Camera pixels spanned by `bg_px` background-image pixels.
    pub fn background_px_to_sensor_px(&self, bg_px: f64) -> f64 {
        bg_px * self.bg_scale * self.magnification() / self.pixel_pitch
    }

    /// Background scale that spreads `width_px` pixels over an A4 sheet width.
    pub fn a4_bg_scale(width_px: usize) -> f64 {
        A4_WIDTH_M / width_px as f64
    }

    /// The handheld-phone setup: d2 = 0.35 m, d1 + d2 = 0.82 m, f = 4.73 mm,
    /// 1.6 µm pixels.
    pub fn phone_setup(bg_scale: f64) -> Self {
        Self {
            d1: 0.82 - 0.35,
            d2: 0.35,
            f: 4.73e-3,
            pixel_pitch: 1.6e-6,
            bg_scale,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OpticsConstants {
    /// Ambient refractive index.
    pub n0: f64,
    /// Gladstone-Dale constant, m^3/kg.
    pub gladstone_dale: f64,
}

impl Default for OpticsConstants {
    fn default() -> Self {
        Self {
            n0: 1.000292,
            gladstone_dale: 2.23e-4,
        }
    }
}

impl OpticsConstants {
    pub fn validate(&self) -> Result<()> {
        if !(self.n0 > 1.0 - 1e-6) {
            return Err(Error::param("n0", format!("{} is below 1", self.n0)));
        }
        if !(self.gladstone_dale > 0.0) {
            return Err(Error::param("gladstone_dale", "must be positive"));
        }
        Ok(())
    }
}

/// Ray deflection angle in radians.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Deflection(pub f64);

impl Deflection {
    pub const SMALL_ANGLE_LIMIT: f64 = 1e-2;

    pub fn alpha(self) -> f64 {
        self.0
    }
}

/// `alpha = Z * dn/dx / n0` for an object of thickness `Z` along the line of sight.
pub fn deflection_from_index_gradient(
    dn_dx: f64,
    thickness_z: f64,
    consts: &OpticsConstants,
) -> Result<Deflection> {
    check_thickness(thickness_z)?;
    let alpha = thickness_z * dn_dx / consts.n0;
    if alpha.abs() > Deflection::SMALL_ANGLE_LIMIT {
        log::warn!("deflection {alpha:.3e} rad is outside the small-angle regime");
    }
    Ok(Deflection(alpha))
}

/// Displacement at the background plane, meters.
pub fn background_displacement(alpha: Deflection, geom: &BosGeometry) -> f64 {
    geom.d2 * alpha.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensorDisplacement {
    pub meters: f64,
    pub pixels: f64,
}

pub fn sensor_displacement(alpha: Deflection, geom: &BosGeometry) -> Result<SensorDisplacement> {
    check_real_image(geom)?;
    let meters = background_displacement(alpha, geom) * geom.magnification();
    Ok(SensorDisplacement {
        meters,
        pixels: meters / geom.pixel_pitch,
    })
}

/// `rho = (n - 1) / G`.
pub fn density_from_index(n: f64, consts: &OpticsConstants) -> Result<f64> {
    if !(n >= 1.0) {
        return Err(Error::param("n", format!("{n} < 1 is nonphysical here")));
    }
    Ok((n - 1.0) / consts.gladstone_dale)
}

/// `n = 1 + G rho`.
pub fn index_from_density(rho: f64, consts: &OpticsConstants) -> Result<f64> {
    if !(rho >= 0.0) {
        return Err(Error::param("rho", format!("{rho} is negative")));
    }
    Ok(1.0 + consts.gladstone_dale * rho)
}

/// Inverts the whole chain: sensor pixels -> density gradient (kg/m^4).
pub fn density_gradient_from_pixels(
    disp_px: f64,
    geom: &BosGeometry,
    consts: &OpticsConstants,
    thickness_z: f64,
) -> Result<f64> {
    check_thickness(thickness_z)?;
    check_real_image(geom)?;
    Ok(disp_px * geom.pixel_pitch * (geom.d3() - geom.f) * consts.n0
        / (geom.d2 * geom.f * thickness_z * consts.gladstone_dale))
}

/// Forward chain: density gradient (kg/m^4) -> sensor pixels.
pub fn pixels_from_density_gradient(
    drho_dx: f64,
    geom: &BosGeometry,
    consts: &OpticsConstants,
    thickness_z: f64,
) -> Result<f64> {
    let dn_dx = consts.gladstone_dale * drho_dx;
    let alpha = deflection_from_index_gradient(dn_dx, thickness_z, consts)?;
    Ok(sensor_displacement(alpha, geom)?.pixels)
}

fn check_thickness(z: f64) -> Result<()> {
    if z > 0.0 && z.is_finite() {
        Ok(())
    } else {
        Err(Error::param("thickness_z", format!("{z} must be positive")))
    }
}

fn check_real_image(geom: &BosGeometry) -> Result<()> {
    if geom.d3() > geom.f {
        Ok(())
    } else {
        Err(Error::param("f", "d3 <= f: no real image"))
    }
}

/// On-disk geometry description (JSON object).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryFile {
    pub d1_m: f64,
    pub d2_m: f64,
    pub f_m: f64,
    pub pixel_pitch_m: f64,
    pub bg_scale_m_per_px: f64,
    #[serde(default = "default_n0")]
    pub n0: f64,
    #[serde(default = "default_g")]
    pub gladstone_dale_m3_per_kg: f64,
    pub thickness_z_m: f64,
}

fn default_n0() -> f64 {
    OpticsConstants::default().n0
}

fn default_g() -> f64 {
    OpticsConstants::default().gladstone_dale
}

/// Geometry, constants and object thickness together.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Setup {
    pub geometry: BosGeometry,
    pub constants: OpticsConstants,
    pub thickness_z: f64,
}

impl GeometryFile {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidData(format!("geometry: {e}")))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| Error::corrupt(path, e.to_string()))
    }

    pub fn to_setup(&self) -> Result<Setup> {
        let geometry = BosGeometry::new(
            self.d1_m,
            self.d2_m,
            self.f_m,
            self.pixel_pitch_m,
            self.bg_scale_m_per_px,
        )?;
        let constants = OpticsConstants {
            n0: self.n0,
            gladstone_dale: self.gladstone_dale_m3_per_kg,
        };
        constants.validate()?;
        check_thickness(self.thickness_z_m)?;
        Ok(Setup {
            geometry,
            constants,
            thickness_z: self.thickness_z_m,
        })
    }

    pub fn from_setup(s: &Setup) -> Self {
        Self {
            d1_m: s.geometry.d1,
            d2_m: s.geometry.d2,
            f_m: s.geometry.f,
            pixel_pitch_m: s.geometry.pixel_pitch,
            bg_scale_m_per_px: s.geometry.bg_scale,
            n0: s.constants.n0,
            gladstone_dale_m3_per_kg: s.constants.gladstone_dale,
            thickness_z_m: s.thickness_z,
        }
    }
}
