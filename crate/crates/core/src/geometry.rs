//! Hop geometry on a spherical Earth.
//!
//! Lengths are in kilometres here; optics code converts to metres on entry.

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EarthModel {
    pub radius_km: f64,
}

impl Default for EarthModel {
    fn default() -> Self {
        Self { radius_km: 6371.0 }
    }
}

impl EarthModel {
    pub fn new(radius_km: f64) -> Result<Self> {
        ensure(radius_km > 0.0 && radius_km.is_finite(), || {
            format!("earth radius must be positive, got {radius_km}")
        })?;
        Ok(Self { radius_km })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathKind {
    Uplink,
    Downlink,
    Horizontal,
}

impl PathKind {
    pub fn is_vertical(self) -> bool {
        !matches!(self, PathKind::Horizontal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathGeometry {
    pub kind: PathKind,
    pub length_km: f64,
    /// Zenith angle; zero for horizontal hops.
    pub zenith_rad: f64,
    pub platform_altitude_km: f64,
    pub ground_altitude_km: f64,
    /// Great-circle arc between the two platforms (horizontal only).
    pub arc_km: f64,
    pub subtend_rad: f64,
    /// Lowest altitude along the chord (horizontal only; equals `H` otherwise).
    pub min_altitude_km: f64,
    pub earth: EarthModel,
}

/// Uplink or downlink between a ground station at `h0` and a platform at `H`.
pub fn slant_path(kind: PathKind, platform_km: f64, ground_km: f64, zenith_rad: f64) -> Result<PathGeometry> {
    ensure(kind.is_vertical(), || "slant_path needs an uplink or downlink kind".into())?;
    ensure(ground_km >= 0.0 && platform_km > ground_km, || {
        format!("need H > h0 >= 0, got H={platform_km} km, h0={ground_km} km")
    })?;
    ensure((0.0..std::f64::consts::FRAC_PI_2).contains(&zenith_rad), || {
        format!("zenith angle {zenith_rad} rad outside [0, pi/2)")
    })?;
    Ok(PathGeometry {
        kind,
        length_km: (platform_km - ground_km) / zenith_rad.cos(),
        zenith_rad,
        platform_altitude_km: platform_km,
        ground_altitude_km: ground_km,
        arc_km: 0.0,
        subtend_rad: 0.0,
        min_altitude_km: ground_km,
        earth: EarthModel::default(),
    })
}

/// Platform-to-platform hop at equal altitude `H` separated by a ground arc `z0`.
pub fn horizontal_path(arc_km: f64, platform_km: f64, earth: EarthModel) -> Result<PathGeometry> {
    ensure(arc_km > 0.0 && platform_km > 0.0, || {
        format!("need z0 > 0 and H > 0, got z0={arc_km} km, H={platform_km} km")
    })?;
    let re = earth.radius_km;
    let rh = re + platform_km;
    let theta_e = arc_km / re;
    let length = 2.0 * rh * (0.5 * theta_e).sin();
    let h_min = rh * (0.5 * theta_e).cos() - re;
    if h_min < 0.0 || theta_e >= std::f64::consts::PI {
        return Err(Error::ObstructedPath {
            min_altitude_km: h_min,
            hop_index: None,
        });
    }
    Ok(PathGeometry {
        kind: PathKind::Horizontal,
        length_km: length,
        zenith_rad: 0.0,
        platform_altitude_km: platform_km,
        ground_altitude_km: platform_km,
        arc_km,
        subtend_rad: theta_e,
        min_altitude_km: h_min,
        earth,
    })
}

/// Longest arc for which the chord between two platforms at `H` clears the ground.
pub fn max_unobstructed_arc(platform_km: f64, earth: EarthModel) -> f64 {
    let re = earth.radius_km;
    2.0 * re * (re / (re + platform_km)).acos()
}

impl PathGeometry {
    pub fn with_earth(mut self, earth: EarthModel) -> Self {
        self.earth = earth;
        self
    }

    pub fn length_m(&self) -> f64 {
        self.length_km * 1e3
    }

    /// Altitude (km) at distance `x_km` from the transmitter.
    pub fn altitude_at(&self, x_km: f64) -> f64 {
        let c = self.zenith_rad.cos();
        match self.kind {
            PathKind::Uplink => self.ground_altitude_km + x_km * c,
            PathKind::Downlink => self.platform_altitude_km - x_km * c,
            PathKind::Horizontal => {
                let rh = self.earth.radius_km + self.platform_altitude_km;
                let cos_l = self.length_km / (2.0 * rh);
                let r2 = rh * rh + x_km * x_km - 2.0 * rh * x_km * cos_l;
                r2.max(0.0).sqrt() - self.earth.radius_km
            }
        }
    }

    /// Normalized distance from the receiver: 1 at the transmitter, 0 at the receiver.
    pub fn xi_at(&self, x_km: f64) -> f64 {
        1.0 - x_km / self.length_km
    }

    /// Vertical extent `H - h0` (km); zero for horizontal hops.
    pub fn vertical_extent_km(&self) -> f64 {
        if self.kind.is_vertical() {
            self.platform_altitude_km - self.ground_altitude_km
        } else {
            0.0
        }
    }
}
