//! Gaussian-beam propagation over one hop: diffraction, turbulent broadening
//! and wander, pointing drift, and aperture collection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atmosphere::{turbulence_moments, Cn2Profile, TurbulenceMoments};
use crate::error::{ensure, Error, Result};
use crate::geometry::{PathGeometry, PathKind};
use crate::numerics::Quadrature;
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamState {
    pub w0_m: f64,
    /// Phase-front curvature radius; `f64::INFINITY` for a collimated beam.
    pub f0_m: f64,
    pub wavelength_m: f64,
    pub k: f64,
    pub length_m: f64,
    pub theta0: f64,
    pub theta_bar0: f64,
    pub lambda0: f64,
    pub theta: f64,
    pub theta_bar: f64,
    pub lambda: f64,
    pub w_diff_m: f64,
}

pub fn derive_beam(w0_m: f64, f0_m: f64, length_m: f64, wavelength_m: f64) -> Result<BeamState> {
    ensure(w0_m > 0.0 && length_m > 0.0 && wavelength_m > 0.0, || {
        format!("need W0, L0, wavelength > 0, got {w0_m}, {length_m}, {wavelength_m}")
    })?;
    ensure(f0_m != 0.0 && !f0_m.is_nan(), || "curvature radius must be non-zero".into())?;
    let k = 2.0 * PI / wavelength_m;
    let theta0 = 1.0 - length_m / f0_m;
    let lambda0 = 2.0 * length_m / (k * w0_m * w0_m);
    let denom = theta0 * theta0 + lambda0 * lambda0;
    let theta = theta0 / denom;
    Ok(BeamState {
        w0_m,
        f0_m,
        wavelength_m,
        k,
        length_m,
        theta0,
        theta_bar0: 1.0 - theta0,
        lambda0,
        theta,
        theta_bar: 1.0 - theta,
        lambda: lambda0 / denom,
        w_diff_m: w0_m * denom.sqrt(),
    })
}

/// Distance from the transmitter to the beam waist for curvature radius `f0_m`.
pub fn waist_position(w0_m: f64, f0_m: f64, wavelength_m: f64) -> f64 {
    if f0_m.is_infinite() {
        return 0.0;
    }
    let r = f0_m * wavelength_m / (PI * w0_m * w0_m);
    f0_m / (1.0 + r * r)
}

/// Farthest reachable waist, πW0²/(2λ).
pub fn max_waist_distance(w0_m: f64, wavelength_m: f64) -> f64 {
    PI * w0_m * w0_m / (2.0 * wavelength_m)
}

/// The two curvature radii placing the waist at a given distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaistBranch {
    /// Smaller root: strongly converging, narrow waist.
    Tight,
    /// Larger root: gently converging, wide waist.
    Loose,
}

/// Curvature radius that puts the waist at `d_m`; `d_m = 0` maps to a collimated beam.
pub fn curvature_for_waist(w0_m: f64, d_m: f64, wavelength_m: f64, branch: WaistBranch) -> Result<f64> {
    let d_max = max_waist_distance(w0_m, wavelength_m);
    if d_m > d_max * (1.0 + 1e-12) {
        return Err(Error::UnreachableWaist {
            requested_m: d_m,
            max_m: d_max,
        });
    }
    ensure(d_m >= 0.0, || format!("waist distance must be >= 0, got {d_m}"))?;
    if d_m == 0.0 {
        return Ok(f64::INFINITY);
    }
    let a = wavelength_m / (PI * w0_m * w0_m);
    let disc = (1.0 - 4.0 * a * a * d_m * d_m).max(0.0).sqrt();
    Ok(match branch {
        // written to avoid cancellation for small a·d
        WaistBranch::Tight => 2.0 * d_m / (1.0 + disc),
        WaistBranch::Loose => (1.0 + disc) / (2.0 * a * a * d_m),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PointingConfig {
    /// Mean transverse platform drift speed.
    pub mean_wind_m_s: f64,
}

impl PointingConfig {
    pub fn none() -> Self {
        Self { mean_wind_m_s: 0.0 }
    }

    /// Drift accumulated over the beacon round-trip latency L0/c.
    pub fn drift_m(&self, length_m: f64) -> f64 {
        self.mean_wind_m_s * length_m / SPEED_OF_LIGHT
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpotSizes {
    pub broadening_t: f64,
    pub wander_m2: f64,
    pub w_lt_m: f64,
    pub w_st_m: f64,
    pub w_eff_m: f64,
}

/// Spot sizes, computing the turbulence moments on the way.
pub fn spot_sizes(beam: &BeamState, path: &PathGeometry, cn2: &Cn2Profile, pointing: &PointingConfig) -> Result<SpotSizes> {
    let m = turbulence_moments(path, cn2, beam.wavelength_m, beam.theta)?;
    spot_sizes_with(beam, path, cn2, &m, pointing)
}

/// Spot sizes from precomputed moments (only μ₂ and σ_R² are read).
pub fn spot_sizes_with(
    beam: &BeamState,
    path: &PathGeometry,
    cn2: &Cn2Profile,
    moments: &TurbulenceMoments,
    pointing: &PointingConfig,
) -> Result<SpotSizes> {
    let k = beam.k;
    let quad = Quadrature::default();
    let sr125 = moments.rytov.powf(6.0 / 5.0);
    let weight = |xi: f64| -> f64 {
        let a = beam.theta0 + beam.theta_bar0 * xi;
        let b = 1.63 * sr125 * beam.lambda0 * (1.0 - xi).powf(16.0 / 5.0);
        xi * xi * (a * a + b).powf(-1.0 / 6.0)
    };
    let (t, wander) = match path.kind {
        PathKind::Horizontal => {
            let t = 1.63 * sr125 * beam.lambda;
            let c = cn2.at(path.min_altitude_km);
            let wander = if c == 0.0 {
                0.0
            } else {
                let l = path.length_m();
                7.25 * c * l.powi(3) * beam.w0_m.powf(-1.0 / 3.0) * quad.integrate(weight, 0.0, 1.0)?
            };
            (t, wander)
        }
        kind => {
            let sec = 1.0 / path.zenith_rad.cos();
            let h0 = path.ground_altitude_km;
            let hh = path.platform_altitude_km;
            let span_m = (hh - h0) * 1e3;
            let t = 4.35
                * moments.mu2
                * beam.lambda.powf(5.0 / 6.0)
                * k.powf(7.0 / 6.0)
                * span_m.powf(5.0 / 6.0)
                * sec.powf(11.0 / 6.0);
            let xi = |h: f64| match kind {
                PathKind::Downlink => (h - h0) / (hh - h0),
                _ => 1.0 - (h - h0) / (hh - h0),
            };
            let mut pts = vec![h0];
            pts.extend([0.1, 0.3, 1.0, 3.0, 10.0].iter().map(|d| h0 + d).filter(|h| *h < hh));
            pts.push(hh);
            let int = quad.integrate_with_breaks(|h| cn2.at(h) * weight(xi(h).clamp(0.0, 1.0)), &pts)? * 1e3;
            let wander = 7.25 * span_m * span_m * sec.powi(3) * beam.w0_m.powf(-1.0 / 3.0) * int;
            (t, wander)
        }
    };
    let w_lt2 = beam.w_diff_m * beam.w_diff_m * (1.0 + t);
    let w_st2 = w_lt2 - wander;
    if w_st2 <= 0.0 {
        return Err(Error::NegativeShortTerm {
            wander_m2: wander,
            long_term_m2: w_lt2,
        });
    }
    let drift = pointing.drift_m(path.length_m());
    Ok(SpotSizes {
        broadening_t: t,
        wander_m2: wander,
        w_lt_m: w_lt2.sqrt(),
        w_st_m: w_st2.sqrt(),
        w_eff_m: (w_st2 + drift * drift).sqrt(),
    })
}

/// Fraction of a Gaussian spot of radius `w_m` falling on a circular aperture of diameter `d_rx_m`.
pub fn collection_efficiency(w_m: f64, d_rx_m: f64) -> f64 {
    -(-d_rx_m * d_rx_m / (2.0 * w_m * w_m)).exp_m1()
}
