//! Refractive-index structure profiles, extinction profiles, and the path
//! integrals that turn them into transmittance and turbulence moments.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::geometry::{PathGeometry, PathKind};
use crate::numerics::Quadrature;

/// Environment variable naming a directory that overrides bundled profile tables.
pub const DATA_DIR_ENV: &str = "SKYRELAY_DATA_DIR";
pub const BUNDLED_ATTENUATION_FILE: &str = "attenuation_1537nm.txt";
const BUNDLED_ATTENUATION: &str = include_str!("../data/attenuation_1537nm.txt");

/// Two-column altitude table with piecewise log-linear interpolation.
///
/// Below the first node the first value is held; above the last node the
/// profile is zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileTable {
    altitudes_km: Vec<f64>,
    values: Vec<f64>,
}

impl ProfileTable {
    pub fn new(altitudes_km: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        ensure(altitudes_km.len() == values.len(), || {
            "altitude and value columns differ in length".into()
        })?;
        ensure(!altitudes_km.is_empty(), || "profile table is empty".into())?;
        for w in altitudes_km.windows(2) {
            ensure(w[1] > w[0], || {
                format!("altitudes must be strictly increasing ({} then {})", w[0], w[1])
            })?;
        }
        for (h, v) in altitudes_km.iter().zip(&values) {
            ensure(h.is_finite() && v.is_finite() && *v >= 0.0, || {
                format!("bad table entry at {h} km: {v}")
            })?;
        }
        Ok(Self { altitudes_km, values })
    }

    /// Parse whitespace-separated `altitude_km value` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut hs = Vec::new();
        let mut vs = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut cols = line.split_whitespace();
            let parse = |s: Option<&str>| -> Result<f64> {
                s.and_then(|t| t.parse::<f64>().ok()).ok_or_else(|| {
                    Error::InvalidArgument(format!("line {}: expected two numbers, got {raw:?}", lineno + 1))
                })
            };
            let h = parse(cols.next())?;
            let v = parse(cols.next())?;
            if cols.next().is_some() {
                return Err(Error::InvalidArgument(format!(
                    "line {}: more than two columns",
                    lineno + 1
                )));
            }
            hs.push(h);
            vs.push(v);
        }
        Self::new(hs, vs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidArgument(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn altitudes_km(&self) -> &[f64] {
        &self.altitudes_km
    }

    pub fn eval(&self, h_km: f64) -> f64 {
        let hs = &self.altitudes_km;
        if h_km <= hs[0] {
            return self.values[0];
        }
        if h_km > hs[hs.len() - 1] {
            return 0.0;
        }
        let i = hs.partition_point(|&x| x < h_km).max(1);
        let (h0, h1) = (hs[i - 1], hs[i]);
        let (v0, v1) = (self.values[i - 1], self.values[i]);
        let t = (h_km - h0) / (h1 - h0);
        if v0 > 0.0 && v1 > 0.0 {
            (v0.ln() + t * (v1.ln() - v0.ln())).exp()
        } else {
            v0 + t * (v1 - v0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Cn2Profile {
    /// Hufnagel–Valley model; `wind_rms` in m/s, `ground` in m^(-2/3).
    HufnagelValley { wind_rms: f64, ground: f64 },
    Tabulated(ProfileTable),
    Constant(f64),
}

impl Cn2Profile {
    /// The 5/7 parameter set (21 m/s, 1.7e-14).
    pub fn hv57() -> Self {
        Cn2Profile::HufnagelValley {
            wind_rms: 21.0,
            ground: 1.7e-14,
        }
    }

    /// Cn² in m^(-2/3) at altitude `h_km`.
    pub fn at(&self, h_km: f64) -> f64 {
        match self {
            Cn2Profile::HufnagelValley { wind_rms, ground } => {
                let h = h_km.max(0.0) * 1e3;
                0.00594 * (wind_rms / 27.0).powi(2) * (1e-5 * h).powi(10) * (-h / 1000.0).exp()
                    + 2.7e-16 * (-h / 1500.0).exp()
                    + ground * (-h / 100.0).exp()
            }
            Cn2Profile::Tabulated(t) => t.eval(h_km),
            Cn2Profile::Constant(v) => *v,
        }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            Cn2Profile::Constant(v) => *v == 0.0,
            Cn2Profile::Tabulated(t) => t.values.iter().all(|v| *v == 0.0),
            Cn2Profile::HufnagelValley { .. } => false,
        }
    }

    /// Multiply the whole profile by a constant factor.
    pub fn scaled(&self, factor: f64) -> Self {
        match self {
            Cn2Profile::Constant(v) => Cn2Profile::Constant(v * factor),
            Cn2Profile::Tabulated(t) => Cn2Profile::Tabulated(ProfileTable {
                altitudes_km: t.altitudes_km.clone(),
                values: t.values.iter().map(|v| v * factor).collect(),
            }),
            hv @ Cn2Profile::HufnagelValley { .. } => {
                let nodes: Vec<f64> = (0..=400).map(|i| i as f64 * 0.125).collect();
                let vals = nodes.iter().map(|h| hv.at(*h) * factor).collect();
                Cn2Profile::Tabulated(ProfileTable {
                    altitudes_km: nodes,
                    values: vals,
                })
            }
        }
    }

    fn breakpoints_km(&self) -> Vec<f64> {
        match self {
            Cn2Profile::HufnagelValley { .. } => vec![0.1, 0.3, 1.0, 3.0, 6.0, 10.0, 15.0, 20.0],
            Cn2Profile::Tabulated(t) => t.altitudes_km.clone(),
            Cn2Profile::Constant(_) => Vec::new(),
        }
    }
}

/// Extinction coefficient α(h) in km⁻¹.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum AttenuationProfile {
    Tabulated { table: ProfileTable, wavelength_nm: f64 },
    ExponentialScaleHeight { alpha0_per_km: f64, scale_height_km: f64 },
    Vacuum,
}

impl AttenuationProfile {
    /// The 1537 nm clear-air table, taken from `$SKYRELAY_DATA_DIR` when that
    /// directory holds a replacement file.
    pub fn bundled_1537nm() -> Result<Self> {
        let table = match data_dir() {
            Some(dir) if dir.join(BUNDLED_ATTENUATION_FILE).is_file() => {
                ProfileTable::load(&dir.join(BUNDLED_ATTENUATION_FILE))?
            }
            _ => ProfileTable::parse(BUNDLED_ATTENUATION)?,
        };
        Ok(AttenuationProfile::Tabulated {
            table,
            wavelength_nm: 1537.0,
        })
    }

    /// The compiled-in table, ignoring any override directory.
    pub fn embedded_1537nm() -> Self {
        AttenuationProfile::Tabulated {
            table: ProfileTable::parse(BUNDLED_ATTENUATION).expect("bundled table is well formed"),
            wavelength_nm: 1537.0,
        }
    }

    pub fn alpha_at(&self, h_km: f64) -> f64 {
        match self {
            AttenuationProfile::Tabulated { table, .. } => table.eval(h_km),
            AttenuationProfile::ExponentialScaleHeight {
                alpha0_per_km,
                scale_height_km,
            } => alpha0_per_km * (-h_km.max(0.0) / scale_height_km).exp(),
            AttenuationProfile::Vacuum => 0.0,
        }
    }

    fn breakpoints_km(&self) -> Vec<f64> {
        match self {
            AttenuationProfile::Tabulated { table, .. } => table.altitudes_km.clone(),
            _ => Vec::new(),
        }
    }
}

pub fn data_dir() -> Option<PathBuf> {
    std::env::var_os(DATA_DIR_ENV).map(PathBuf::from)
}

/// Positions along the path (km from the transmitter) where it crosses the given altitudes.
fn crossings(path: &PathGeometry, altitudes_km: &[f64], x0: f64, x1: f64) -> Vec<f64> {
    let mut pts = vec![x0];
    if path.kind.is_vertical() {
        let c = path.zenith_rad.cos();
        for &h in altitudes_km {
            let x = match path.kind {
                PathKind::Uplink => (h - path.ground_altitude_km) / c,
                _ => (path.platform_altitude_km - h) / c,
            };
            if x > x0 && x < x1 {
                pts.push(x);
            }
        }
    }
    pts.sort_by(f64::total_cmp);
    pts.push(x1);
    pts
}

/// η_atm = exp(−∫α(h(x))dx) over the whole hop.
pub fn atmospheric_transmittance(path: &PathGeometry, att: &AttenuationProfile) -> Result<f64> {
    atmospheric_transmittance_between(path, att, 0.0, path.length_km)
}

/// Transmittance over the sub-interval `[x0_km, x1_km]` of the hop.
pub fn atmospheric_transmittance_between(
    path: &PathGeometry,
    att: &AttenuationProfile,
    x0_km: f64,
    x1_km: f64,
) -> Result<f64> {
    atmospheric_transmittance_with(path, att, x0_km, x1_km, &Quadrature::default())
}

pub fn atmospheric_transmittance_with(
    path: &PathGeometry,
    att: &AttenuationProfile,
    x0_km: f64,
    x1_km: f64,
    quad: &Quadrature,
) -> Result<f64> {
    if matches!(att, AttenuationProfile::Vacuum) {
        return Ok(1.0);
    }
    let pts = crossings(path, &att.breakpoints_km(), x0_km, x1_km);
    let tau = quad.integrate_with_breaks(|x| att.alpha_at(path.altitude_at(x)), &pts)?;
    Ok((-tau).exp())
}

/// Path-integrated turbulence strength for one hop.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TurbulenceMoments {
    /// ∫Cn²[Θ+Θ̄(1−ξ)]^{5/3}, m^(1/3).
    pub mu1: f64,
    /// ∫Cn²ξ^{5/3}, m^(1/3).
    pub mu2: f64,
    pub rytov: f64,
}

/// μ₂ and σ_R², which do not depend on the beam.
pub fn path_moments(path: &PathGeometry, cn2: &Cn2Profile, wavelength_m: f64) -> Result<TurbulenceMoments> {
    moments_impl(path, cn2, wavelength_m, None)
}

/// All three moments; `theta` is the receiver-plane curvature parameter Θ.
pub fn turbulence_moments(
    path: &PathGeometry,
    cn2: &Cn2Profile,
    wavelength_m: f64,
    theta: f64,
) -> Result<TurbulenceMoments> {
    moments_impl(path, cn2, wavelength_m, Some(theta))
}

fn moments_impl(
    path: &PathGeometry,
    cn2: &Cn2Profile,
    wavelength_m: f64,
    theta: Option<f64>,
) -> Result<TurbulenceMoments> {
    let k = 2.0 * std::f64::consts::PI / wavelength_m;
    let quad = Quadrature::default();
    let w1 = |xi: f64| -> f64 {
        let th = theta.unwrap_or(1.0);
        (th + (1.0 - th) * (1.0 - xi)).abs().powf(5.0 / 3.0)
    };
    match path.kind {
        PathKind::Horizontal => {
            let c = cn2.at(path.min_altitude_km);
            let l = path.length_m();
            let mu2 = c * l * 3.0 / 8.0;
            let mu1 = match theta {
                Some(_) => c * l * quad.integrate(w1, 0.0, 1.0)?,
                None => 0.0,
            };
            let rytov = 1.23 * c * k.powf(7.0 / 6.0) * l.powf(11.0 / 6.0);
            Ok(TurbulenceMoments { mu1, mu2, rytov })
        }
        kind => {
            let h0 = path.ground_altitude_km;
            let hh = path.platform_altitude_km;
            let span_m = (hh - h0) * 1e3;
            let xi = |h_km: f64| match kind {
                PathKind::Downlink => (h_km - h0) / (hh - h0),
                _ => 1.0 - (h_km - h0) / (hh - h0),
            };
            let mut pts = vec![h0];
            pts.extend(cn2.breakpoints_km().into_iter().filter(|h| *h > h0 && *h < hh));
            pts.push(hh);
            // integrate over h in km, then convert dh to metres
            let int = |w: &dyn Fn(f64) -> f64| -> Result<f64> {
                Ok(1e3 * quad.integrate_with_breaks(|h| cn2.at(h) * w(xi(h).clamp(0.0, 1.0)), &pts)?)
            };
            let mu2 = int(&|x: f64| x.powf(5.0 / 3.0))?;
            let i56 = int(&|x: f64| x.powf(5.0 / 6.0))?;
            let mu1 = match theta {
                Some(_) => int(&w1)?,
                None => 0.0,
            };
            let sec = 1.0 / path.zenith_rad.cos();
            let rytov = 2.25 * span_m.powf(5.0 / 6.0) * k.powf(7.0 / 6.0) * sec.powf(11.0 / 6.0) * i56;
            Ok(TurbulenceMoments { mu1, mu2, rytov })
        }
    }
}
