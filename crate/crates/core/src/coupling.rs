//! Single-mode-fiber coupling: the fixed mode-matching factor, residual phase
//! aberrations after cascaded adaptive optics, and aperture-averaged scintillation.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::atmosphere::{Cn2Profile, TurbulenceMoments};
use crate::beam::BeamState;
use crate::error::{ensure, Result};
use crate::geometry::{PathGeometry, PathKind};

/// Best-case overlap between an unaberrated beam and the fiber mode.
pub const ETA0: f64 = 0.815;

// Beyond this per-mode argument the log term is replaced by its linearization;
// the neglected quadratic part is far below 1e-4 of the total.
const LINEAR_REGIME: f64 = 1e-7;
const MAX_ORDER: usize = 200_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CorrectionModel {
    /// Orders up to the cutoff are removed completely.
    IdealCutoff,
    /// Integrator loop with delay and hold, evaluated at a per-order frequency.
    TemporalResidual,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AoConfig {
    /// Highest corrected radial order; 0 disables correction.
    pub n_ao: usize,
    pub gain_ki: f64,
    pub delay_s: f64,
    pub integration_s: f64,
    pub wind_m_s: f64,
    pub model: CorrectionModel,
}

impl AoConfig {
    pub fn table() -> Self {
        Self {
            n_ao: 10,
            gain_ki: 1.0,
            delay_s: 2e-3,
            integration_s: 1e-3,
            wind_m_s: 10.0,
            model: CorrectionModel::TemporalResidual,
        }
    }

    pub fn disabled() -> Self {
        Self {
            n_ao: 0,
            ..Self::table()
        }
    }

    pub fn with_model(self, model: CorrectionModel) -> Self {
        Self { model, ..self }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.gain_ki > 0.0 && self.gain_ki < 2.0, || {
            format!("AO integral gain must lie in (0, 2), got {}", self.gain_ki)
        })?;
        ensure(
            self.delay_s >= 0.0 && self.integration_s >= 0.0 && self.wind_m_s >= 0.0,
            || "AO times and wind speed must be non-negative".into(),
        )
    }
}

/// Fraction γ² of order-`n` phase variance left after correction at an aperture `d_rx_m`.
pub fn mode_attenuation(ao: &AoConfig, n: usize, d_rx_m: f64) -> f64 {
    if n == 0 || n > ao.n_ao {
        return 1.0;
    }
    match ao.model {
        CorrectionModel::IdealCutoff => 0.0,
        CorrectionModel::TemporalResidual => {
            let f = 0.3 * (n as f64 + 1.0) * ao.wind_m_s / d_rx_m;
            rejection(ao, f).clamp(0.0, 1.0)
        }
    }
}

/// |1/(1+G(i2πf))|² with G(s) = K_I·e^{−sτ}·(1−e^{−sT})/(sT)².
fn rejection(ao: &AoConfig, f_hz: f64) -> f64 {
    if f_hz <= 0.0 || ao.integration_s <= 0.0 {
        return 0.0;
    }
    let w = 2.0 * PI * f_hz;
    let t = ao.integration_s;
    // 1 − e^{−iwT}
    let (hold_re, hold_im) = (1.0 - (w * t).cos(), (w * t).sin());
    // (iwT)² = −(wT)²
    let st2 = -(w * t) * (w * t);
    let (hold_re, hold_im) = (hold_re / st2, hold_im / st2);
    let (d_re, d_im) = ((w * ao.delay_s).cos(), -(w * ao.delay_s).sin());
    let g_re = ao.gain_ki * (hold_re * d_re - hold_im * d_im);
    let g_im = ao.gain_ki * (hold_re * d_im + hold_im * d_re);
    let den = (1.0 + g_re).powi(2) + g_im.powi(2);
    1.0 / den
}

/// Per-mode Zernike variance coefficient for radial order `n`, per unit (D/r0)^{5/3}.
pub fn zernike_coefficient(n: usize) -> f64 {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    let table = TABLE.get_or_init(|| (0..4096).map(zernike_coefficient_direct).collect());
    match table.get(n) {
        Some(v) if n > 0 => *v,
        _ => zernike_coefficient_direct(n),
    }
}

fn zernike_coefficient_direct(n: usize) -> f64 {
    if n == 0 {
        return f64::NAN;
    }
    let pre = 0.023 * libm::tgamma(14.0 / 3.0) * PI.powf(8.0 / 3.0)
        / (2f64.powf(5.0 / 3.0) * libm::tgamma(17.0 / 6.0).powi(2));
    let nf = n as f64;
    pre * (nf + 1.0) * (libm::lgamma(nf - 5.0 / 6.0) - libm::lgamma(nf + 23.0 / 6.0)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZernikeOrder {
    pub n: usize,
    /// ⟨b²⟩ for each azimuthal mode of this order, rad².
    pub variance_per_mode: f64,
    pub mode_count: usize,
    pub attenuation: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZernikeSpectrum {
    pub orders: Vec<ZernikeOrder>,
}

impl ZernikeSpectrum {
    pub fn total_variance(&self) -> f64 {
        self.orders
            .iter()
            .map(|o| o.mode_count as f64 * o.variance_per_mode)
            .sum()
    }

    pub fn residual_variance(&self) -> f64 {
        self.orders
            .iter()
            .map(|o| o.mode_count as f64 * o.variance_per_mode * o.attenuation)
            .sum()
    }

    pub fn with_attenuation(mut self, ao: &AoConfig, d_rx_m: f64) -> Self {
        for o in &mut self.orders {
            o.attenuation = mode_attenuation(ao, o.n, d_rx_m);
        }
        self
    }
}

/// Orders 1..=n_trunc (piston excluded), unattenuated.
pub fn zernike_variances(d_rx_m: f64, r0_m: f64, n_trunc: usize) -> ZernikeSpectrum {
    let scale = (d_rx_m / r0_m).powf(5.0 / 3.0);
    ZernikeSpectrum {
        orders: (1..=n_trunc)
            .map(|n| ZernikeOrder {
                n,
                variance_per_mode: zernike_coefficient(n) * scale,
                mode_count: n + 1,
                attenuation: 1.0,
            })
            .collect(),
    }
}

/// Fried parameter at the receiver of one hop.
pub fn fried_parameter(path: &PathGeometry, beam: &BeamState, cn2: &Cn2Profile, moments: &TurbulenceMoments) -> f64 {
    let k = beam.k;
    match path.kind {
        PathKind::Horizontal => {
            let c = cn2.at(path.min_altitude_km);
            if c <= 0.0 {
                return f64::INFINITY;
            }
            let th = beam.theta;
            let a = if th == 1.0 {
                8.0 / 3.0
            } else if th >= 0.0 {
                (1.0 - th.powf(8.0 / 3.0)) / (1.0 - th)
            } else {
                (1.0 + th.abs().powf(8.0 / 3.0)) / (1.0 - th)
            };
            2.1 * (8.0 / (3.0 * (a + 0.62 * beam.lambda.powf(11.0 / 6.0)))).powf(0.6)
                * (1.46 * c * k * k * path.length_m()).powf(-0.6)
        }
        _ => {
            let s = moments.mu1 + 0.622 * moments.mu2 * beam.lambda.powf(11.0 / 6.0);
            if s <= 0.0 {
                return f64::INFINITY;
            }
            2.1 * (path.zenith_rad.cos() / (1.46 * k * k * s)).powf(0.6)
        }
    }
}

/// Aberration source and corrector for one hop of a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HopAberration {
    pub d_rx_m: f64,
    pub r0_m: f64,
    pub ao: AoConfig,
}

/// ⟨η_AO⟩ for hops listed in propagation order, with a corrector at every receiver.
///
/// Hop j's aberration passes through the correctors of hop j and every later hop.
/// Orders are summed explicitly until the log terms become linear, after which
/// the uncorrected remainder is added in closed form.
pub fn ao_chain_coupling(hops: &[HopAberration]) -> f64 {
    ao_chain_log(hops).exp()
}

pub(crate) fn ao_chain_log(hops: &[HopAberration]) -> f64 {
    let scales: Vec<f64> = hops
        .iter()
        .map(|h| {
            if h.r0_m.is_infinite() {
                0.0
            } else {
                (h.d_rx_m / h.r0_m).powf(5.0 / 3.0)
            }
        })
        .collect();
    let max_scale = scales.iter().copied().fold(0.0, f64::max);
    if max_scale == 0.0 {
        return 0.0;
    }
    let total_scale: f64 = scales.iter().sum();
    let max_ao = hops.iter().map(|h| h.ao.n_ao).max().unwrap_or(0);
    let mut log_eta = 0.0;
    let mut cascade = vec![0.0; hops.len()];
    for n in 1..MAX_ORDER {
        let c = zernike_coefficient(n);
        if n > max_ao && 2.0 * c * max_scale < LINEAR_REGIME {
            // every remaining factor is uncorrected and ln(1+x) ≈ x
            return log_eta - total_scale * zernike_tail(n - 1);
        }
        let mut g = 1.0;
        for j in (0..hops.len()).rev() {
            g *= mode_attenuation(&hops[j].ao, n, hops[j].d_rx_m);
            cascade[j] = g;
        }
        let term: f64 = scales
            .iter()
            .zip(&cascade)
            .map(|(s, g)| (2.0 * g * c * s).ln_1p())
            .sum::<f64>();
        log_eta -= 0.5 * (n as f64 + 1.0) * term;
    }
    log_eta - total_scale * zernike_tail(MAX_ORDER - 1)
}

/// Σ_{k>n} (k+1)·c_k, the unit-strength variance beyond order `n`.
pub fn zernike_tail(n: usize) -> f64 {
    static TAIL: OnceLock<Vec<f64>> = OnceLock::new();
    let tail = TAIL.get_or_init(|| {
        let top = MAX_ORDER;
        // (k+1)c_k ~ A·k^{-8/3}; integrate the remainder past the table
        let last = (top as f64 + 1.0) * zernike_coefficient(top);
        let mut acc = last * top as f64 * 0.6;
        let mut out = vec![0.0; top + 1];
        out[top] = acc;
        for k in (1..=top).rev() {
            acc += (k as f64 + 1.0) * zernike_coefficient(k);
            out[k - 1] = acc;
        }
        out
    });
    tail[n.min(MAX_ORDER)]
}

/// Coupling factor of a single hop considered alone.
pub fn standalone_ao_coupling(hop: &HopAberration) -> f64 {
    ao_chain_coupling(std::slice::from_ref(hop))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScintillationResult {
    pub sigma_i2: f64,
    pub sigma_chi2: f64,
    pub eta_s: f64,
}

/// Aperture-averaged spherical-wave scintillation at a receiver of diameter `d_rx_m`.
pub fn scintillation(path: &PathGeometry, wavelength_m: f64, moments: &TurbulenceMoments, d_rx_m: f64) -> ScintillationResult {
    let k = 2.0 * PI / wavelength_m;
    let b2 = 0.4065 * moments.rytov;
    let b125 = b2.powf(6.0 / 5.0);
    let dg2 = 2.0 * d_rx_m * d_rx_m;
    let d2 = k * dg2 / (4.0 * path.length_m());
    let e = 0.49 * b2 / (1.0 + 0.18 * d2 + 0.56 * b125).powf(7.0 / 6.0)
        + 0.51 * b2 * (1.0 + 0.69 * b125).powf(-5.0 / 6.0) / (1.0 + 0.90 * d2 + 0.62 * d2 * b125);
    let sigma_i2 = e.exp_m1();
    ScintillationResult {
        sigma_i2,
        sigma_chi2: 0.25 * sigma_i2.ln_1p(),
        eta_s: (1.0 + sigma_i2).powf(-0.25),
    }
}

pub fn chain_scintillation(hops: &[ScintillationResult]) -> f64 {
    hops.iter().map(|h| h.eta_s).product()
}
