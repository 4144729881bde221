//! Analytic distribution-time estimates for the two-segment multiplexed repeater:
//! the Collins approximation (upper bound on time), the residual-entanglement
//! Markov chain (lower bound), and mode-efficiency formulas.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::SPEED_OF_LIGHT;

/// Collins approximation is flagged outside n·p ≤ this value.
pub const COLLINS_NP_LIMIT: f64 = 0.1;
/// Largest chain for which the dense cross-check is run.
pub const DENSE_CHECK_MAX_N: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RepeaterParams {
    pub eta_m: f64,
    pub eta_d: f64,
    /// Pair emission probability per pulse.
    pub rho: f64,
    pub rate_hz: f64,
    /// Dependent modes m.
    pub dependent_modes: usize,
    /// Independent modes n.
    pub independent_modes: usize,
    /// Memory lifetime; `f64::INFINITY` for ideal storage.
    pub memory_time_s: f64,
    /// Separation between the two servers.
    pub distance_km: f64,
    pub client_fiber_km: f64,
    pub fiber_loss_db_per_km: f64,
    pub signal_speed_m_s: f64,
    /// Free-space channel efficiency of one segment.
    pub eta_ch: f64,
    /// Cap the heralding probability by the client fiber link.
    pub fiber_constraint: bool,
}

impl RepeaterParams {
    pub fn table_defaults(distance_km: f64, eta_ch: f64) -> Self {
        Self {
            eta_m: 0.8,
            eta_d: 0.9,
            rho: 0.05,
            rate_hz: 1e6,
            dependent_modes: 1000,
            independent_modes: 10,
            memory_time_s: 1.0,
            distance_km,
            client_fiber_km: 25.0,
            fiber_loss_db_per_km: 0.18,
            signal_speed_m_s: SPEED_OF_LIGHT,
            eta_ch,
            fiber_constraint: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("eta_m", self.eta_m),
            ("eta_d", self.eta_d),
            ("rho", self.rho),
            ("eta_ch", self.eta_ch),
        ] {
            ensure((0.0..=1.0).contains(&v), || format!("{name} must lie in [0, 1], got {v}"))?;
        }
        ensure(self.dependent_modes >= 1 && self.independent_modes >= 1, || {
            "mode counts must be at least 1".into()
        })?;
        ensure(self.rate_hz > 0.0 && self.distance_km > 0.0, || {
            "rate and distance must be positive".into()
        })?;
        ensure(self.memory_time_s >= 0.0, || "memory time must be non-negative".into())?;
        ensure(self.signal_speed_m_s > 0.0, || "signal speed must be positive".into())?;
        ensure(self.client_fiber_km >= 0.0 && self.fiber_loss_db_per_km >= 0.0, || {
            "fiber length and loss must be non-negative".into()
        })
    }

    /// Central swap success probability P₁ = ½·η_M²·η_D².
    pub fn p1(&self) -> f64 {
        0.5 * self.eta_m * self.eta_m * self.eta_d * self.eta_d
    }

    /// One-way signalling time between the servers, L/c.
    pub fn light_time_s(&self) -> f64 {
        self.distance_km * 1e3 / self.signal_speed_m_s
    }

    /// Collins clock: the slower of the mode-cycling time n·m/R and L/c.
    pub fn clock_s(&self) -> f64 {
        let cycle = (self.independent_modes * self.dependent_modes) as f64 / self.rate_hz;
        cycle.max(self.light_time_s())
    }

    /// Pulses available per independent mode per light time exceed the mode budget.
    pub fn long_distance(&self) -> bool {
        self.rate_hz * self.light_time_s() >= (self.independent_modes * self.dependent_modes) as f64
    }

    /// Dependent modes usable by each of `free` independent modes in one light time.
    pub fn modes_per_free(&self, free: usize) -> f64 {
        let m = self.dependent_modes as f64;
        if free == 0 {
            return m;
        }
        (self.rate_hz * self.light_time_s() / free as f64).min(m)
    }

    /// Fiber-link transmittance of the client segment.
    pub fn fiber_transmittance(&self) -> f64 {
        10f64.powf(-self.fiber_loss_db_per_km * self.client_fiber_km / 10.0)
    }
}

/// Heralding probability of one independent mode backed by `modes` dependent modes.
///
/// `modes` may be fractional when the pulse budget is shared between modes.
pub fn pm(params: &RepeaterParams, modes: f64, with_fiber_constraint: bool) -> f64 {
    let half_d2 = 0.5 * params.eta_d * params.eta_d;
    let single = params.eta_ch * params.eta_m * params.rho * params.rho * half_d2 * half_d2;
    let free = -(modes * (-single).ln_1p()).exp_m1();
    if !with_fiber_constraint {
        return free;
    }
    let fiber_single = half_d2 * params.rho * params.rho * params.fiber_transmittance();
    let fiber = half_d2 * params.eta_m * -(modes * (-fiber_single).ln_1p()).exp_m1();
    free.min(fiber)
}

fn p_full(params: &RepeaterParams) -> f64 {
    pm(params, params.dependent_modes as f64, params.fiber_constraint)
}

/// Collins rate per clock, f_{τ,n}, with τ in whole clocks.
pub fn collins_rate(p: f64, n: usize, tau_clocks: u64, p1: f64) -> f64 {
    let q = 1.0 - p;
    let n = n as f64;
    let tau = tau_clocks as f64;
    let qp = |e: f64| q.powf(e);
    let qn = qp(n);
    let num = p1 * (1.0 - qn) * (1.0 + qn - 2.0 * qp(n * (tau + 1.0)));
    let collins_correction = qp(n - 1.0)
        * (1.0 - qn)
        * (1.0 - qp(2.0 * n - 1.0) + 2.0 * qp(3.0 * n - 2.0) * (1.0 - qp(tau * (2.0 * n - 1.0))))
        / ((1.0 - qp(2.0 * n - 1.0)) * (1.0 + qn - 2.0 * qp((tau + 1.0) * n)));
    let den = 1.0 + 2.0 * qn - qp(2.0 * n) - 4.0 * qp(n * (tau + 1.0)) + 2.0 * qp(n * (tau + 2.0)) + collins_correction;
    num / den
}

/// Memory lifetime in whole light times, floor(τ·c/L).
pub fn tau_clocks(memory_time_s: f64, light_time_s: f64) -> u64 {
    let t = (memory_time_s / light_time_s).floor();
    if t.is_finite() && t < u64::MAX as f64 {
        t as u64
    } else {
        u64::MAX / 4
    }
}

/// Upper-bound distribution time, clock / f_{τ,n}.
pub fn collins_time(params: &RepeaterParams) -> f64 {
    let clock = params.clock_s();
    let p = p_full(params);
    let tau = tau_clocks(params.memory_time_s, params.light_time_s());
    clock / collins_rate(p, params.independent_modes, tau, params.p1())
}

/// Column-stochastic transition matrix over the residual count ε = 0..=n.
///
/// `p_free(k)` is the per-mode heralding probability on a side with `k` free modes.
/// Columns are source states, rows destinations.
pub fn transition_matrix(n: usize, p_free: impl Fn(usize) -> f64) -> DMatrix<f64> {
    let mut t = DMatrix::zeros(n + 1, n + 1);
    let p0 = p_free(n);
    let q0n = (1.0 - p0).powi(n as i32);
    t[(0, 0)] = q0n * q0n;
    t[(1, 0)] = 1.0 - q0n * q0n;
    for e in 1..=n {
        let free = n - e;
        let pe = if free > 0 { p_free(free) } else { 0.0 };
        let stay = q0n * (1.0 - pe).powi(free as i32);
        let down_w = n as f64 * p0;
        let up_w = free as f64 * pe;
        let leave = 1.0 - stay;
        t[(e, e)] = stay;
        t[(e - 1, e)] = leave * down_w / (down_w + up_w);
        if e < n {
            t[(e + 1, e)] = leave * up_w / (down_w + up_w);
        }
    }
    t
}

/// Matrix with the same p on every mode.
pub fn uniform_transition_matrix(n: usize, p: f64) -> DMatrix<f64> {
    transition_matrix(n, |_| p)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StationaryDistribution {
    pub probs: Vec<f64>,
    /// ‖T·P − P‖∞
    pub residual: f64,
}

impl StationaryDistribution {
    pub fn n(&self) -> usize {
        self.probs.len() - 1
    }
}

/// Detailed-balance recurrence for the birth–death chain.
pub fn stationary_recurrence(t: &DMatrix<f64>) -> Vec<f64> {
    let n = t.nrows() - 1;
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    for e in 0..n {
        let up = t[(e + 1, e)];
        let down = t[(e, e + 1)];
        p[e + 1] = if down > 0.0 { p[e] * up / down } else { 0.0 };
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Stationary law straight from the birth and death rates, without the matrix.
///
/// Used for chains too large to store densely.
pub fn stationary_birth_death(n: usize, p_free: impl Fn(usize) -> f64) -> Vec<f64> {
    let p0 = p_free(n);
    let q0n = (1.0 - p0).powi(n as i32);
    let column = |e: usize| -> (f64, f64) {
        // (probability up from e, probability down from e)
        if e == 0 {
            return (1.0 - q0n * q0n, 0.0);
        }
        let free = n - e;
        let pe = if free > 0 { p_free(free) } else { 0.0 };
        let leave = 1.0 - q0n * (1.0 - pe).powi(free as i32);
        let down_w = n as f64 * p0;
        let up_w = free as f64 * pe;
        (leave * up_w / (down_w + up_w), leave * down_w / (down_w + up_w))
    };
    let mut p = vec![0.0; n + 1];
    p[0] = 1.0;
    let mut up = column(0).0;
    for e in 0..n {
        let (next_up, down) = column(e + 1);
        p[e + 1] = if down > 0.0 { p[e] * up / down } else { 0.0 };
        up = next_up;
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

/// Dense solve of (T − I)P = 0 with the normalisation replacing one row.
pub fn stationary_dense(t: &DMatrix<f64>) -> Result<Vec<f64>> {
    let n1 = t.nrows();
    let mut a = t - DMatrix::<f64>::identity(n1, n1);
    for j in 0..n1 {
        a[(n1 - 1, j)] = 1.0;
    }
    let mut b = DVector::zeros(n1);
    b[n1 - 1] = 1.0;
    let x = a.lu().solve(&b).ok_or(Error::NonConvergence {
        what: "stationary LU solve",
        residual: f64::INFINITY,
    })?;
    Ok(x.iter().copied().collect())
}

fn fixed_point_residual(t: &DMatrix<f64>, p: &[f64]) -> f64 {
    let v = DVector::from_column_slice(p);
    (t * &v - &v).amax()
}

/// Stationary distribution with the two solvers cross-checked.
pub fn stationary(t: &DMatrix<f64>) -> Result<StationaryDistribution> {
    ensure(t.is_square() && t.nrows() >= 2, || "transition matrix must be square, n >= 1".into())?;
    for j in 0..t.ncols() {
        let s: f64 = t.column(j).iter().sum();
        ensure((s - 1.0).abs() < 1e-12, || format!("column {j} sums to {s}, not 1"))?;
    }
    let probs = stationary_recurrence(t);
    if t.nrows() <= DENSE_CHECK_MAX_N + 1 {
        let dense = stationary_dense(t)?;
        let gap = probs
            .iter()
            .zip(&dense)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if gap > 1e-10 {
            return Err(Error::NonConvergence {
                what: "stationary solvers disagree",
                residual: gap,
            });
        }
    }
    let residual = fixed_point_residual(t, &probs);
    if residual > 1e-10 {
        return Err(Error::NonConvergence {
            what: "stationary fixed point",
            residual,
        });
    }
    Ok(StationaryDistribution { probs, residual })
}

/// Checked stationary law for small chains, matrix-free recurrence for large ones.
fn stationary_probs(n: usize, p_free: impl Fn(usize) -> f64) -> Result<Vec<f64>> {
    if n <= DENSE_CHECK_MAX_N {
        Ok(stationary(&transition_matrix(n, p_free))?.probs)
    } else {
        Ok(stationary_birth_death(n, p_free))
    }
}

/// Per-mode probability on a side with `free` free modes, with adaptive mode allocation.
pub fn p_allocated(params: &RepeaterParams, free: usize) -> f64 {
    pm(params, params.modes_per_free(free), params.fiber_constraint)
}

/// Lower-bound distribution time from the stationary residual distribution.
pub fn markov_time(params: &RepeaterParams) -> Result<f64> {
    let n = params.independent_modes;
    let lt = params.light_time_s();
    let p1 = params.p1();
    if params.long_distance() {
        let p = p_full(params);
        let probs = stationary_probs(n, |_| p)?;
        let s: f64 = probs
            .iter()
            .enumerate()
            .map(|(e, pe)| (2 * n - e) as f64 * pe)
            .sum();
        Ok(2.0 * lt / (p * p1) / s)
    } else {
        let probs = stationary_probs(n, |k| p_allocated(params, k))?;
        let p0 = p_allocated(params, n);
        let s: f64 = probs
            .iter()
            .enumerate()
            .take(n)
            .map(|(e, pe)| (n - e) as f64 * p_allocated(params, n - e) * pe)
            .sum();
        Ok(2.0 * lt / p1 / (n as f64 * p0 + s))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub time_upper_s: f64,
    pub time_lower_s: f64,
    pub clock_s: f64,
    pub p_m: f64,
    pub p1: f64,
    /// n·p, the small parameter of the Collins approximation.
    pub np: f64,
    pub collins_valid: bool,
}

pub fn rate_estimate(params: &RepeaterParams) -> Result<RateEstimate> {
    params.validate()?;
    let p = p_full(params);
    let np = params.independent_modes as f64 * p;
    Ok(RateEstimate {
        time_upper_s: collins_time(params),
        time_lower_s: markov_time(params)?,
        clock_s: params.clock_s(),
        p_m: p,
        p1: params.p1(),
        np,
        collins_valid: np <= COLLINS_NP_LIMIT,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeKind {
    Dependent,
    Independent,
}

/// Average mode efficiency ⟨f_κ⟩ with κ modes of the given kind.
pub fn mode_efficiency(kind: ModeKind, kappa: usize, p: f64) -> Result<f64> {
    ensure(kappa >= 1, || "kappa must be at least 1".into())?;
    ensure(p > 0.0 && p <= 1.0, || format!("p must lie in (0, 1], got {p}"))?;
    if kappa == 1 {
        return Ok((2.0 - p) / (3.0 - 2.0 * p));
    }
    match kind {
        ModeKind::Dependent => {
            let m = kappa as f64;
            let qm = (m * (-p).ln_1p()).exp();
            Ok((1.0 - qm * qm) / (m * p * (1.0 + 2.0 * qm)))
        }
        ModeKind::Independent => {
            let probs = stationary_probs(kappa, |_| p)?;
            Ok(probs
                .iter()
                .enumerate()
                .map(|(e, pe)| (2 * kappa - e) as f64 / (2 * kappa) as f64 * pe)
                .sum())
        }
    }
}

/// Swap rate per clock, κ·p·P₁·⟨f_κ⟩.
pub fn mode_rate(kind: ModeKind, kappa: usize, p: f64, p1: f64) -> Result<f64> {
    Ok(kappa as f64 * p * p1 * mode_efficiency(kind, kappa, p)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pm_limits() {
        let mut prm = RepeaterParams::table_defaults(3000.0, 0.0);
        assert_eq!(pm(&prm, 1000.0, false), 0.0);
        prm.eta_ch = 0.3;
        let single = 0.3 * 0.8 * 0.05f64.powi(2) * (0.5 * 0.81f64).powi(2);
        assert!((pm(&prm, 1.0, false) / single - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_state_matrix() {
        let p = 0.2;
        let t = uniform_transition_matrix(1, p);
        assert!((t[(0, 0)] - 0.64).abs() < 1e-15);
        assert!((t[(1, 0)] - 0.36).abs() < 1e-15);
        assert!((t[(0, 1)] - p).abs() < 1e-15);
        assert!((t[(1, 1)] - 0.8).abs() < 1e-15);
        let st = stationary(&t).unwrap();
        assert!((st.probs[1] / st.probs[0] - (2.0 - p)).abs() < 1e-12);
    }

    #[test]
    fn kappa_one_endpoints() {
        assert_eq!(mode_efficiency(ModeKind::Dependent, 1, 1.0).unwrap(), 1.0);
        assert!((mode_efficiency(ModeKind::Independent, 1, 1e-12).unwrap() - 2.0 / 3.0).abs() < 1e-11);
    }

    #[test]
    fn dependent_reduces_to_single_mode() {
        let p = 0.37;
        let f2 = mode_efficiency(ModeKind::Dependent, 2, p).unwrap();
        let q = 1.0 - p;
        let direct = (1.0 - q.powi(4)) / (2.0 * p * (1.0 + 2.0 * q * q));
        assert!((f2 - direct).abs() < 1e-15);
    }

    #[test]
    fn matrix_free_recurrence_agrees() {
        let pf = |k: usize| 1e-3 * (1.0 + k as f64 / 7.0);
        let dense = stationary(&transition_matrix(12, pf)).unwrap().probs;
        let direct = stationary_birth_death(12, pf);
        for (a, b) in dense.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn collins_saturates() {
        // with certain heralding only the swap can fail
        let f = collins_rate(1.0, 3, 100, 0.25);
        assert!((f - 0.25).abs() < 1e-15);
    }

    #[test]
    fn markov_continuous_at_regime_boundary() {
        let mut prm = RepeaterParams::table_defaults(3000.0, 0.3);
        // choose R so that R·L/c equals n·m exactly
        prm.rate_hz = (prm.independent_modes * prm.dependent_modes) as f64 / prm.light_time_s();
        let a = markov_time(&prm).unwrap();
        prm.rate_hz *= 1.0 - 1e-12;
        let b = markov_time(&prm).unwrap();
        assert!((a / b - 1.0).abs() < 1e-6);
    }
}
