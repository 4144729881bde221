use skyrelay_core::relay_chain::{chain_budget, jitter_monte_carlo, optimize_relay_count, ChannelBudget, WaistPolicy};
use skyrelay_core::repeater_rates::{rate_estimate, RepeaterParams};
use skyrelay_core::repeater_sim::{simulate as run_sim, SimResult};
use skyrelay_core::Error;

use crate::config::{ChannelSection, RepeaterSection, ScenarioConfig, SimulationSection, SweepSection};
use crate::table::{Cell, Table};
use crate::CliError;

const CHANNEL_VARIABLES: &[&str] = &[
    "distance_km",
    "relay_count",
    "zenith_deg",
    "wavelength_nm",
    "cn2_scale",
    "drift_m_s",
    "ao_orders",
    "ao_delay_s",
];

const REPEATER_VARIABLES: &[&str] = &[
    "distance_km",
    "eta_m",
    "eta_d",
    "rho",
    "rate_hz",
    "dependent_modes",
    "independent_modes",
    "memory_time_s",
    "client_fiber_km",
    "eta_ch_db",
];

const JITTER_VARIABLES: &[&str] = &["distance_km", "relay_count", "endpoint_range_km", "relay_fraction"];

/// Geometry and waist failures become missing points instead of aborting a sweep.
pub fn soft<T>(r: Result<T, Error>) -> Result<Option<T>, CliError> {
    match r {
        Ok(v) => Ok(Some(v)),
        Err(
            Error::ObstructedPath { .. }
            | Error::UnreachableWaist { .. }
            | Error::EmptyFeasibleSet
            | Error::NegativeShortTerm { .. },
        ) => Ok(None),
        Err(e) => Err(e.into()),
    }
}

fn count(x: f64, key: &str) -> Result<usize, CliError> {
    if x >= 0.0 && x.fract() == 0.0 {
        Ok(x as usize)
    } else {
        Err(CliError::Config(format!("sweep.values: {key} needs whole numbers, got {x}")))
    }
}

fn sweep_points(sweep: Option<&SweepSection>, allowed: &[&str]) -> Result<Vec<Option<f64>>, CliError> {
    match sweep {
        None => Ok(vec![None]),
        Some(s) => {
            s.check_variable(allowed)?;
            Ok(s.points()?.into_iter().map(Some).collect())
        }
    }
}

fn channel_at(base: &ChannelSection, var: &str, x: f64) -> Result<ChannelSection, CliError> {
    let mut c = base.clone();
    match var {
        "distance_km" => c.distance_km = Some(x),
        "relay_count" => c.relay_count = Some(count(x, var)?),
        "zenith_deg" => c.zenith_deg = Some(x),
        "wavelength_nm" => c.wavelength_nm = Some(x),
        "cn2_scale" => c.cn2_scale = Some(x),
        "drift_m_s" => c.drift_m_s = Some(x),
        "ao_orders" => c.ao_orders = Some(count(x, var)?),
        "ao_delay_s" => c.ao_delay_s = Some(x),
        _ => unreachable!("checked against CHANNEL_VARIABLES"),
    }
    Ok(c)
}

fn repeater_at(base: &RepeaterSection, var: &str, x: f64) -> Result<RepeaterSection, CliError> {
    let mut r = base.clone();
    match var {
        "distance_km" => r.distance_km = Some(x),
        "eta_m" => r.eta_m = Some(x),
        "eta_d" => r.eta_d = Some(x),
        "rho" => r.rho = Some(x),
        "rate_hz" => r.rate_hz = Some(x),
        "dependent_modes" => r.dependent_modes = Some(count(x, var)?),
        "independent_modes" => r.independent_modes = Some(count(x, var)?),
        "memory_time_s" => {
            r.memory_time_s = Some(x);
            r.unlimited_memory = None;
        }
        "client_fiber_km" => r.client_fiber_km = Some(x),
        "eta_ch_db" => {
            r.eta_ch = None;
            r.eta_ch_db = Some(x);
        }
        _ => unreachable!("checked against REPEATER_VARIABLES"),
    }
    Ok(r)
}

/// Best budget for one channel section at one distance.
pub fn budget(ch: &ChannelSection, distance_km: f64, policy: WaistPolicy) -> Result<Option<ChannelBudget>, CliError> {
    let cfg = ch.chain(distance_km, policy)?;
    if ch.relay_count.is_some() {
        soft(chain_budget(&cfg))
    } else {
        soft(optimize_relay_count(&cfg, ch.relay_range()).map(|s| s.best))
    }
}

/// Per-segment efficiency for a two-segment repeater spanning `distance_km`.
pub fn segment_eta(ch: &ChannelSection, distance_km: f64) -> Result<f64, CliError> {
    let policy = ch.policies()[0];
    Ok(budget(ch, distance_km / 2.0, policy)?.map_or(f64::NAN, |b| b.total_linear))
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn policy_name(p: WaistPolicy) -> &'static str {
    match p {
        WaistPolicy::Optimized => "optimized",
        WaistPolicy::MidPath => "mid_path",
        WaistPolicy::Transmitter => "transmitter",
    }
}

pub fn channel(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let mut t = Table::new(&[
        "distance_km",
        "relay_count",
        "policy",
        "total_db",
        "total_linear",
        "smf_db",
        "ao_db",
        "scintillation_db",
        "optics_db",
        "atmosphere_db",
        "collection_db",
        "spacing_km",
    ]);
    for x in sweep_points(cfg.sweep.as_ref(), CHANNEL_VARIABLES)? {
        let ch = match (x, &cfg.sweep) {
            (Some(x), Some(s)) => channel_at(&cfg.channel, &s.variable, x)?,
            _ => cfg.channel.clone(),
        };
        let d = ch.distance();
        for policy in ch.policies() {
            let row: Vec<Cell> = match budget(&ch, d, policy)? {
                Some(b) => vec![
                    d.into(),
                    b.relay_count.into(),
                    policy_name(policy).into(),
                    b.total_db.into(),
                    b.total_linear.into(),
                    db(b.smf()).into(),
                    db(b.ao).into(),
                    db(b.scintillation).into(),
                    b.optics_db().into(),
                    b.atmosphere_db().into(),
                    b.collection_db().into(),
                    (d / (b.relay_count - 1) as f64).into(),
                ],
                None => {
                    let n = ch.relay_count.map_or(f64::NAN, |n| n as f64);
                    let mut r: Vec<Cell> = vec![d.into(), n.into(), policy_name(policy).into()];
                    r.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(9));
                    r
                }
            };
            t.push(row);
        }
    }
    Ok(t)
}

/// Repeater parameters with the channel efficiency resolved.
pub fn resolve_params(cfg: &ScenarioConfig, rep: &RepeaterSection) -> Result<RepeaterParams, CliError> {
    let d = rep.distance();
    let eta = match rep.fixed_eta()? {
        Some(e) => e,
        None => segment_eta(&cfg.channel, d)?,
    };
    if eta.is_nan() {
        // keep the row with a missing value; validation would reject NaN
        let mut p = rep.params(d, 0.5)?;
        p.eta_ch = f64::NAN;
        return Ok(p);
    }
    rep.params(d, eta)
}

pub fn run_mc(sim: &SimulationSection, params: RepeaterParams) -> Result<SimResult, CliError> {
    Ok(run_sim(&sim.sim(params)?)?)
}

pub fn rate(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let base = cfg.repeater.clone().unwrap_or_default();
    let var = cfg.sweep.as_ref().map_or("value", |s| s.variable.as_str());
    let mut t = Table::new(&[
        "distance_km",
        var,
        "eta_ch_db",
        "p_m",
        "np",
        "time_upper_s",
        "time_lower_s",
        "time_mc_s",
        "mc_stderr_s",
    ]);
    let mut eta_cache: Vec<(f64, f64)> = Vec::new();
    for x in sweep_points(cfg.sweep.as_ref(), REPEATER_VARIABLES)? {
        let rep = match (x, &cfg.sweep) {
            (Some(x), Some(s)) => repeater_at(&base, &s.variable, x)?,
            _ => base.clone(),
        };
        let d = rep.distance();
        let eta = match rep.fixed_eta()? {
            Some(e) => e,
            None => match eta_cache.iter().find(|(k, _)| *k == d) {
                Some((_, e)) => *e,
                None => {
                    let e = segment_eta(&cfg.channel, d)?;
                    eta_cache.push((d, e));
                    e
                }
            },
        };
        let mut row: Vec<Cell> = vec![d.into(), x.unwrap_or(f64::NAN).into(), db(eta).into()];
        if eta.is_nan() {
            row.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(6));
            t.push(row);
            continue;
        }
        let params = rep.params(d, eta)?;
        let est = rate_estimate(&params)?;
        let (mc, se) = match cfg.simulation.filter(|s| s.trials.is_some()) {
            Some(sim) => {
                let r = run_mc(&sim, params)?;
                (r.mean_time_s, r.std_err_s)
            }
            None => (f64::NAN, f64::NAN),
        };
        row.extend([est.p_m, est.np, est.time_upper_s, est.time_lower_s, mc, se].map(Cell::Num));
        t.push(row);
    }
    Ok(t)
}

pub fn simulate(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let rep = cfg.repeater.clone().unwrap_or_default();
    let sim = cfg.simulation.unwrap_or_default();
    let params = resolve_params(cfg, &rep)?;
    let mut t = Table::new(&[
        "distance_km",
        "eta_ch_db",
        "trials",
        "mean_time_s",
        "std_err_s",
        "success_count",
        "expiry_events",
        "swap_attempts",
        "clocks_simulated",
    ]);
    if params.eta_ch.is_nan() {
        let mut row: Vec<Cell> = vec![params.distance_km.into(), f64::NAN.into()];
        row.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(7));
        t.push(row);
        return Ok(t);
    }
    let sc = sim.sim(params)?;
    let r = run_sim(&sc)?;
    t.push(vec![
        params.distance_km.into(),
        db(params.eta_ch).into(),
        sc.trials.into(),
        r.mean_time_s.into(),
        r.std_err_s.into(),
        r.success_count.into(),
        r.expiry_events.into(),
        r.swap_attempts.into(),
        r.clocks_simulated.into(),
    ]);
    Ok(t)
}

pub fn jitter(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let base = cfg.jitter.unwrap_or_default();
    let mut t = Table::new(&[
        "distance_km",
        "relay_count",
        "endpoint_range_km",
        "relay_fraction",
        "ideal_db",
        "jitter_mean_db",
        "jitter_std_db",
        "failure_rate",
    ]);
    for x in sweep_points(cfg.sweep.as_ref(), JITTER_VARIABLES)? {
        let mut ch = cfg.channel.clone();
        let mut js = base;
        if let (Some(x), Some(s)) = (x, &cfg.sweep) {
            match s.variable.as_str() {
                "endpoint_range_km" => js.endpoint_range_km = Some(x),
                "relay_fraction" => js.relay_fraction = Some(x),
                v => ch = channel_at(&ch, v, x)?,
            }
        }
        let spec = js.spec()?;
        let d = ch.distance();
        let policy = ch.policies()[0];
        let n = match ch.relay_count {
            Some(n) => Some(n),
            None => budget(&ch, d, policy)?.map(|b| b.relay_count),
        };
        let mut row: Vec<Cell> = vec![
            d.into(),
            n.map_or(Cell::Num(f64::NAN), Cell::from),
            spec.endpoint_range_km.into(),
            spec.relay_fraction.into(),
        ];
        let result = match n {
            Some(n) => {
                let mut chain = ch.chain(d, policy)?;
                chain.relay_count = n;
                soft(jitter_monte_carlo(&chain, &spec))?
            }
            None => None,
        };
        match result {
            Some(j) => row.extend([j.ideal_db, j.mean_db, j.std_db, j.failure_rate()].map(Cell::Num)),
            None => row.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(4)),
        }
        t.push(row);
    }
    Ok(t)
}
