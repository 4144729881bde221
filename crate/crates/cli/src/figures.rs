//! Datasets behind the standard plots, in long format with a `series` column.

use skyrelay_core::coupling::AoConfig;
use skyrelay_core::relay_chain::{optimize_relay_count, ChainConfig, JitterSpec, WaistPolicy};
use skyrelay_core::repeater_rates::{
    collins_rate, mode_efficiency, pm, rate_estimate, tau_clocks, ModeKind, RepeaterParams,
};

use crate::commands::{run_mc, segment_eta, soft};
use crate::config::{ScenarioConfig, SimulationSection};
use crate::table::{Cell, Table};
use crate::CliError;

pub const FIGURES: &[&str] = &["fig2a", "fig2b", "fig3", "fig4", "fig6", "fig7", "fig8"];

pub fn figure(id: &str, cfg: &ScenarioConfig) -> Result<Table, CliError> {
    match id {
        "fig2a" => fig2a(cfg),
        "fig2b" => fig2b(cfg),
        "fig3" => fig3(cfg),
        "fig4" => fig4(cfg),
        "fig6" => fig6(cfg),
        "fig7" => fig7(cfg),
        "fig8" => fig8(cfg),
        _ => Err(CliError::Config(format!(
            "unknown figure `{id}`, expected one of: {}",
            FIGURES.join(", ")
        ))),
    }
}

fn distances() -> Vec<f64> {
    (1..=40).map(|i| 500.0 * i as f64).collect()
}

fn db(x: f64) -> f64 {
    10.0 * x.log10()
}

fn scan_rows(t: &mut Table, cfg: &ChainConfig, per_count: Option<&str>, envelope: &str) -> Result<(), CliError> {
    let d = cfg.distance_km;
    match soft(optimize_relay_count(cfg, None))? {
        Some(scan) => {
            if let Some(series) = per_count {
                for (n, v) in &scan.envelope {
                    t.push(vec![series.into(), d.into(), (*n).into(), (*v).into()]);
                }
            }
            t.push(vec![envelope.into(), d.into(), scan.best_relay_count().into(), scan.best.total_db.into()]);
        }
        None => t.push(vec![envelope.into(), d.into(), f64::NAN.into(), f64::NAN.into()]),
    }
    Ok(())
}

fn balloon(cfg: &ScenarioConfig, d: f64, policy: WaistPolicy) -> Result<ChainConfig, CliError> {
    let mut ch = cfg.channel.clone();
    ch.platform = Some(skyrelay_core::relay_chain::Platform::Balloon);
    ch.chain(d, policy)
}

fn budget_table() -> Table {
    Table::new(&["series", "distance_km", "relay_count", "total_db"])
}

/// Fixed platform counts against the optimized envelope.
fn fig2a(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let mut t = budget_table();
    for d in distances() {
        scan_rows(&mut t, &balloon(cfg, d, WaistPolicy::Optimized)?, Some("fixed_count"), "envelope")?;
    }
    Ok(t)
}

/// Envelope under each waist policy, and without correction.
fn fig2b(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let mut t = budget_table();
    for d in distances() {
        for (name, policy) in [
            ("optimized", WaistPolicy::Optimized),
            ("mid_path", WaistPolicy::MidPath),
            ("transmitter", WaistPolicy::Transmitter),
        ] {
            scan_rows(&mut t, &balloon(cfg, d, policy)?, None, name)?;
        }
        let mut bare = balloon(cfg, d, WaistPolicy::Optimized)?;
        bare.ao = AoConfig::disabled();
        scan_rows(&mut t, &bare, None, "no_ao")?;
    }
    Ok(t)
}

/// Balloon and satellite chains.
fn fig7(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let mut t = budget_table();
    for d in distances() {
        let mut ch = cfg.channel.clone();
        ch.platform = Some(skyrelay_core::relay_chain::Platform::Satellite);
        let sat = ch.chain(d, WaistPolicy::Optimized)?;
        scan_rows(&mut t, &sat, Some("satellite_fixed_count"), "satellite_envelope")?;
        scan_rows(&mut t, &balloon(cfg, d, WaistPolicy::Optimized)?, None, "balloon_envelope")?;
    }
    Ok(t)
}

fn sim_section(cfg: &ScenarioConfig) -> SimulationSection {
    let mut s = cfg.simulation.unwrap_or_default();
    s.trials.get_or_insert(100_000);
    s
}

fn rate_columns(lead: &[&str]) -> Table {
    let mut cols = lead.to_vec();
    cols.extend(["eta_ch_db", "p_m", "time_upper_s", "time_lower_s", "time_mc_s", "mc_stderr_s"]);
    Table::new(&cols)
}

fn rate_cells(params: RepeaterParams, sim: &SimulationSection) -> Result<Vec<Cell>, CliError> {
    if params.eta_ch.is_nan() {
        return Ok(vec![Cell::Num(f64::NAN); 6]);
    }
    let est = rate_estimate(&params)?;
    let mc = run_mc(sim, params)?;
    Ok([db(params.eta_ch), est.p_m, est.time_upper_s, est.time_lower_s, mc.mean_time_s, mc.std_err_s]
        .map(Cell::Num)
        .to_vec())
}

fn with_eta(d: f64, eta: f64) -> RepeaterParams {
    let mut p = RepeaterParams::table_defaults(d, if eta.is_nan() { 0.5 } else { eta });
    p.eta_ch = eta;
    p
}

/// Distribution time against distance, segment efficiency from the balloon envelope.
fn fig3(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let sim = sim_section(cfg);
    let mut t = rate_columns(&["distance_km"]);
    for i in 1..=20 {
        let d = 1000.0 * i as f64;
        let eta = segment_eta(&cfg.channel, d)?;
        let mut row = vec![Cell::Num(d)];
        row.extend(rate_cells(with_eta(d, eta), &sim)?);
        t.push(row);
    }
    Ok(t)
}

/// Entanglement distribution rate against mode count at 3000 km.
fn fig4(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let prm = with_eta(3000.0, segment_eta(&cfg.channel, 3000.0)?);
    let p = pm(&prm, 1.0, prm.fiber_constraint);
    let light = prm.light_time_s();
    let tau = tau_clocks(prm.memory_time_s, light);
    let mut kappas: Vec<usize> = (0..=40).map(|i| 10f64.powf(i as f64 / 10.0).round() as usize).collect();
    kappas.dedup();
    let mut t = Table::new(&[
        "kappa",
        "p",
        "f_independent",
        "f_dependent",
        "edr_independent_hz",
        "edr_dependent_hz",
        "edr_collins_hz",
    ]);
    for k in kappas {
        let fi = mode_efficiency(ModeKind::Independent, k, p)?;
        let fd = mode_efficiency(ModeKind::Dependent, k, p)?;
        let per_clock = k as f64 * p * prm.p1() / light;
        t.push(vec![
            k.into(),
            p.into(),
            fi.into(),
            fd.into(),
            (per_clock * fi).into(),
            (per_clock * fd).into(),
            (collins_rate(p, k, tau, prm.p1()) / light).into(),
        ]);
    }
    Ok(t)
}

/// Position jitter at two spreads.
fn fig6(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let seed = cfg.jitter.and_then(|j| j.seed).unwrap_or(7);
    let trials = cfg.jitter.and_then(|j| j.trials).unwrap_or(200);
    let mut t = Table::new(&[
        "series",
        "distance_km",
        "relay_count",
        "ideal_db",
        "jitter_mean_db",
        "jitter_std_db",
        "failure_rate",
    ]);
    for d in [2500.0, 5000.0, 10_000.0, 15_000.0, 20_000.0] {
        let mut chain = balloon(cfg, d, WaistPolicy::Optimized)?;
        let Some(scan) = soft(optimize_relay_count(&chain, None))? else {
            continue;
        };
        chain.relay_count = scan.best_relay_count();
        for (name, endpoint_range_km, relay_fraction) in [("narrow", 5.0, 0.2), ("wide", 10.0, 0.4)] {
            let spec = JitterSpec {
                endpoint_range_km,
                relay_fraction,
                trials,
                seed,
            };
            let mut row: Vec<Cell> = vec![name.into(), d.into(), chain.relay_count.into()];
            match soft(skyrelay_core::relay_chain::jitter_monte_carlo(&chain, &spec))? {
                Some(j) => row.extend([j.ideal_db, j.mean_db, j.std_db, j.failure_rate()].map(Cell::Num)),
                None => row.extend(std::iter::repeat(Cell::Num(f64::NAN)).take(4)),
            }
            t.push(row);
        }
    }
    Ok(t)
}

/// Parameter sensitivity at 3000 km.
fn fig8(cfg: &ScenarioConfig) -> Result<Table, CliError> {
    let sim = sim_section(cfg);
    let d = 3000.0;
    let eta = segment_eta(&cfg.channel, d)?;
    let base = with_eta(d, eta);
    let mut t = rate_columns(&["panel", "variable", "value"]);
    let eff = [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0];
    let mut push = |panel: &str, var: &str, x: f64, p: RepeaterParams| -> Result<(), CliError> {
        let mut row: Vec<Cell> = vec![panel.into(), var.into(), x.into()];
        row.extend(rate_cells(p, &sim)?);
        t.push(row);
        Ok(())
    };
    for x in eff {
        push("a", "eta_m", x, RepeaterParams { eta_m: x, ..base })?;
    }
    for x in eff {
        push("b", "eta_d", x, RepeaterParams { eta_d: x, ..base })?;
    }
    for x in [0.01, 0.02, 0.05, 0.1, 0.15, 0.2] {
        push("c", "rho", x, RepeaterParams { rho: x, dependent_modes: 10, ..base })?;
    }
    for m in [1usize, 10, 100, 1000, 10_000] {
        push("d", "dependent_modes", m as f64, RepeaterParams { dependent_modes: m, ..base })?;
    }
    for n in [1usize, 2, 5, 10, 20, 50] {
        push("e", "independent_modes", n as f64, RepeaterParams { independent_modes: n, dependent_modes: 20, ..base })?;
    }
    for tau in [1e-3, 1e-2, 0.05, 0.1, 1.0, f64::INFINITY] {
        push("f", "memory_time_s", tau, RepeaterParams { memory_time_s: tau, dependent_modes: 100, ..base })?;
    }
    Ok(t)
}
