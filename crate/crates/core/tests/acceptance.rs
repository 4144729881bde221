//! Acceptance report: one PASS/FAIL line per criterion.
//!
//! Failing criteria are reported, not asserted, so the rest of the suite still runs.

use std::time::{Duration, Instant};

use skyrelay_core::atmosphere::{atmospheric_transmittance, atmospheric_transmittance_between, AttenuationProfile};
use skyrelay_core::coupling::{zernike_variances, AoConfig, CorrectionModel};
use skyrelay_core::geometry::{slant_path, PathKind};
use skyrelay_core::relay_chain::{
    chain_budget, jitter_monte_carlo, optimize_relay_count, ChainConfig, JitterSpec, RelayScan, WaistPolicy,
};
use skyrelay_core::repeater_rates::*;
use skyrelay_core::repeater_sim::{simulate, simulate_with_table, SimConfig};

const FIG3_DISTANCES: [f64; 7] = [1000.0, 2000.0, 3000.0, 5000.0, 10000.0, 15000.0, 20000.0];
const SEGMENT_KM: f64 = 10_000.0;

struct Report {
    passed: usize,
    total: usize,
}

impl Report {
    fn line(&mut self, id: usize, ok: bool, text: String) {
        self.total += 1;
        if ok {
            self.passed += 1;
        }
        println!("criterion {id:>2} [{}] {text}", if ok { "PASS" } else { "FAIL" });
    }
}

fn scan(cfg: ChainConfig) -> RelayScan {
    optimize_relay_count(&cfg, None).expect("relay scan")
}

fn timed<T>(f: impl FnOnce() -> T) -> (T, Duration) {
    let t = Instant::now();
    let v = f();
    (v, t.elapsed())
}

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol
}

fn no_ao(mut cfg: ChainConfig) -> ChainConfig {
    cfg.ao = AoConfig::disabled();
    cfg
}

fn segment_efficiency(distance_km: f64) -> f64 {
    scan(ChainConfig::balloon(distance_km / 2.0, 2)).best.total_linear
}

fn main() {
    let mut r = Report { passed: 0, total: 0 };

    let (best, t1) = timed(|| scan(ChainConfig::balloon(SEGMENT_KM, 2)));
    let db = best.best.total_db;
    r.line(
        1,
        within(db, -21.0, 3.0) && t1 < Duration::from_secs(60),
        format!("10000 km balloon chain: {db:.2} dB (target -21 ± 3), {:.1} s", t1.as_secs_f64()),
    );

    let n = best.best_relay_count();
    let spacing = SEGMENT_KM / (n - 1) as f64;
    r.line(
        2,
        within(spacing, 110.0, 15.0) && n.abs_diff(92) <= 8 && t1 < Duration::from_secs(300),
        format!("optimal count {n} (target 92 ± 8), spacing {spacing:.1} km (target 110 ± 15)"),
    );

    let bare = scan(no_ao(ChainConfig::balloon(SEGMENT_KM, 2)));
    let mid = scan(ChainConfig {
        waist_policy: WaistPolicy::MidPath,
        ..no_ao(ChainConfig::balloon(SEGMENT_KM, 2))
    });
    let tx = scan(ChainConfig {
        waist_policy: WaistPolicy::Transmitter,
        ..no_ao(ChainConfig::balloon(SEGMENT_KM, 2))
    });
    let gap_mid = bare.best.total_db - mid.best.total_db;
    let gap_tx = bare.best.total_db - tx.best.total_db;
    r.line(
        3,
        within(gap_mid, 30.0, 5.0) && within(gap_tx, 100.0, 10.0),
        format!(
            "no-AO waist gaps: optimized - mid-path = {gap_mid:.1} dB (target 30 ± 5, best N {} vs {}), optimized - transmitter = {gap_tx:.1} dB (target 100 ± 10)",
            bare.best_relay_count(),
            mid.best_relay_count()
        ),
    );

    let ao_gap = db - bare.best.total_db;
    let ideal = scan(ChainConfig {
        ao: AoConfig::table().with_model(CorrectionModel::IdealCutoff),
        ..ChainConfig::balloon(SEGMENT_KM, 2)
    });
    let ideal_gap = ideal.best.total_db - bare.best.total_db;
    r.line(
        4,
        within(ao_gap, 25.0, 5.0) && ideal_gap >= ao_gap,
        format!("AO gain: temporal residual {ao_gap:.1} dB (target 25 ± 5), ideal cutoff {ideal_gap:.1} dB"),
    );

    let sat = scan(ChainConfig::satellite(SEGMENT_KM, 2));
    let sat_gap = db - sat.best.total_db;
    r.line(
        5,
        within(sat_gap, 12.0, 3.0),
        format!(
            "balloon - satellite = {sat_gap:.1} dB (target 12 ± 3; satellite {:.2} dB at {} platforms)",
            sat.best.total_db,
            sat.best_relay_count()
        ),
    );

    let hops = [5.0, 10.0, 20.0, 40.0, 60.0, 80.0, 92.0, 110.0];
    let fractions: Vec<f64> = hops
        .iter()
        .map(|&s| {
            let b = chain_budget(&ChainConfig::balloon(s, 2)).expect("single hop");
            let h = &b.horizontal()[0];
            h.waist_distance_m / (h.length_km * 1e3)
        })
        .collect();
    let (lo, hi) = fractions
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    r.line(
        6,
        lo >= 0.65 && hi <= 0.85,
        format!("optimal waist over hops 5-110 km: {lo:.3}-{hi:.3} of L0 (target within 0.65-0.85)"),
    );

    let cfg92 = ChainConfig::balloon(SEGMENT_KM, n);
    let jitter = |range_km, fraction| {
        jitter_monte_carlo(
            &cfg92,
            &JitterSpec {
                endpoint_range_km: range_km,
                relay_fraction: fraction,
                trials: 200,
                seed: 7,
            },
        )
        .expect("jitter")
    };
    let small = jitter(5.0, 0.2);
    let large = jitter(10.0, 0.4);
    let d_small = small.ideal_db - small.mean_db;
    let d_large = large.ideal_db - large.mean_db;
    r.line(
        7,
        within(d_small, 2.0, 2.0) && within(d_large, 10.0, 2.0),
        format!(
            "jitter loss over 200 trials: {d_small:.2} dB (target 2 ± 2, {} failed), doubled {d_large:.2} dB (target 10 ± 2, {} failed)",
            small.failures, large.failures
        ),
    );

    let fig3_eta: Vec<f64> = FIG3_DISTANCES.iter().map(|&d| segment_efficiency(d)).collect();
    let params = |d: f64| {
        let i = FIG3_DISTANCES.iter().position(|x| *x == d).unwrap();
        RepeaterParams::table_defaults(d, fig3_eta[i])
    };
    let t3000 = markov_time(&params(3000.0)).unwrap();
    let t20000 = markov_time(&params(20000.0)).unwrap();
    let upper10k = collins_time(&params(10000.0));
    let (mc10k, t_mc) = timed(|| simulate(&SimConfig::new(params(10000.0), 100_000, 1)).unwrap());
    r.line(
        8,
        t3000 < 0.05 && t20000 < 20.0 && upper10k > 1.0 && t_mc < Duration::from_secs(600),
        format!(
            "distribution time: {:.1} ms at 3000 km (< 50 ms), {t20000:.2} s at 20000 km (< 20 s), upper bound {upper10k:.3} s at 10000 km (> 1 s; Monte Carlo {:.3} s in {:.1} s)",
            t3000 * 1e3,
            mc10k.mean_time_s,
            t_mc.as_secs_f64()
        ),
    );

    let mut sandwich_ok = true;
    let mut cells = Vec::new();
    for &d in &FIG3_DISTANCES {
        let prm = params(d);
        let est = rate_estimate(&prm).unwrap();
        let mc = simulate(&SimConfig::new(prm, 100_000, 2024)).unwrap();
        let slack = 3.0 * mc.std_err_s;
        let ok = mc.mean_time_s >= est.time_lower_s - slack && mc.mean_time_s <= est.time_upper_s + slack;
        sandwich_ok &= ok;
        cells.push(format!(
            "{d:.0} km {:.4}<{:.4}±{:.1e}<{:.4}{}",
            est.time_lower_s,
            mc.mean_time_s,
            mc.std_err_s,
            est.time_upper_s,
            if ok { "" } else { " (outside)" }
        ));
    }
    r.line(9, sandwich_ok, format!("Monte Carlo between bounds (s): {}", cells.join("; ")));

    let p = pm(&params(3000.0), 1.0, true);
    let kappa = 1000;
    let advantage = mode_efficiency(ModeKind::Independent, kappa, p).unwrap()
        / mode_efficiency(ModeKind::Dependent, kappa, p).unwrap()
        - 1.0;
    r.line(
        10,
        advantage > 0.5,
        format!("independent over dependent modes at 3000 km, kappa {kappa}, p {p:.2e}: +{:.1}% (target > 50%)", advantage * 100.0),
    );

    let props = property_suite();
    let failed: Vec<&str> = props.iter().filter(|(_, ok)| !ok).map(|(n, _)| *n).collect();
    r.line(
        11,
        failed.is_empty(),
        format!("property suite: {}/{} checks hold{}", props.len() - failed.len(), props.len(), if failed.is_empty() {
            String::new()
        } else {
            format!(" (failed: {})", failed.join(", "))
        }),
    );

    let mut weak = params(3000.0);
    weak.eta_m = 0.3;
    let t_weak = markov_time(&weak).unwrap();
    let mut unlimited = params(3000.0);
    unlimited.memory_time_s = f64::INFINITY;
    let mut short = params(3000.0);
    short.memory_time_s = 0.05;
    let base = simulate(&SimConfig::new(unlimited, 100_000, 5)).unwrap().mean_time_s;
    let brief = simulate(&SimConfig::new(short, 100_000, 5)).unwrap().mean_time_s;
    r.line(
        12,
        t_weak < 1.0 && brief <= 2.0 * base,
        format!(
            "eta_M = 0.3 at 3000 km: {t_weak:.3} s (< 1 s); 50 ms memory vs unlimited: {:.2}x (<= 2x)",
            brief / base
        ),
    );

    println!("acceptance: {}/{} criteria passed", r.passed, r.total);
}

fn property_suite() -> Vec<(&'static str, bool)> {
    let mut out = Vec::new();

    let stochastic = (1..=40).all(|n| {
        [1e-6, 1e-3, 0.1, 0.7].iter().all(|&p| {
            let t = uniform_transition_matrix(n, p);
            (0..=n).all(|j| (t.column(j).sum() - 1.0).abs() < 1e-12)
        })
    });
    out.push(("column-stochastic", stochastic));

    let fixed_point = [(10, 1e-4), (30, 0.01), (200, 1e-3)].iter().all(|&(n, p)| {
        stationary(&uniform_transition_matrix(n, p)).is_ok_and(|s| s.residual < 1e-10)
    });
    out.push(("stationary fixed point with solver agreement", fixed_point));

    let st = stationary(&uniform_transition_matrix(1, 1e-9)).unwrap();
    out.push((
        "single-mode stationary limit",
        (st.probs[0] - 1.0 / 3.0).abs() < 1e-8 && (st.probs[1] - 2.0 / 3.0).abs() < 1e-8,
    ));

    let f_lo = mode_efficiency(ModeKind::Independent, 1, 1e-12).unwrap();
    let f_hi = mode_efficiency(ModeKind::Independent, 1, 1.0).unwrap();
    out.push(("single-mode efficiency limits", (f_lo - 2.0 / 3.0).abs() < 1e-11 && f_hi == 1.0));

    let total = zernike_variances(0.6, 0.2, 100).total_variance();
    let noll = 1.0299 * 3f64.powf(5.0 / 3.0);
    out.push(("Zernike sum against Noll residual", (total / noll - 1.0).abs() < 0.02));

    let path = slant_path(PathKind::Uplink, 24.0, 0.002, 0.4).unwrap();
    let att = AttenuationProfile::embedded_1537nm();
    let whole = atmospheric_transmittance(&path, &att).unwrap();
    let additive = [0.1, 0.37, 0.5, 0.81].iter().all(|s| {
        let x = s * path.length_km;
        let a = atmospheric_transmittance_between(&path, &att, 0.0, x).unwrap();
        let b = atmospheric_transmittance_between(&path, &att, x, path.length_km).unwrap();
        (a * b / whole - 1.0).abs() < 1e-8
    });
    out.push(("transmittance additivity", additive));

    let cfg = SimConfig::new(RepeaterParams::table_defaults(3000.0, 0.28), 20_000, 9);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&cfg).unwrap())
    };
    out.push(("Monte Carlo seed determinism", run(1) == run(3)));

    let mut small = RepeaterParams::table_defaults(3000.0, 0.3);
    small.independent_modes = 2;
    small.memory_time_s = f64::INFINITY;
    let mc = simulate_with_table(&SimConfig::new(small, 200_000, 5), &[0.0, 0.3, 0.3]).unwrap();
    let exact = small.light_time_s() / two_mode_swap_rate(0.3, small.p1());
    out.push(("small-instance oracle", (mc.mean_time_s - exact).abs() < 3.0 * mc.std_err_s));

    out
}

/// Swap-success rate per clock for n = 2 with unlimited storage, from the
/// stationary law of (pairs held on one side) with full binomial heralding.
fn two_mode_swap_rate(p: f64, p1: f64) -> f64 {
    let q = 1.0 - p;
    let bin = |k: usize, j: usize| -> f64 {
        let c = match (k, j) {
            (_, 0) => 1.0,
            (2, 1) => 2.0,
            _ => 1.0,
        };
        c * p.powi(j as i32) * q.powi((k - j) as i32)
    };
    // states: 0 = empty, 1 = one pair waiting, 2 = two pairs waiting
    let mut t = [[0.0f64; 3]; 3];
    let mut swaps = [0.0f64; 3];
    for held in 0..=2usize {
        for own in 0..=2 - held {
            for other in 0..=2usize {
                let w = bin(2 - held, own) * bin(2, other);
                let mine = held + own;
                let s = mine.min(other);
                t[held][mine.max(other) - s] += w;
                swaps[held] += w * s as f64;
            }
        }
    }
    // power iteration on the 3-state chain
    let mut pi = [1.0 / 3.0; 3];
    for _ in 0..10_000 {
        let mut next = [0.0; 3];
        for (from, row) in t.iter().enumerate() {
            for (to, w) in row.iter().enumerate() {
                next[to] += pi[from] * w;
            }
        }
        pi = next;
    }
    pi.iter().zip(swaps).map(|(a, s)| a * s).sum::<f64>() * p1
}
