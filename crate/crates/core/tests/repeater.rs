#![allow(clippy::excessive_precision)]

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use skyrelay_core::relay_chain::trial_rng;
use skyrelay_core::repeater_rates::*;
use skyrelay_core::repeater_sim::{simulate, simulate_with_table, SimConfig};

fn unlimited(n: usize) -> RepeaterParams {
    let mut p = RepeaterParams::table_defaults(3000.0, 0.3);
    p.independent_modes = n;
    p.memory_time_s = f64::INFINITY;
    p
}

fn binom(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Column of single-clock outcomes from enumerating every free mode, keeping
/// outcomes with at most one herald.
fn single_event_column(n: usize, e: usize, p: f64) -> (f64, f64, f64) {
    let free_a = n - e;
    let free_b = n;
    let mut none = 1.0;
    for _ in 0..free_a + free_b {
        none *= 1.0 - p;
    }
    let mut up = 0.0;
    let mut down = 0.0;
    for mode in 0..free_a + free_b {
        let mut prob = 1.0;
        for other in 0..free_a + free_b {
            prob *= if other == mode { p } else { 1.0 - p };
        }
        if mode < free_a {
            up += prob;
        } else {
            down += prob;
        }
    }
    if e == 0 {
        // either side moves the chain away from balance
        (none, up + down, 0.0)
    } else {
        (none, up, down)
    }
}

#[test]
fn matrix_matches_mode_enumeration() {
    let (n, p) = (10, 1e-4);
    let t = uniform_transition_matrix(n, p);
    for e in 0..=n {
        let (none, up, down) = single_event_column(n, e, p);
        let leave = 1.0 - none;
        assert!((t[(e, e)] - none).abs() < 1e-15);
        // rescale the dropped multi-herald mass onto the single-herald outcomes
        let scale = leave / (up + down);
        if e < n {
            assert!((t[(e + 1, e)] - up * scale).abs() < 1e-15, "up {e}");
            assert!((t[(e + 1, e)] - up).abs() < 1e-5);
        }
        if e > 0 {
            assert!((t[(e - 1, e)] - down * scale).abs() < 1e-15, "down {e}");
        }
        let col: f64 = t.column(e).iter().sum();
        assert!((col - 1.0).abs() < 1e-12);
    }
}

#[test]
fn tridiagonal_structure() {
    let t = uniform_transition_matrix(7, 0.03);
    for i in 0..8usize {
        for j in 0..8 {
            if i.abs_diff(j) > 1 {
                assert_eq!(t[(i, j)], 0.0);
            }
        }
    }
    assert!((t[(1, 0)] - (1.0 - 0.97f64.powi(14))).abs() < 1e-15);
}

#[test]
fn pinned_stationary_vector() {
    let want = [
        0.120_200_517_961_063_78,
        0.240_389_019_476_527_09,
        0.216_339_303_088_111_03,
        0.173_062_791_206_099_81,
        0.121_137_898_160_952_73,
        0.072_679_105_607_634_466,
        0.036_337_736_219_875_203,
        0.014_534_367_878_583_893,
        0.004_360_092_388_028_498_3,
        0.000_871_974_883_949_003_24,
        8.719_312_917_449_443_3e-5,
    ];
    let st = stationary(&uniform_transition_matrix(10, 1e-4)).unwrap();
    for (got, want) in st.probs.iter().zip(want) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }
    assert!(st.residual < 1e-10);
}

#[test]
fn stationary_matches_long_chain_walk() {
    let t = uniform_transition_matrix(10, 1e-4);
    let st = stationary(&t).unwrap();
    let mut rng = trial_rng(99, 0);
    let mut visits = [0u64; 11];
    let mut state = 0usize;
    let steps = 100_000_000u64;
    for _ in 0..steps {
        visits[state] += 1;
        let u: f64 = rng.gen();
        let up = if state < 10 { t[(state + 1, state)] } else { 0.0 };
        let down = if state > 0 { t[(state - 1, state)] } else { 0.0 };
        if u < up {
            state += 1;
        } else if u < up + down {
            state -= 1;
        }
    }
    for (e, v) in visits.iter().enumerate() {
        let freq = *v as f64 / steps as f64;
        assert!((freq - st.probs[e]).abs() < 0.01, "state {e}: {freq} vs {}", st.probs[e]);
    }
}

#[test]
fn single_mode_stationary_limit() {
    let st = stationary(&uniform_transition_matrix(1, 1e-9)).unwrap();
    assert!((st.probs[0] - 1.0 / 3.0).abs() < 1e-8);
    assert!((st.probs[1] - 2.0 / 3.0).abs() < 1e-8);
}

#[test]
fn corrected_matrix_stays_stochastic() {
    let mut prm = RepeaterParams::table_defaults(500.0, 0.5);
    prm.rate_hz = 1e6;
    assert!(!prm.long_distance());
    let t = transition_matrix(prm.independent_modes, |k| p_allocated(&prm, k));
    for j in 0..t.ncols() {
        assert!((t.column(j).sum() - 1.0).abs() < 1e-12);
    }
    stationary(&t).unwrap();
}

#[test]
fn pinned_mode_efficiencies() {
    let p = 1e-4;
    let cases = [
        (2, 0.750_006_249_999_986_98, 0.666_655_556_296_302_47),
        (10, 0.879_821_472_161_305_79, 0.666_477_831_836_401_95),
        (50, 0.944_717_710_414_156_16, 0.665_590_629_035_434_55),
        (100, 0.960_669_288_164_975_8, 0.664_484_941_625_174_89),
    ];
    for (k, ind, dep) in cases {
        let fi = mode_efficiency(ModeKind::Independent, k, p).unwrap();
        let fd = mode_efficiency(ModeKind::Dependent, k, p).unwrap();
        assert!((fi - ind).abs() < 1e-12, "independent {k}: {fi}");
        assert!((fd - dep).abs() < 1e-12, "dependent {k}: {fd}");
    }
    let mut last = (0.0, 1.0);
    for k in 1..=100 {
        let fi = mode_efficiency(ModeKind::Independent, k, p).unwrap();
        let fd = mode_efficiency(ModeKind::Dependent, k, p).unwrap();
        assert!(fi >= last.0 && fd <= last.1 + 1e-15, "kappa {k}");
        assert!(fi <= 1.0 && fd > 0.0);
        last = (fi, fd);
    }
}

#[test]
fn single_mode_markov_time() {
    let prm = unlimited(1);
    assert!(prm.long_distance());
    let p = pm(&prm, prm.dependent_modes as f64, true);
    let want = 2.0 * prm.light_time_s() / (p * prm.p1()) * (3.0 - p) / (4.0 - p);
    assert!((markov_time(&prm).unwrap() / want - 1.0).abs() < 1e-12);
}

#[test]
fn bounds_order_across_distances() {
    for (d, db) in [(1000.0, -3.5), (3000.0, -5.5), (10000.0, -12.4), (20000.0, -22.4)] {
        let prm = RepeaterParams::table_defaults(d, 10f64.powf(db / 10.0));
        let r = rate_estimate(&prm).unwrap();
        assert!(r.time_lower_s > 0.0 && r.time_lower_s <= r.time_upper_s, "{d}");
    }
}

/// Stationary swap rate of the full (stored on A, stored on B) chain.
fn product_state_rate(n: usize, p: f64, p1: f64) -> f64 {
    let idx = |a: usize, b: usize| a * (n + 1) + b;
    let size = (n + 1) * (n + 1);
    let mut t = DMatrix::<f64>::zeros(size, size);
    let mut swaps = vec![0.0; size];
    for a in 0..=n {
        for b in 0..=n {
            for ba in 0..=n - a {
                for bb in 0..=n - b {
                    let w = binom(n - a, ba) * p.powi(ba as i32) * (1.0 - p).powi((n - a - ba) as i32)
                        * binom(n - b, bb)
                        * p.powi(bb as i32)
                        * (1.0 - p).powi((n - b - bb) as i32);
                    let (na, nb) = (a + ba, b + bb);
                    let s = na.min(nb);
                    t[(idx(na - s, nb - s), idx(a, b))] += w;
                    swaps[idx(a, b)] += w * s as f64;
                }
            }
        }
    }
    let mut sys = t - DMatrix::<f64>::identity(size, size);
    for j in 0..size {
        sys[(size - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(size);
    rhs[size - 1] = 1.0;
    let pi = sys.lu().solve(&rhs).unwrap();
    pi.iter().zip(&swaps).map(|(x, s)| x * s).sum::<f64>() * p1
}

#[test]
fn small_instance_matches_exhaustive_chain() {
    let prm = unlimited(2);
    let cfg = SimConfig::new(prm, 200_000, 5);
    let r = simulate_with_table(&cfg, &[0.0, 0.3, 0.3]).unwrap();
    let want = prm.light_time_s() / product_state_rate(2, 0.3, prm.p1());
    assert!(
        (r.mean_time_s - want).abs() < 3.0 * r.std_err_s,
        "{} ± {} vs {want}",
        r.mean_time_s,
        r.std_err_s
    );
}

#[test]
fn single_mode_unlimited_memory() {
    let prm = unlimited(1);
    let p = 0.05;
    let cfg = SimConfig::new(prm, 1_000_000, 8);
    let r = simulate_with_table(&cfg, &[0.0, p]).unwrap();
    let want = prm.light_time_s() / mode_rate(ModeKind::Independent, 1, p, prm.p1()).unwrap();
    assert!((r.mean_time_s / want - 1.0).abs() < 0.01);
}

#[test]
fn immediate_expiry_against_memoryless_collins() {
    let mut prm = unlimited(1);
    prm.memory_time_s = 0.0;
    let p = 0.05;
    let cfg = SimConfig::new(prm, 200_000, 12);
    let r = simulate_with_table(&cfg, &[0.0, p]).unwrap();
    let collins = prm.light_time_s() / collins_rate(p, 1, 0, prm.p1());
    assert!((r.mean_time_s / collins - 1.0).abs() < 0.01);
    assert!(r.expiry_events > 0);
}

#[test]
fn deterministic_across_thread_counts() {
    let prm = RepeaterParams::table_defaults(3000.0, 0.28);
    let mut cfg = SimConfig::new(prm, 20_000, 77);
    cfg.keep_samples = true;
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate(&cfg).unwrap())
    };
    let a = run(1);
    let b = run(4);
    assert_eq!(a, b);
    assert_eq!(a.success_count, 20_000);
    let c = simulate(&SimConfig { seed: 78, ..cfg }).unwrap();
    assert_ne!(a.mean_time_s, c.mean_time_s);
}

#[test]
fn short_memory_at_most_doubles_time() {
    let mut prm = RepeaterParams::table_defaults(3000.0, 0.28);
    prm.memory_time_s = f64::INFINITY;
    let base = simulate(&SimConfig::new(prm, 50_000, 3)).unwrap();
    prm.memory_time_s = 0.05;
    let short = simulate(&SimConfig::new(prm, 50_000, 3)).unwrap();
    assert!(short.mean_time_s >= base.mean_time_s);
    assert!(short.mean_time_s <= 2.0 * base.mean_time_s);
}
