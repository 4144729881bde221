use proptest::prelude::*;

use skyrelay_core::atmosphere::{atmospheric_transmittance, atmospheric_transmittance_between, AttenuationProfile};
use skyrelay_core::beam::{collection_efficiency, curvature_for_waist, derive_beam, max_waist_distance, waist_position, WaistBranch};
use skyrelay_core::coupling::{ao_chain_coupling, zernike_variances, AoConfig, HopAberration};
use skyrelay_core::geometry::{horizontal_path, slant_path, EarthModel, PathKind};
use skyrelay_core::repeater_rates::*;

const LAMBDA: f64 = 1537e-9;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn transition_columns_sum_to_one(n in 1usize..60, p in 1e-9f64..1.0) {
        let t = uniform_transition_matrix(n, p);
        for j in 0..=n {
            prop_assert!((t.column(j).sum() - 1.0).abs() < 1e-12);
            prop_assert!(t.column(j).iter().all(|x| *x >= 0.0));
        }
        prop_assert!((t[(1, 0)] - (1.0 - (1.0 - p).powi(2 * n as i32))).abs() < 1e-12);
    }

    #[test]
    fn stationary_is_balanced_fixed_point(n in 1usize..40, p in 1e-6f64..0.5) {
        let t = uniform_transition_matrix(n, p);
        let st = stationary(&t).unwrap();
        prop_assert!((st.probs.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(st.probs.iter().all(|x| *x >= 0.0));
        prop_assert!(st.residual < 1e-10);
        for e in 0..n {
            let flow = st.probs[e] * t[(e + 1, e)] - st.probs[e + 1] * t[(e, e + 1)];
            prop_assert!(flow.abs() < 1e-10);
        }
    }

    #[test]
    fn pm_is_monotone_probability(eta in 0.0f64..1.0, m in 1usize..5000, fiber in any::<bool>()) {
        let prm = RepeaterParams::table_defaults(3000.0, eta);
        let a = pm(&prm, m as f64, fiber);
        let b = pm(&prm, (m + 1) as f64, fiber);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(b >= a);
    }

    #[test]
    fn mode_efficiency_in_unit_interval(k in 1usize..120, p in 1e-6f64..=1.0) {
        for kind in [ModeKind::Dependent, ModeKind::Independent] {
            let f = mode_efficiency(kind, k, p).unwrap();
            prop_assert!(f > 0.0 && f <= 1.0 + 1e-12, "{kind:?} {k} {p} {f}");
        }
    }

    #[test]
    fn lower_bound_below_upper(d in 500.0f64..25000.0, db in -30.0f64..-1.0, n in 1usize..30) {
        let mut prm = RepeaterParams::table_defaults(d, 10f64.powf(db / 10.0));
        prm.independent_modes = n;
        let r = rate_estimate(&prm).unwrap();
        prop_assert!(r.time_lower_s > 0.0);
        prop_assert!(r.time_lower_s <= r.time_upper_s * (1.0 + 1e-12));
    }

    #[test]
    fn beam_invariants(w0 in 0.01f64..1.0, f0 in prop_oneof![Just(f64::INFINITY), -1e6f64..-10.0, 10.0f64..1e6], l in 1e3f64..2e5) {
        let b = derive_beam(w0, f0, l, LAMBDA).unwrap();
        let d = b.theta0 * b.theta0 + b.lambda0 * b.lambda0;
        prop_assert!((b.theta - b.theta0 / d).abs() <= 1e-12 * (b.theta0 / d).abs().max(1e-300));
        prop_assert!((b.lambda - b.lambda0 / d).abs() <= 1e-12 * b.lambda);
        prop_assert!((b.theta_bar0 + b.theta0 - 1.0).abs() < 1e-12);
        prop_assert!(b.w_diff_m > 0.0);
    }

    #[test]
    fn waist_round_trip(w0 in 0.02f64..0.6, frac in 0.001f64..1.0, loose in any::<bool>()) {
        let d = frac * max_waist_distance(w0, LAMBDA);
        let branch = if loose { WaistBranch::Loose } else { WaistBranch::Tight };
        let f0 = curvature_for_waist(w0, d, LAMBDA, branch).unwrap();
        prop_assert!((waist_position(w0, f0, LAMBDA) / d - 1.0).abs() < 1e-7);
    }

    #[test]
    fn collection_monotone(w in 0.01f64..10.0, d in 0.01f64..2.0) {
        let a = collection_efficiency(w, d);
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!(collection_efficiency(w, d * 1.1) >= a);
        prop_assert!(collection_efficiency(w * 1.1, d) <= a);
    }

    #[test]
    fn transmittance_is_multiplicative(theta in 0.0f64..1.3, split in 0.01f64..0.99, up in any::<bool>()) {
        let kind = if up { PathKind::Uplink } else { PathKind::Downlink };
        let path = slant_path(kind, 24.0, 0.002, theta).unwrap();
        let att = AttenuationProfile::embedded_1537nm();
        let whole = atmospheric_transmittance(&path, &att).unwrap();
        let x = split * path.length_km;
        let a = atmospheric_transmittance_between(&path, &att, 0.0, x).unwrap();
        let b = atmospheric_transmittance_between(&path, &att, x, path.length_km).unwrap();
        prop_assert!((a * b / whole - 1.0).abs() < 1e-8);
    }

    #[test]
    fn horizontal_chord_shorter_than_platform_arc(arc in 1.0f64..1100.0) {
        let earth = EarthModel::default();
        let p = horizontal_path(arc, 24.0, earth).unwrap();
        prop_assert!(p.length_km <= arc * (earth.radius_km + 24.0) / earth.radius_km);
        prop_assert!(p.min_altitude_km <= 24.0 && p.min_altitude_km >= 0.0);
        prop_assert!((p.altitude_at(0.0) - 24.0).abs() < 1e-9);
        prop_assert!((p.altitude_at(p.length_km) - 24.0).abs() < 1e-9);
    }

    #[test]
    fn extra_hop_never_helps(r0s in prop::collection::vec(0.05f64..10.0, 1..6), extra in 0.05f64..10.0) {
        // a hop added at the source end sees every corrector and shields none
        let hop = |r0, ao| HopAberration { d_rx_m: 0.6, r0_m: r0, ao };
        let hops: Vec<_> = r0s.iter().map(|r| hop(*r, AoConfig::table())).collect();
        let base = ao_chain_coupling(&hops);
        let mut more = vec![hop(extra, AoConfig::table())];
        more.extend_from_slice(&hops);
        prop_assert!(ao_chain_coupling(&more) <= base * (1.0 + 1e-12));
        prop_assert!(base > 0.0 && base <= 1.0);

        let bare: Vec<_> = r0s.iter().map(|r| hop(*r, AoConfig::disabled())).collect();
        let mut longer = bare.clone();
        longer.push(hop(extra, AoConfig::disabled()));
        prop_assert!(ao_chain_coupling(&longer) <= ao_chain_coupling(&bare) * (1.0 + 1e-12));
    }

    #[test]
    fn stronger_turbulence_never_helps(r0 in 0.05f64..10.0, factor in 1.01f64..10.0) {
        let hop = |r0| HopAberration { d_rx_m: 0.6, r0_m: r0, ao: AoConfig::table() };
        prop_assert!(ao_chain_coupling(&[hop(r0 / factor)]) <= ao_chain_coupling(&[hop(r0)]));
    }
}

#[test]
fn zernike_sum_matches_noll_residual() {
    let s = zernike_variances(0.6, 0.2, 20_000);
    let want = 1.0299 * (0.6f64 / 0.2).powf(5.0 / 3.0);
    assert!((s.total_variance() / want - 1.0).abs() < 0.02);
}

#[test]
fn kappa_one_limits() {
    for kind in [ModeKind::Dependent, ModeKind::Independent] {
        assert!((mode_efficiency(kind, 1, 1e-12).unwrap() - 2.0 / 3.0).abs() < 1e-11);
        assert_eq!(mode_efficiency(kind, 1, 1.0).unwrap(), 1.0);
    }
}
