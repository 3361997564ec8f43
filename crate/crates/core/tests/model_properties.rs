mod common;

use edrelax::casekit::{
    build_counterexample_case, build_ieee30_scenario, parse_matpower_subset, Target,
};
use edrelax::model::{compute_gsf, energy_trajectory, net_charge_lhs, validate_case};
use edrelax::{Line, Network, StorageDevice};
use proptest::prelude::*;

fn device(eta_ch: f64, eta_dc: f64, eps: f64, e0: f64, steps: usize) -> StorageDevice {
    StorageDevice::constant(0, steps, 10.0, 1e4, e0, eta_ch, eta_dc, eps)
}

fn powers(steps: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0..10.0f64, steps)
}

fn device_params() -> impl Strategy<Value = (f64, f64, f64)> {
    (
        0.5..1.0f64,
        0.5..0.99f64,
        prop_oneof![Just(0.0), 0.0..0.05f64],
    )
}

proptest! {
    #[test]
    fn trajectory_is_linear_from_empty(
        (eta_ch, eta_dc, eps) in device_params(),
        (u_ch, u_dc, v_ch, v_dc) in (1usize..30).prop_flat_map(|n| (powers(n), powers(n), powers(n), powers(n))),
        a in -3.0..3.0f64,
        b in -3.0..3.0f64,
        dt in prop_oneof![Just(1.0), Just(0.25), 0.1..2.0f64],
    ) {
        let s = device(eta_ch, eta_dc, eps, 0.0, u_ch.len());
        let mix = |x: &[f64], y: &[f64]| -> Vec<f64> {
            x.iter().zip(y).map(|(p, q)| a * p + b * q).collect()
        };
        let combined = energy_trajectory(&s, &mix(&u_ch, &v_ch), &mix(&u_dc, &v_dc), dt).unwrap();
        let eu = energy_trajectory(&s, &u_ch, &u_dc, dt).unwrap();
        let ev = energy_trajectory(&s, &v_ch, &v_dc, dt).unwrap();
        for t in 0..combined.len() {
            let expected = a * eu[t] + b * ev[t];
            let scale = 1.0 + a.abs() * eu[t].abs() + b.abs() * ev[t].abs();
            prop_assert!((combined[t] - expected).abs() <= 1e-12 * scale * (t + 1) as f64);
        }
    }

    #[test]
    fn trajectory_matches_discounted_sum(
        (eta_ch, eta_dc, eps) in device_params(),
        (ch, dc) in (1usize..100).prop_flat_map(|n| (powers(n), powers(n))),
        e0 in 0.0..500.0f64,
        dt in prop_oneof![Just(1.0), Just(0.25), 0.1..2.0f64],
    ) {
        let s = device(eta_ch, eta_dc, eps, e0, ch.len());
        let e = energy_trajectory(&s, &ch, &dc, dt).unwrap();
        let xi = 1.0 - eps;
        for (t, &et) in e.iter().enumerate() {
            let mut direct = xi.powi(t as i32 + 1) * e0;
            let mut scale = direct.abs();
            for tau in 0..=t {
                let term = xi.powi((t - tau) as i32) * (eta_ch * ch[tau] - dc[tau] / eta_dc) * dt;
                direct += term;
                scale += term.abs();
            }
            prop_assert!((et - direct).abs() <= 1e-12 * scale.max(1.0));
        }
    }

    #[test]
    fn lossless_requirement_equals_energy_change(
        (eta_ch, eta_dc, _) in device_params(),
        (ch, dc) in (1usize..50).prop_flat_map(|n| (powers(n), powers(n))),
        e0 in 0.0..500.0f64,
    ) {
        let s = device(eta_ch, eta_dc, 0.0, e0, ch.len());
        let e = energy_trajectory(&s, &ch, &dc, 0.5).unwrap();
        let lhs = net_charge_lhs(&s, &ch, &dc, 0.5).unwrap();
        let change = e[e.len() - 1] - e0;
        prop_assert!((change - lhs).abs() <= 1e-12 * (e0 + 10.0 * ch.len() as f64));
    }
}

/// A spanning path plus extra chords, so the network stays connected.
fn network_strategy() -> impl Strategy<Value = (usize, Vec<Line>, usize)> {
    (2usize..8).prop_flat_map(|n| {
        let chords = prop::collection::vec((0..n, 0..n, 0.05..1.0f64), 0..6);
        let path = prop::collection::vec(0.05..1.0f64, n - 1);
        (Just(n), path, chords, 0..n).prop_map(|(n, path, chords, slack)| {
            let mut lines: Vec<Line> = path
                .iter()
                .enumerate()
                .map(|(i, &x)| Line::new(i, i + 1, x, 100.0))
                .collect();
            lines.extend(
                chords
                    .into_iter()
                    .filter(|(a, b, _)| a != b)
                    .map(|(a, b, x)| Line::new(a, b, x, 100.0)),
            );
            (n, lines, slack)
        })
    })
}

proptest! {
    #[test]
    fn shift_factors_conserve_flow(
        (n, lines, slack) in network_strategy(),
        raw in prop::collection::vec(-50.0..50.0f64, 8),
        extra in -100.0..100.0f64,
    ) {
        let gsf = compute_gsf(n, &lines, slack).unwrap();
        let network = Network::with_gsf(n, lines.clone(), slack, gsf);
        let mut injection: Vec<f64> = raw[..n].to_vec();
        let total: f64 = injection.iter().sum();
        injection[slack] -= total;
        let flows = network.flows(&injection);
        prop_assert!(flows.iter().all(|f| f.is_finite()));

        // net outflow at every bus equals its injection
        let mut outflow = vec![0.0; n];
        for (line, f) in lines.iter().zip(&flows) {
            outflow[line.from] += f;
            outflow[line.to] -= f;
        }
        for b in 0..n {
            prop_assert!((outflow[b] - injection[b]).abs() <= 1e-8 * (1.0 + total.abs() + 50.0 * n as f64));
        }

        // the slack absorbs any imbalance without changing flows
        let mut unbalanced = injection.clone();
        unbalanced[slack] += extra;
        prop_assert_eq!(network.flows(&unbalanced), flows);
    }
}

#[test]
fn builders_pass_validation() {
    for case in [build_counterexample_case(), build_ieee30_scenario()] {
        let report = validate_case(&case);
        assert!(report.is_empty(), "{report}");
    }
    for target in Target::ALL {
        for seed in 0..5 {
            let case = common::random_case(seed, target);
            assert!(validate_case(&case).is_valid(), "{target} seed {seed}");
        }
    }
}

#[test]
fn matpower_case30_has_30_buses_and_41_branches() {
    let text = include_str!("../data/case30.m");
    let mp = parse_matpower_subset(text).unwrap();
    assert_eq!(mp.network.n_buses, 30);
    assert_eq!(mp.network.lines.len(), 41);
    assert_eq!(mp.bus_numbers.len(), 30);
    assert_eq!(mp.base_mva, 100.0);
    assert!(!mp.generators.is_empty());
    assert!(mp.demand.iter().sum::<f64>() > 0.0);
}

#[test]
fn ieee30_self_discharge_compounds_to_hourly_rate() {
    let case = build_ieee30_scenario();
    let xi = case.storages[0].retention();
    let per_hour = xi.powi((1.0 / case.horizon.dt) as i32);
    assert!((per_hour - 0.99).abs() < 1e-12);
}
