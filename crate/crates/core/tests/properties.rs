mod common;

use collabsense::asymptotic::{h_q, j_eq_asym, j_opt_asym, AsymptoticConfig, AsymptoticGains};
use collabsense::ouprocess::{avar, variance_profile, OUSamplingScheme};
use collabsense::snapshot::{evaluate, equal_ea, optimal_ea};
use collabsense::topology::{nearest_neighbor, q_clique, rgg, uniform_positions};
use collabsense::SensorField;
use common::rayleigh_field_with;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn clique_degrees(k in 1usize..12, q in 1usize..9) {
        let t = q_clique(k * q, q).unwrap();
        prop_assert_eq!(t.n_edges(), k * q * q);
        prop_assert!((0..k * q).all(|n| t.degree(n) == q));
        prop_assert!(t.is_symmetric());
    }

    #[test]
    fn nearest_neighbor_degrees(n in 1usize..80, q_frac in 0.0f64..1.0, seed in any::<u64>()) {
        let q = 1 + ((n - 1) as f64 * q_frac) as usize;
        let t = nearest_neighbor(&uniform_positions(n, seed), q).unwrap();
        prop_assert!((0..n).all(|v| t.degree(v) == q && t.contains(v, v)));
    }

    #[test]
    fn nearest_neighbor_sets_are_nested(n in 2usize..60, seed in any::<u64>()) {
        let pts = uniform_positions(n, seed);
        let mut prev = nearest_neighbor(&pts, 1).unwrap();
        for q in 2..=n.min(6) {
            let next = nearest_neighbor(&pts, q).unwrap();
            prop_assert!(prev.is_subset_of(&next));
            prev = next;
        }
    }

    #[test]
    fn rgg_symmetric_and_monotone(n in 1usize..120, r1 in 0.0f64..0.5, dr in 0.0f64..0.5, seed in any::<u64>()) {
        let pts = uniform_positions(n, seed);
        let a = rgg(&pts, r1).unwrap();
        let b = rgg(&pts, r1 + dr).unwrap();
        prop_assert!(a.is_symmetric() && b.is_symmetric());
        prop_assert!(a.is_subset_of(&b));
    }

    #[test]
    fn optimal_dominates_equal(
        n in 2usize..40,
        q_frac in 0.0f64..1.0,
        energy in 0.05f64..20.0,
        sigma2 in 0.1f64..3.0,
        seed in any::<u64>(),
    ) {
        let q = 1 + ((n - 1) as f64 * q_frac) as usize;
        let topo = nearest_neighbor(&uniform_positions(n, seed), q).unwrap();
        let field = rayleigh_field_with(n, seed ^ 1, 1.0, sigma2, 1.0);
        let opt = optimal_ea(&field, &topo, energy).unwrap();
        let eq = evaluate(&field, &equal_ea(&field, &topo, energy).unwrap()).unwrap();
        prop_assert!(opt.fisher >= eq.fisher * (1.0 - 1e-12), "{} < {}", opt.fisher, eq.fisher);
        let m = evaluate(&field, &opt.weights).unwrap();
        prop_assert!((m.fisher - opt.fisher).abs() <= 1e-8 * opt.fisher);
        prop_assert!((m.energy - energy).abs() <= 1e-10 * energy);
    }

    #[test]
    fn optimal_is_edge_monotone(n in 3usize..40, seed in any::<u64>()) {
        let pts = uniform_positions(n, seed);
        let field = rayleigh_field_with(n, seed ^ 2, 1.0, 1.0, 1.0);
        let mut prev = 0.0;
        for q in 1..=n.min(5) {
            let j = optimal_ea(&field, &nearest_neighbor(&pts, q).unwrap(), 0.7).unwrap().fisher;
            prop_assert!(j >= prev - 1e-10, "q={} {} < {}", q, j, prev);
            prev = j;
        }
    }

    #[test]
    fn optimal_is_energy_monotone(n in 1usize..30, seed in any::<u64>()) {
        let q = n.min(3);
        let topo = nearest_neighbor(&uniform_positions(n, seed), q).unwrap();
        let field = rayleigh_field_with(n, seed ^ 3, 1.0, 1.0, 1.0);
        let js: Vec<f64> = [0.1, 0.7, 5.0, 50.0]
            .iter()
            .map(|&e| optimal_ea(&field, &topo, e).unwrap().fisher)
            .collect();
        prop_assert!(js.windows(2).all(|w| w[1] > w[0]), "{:?}", js);
    }

    #[test]
    fn asymptotic_dominance(
        alpha_h in 0.2f64..3.0,
        alpha_g in 0.2f64..3.0,
        sigma2 in 0.0f64..4.0,
        q in 1usize..40,
        energy in 0.01f64..10.0,
    ) {
        let cfg = AsymptoticConfig {
            total_energy: energy,
            eta2: 1.0,
            xi2: 1.0,
            sigma2,
            q,
            gains: AsymptoticGains::Rayleigh { alpha_h, alpha_g },
        };
        let jo = j_opt_asym(&cfg).unwrap();
        let je = j_eq_asym(&cfg).unwrap();
        prop_assert!(jo >= je * (1.0 - 1e-12), "{} < {}", jo, je);
    }
}

#[test]
fn homogeneous_gains_make_strategies_agree() {
    let n = 200;
    for &q in &[1usize, 4, 10] {
        let topo = q_clique(n, q).unwrap();
        let field = SensorField::new(vec![0.8; n], vec![1.3; n], 1.0, 1.0, 1.0).unwrap();
        let opt = optimal_ea(&field, &topo, 0.7).unwrap().fisher;
        let eq = evaluate(&field, &equal_ea(&field, &topo, 0.7).unwrap()).unwrap().fisher;
        assert!((opt - eq).abs() / opt < 1e-6, "Q={q}: {opt} vs {eq}");
    }
}

#[test]
fn h_q_decreasing_and_in_unit_interval() {
    for &lambda in &[0.1, 0.5, 1.0, 2.0] {
        let mut prev = 1.0;
        for q in 1..=50 {
            let h = h_q(q, lambda).unwrap();
            assert!(h > 0.0 && h < prev, "Q={q} lambda={lambda}: {h} vs {prev}");
            prev = h;
        }
    }
}

#[test]
fn worst_case_and_average_variance_fall_with_period() {
    let base = OUSamplingScheme::new(1.0, 1.0, 3.0, 1.0, 2.5).unwrap();
    let mut prev_max = f64::INFINITY;
    for &t in &[3.0, 1.5, 0.75, 0.1] {
        let p = variance_profile(&base.with_period(t).unwrap(), 201).unwrap();
        let max = p.variances.iter().cloned().fold(f64::MIN, f64::max);
        assert!(max <= prev_max, "T={t}");
        prev_max = max;
    }
    let avars: Vec<f64> = [0.05, 0.1, 0.4, 0.7, 1.5, 3.0]
        .iter()
        .map(|&t| avar(&base.with_period(t).unwrap()))
        .collect();
    assert!(avars.windows(2).all(|w| w[0] <= w[1]), "{avars:?}");
}
