//! The direct dual solver against hand-derived solutions and structural
//! properties.

use acpath::oracle::{grid_probe, kkt_classify, solve_dual, OracleConfig, DEFAULT_KKT_BAND};
use acpath::{Costs, Dataset};
use proptest::prelude::*;

fn symmetric_pair() -> Dataset {
    Dataset::from_samples(&[vec![1.0], vec![-1.0]], &[true, false], 0.01)
}

// Kernel entries are 1 ± 1e-4 and each row sums to 2, so the gradient at
// α = (C, C) is 2C − 1 in both coordinates: both duals stay at their bound
// while C < 1/2 and settle at 1/2 beyond.
#[test]
fn symmetric_pair_below_half() {
    let data = symmetric_pair();
    for c in [1e-3, 0.01, 0.1, 0.4] {
        let sol = solve_dual(&data, Costs::new(c, c), &OracleConfig::default()).unwrap();
        assert!((sol.alpha[0] - c).abs() < 1e-12 && (sol.alpha[1] - c).abs() < 1e-12, "{:?}", sol.alpha);
        assert!((sol.objective - (2.0 * c * c - 2.0 * c)).abs() < 1e-12);
        // decreasing either coordinate raises the objective: the gradient is negative
        assert!(2.0 * c - 1.0 < 0.0);
    }
}

#[test]
fn symmetric_pair_above_half() {
    let data = symmetric_pair();
    for c in [0.6, 2.0, 50.0] {
        let sol = solve_dual(&data, Costs::new(c, c), &OracleConfig::default()).unwrap();
        for a in &sol.alpha {
            assert!((a - 0.5).abs() < 1e-9, "{:?}", sol.alpha);
        }
        assert!((sol.beta[0] - 1.0).abs() < 1e-9 && sol.beta[1].abs() < 1e-9);
    }
}

fn strip_instance() -> (Dataset, f64) {
    let data = Dataset::from_samples(&[vec![2.0]], &[true], 0.01);
    let q = data.column(0).norm_squared();
    (data, q)
}

#[test]
fn boundary_point_is_ambiguous() {
    let (data, q) = strip_instance();
    let c = Costs::new(1.0 / q, 0.5);
    let sol = solve_dual(&data, c, &OracleConfig::default()).unwrap();
    assert_eq!(kkt_classify(&data, &sol, c, DEFAULT_KKT_BAND).ambiguous, vec![0]);
    let away = Costs::new(0.5 / q, 0.5);
    let sol = solve_dual(&data, away, &OracleConfig::default()).unwrap();
    assert!(kkt_classify(&data, &sol, away, DEFAULT_KKT_BAND).ambiguous.is_empty());
}

#[test]
fn strip_grid_has_two_regions() {
    let (data, q) = strip_instance();
    let probes = grid_probe(&data, 2.0 / q, 1.0, 2, &OracleConfig::default(), DEFAULT_KKT_BAND);
    assert_eq!(probes.len(), 4);
    let mut keys: Vec<String> = probes
        .iter()
        .map(|p| p.classification.as_ref().unwrap().sets.canonical_key().as_str().to_string())
        .collect();
    keys.sort();
    keys.dedup();
    assert_eq!(keys, vec!["I".to_string(), "M".to_string()]);
}

fn instance() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<bool>)> {
    (2usize..7).prop_flat_map(|n| {
        (
            prop::collection::vec(prop::collection::vec(-2.0..2.0f64, 2), n),
            prop::collection::vec(any::<bool>(), n),
        )
            .prop_map(|(mut x, mut y)| {
                // both classes present
                y[0] = true;
                y[1] = false;
                x[0][0] += 1.0;
                x[1][0] -= 1.0;
                (x, y)
            })
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn input_order_does_not_matter(
        (x, y) in instance(),
        cp in 0.01..20.0f64,
        cm in 0.01..20.0f64,
        rot in 0usize..7,
    ) {
        let n = x.len();
        let a = Dataset::from_samples(&x, &y, 0.01);
        let order: Vec<usize> = (0..n).map(|i| (i + rot) % n).rev().collect();
        let xs: Vec<Vec<f64>> = order.iter().map(|&i| x[i].clone()).collect();
        let ys: Vec<bool> = order.iter().map(|&i| y[i]).collect();
        let b = Dataset::from_samples(&xs, &ys, 0.01);
        let c = Costs::new(cp, cm);
        let cfg = OracleConfig::default();
        let (sa, sb) = (solve_dual(&a, c, &cfg).unwrap(), solve_dual(&b, c, &cfg).unwrap());
        for (p, q) in sa.beta.iter().zip(&sb.beta) {
            prop_assert!((p - q).abs() <= 1e-6 * (1.0 + p.abs()), "{:?} vs {:?}", sa.beta, sb.beta);
        }
        prop_assert!((sa.objective - sb.objective).abs() <= 1e-9 * (1.0 + sa.objective.abs()));
    }

    #[test]
    fn objective_decreases_as_costs_grow(
        (x, y) in instance(),
        cp in 0.0..10.0f64,
        cm in 0.0..10.0f64,
        dp in 0.0..10.0f64,
        dm in 0.0..10.0f64,
    ) {
        let data = Dataset::from_samples(&x, &y, 0.01);
        let cfg = OracleConfig::default();
        let small = solve_dual(&data, Costs::new(cp, cm), &cfg).unwrap();
        let large = solve_dual(&data, Costs::new(cp + dp, cm + dm), &cfg).unwrap();
        prop_assert!(large.objective <= small.objective + 1e-9 * (1.0 + small.objective.abs()));
    }

    #[test]
    fn duals_stay_in_the_box((x, y) in instance(), cp in 0.0..50.0f64, cm in 0.0..50.0f64) {
        let data = Dataset::from_samples(&x, &y, 0.01);
        let sol = solve_dual(&data, Costs::new(cp, cm), &OracleConfig::default()).unwrap();
        for (i, a) in sol.alpha.iter().enumerate() {
            let u = data.upper(i, cp, cm);
            prop_assert!(*a >= 0.0 && *a <= u);
        }
    }
}
