use colombeau_core::scale::{estimate_valuation, EpsGrid, EstimateMethod, FitOptions, PowerScale};
use num_rational::Rational64;
use proptest::prelude::*;

fn q(n: i64, d: i64) -> Rational64 {
    Rational64::new(n, d)
}

/// Up to four terms with exponents in `[-5, 5]` on a sixths lattice.
fn arb_scale() -> impl Strategy<Value = PowerScale<f64>> {
    prop::collection::vec((-10.0f64..10.0, -30i64..=30), 0..=4).prop_map(|terms| {
        PowerScale::from_terms(terms.into_iter().map(|(c, e)| (c, q(e, 6))))
    })
}

fn arb_nonzero_scale() -> impl Strategy<Value = PowerScale<f64>> {
    arb_scale().prop_filter("nonzero", |z| !z.is_zero())
}

fn samples(z: &PowerScale<f64>, grid: &EpsGrid) -> Vec<(f64, f64)> {
    z.sample(grid).iter().map(|s| (s.eps, s.value)).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn sharp_norm_is_ultrametric(z in arb_scale(), w in arb_scale()) {
        let sum = (&z + &w).sharp_norm_exact();
        prop_assert!(sum <= z.sharp_norm_exact().max(w.sharp_norm_exact()));
    }

    #[test]
    fn sharp_norm_is_multiplicative(z in arb_nonzero_scale(), w in arb_nonzero_scale()) {
        let prod = &z * &w;
        prop_assert_eq!(prod.sharp_norm_exact(), z.sharp_norm_exact() * w.sharp_norm_exact());
        prop_assert_eq!(prod.valuation(), Some(z.valuation().unwrap() + w.valuation().unwrap()));
    }

    /// Nearly coincident exponents bias a finite tail window; unit gaps do not.
    #[test]
    fn fitted_valuation_matches_exact_for_separated_exponents(
        terms in prop::collection::vec((0.5f64..5.0, any::<bool>(), -5i64..=5), 1..=4),
    ) {
        let z = PowerScale::from_terms(terms.into_iter().map(|(c, neg, e)| (if neg { -c } else { c }, q(e, 1))));
        prop_assume!(!z.is_zero());
        let est = z.estimate(&EpsGrid::default(), &FitOptions::default()).unwrap();
        prop_assert!((est.value - z.valuation_exact()).abs() <= 0.05, "{:?}: {}", z, est.value);
    }

    #[test]
    fn constant_factor_does_not_move_fit(
        exp in -30i64..=30,
        coef in 0.1f64..10.0,
        c in 1e-6f64..1e6,
    ) {
        let grid = EpsGrid::default();
        let opts = FitOptions::default();
        let base = samples(&PowerScale::monomial(coef, q(exp, 6)), &grid);
        let scaled: Vec<_> = base.iter().map(|&(e, v)| (e, c * v)).collect();
        let a = estimate_valuation(&base, &opts).unwrap().value;
        let b = estimate_valuation(&scaled, &opts).unwrap().value;
        prop_assert!((a - b).abs() <= 0.05, "{} vs {}", a, b);
    }
}

#[test]
fn documented_examples() {
    let z = PowerScale::from_terms([(3.0, q(2, 1)), (5.0, q(5, 1))]);
    assert_eq!(z.valuation(), Some(q(2, 1)));
    assert!((z.sharp_norm() - (-2.0f64).exp()).abs() < 1e-15);
    let zero = PowerScale::<f64>::zero();
    assert_eq!(zero.valuation_exact(), f64::INFINITY);
    assert_eq!(zero.sharp_norm(), 0.0);
    assert_eq!(PowerScale::monomial(7.0, q(-3, 2)).valuation(), Some(q(-3, 2)));
    assert!((PowerScale::monomial(1.0, q(-1, 1)).sharp_norm() - std::f64::consts::E).abs() < 1e-15);

    let cancelled = &PowerScale::monomial(1.0, q(2, 1)) + &PowerScale::monomial(-1.0, q(2, 1));
    assert!(cancelled.is_zero());
    let prod = &PowerScale::monomial(2.0, q(2, 1)) * &PowerScale::monomial(3.0, q(3, 1));
    assert_eq!(prod.terms(), &[(6.0, q(5, 1))]);
    let sum = &PowerScale::monomial(1.0, q(1, 1)) + &PowerScale::monomial(1.0, q(3, 1));
    assert_eq!(sum.valuation(), Some(q(1, 1)));

    let grid = EpsGrid::new(0.5, 0.5, 3).unwrap();
    let vals: Vec<_> = PowerScale::monomial(1.0, q(-2, 1)).sample(&grid).iter().map(|s| (s.eps, s.value)).collect();
    assert_eq!(vals, [(0.5, 4.0), (0.25, 16.0), (0.125, 64.0)]);
    assert_eq!(PowerScale::monomial(1.0, q(1, 2)).eval(0.25), 0.5);

    let grid = EpsGrid::default();
    let opts = FitOptions::default();
    let est = PowerScale::monomial(1.0, q(3, 2)).estimate(&grid, &opts).unwrap();
    assert!((est.value - 1.5).abs() <= 0.05 && est.stable);
    assert!((z.estimate(&grid, &opts).unwrap().value - 2.0).abs() <= 0.05);
    let zeros = PowerScale::<f64>::zero().estimate(&grid, &opts).unwrap();
    assert_eq!(zeros.method, EstimateMethod::NegligibleFloor);
    assert_eq!(zeros.value, f64::INFINITY);
}

#[test]
fn overflow_is_flagged() {
    let grid = EpsGrid::new(0.5, 0.5, 20).unwrap();
    let s = PowerScale::monomial(1.0, q(-400, 1)).sample(&grid);
    assert!(!s[0].overflow);
    assert!(s.last().unwrap().overflow);
}
