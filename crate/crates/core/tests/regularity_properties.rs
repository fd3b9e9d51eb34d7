use colombeau_core::catalog::CatalogNet;
use colombeau_core::nets::{CompactBox, Evidence, SamplingSpec};
use colombeau_core::regularity::{
    classify_ginfty, classify_gla, classify_sublinear_sequences, default_bases, growth_char_check, landau_check,
    null_propagation_check, p_sequence, PSequence, DEFAULT_TOL, LANDAU_SLACK, LANDAU_TRIGGER,
};
use colombeau_core::scale::{EpsGrid, FitOptions};
use proptest::prelude::*;
use std::sync::OnceLock;

/// Reference compacts plus a two-box union.
fn compacts() -> Vec<CompactBox> {
    let mut c = CatalogNet::reference_compacts();
    c.push(CompactBox::from_boxes(vec![vec![(0.0, 1.0)], vec![(2.0, 3.0)]]).unwrap());
    c
}

/// `(net, sequences over compacts())`, computed once per test binary.
fn catalog_sequences() -> &'static [(CatalogNet, Vec<PSequence>)] {
    static CELL: OnceLock<Vec<(CatalogNet, Vec<PSequence>)>> = OnceLock::new();
    CELL.get_or_init(|| {
        let grid = EpsGrid::default();
        CatalogNet::all()
            .into_iter()
            .map(|net| {
                let u = net.build().unwrap();
                let seqs = compacts()
                    .iter()
                    .map(|c| p_sequence(&u, c, 6, &grid, &SamplingSpec::default(), &FitOptions::default()).unwrap())
                    .collect();
                (net, seqs)
            })
            .collect()
    })
}

fn sequence(net: CatalogNet, idx: usize) -> &'static PSequence {
    &catalog_sequences().iter().find(|(n, _)| *n == net).unwrap().1[idx]
}

#[test]
fn landau_holds_on_catalog_nets() {
    for (net, seqs) in catalog_sequences() {
        for s in seqs {
            let r = landau_check(s, LANDAU_TRIGGER, LANDAU_SLACK).unwrap();
            assert!(r.all_satisfied(), "{net}: {:?}", r.entries);
            assert!(r.skipped.is_empty(), "{net}: {:?}", r.skipped);
            assert!(null_propagation_check(s).consistent(), "{net}");
        }
    }
    let ms = landau_check(sequence(CatalogNet::Multiscale { j: 8 }, 0), LANDAU_TRIGGER, LANDAU_SLACK).unwrap();
    for e in &ms.entries {
        let expected = if e.k == 1 { 1.0 } else { 2.0 };
        assert!(e.triggered && (e.margin - expected).abs() <= 0.2, "{:?}", ms.entries);
    }
    let flat = landau_check(sequence(CatalogNet::ConstGinfty { n: 4 }, 0), LANDAU_TRIGGER, LANDAU_SLACK).unwrap();
    assert!(flat.entries.iter().all(|e| !e.triggered));
}

#[test]
fn ginfty_criteria_agree_on_catalog_nets() {
    for (net, seqs) in catalog_sequences() {
        for s in seqs {
            let v = classify_ginfty(s, DEFAULT_TOL);
            assert!(v.agree, "{net}: {v:?}");
        }
    }
    assert_eq!(classify_ginfty(sequence(CatalogNet::ConstGinfty { n: 4 }, 0), DEFAULT_TOL).evidence, Evidence::Yes);
    assert_eq!(classify_ginfty(sequence(CatalogNet::Osc, 0), DEFAULT_TOL).evidence, Evidence::No);
    assert_eq!(classify_ginfty(sequence(CatalogNet::One, 1), DEFAULT_TOL).evidence, Evidence::Yes);
}

#[test]
fn growth_criteria_agree_on_catalog_nets() {
    for (net, seqs) in catalog_sequences() {
        for s in seqs {
            for base in default_bases() {
                let g = growth_char_check(s, base, DEFAULT_TOL).unwrap();
                assert!(g.agree, "{net} base={base}: {g:?}");
            }
        }
    }
    let osc = sequence(CatalogNet::Osc, 0);
    let e = std::f64::consts::E;
    assert_eq!(growth_char_check(osc, e, DEFAULT_TOL).unwrap().ratio_test, Evidence::Yes);
    assert_eq!(growth_char_check(osc, 1.0, DEFAULT_TOL).unwrap().ratio_test, Evidence::No);
    let ms = sequence(CatalogNet::Multiscale { j: 8 }, 0);
    assert_eq!(growth_char_check(ms, e * e, DEFAULT_TOL).unwrap().bound_test, Evidence::No);
}

#[test]
fn ginfty_implies_every_gla_on_catalog_nets() {
    for (net, seqs) in catalog_sequences() {
        for s in seqs {
            if classify_ginfty(s, DEFAULT_TOL).evidence == Evidence::Yes {
                for a in [0.5, 1.0, 2.0] {
                    assert_eq!(classify_gla(s, a, DEFAULT_TOL).unwrap().evidence, Evidence::Yes, "{net} a={a}");
                }
            }
        }
    }
}

#[test]
fn classification_examples() {
    let gla = |net, a| classify_gla(sequence(net, 0), a, DEFAULT_TOL).unwrap();
    assert_eq!(gla(CatalogNet::Osc, 1.5).evidence, Evidence::Yes);
    assert_eq!(gla(CatalogNet::Osc, 0.5).evidence, Evidence::No);
    let d = gla(CatalogNet::Delta, 1.5);
    assert_eq!(d.evidence, Evidence::Yes);
    assert!((d.s_hat - 1.0).abs() <= 0.05, "{d:?}");
    assert_eq!(gla(CatalogNet::Delta, 0.8).evidence, Evidence::No);
    for a in [1.0, 2.0, 4.0] {
        assert_eq!(gla(CatalogNet::Multiscale { j: 8 }, a).evidence, Evidence::No);
    }
    let w = gla(CatalogNet::Osc, 1.5);
    let (ap, b) = (w.a_prime.unwrap(), w.b.unwrap());
    assert!(ap < 1.5);
    for e in sequence(CatalogNet::Osc, 0).entries() {
        assert!(e.ln_p() <= ap * e.k as f64 + b);
    }

    let osc = &catalog_sequences().iter().find(|(n, _)| *n == CatalogNet::Osc).unwrap().1[..2];
    let v = classify_sublinear_sequences(osc, DEFAULT_TOL).unwrap();
    assert_eq!(v.evidence, Evidence::Yes);
    assert!(v.entries.iter().all(|e| (e.a_k - 1.25).abs() <= 0.1), "{:?}", v.entries);
    let ms = &catalog_sequences().iter().find(|(n, _)| matches!(n, CatalogNet::Multiscale { .. })).unwrap().1;
    let v = classify_sublinear_sequences(ms, DEFAULT_TOL).unwrap();
    assert_eq!(v.evidence, Evidence::No);
    assert!(v.entries.iter().all(|e| e.growing && (e.s_hat - 6.0).abs() <= 0.5));
}

#[test]
fn multiscale_ratios_escalate() {
    for s in &catalog_sequences().iter().find(|(n, _)| matches!(n, CatalogNet::Multiscale { .. })).unwrap().1 {
        let l = s.ln_values();
        let ratios: Vec<f64> = l.windows(2).map(|w| w[1] - w[0]).collect();
        for w in ratios.windows(2) {
            assert!(w[1] >= w[0] - 2.0 * DEFAULT_TOL, "{ratios:?}");
        }
    }
}

fn arb_sequence() -> impl Strategy<Value = PSequence> {
    prop::collection::vec(-20.0f64..20.0, 5..=9).prop_map(|l| PSequence::from_ln(&l).unwrap())
}

/// `ln P_k = c + s k + q k^2` with `q >= 0` is log-convex.
fn arb_log_convex() -> impl Strategy<Value = PSequence> {
    (-5.0f64..5.0, -3.0f64..3.0, 0.0f64..2.0, 2usize..=8).prop_map(|(c, s, q, k_max)| {
        let l: Vec<f64> = (0..=k_max).map(|k| c + s * k as f64 + q * (k * k) as f64).collect();
        PSequence::from_ln(&l).unwrap()
    })
}

proptest! {
    #[test]
    fn gla_is_monotone_in_a(s in arb_sequence(), a1 in 0.05f64..10.0, gap in 0.0f64..10.0) {
        if classify_gla(&s, a1, DEFAULT_TOL).unwrap().evidence == Evidence::Yes {
            prop_assert_eq!(classify_gla(&s, a1 + gap, DEFAULT_TOL).unwrap().evidence, Evidence::Yes);
        }
        if classify_gla(&s, a1 + gap, DEFAULT_TOL).unwrap().evidence == Evidence::No {
            prop_assert_eq!(classify_gla(&s, a1, DEFAULT_TOL).unwrap().evidence, Evidence::No);
        }
    }

    #[test]
    fn ginfty_implies_gla(s in arb_sequence()) {
        if classify_ginfty(&s, DEFAULT_TOL).evidence == Evidence::Yes {
            for a in [0.5, 1.0, 2.0] {
                prop_assert_eq!(classify_gla(&s, a, DEFAULT_TOL).unwrap().evidence, Evidence::Yes);
            }
        }
    }

    #[test]
    fn gla_witness_bounds_the_sequence(s in arb_sequence(), a in 0.05f64..10.0) {
        let v = classify_gla(&s, a, DEFAULT_TOL).unwrap();
        if let (Some(ap), Some(b)) = (v.a_prime, v.b) {
            prop_assert!(ap < a);
            for e in s.entries() {
                prop_assert!(e.ln_p() <= ap * e.k as f64 + b + 1e-9);
            }
        }
    }

    #[test]
    fn log_convex_sequences_satisfy_landau(s in arb_log_convex()) {
        let r = landau_check(&s, LANDAU_TRIGGER, 0.0).unwrap();
        prop_assert!(r.all_satisfied());
    }

    #[test]
    fn null_suffix_is_consistent(head in prop::collection::vec(-5.0f64..5.0, 1..5), nulls in 0usize..4) {
        let mut l = head.clone();
        l.extend(std::iter::repeat_n(f64::NEG_INFINITY, nulls));
        let r = null_propagation_check(&PSequence::from_ln(&l).unwrap());
        prop_assert!(r.consistent());
        prop_assert_eq!(r.first_null, (nulls > 0).then_some(head.len() as u32));
    }
}

#[test]
fn injected_null_violation_is_reported() {
    let s = PSequence::from_ln(&[0.0, f64::NEG_INFINITY, 1.0]).unwrap();
    let r = null_propagation_check(&s);
    assert_eq!((r.first_null, r.violation), (Some(1), Some(2)));
}
