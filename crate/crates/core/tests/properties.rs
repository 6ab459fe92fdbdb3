use apnorm::apnorm::{ap_norms, GridPolicy};
use apnorm::lower_cert::{delta_lambda, triangle_hat, ModulusModel};
use apnorm::phases::{builtin, PhaseParams};
use apnorm::torus_spectra::{analyze, lp_sum, synthesize, Field, GridSpec};
use apnorm::Complex64;
use proptest::prelude::*;

fn grid() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        (3u32..=8).prop_map(|e| GridSpec::new(1, 1 << e).unwrap()),
        (2u32..=5).prop_map(|e| GridSpec::new(2, 1 << e).unwrap()),
        (2u32..=3).prop_map(|e| GridSpec::new(3, 1 << e).unwrap()),
    ]
}

fn field() -> impl Strategy<Value = Field> {
    grid().prop_flat_map(|g| {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), g.len())
            .prop_map(move |v| Field::new(g, v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect()).unwrap())
    })
}

fn unimodular() -> impl Strategy<Value = Field> {
    grid().prop_flat_map(|g| {
        prop::collection::vec(0.0f64..std::f64::consts::TAU, g.len())
            .prop_map(move |v| Field::new(g, v.into_iter().map(Complex64::cis).collect()).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip(f in field()) {
        let back = synthesize(&analyze(&f));
        for (a, b) in f.values().iter().zip(back.values()) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn parseval_for_unimodular_fields(f in unimodular()) {
        let s = analyze(&f);
        prop_assert!((lp_sum(&s, 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lp_norms_decrease_in_p(f in field(), p in 1.0f64..2.0, q in 1.0f64..2.0) {
        let s = analyze(&f);
        let (lo, hi) = if p < q { (p, q) } else { (q, p) };
        prop_assert!(lp_sum(&s, hi).unwrap() <= lp_sum(&s, lo).unwrap() * (1.0 + 1e-12));
    }

    #[test]
    fn triangle_transform_is_nonnegative(delta in 1e-3f64..3.0, u in prop::collection::vec(-500.0f64..500.0, 1..4)) {
        prop_assert!(triangle_hat(delta, &u) >= 0.0);
        prop_assert!(triangle_hat(delta, &u) <= triangle_hat(delta, &vec![0.0; u.len()]));
    }

    #[test]
    fn delta_lambda_decreases(
        alpha in 0.05f64..=1.0,
        c in 0.1f64..10.0,
        m in 1usize..=4,
        lambda in 1.0f64..1e4,
        factor in 1.01f64..10.0,
    ) {
        let model = ModulusModel::Power { alpha };
        let a = delta_lambda(lambda, &model, c, m).unwrap();
        let b = delta_lambda(lambda * factor, &model, c, m).unwrap();
        prop_assert!(b < a);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn tensor_norm_is_multiplicative(lambda in 1.0f64..24.0, p in 1.0f64..=2.0) {
        let policy = GridPolicy::default();
        let one = builtin("cosine", 1, &PhaseParams::default()).unwrap();
        let two = builtin("tensor_sum", 2, &PhaseParams::default()).unwrap();
        let a = ap_norms(&one, lambda, &[p], &policy).unwrap()[0].value;
        let b = ap_norms(&two, lambda, &[p], &policy).unwrap()[0].value;
        prop_assert!((b / (a * a) - 1.0).abs() < 1e-9, "{} vs {}", b, a * a);
    }
}

#[test]
fn linear_phases_are_single_characters() {
    let policy = GridPolicy::default();
    let phase = builtin("linear", 2, &PhaseParams { k: Some(vec![3, -2]), ..Default::default() }).unwrap();
    for lambda in [1.0, 7.0, 20.0] {
        for e in ap_norms(&phase, lambda, &[1.0, 1.3, 2.0], &policy).unwrap() {
            assert_eq!(e.value, 1.0);
        }
    }
    // a non-integral λ breaks periodicity; the coefficients never settle
    assert!(matches!(ap_norms(&phase, 2.5, &[1.0], &policy), Err(apnorm::Error::Unresolvable { .. })));
}
