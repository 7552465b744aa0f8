mod common;

use proptest::prelude::*;
use starshape::dominance::{fsd_compare, mps_contract, pointwise_reduce, ssd_compare};
use starshape::envelopes::{tilde_rho_z, Regime};
use starshape::measures::{evaluate, robust_var, MeasureSpec};
use starshape::scenario::RandomVariable;

fn level() -> impl Strategy<Value = f64> {
    prop_oneof![(0u32..=100).prop_map(|k| k as f64 / 100.0), 0.0..1.0f64]
}

fn mixture_level() -> impl Strategy<Value = f64> {
    prop_oneof![(1u32..=100).prop_map(|k| k as f64 / 100.0), 1e-6..1.0f64]
}

fn scenarios() -> impl Strategy<Value = RandomVariable> {
    prop::collection::vec((-10.0..10.0f64, 1u32..20), 1..10).prop_map(|pairs| {
        let total: f64 = pairs.iter().map(|p| p.1 as f64).sum();
        let (values, probs) = pairs.into_iter().map(|(v, w)| (v, w as f64 / total)).unzip();
        RandomVariable::weighted(values, probs).unwrap()
    })
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

fn leaf() -> impl Strategy<Value = MeasureSpec> {
    prop_oneof![
        level().prop_map(MeasureSpec::Var),
        level().prop_map(MeasureSpec::Es),
        Just(MeasureSpec::Mean),
        Just(MeasureSpec::EssSup),
        (-5.0..5.0f64).prop_map(MeasureSpec::Const),
        (0.01..5.0f64).prop_map(MeasureSpec::Entropic),
        prop::collection::vec((1u32..10, mixture_level()), 1..4).prop_map(|parts| {
            let total: f64 = parts.iter().map(|p| p.0 as f64).sum();
            MeasureSpec::EsMixture(parts.into_iter().map(|(w, b)| (w as f64 / total, b)).collect())
        }),
        (level(), 0.0..2.0f64, 0.0..2.0f64).prop_map(|(beta, d_b, extra)| MeasureSpec::RobustVar {
            beta,
            d_b,
            d_u: d_b + extra
        }),
    ]
}

fn measure() -> impl Strategy<Value = MeasureSpec> {
    leaf().prop_recursive(3, 12, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..4).prop_map(MeasureSpec::MinFamily),
            prop::collection::vec(inner, 1..4).prop_map(MeasureSpec::MaxFamily),
        ]
    })
}

/// Star-shaped, SSD-consistent measures.
fn convex_measure() -> impl Strategy<Value = MeasureSpec> {
    prop_oneof![
        level().prop_map(MeasureSpec::Es),
        (0.01..3.0f64).prop_map(MeasureSpec::Entropic),
        (mixture_level(), mixture_level()).prop_map(|(a, b)| MeasureSpec::EsMixture(vec![(0.5, a), (0.5, b)])),
        Just(MeasureSpec::Mean),
    ]
}

fn value(s: &MeasureSpec, x: &RandomVariable) -> f64 {
    evaluate(s, x).unwrap().value()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn display_parses_back(s in measure()) {
        let text = s.to_string();
        prop_assert_eq!(MeasureSpec::parse(&text).unwrap(), s, "{}", text);
    }

    #[test]
    fn quantiles_match_sorting(x in scenarios(), beta in level()) {
        let d = x.to_distribution();
        let a = common::atoms(&x);
        prop_assert_eq!(d.var_at(beta).unwrap(), common::var_bruteforce(&a, beta));
        prop_assert!(close(d.es_at(beta).unwrap(), common::es_bruteforce(&a, beta), 1e-12));
    }

    #[test]
    fn values_depend_only_on_the_law(s in measure(), x in scenarios(), rot in 0usize..10) {
        let (mut v, mut p) = (x.values().to_vec(), x.probabilities().to_vec());
        let k = rot % v.len();
        v.rotate_left(k);
        p.rotate_left(k);
        let y = RandomVariable::weighted(v, p).unwrap();
        prop_assert!(close(value(&s, &x), value(&s, &y), 1e-12));
    }

    #[test]
    fn robust_var_widens_with_the_interval(
        x in scenarios(), beta in level(), d_b in 0.0..2.0f64, extra in 0.0..2.0f64, more in 0.0..1.0f64,
    ) {
        let narrow = robust_var(&x, beta, d_b, d_b + extra).unwrap();
        let wide = robust_var(&x, beta, (d_b - more).max(0.0), d_b + extra + more).unwrap();
        prop_assert!(wide >= narrow);
        let plain = x.to_distribution().var_at(beta).unwrap();
        prop_assert!(robust_var(&x, beta, 1.0, 1.0).unwrap() == plain);
    }

    #[test]
    fn robust_var_scales(x in scenarios(), beta in level(), lambda in 0.0..5.0f64) {
        let scaled = x.transform(lambda, 0.0).unwrap();
        let lhs = robust_var(&scaled, beta, 0.5, 2.0).unwrap();
        let rhs = lambda * robust_var(&x, beta, 0.5, 2.0).unwrap();
        prop_assert!(close(lhs, rhs, 1e-12));
    }

    #[test]
    fn entropic_tends_to_the_mean(x in scenarios()) {
        let mean = x.to_distribution().mean();
        prop_assert!((value(&MeasureSpec::Entropic(1e-7), &x) - mean).abs() <= 1e-5);
        prop_assert!(value(&MeasureSpec::Entropic(0.5), &x) >= mean - 1e-12);
    }

    #[test]
    fn single_level_mixture_is_es(x in scenarios(), beta in mixture_level()) {
        let mix = value(&MeasureSpec::EsMixture(vec![(1.0, beta)]), &x);
        prop_assert_eq!(mix, value(&MeasureSpec::Es(beta), &x));
    }

    #[test]
    fn families_bracket_children(children in prop::collection::vec(leaf(), 1..4), x in scenarios()) {
        let lo = value(&MeasureSpec::MinFamily(children.clone()), &x);
        let hi = value(&MeasureSpec::MaxFamily(children.clone()), &x);
        for c in &children {
            let v = value(c, &x);
            prop_assert!(lo <= v && v <= hi);
        }
    }

    #[test]
    fn envelope_bounds_the_measure(s in convex_measure(), x in scenarios(), scale in 0.1..3.0f64) {
        // candidates on the same space as x: scalings and an unrelated law
        let zero = value(&s, &RandomVariable::point_mass(0.0).unwrap());
        let rho_x = value(&s, &x);
        let mut zs = vec![x.transform(scale, 0.0).unwrap(), x.transform(1.0, scale).unwrap()];
        zs.push(x.with_values(x.values().iter().map(|v| v.abs() + scale).collect()).unwrap());
        for z in zs {
            let cert = tilde_rho_z(&x.to_distribution(), &z.to_distribution(), value(&s, &z), zero, Regime::Star).unwrap();
            prop_assert!(cert.value.value() >= rho_x - 1e-9 * (1.0 + rho_x.abs()), "{} vs {}", cert.value, rho_x);
        }
    }

    #[test]
    fn contractions_and_reductions_are_dominated(
        x in scenarios(), i in 0usize..10, j in 0usize..10, deltas in prop::collection::vec(0.0..2.0f64, 10),
    ) {
        let (i, j) = (i % x.len(), j % x.len());
        if i != j {
            let y = mps_contract(&x, i, j).unwrap();
            prop_assert!(ssd_compare(&x.to_distribution(), &y.to_distribution()).holds);
            prop_assert!(common::ssd_oracle(&common::atoms(&x), &common::atoms(&y), 1e-9));
            prop_assert!((x.to_distribution().mean() - y.to_distribution().mean()).abs() <= 1e-12);
        }
        let y = pointwise_reduce(&x, &deltas[..x.len()]).unwrap();
        prop_assert!(fsd_compare(&x.to_distribution(), &y.to_distribution()).holds);
    }

    #[test]
    fn integrated_quantile_is_concave(x in scenarios()) {
        let d = x.to_distribution();
        let g = d.integrated_quantile();
        let slopes: Vec<f64> = (1..g.breakpoints().len()).map(|j| g.slope(j)).collect();
        prop_assert!(slopes.windows(2).all(|w| w[0] >= w[1]));
        prop_assert!(close(g.value_at(0.0), d.mean(), 1e-12));
    }
}
