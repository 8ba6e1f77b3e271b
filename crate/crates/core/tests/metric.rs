use gtd::contact::{
    embedding_jacobian, legendre_jacobian, legendre_map, lift_to_equilibrium, PhasePoint,
};
use gtd::expr::Expression;
use gtd::metric::{
    conformal_check, conformal_misfit, induced_metric, induced_metric_in_representation,
    lambda_variables, phase_metric, predicted_conformal_factor, pullback_to_canonical, LambdaMode,
    MetricSample, MetricSpec,
};
use gtd::relation::{homogeneous_sum, monomial_relation};
use gtd::GtdError;
use nalgebra::DMatrix;
use proptest::prelude::*;

fn nonzero() -> impl Strategy<Value = f64> {
    prop_oneof![0.3f64..3.0, -3.0f64..-0.3]
}

fn phase_point(n: usize) -> impl Strategy<Value = PhasePoint> {
    (
        -3.0f64..3.0,
        prop::collection::vec(nonzero(), n),
        prop::collection::vec(nonzero(), n),
    )
        .prop_map(|(phi, e, i)| PhasePoint::new(phi, e, i).unwrap())
}

fn specs(n: usize) -> Vec<MetricSpec> {
    let names = lambda_variables(n);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let invariant = (1..=n)
        .map(|k| Expression::parse(&format!("2 + ln(1 + (E{k}*I{k})^2)"), &names).unwrap())
        .collect();
    vec![
        MetricSpec::gt_identity(n, 1.5).unwrap(),
        MetricSpec::gt_eta(n, 1.0).unwrap(),
        MetricSpec::gt_general(
            vec![1.0; n],
            vec![1.0; n],
            LambdaMode::Expression(invariant),
        )
        .unwrap(),
        MetricSpec::gp(n, 1, 1.0).unwrap(),
        MetricSpec::natural(n, 0).unwrap(),
    ]
}

fn rel_diff(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).amax() / b.amax().max(1.0)
}

/// Tilted monomials with `β ∉ {0, 1}`.
fn exponents() -> impl Strategy<Value = Vec<f64>> {
    (0.15f64..1.2, 0.15f64..1.2)
        .prop_filter("beta away from 1", |(a, b)| (a + b - 1.0).abs() > 0.1)
        .prop_map(|(a, b)| vec![a, b])
}

proptest! {
    #[test]
    fn phase_metrics_are_symmetric(z in phase_point(2)) {
        for spec in specs(2) {
            let g = phase_metric(&spec, &z).unwrap().g;
            prop_assert!((&g - g.transpose()).amax() <= 1e-12 * g.amax());
        }
    }

    #[test]
    fn tlt_invariant_lambdas_give_a_congruent_metric(z in phase_point(3)) {
        let all = [0, 1, 2];
        for spec in specs(3).into_iter().filter(|s| !matches!(s.family(), gtd::metric::MetricFamily::Gp { .. })) {
            let g = phase_metric(&spec, &z).unwrap().g;
            let gt = phase_metric(&spec, &legendre_map(&z, &all).unwrap()).unwrap().g;
            let j = legendre_jacobian(&z, &all).unwrap();
            prop_assert!(rel_diff(&(j.transpose() * gt * j), &g) <= 1e-10);
        }
    }

    #[test]
    fn induced_metric_is_the_embedding_pullback(exps in exponents(), x in 0.5f64..2.0, y in 0.5f64..2.0) {
        let rel = monomial_relation(1.3, &exps).unwrap();
        let e = [x, y];
        let z = lift_to_equilibrium(&rel, &e).unwrap();
        let jac = embedding_jacobian(&rel, &e).unwrap();
        for spec in specs(2) {
            let oracle = jac.transpose() * phase_metric(&spec, &z).unwrap().g * &jac;
            let g = induced_metric(&spec, &rel, &e).unwrap().g;
            prop_assert!(rel_diff(&g, &oracle) <= 1e-10, "{}", spec.label());
        }
    }

    #[test]
    fn predicted_factor_matches_the_fitted_one(exps in exponents(), x in 0.5f64..2.0, y in 0.5f64..2.0, index in 0usize..2) {
        let rel = monomial_relation(1.0, &exps).unwrap();
        let spec = MetricSpec::gt_identity(2, 2.0).unwrap();
        let e = [x, y];
        let canon = induced_metric(&spec, &rel, &e).unwrap();
        let back = pullback_to_canonical(&induced_metric_in_representation(&spec, &rel, index, &e).unwrap(), &rel, index, &e).unwrap();
        let predicted = predicted_conformal_factor(&rel, &spec, index, &e).unwrap();
        let (f, misfit) = conformal_misfit(&back.g, &canon.g).unwrap();
        prop_assert!(misfit <= 1e-9);
        prop_assert!(((f - predicted.value) / predicted.value).abs() <= 1e-8);
    }

    #[test]
    fn natural_metric_is_representation_independent(x in 0.5f64..2.0, y in 0.5f64..2.0, index in 0usize..2) {
        let rel = homogeneous_sum(&[(1.0, vec![1.5, 0.0]), (1.0, vec![0.75, 0.75]), (0.5, vec![0.0, 1.5])]).unwrap();
        let spec = MetricSpec::natural(2, index).unwrap();
        let e = [x, y];
        let canon = induced_metric(&spec, &rel, &e).unwrap();
        let back = pullback_to_canonical(&induced_metric_in_representation(&spec, &rel, index, &e).unwrap(), &rel, index, &e).unwrap();
        prop_assert!((&back.g - &canon.g).amax() <= 1e-10 * canon.g.amax());
    }
}

#[test]
fn closed_form_components() {
    let rel = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
    let nat = induced_metric(&MetricSpec::natural(2, 0).unwrap(), &rel, &[1.0, 1.0])
        .unwrap()
        .g;
    let expected = DMatrix::from_row_slice(2, 2, &[-0.25, 0.75, 0.75, -0.25]);
    assert!((nat - expected).amax() < 1e-12);
    let hess = induced_metric(&MetricSpec::hessian_limit(2).unwrap(), &rel, &[1.0, 1.0])
        .unwrap()
        .g;
    let expected =
        DMatrix::from_row_slice(2, 2, &[-3.0 / 16.0, 9.0 / 16.0, 9.0 / 16.0, -3.0 / 16.0]);
    assert!((hess - expected).amax() < 1e-12);
    let half = monomial_relation(1.0, &[0.5, 0.5]).unwrap();
    let g = induced_metric(
        &MetricSpec::gt_identity(2, 1.0).unwrap(),
        &half,
        &[1.0, 1.0],
    )
    .unwrap();
    assert!(g.degenerate);
    let expected = DMatrix::from_row_slice(2, 2, &[-0.25, 0.25, 0.25, -0.25]);
    assert!((g.g - expected).amax() < 1e-12);
}

#[test]
fn representation_guards() {
    let rel = monomial_relation(1.0, &[1.0, 0.0]).unwrap();
    let spec = MetricSpec::gt_identity(2, 1.0).unwrap();
    assert!(matches!(
        induced_metric_in_representation(&spec, &rel, 1, &[2.0, 3.0]),
        Err(GtdError::SingularRepresentation { .. })
    ));
    let rel = monomial_relation(1.0, &[0.75, 0.75]).unwrap();
    let eta = MetricSpec::gt_eta(2, 1.0).unwrap();
    assert!(matches!(
        predicted_conformal_factor(&rel, &eta, 0, &[1.0, 1.0]),
        Err(GtdError::HypothesisNotMet(_))
    ));
}

#[test]
fn scaled_pair_is_conformal() {
    let g = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.3, -2.0]);
    let a = MetricSample::new(vec!["x".into(), "y".into()], g.clone(), vec![0.0, 0.0]);
    let b = MetricSample::new(vec!["x".into(), "y".into()], g * 2.0, vec![0.0, 0.0]);
    assert_eq!(conformal_check(&a, &b, 1e-12), Some(0.5));
    let mut c = b.clone();
    c.g[(0, 1)] += 0.1;
    c.g[(1, 0)] += 0.1;
    assert_eq!(conformal_check(&a, &c, 1e-9), None);
}

#[test]
fn spec_json_round_trip() {
    let names = lambda_variables(2);
    let names: Vec<&str> = names.iter().map(String::as_str).collect();
    let exprs = vec![
        Expression::parse("1 + (E1*I1)^2", &names).unwrap(),
        Expression::parse("exp(E2*I2)", &names).unwrap(),
    ];
    let mut all = specs(2);
    all.push(
        MetricSpec::gt_general(
            vec![1.0, 2.0],
            vec![1.0, 1.0],
            LambdaMode::Expression(exprs),
        )
        .unwrap(),
    );
    all.push(MetricSpec::hessian_limit(2).unwrap());
    let z = PhasePoint::new(0.4, vec![1.1, 0.7], vec![0.3, -0.9]).unwrap();
    for spec in all {
        let text = serde_json::to_string(&spec).unwrap();
        let back: MetricSpec = serde_json::from_str(&text).unwrap();
        let (g1, g2) = (
            phase_metric(&spec, &z).unwrap().g,
            phase_metric(&back, &z).unwrap().g,
        );
        assert!((g1 - g2).amax() <= 1e-14, "{text}");
    }
    assert!(serde_json::from_str::<MetricSpec>(r#"{"family":{"kind":"gt_general"},"xi":[1],"chi":[1],"lambda":{"kind":"constant","value":1},"extra":1}"#).is_err());
}
