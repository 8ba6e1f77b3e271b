use gtd::deriv::{fd_partial, multi_indices, Jet4};
use gtd::expr::Expression;
use proptest::prelude::*;

const VARS: [&str; 2] = ["E1", "E2"];

fn check_against_fd(source: &str, point: &[f64]) {
    let expr = Expression::parse(source, &VARS).unwrap();
    let jet: Jet4 = expr.eval(&Jet4::seeds(point).unwrap()).unwrap();
    for alpha in multi_indices(2) {
        let order: u8 = alpha.iter().sum();
        if order == 0 {
            continue;
        }
        let fd = fd_partial(|x| expr.eval::<f64>(x), point, &alpha, None).unwrap();
        let exact = jet.partial(&alpha);
        let tol = if order <= 3 { 1e-4 } else { 1e-2 };
        assert!(
            (fd - exact).abs() <= tol * exact.abs().max(1.0),
            "{source} at {point:?}, alpha {alpha:?}: jet {exact}, fd {fd}"
        );
    }
}

#[test]
fn partials_agree_with_finite_differences() {
    let sources = [
        "(E1*E2)^0.75",
        "E1^1.5 + E1^0.75*E2^0.75 + 0.5*E2^1.5",
        "exp(E1/E2) * ln(E1 + E2)",
        "E1/(1 + E2^2)",
    ];
    for s in sources {
        for p in [[1.0, 1.0], [0.7, 1.6], [1.9, 0.55]] {
            check_against_fd(s, &p);
        }
    }
}

#[test]
fn quartic_polynomial_is_exact() {
    let expr = Expression::parse("3*E1^4 - 2*E1^2*E2^2 + E2^3 - 5", &VARS).unwrap();
    let p = [1.3, -0.4];
    let j: Jet4 = expr.eval(&Jet4::seeds(&p).unwrap()).unwrap();
    let (x, y) = (p[0], p[1]);
    assert!((j.partial(&[4, 0]) - 72.0).abs() < 1e-12);
    assert!((j.partial(&[2, 2]) + 8.0).abs() < 1e-12);
    assert!((j.partial(&[0, 3]) - 6.0).abs() < 1e-12);
    assert!((j.partial(&[3, 0]) - 72.0 * x).abs() < 1e-12);
    assert!((j.partial(&[1, 1]) + 8.0 * x * y).abs() < 1e-12);
    assert!((j.partial(&[0, 4])).abs() < 1e-12);
}

fn arbitrary_point() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.3f64..3.0, 2)
}

proptest! {
    #[test]
    fn leibniz_rule(p in arbitrary_point(), a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let s = Jet4::seeds(&p).unwrap();
        let f = (&s[0] * &s[1]).add_scalar(a);
        let g = s[0].powf(1.5).unwrap().add_scalar(b);
        let fg = &f * &g;
        for axis in 0..2 {
            let lhs = fg.first(axis);
            let rhs = f.first(axis) * g.value() + f.value() * g.first(axis);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        }
        let lhs = fg.second(0, 1);
        let rhs = f.second(0, 1) * g.value() + f.first(0) * g.first(1) + f.first(1) * g.first(0) + f.value() * g.second(0, 1);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn ln_inverts_exp(p in arbitrary_point()) {
        let s = Jet4::seeds(&p).unwrap();
        let x = &s[0] * &s[1];
        let back = x.exp().ln().unwrap();
        for alpha in multi_indices(2) {
            let d = back.partial(&alpha) - x.partial(&alpha);
            prop_assert!(d.abs() <= 1e-9 * x.partial(&alpha).abs().max(1.0), "{:?}", alpha);
        }
    }

    #[test]
    fn power_of_reciprocal(p in arbitrary_point(), q in -2.5f64..2.5) {
        let s = Jet4::seeds(&p).unwrap();
        let lhs = s[0].recip().unwrap().powf(q).unwrap();
        let rhs = s[0].powf(-q).unwrap();
        for alpha in multi_indices(2) {
            let d = lhs.partial(&alpha) - rhs.partial(&alpha);
            prop_assert!(d.abs() <= 1e-9 * rhs.partial(&alpha).abs().max(1.0));
        }
    }
}

#[test]
fn domain_errors_surface() {
    let p = [-1.0, 1.0];
    let s = Jet4::seeds(&p).unwrap();
    assert!(s[0].ln().is_err());
    assert!(s[0].powf(0.5).is_err());
    let zero = Jet4::constant(2, 0.0);
    assert!(s[1].div(&zero).is_err());
}
