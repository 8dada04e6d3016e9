use proptest::prelude::*;
use wavefront_atlas::expr::{diff, eval, parse, BinOp, Bindings, Expr, Func, Var};

/// Expressions that stay finite and in-domain for u, v, x in [0.2, 2].
fn safe_expr() -> impl Strategy<Value = Expr> {
    let leaf = prop_oneof![
        (0u32..50).prop_map(|k| Expr::Num(k as f64 / 10.0)),
        Just(Expr::Var(Var::U)),
        Just(Expr::Var(Var::V)),
        Just(Expr::Var(Var::X)),
        Just(Expr::Param("a".into())),
    ];
    leaf.prop_recursive(4, 24, 2, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Add, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Sub, a, b)),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| Expr::bin(BinOp::Mul, a, b)),
            inner.clone().prop_map(Expr::neg),
            // denominators bounded away from zero
            (inner.clone(), inner.clone()).prop_map(|(a, b)| {
                Expr::bin(BinOp::Div, a, Expr::bin(BinOp::Add, Expr::Num(2.0), Expr::call(Func::Cos, b)))
            }),
            (inner.clone(), 2u32..4).prop_map(|(a, n)| Expr::bin(BinOp::Pow, a, Expr::Num(n as f64))),
            inner.clone().prop_map(|a| Expr::call(Func::Sin, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Cos, a)),
            inner.clone().prop_map(|a| Expr::call(Func::Exp, Expr::call(Func::Sin, a))),
            inner.clone().prop_map(|a| {
                Expr::call(Func::Ln, Expr::bin(BinOp::Add, Expr::Num(1.0), Expr::bin(BinOp::Pow, a, Expr::Num(2.0))))
            }),
            // variable exponent on a positive base
            (inner.clone(), inner).prop_map(|(a, b)| {
                Expr::bin(BinOp::Pow, Expr::call(Func::Exp, Expr::call(Func::Cos, a)), Expr::call(Func::Sin, b))
            }),
        ]
    })
}

fn bind(u: f64, v: f64, x: f64) -> Bindings {
    Bindings::from_pairs(&[("u", u), ("v", v), ("x", x), ("a", 1.3)])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn print_then_parse_is_structural_identity(e in safe_expr()) {
        let once = parse(&e.to_string()).unwrap();
        let twice = parse(&once.to_string()).unwrap();
        prop_assert_eq!(&once, &twice);
        prop_assert_eq!(once, e);
    }

    #[test]
    fn derivative_matches_central_difference(
        e in safe_expr(),
        var in prop_oneof![Just(Var::U), Just(Var::V), Just(Var::X)],
        points in proptest::collection::vec((0.2f64..2.0, 0.2f64..2.0, 0.2f64..2.0), 10),
    ) {
        let d = diff(&e, var);
        for (u, v, x) in points {
            let base = eval(&e, &bind(u, v, x)).unwrap();
            prop_assume!(base.abs() < 1e6);
            let step = 1e-5;
            let shift = |s: f64| match var {
                Var::U => bind(u + s, v, x),
                Var::V => bind(u, v + s, x),
                Var::X => bind(u, v, x + s),
            };
            let fd = (eval(&e, &shift(step)).unwrap() - eval(&e, &shift(-step)).unwrap()) / (2.0 * step);
            let exact = eval(&d, &bind(u, v, x)).unwrap();
            prop_assert!(
                (exact - fd).abs() <= 1e-6 * (1.0 + exact.abs()),
                "d/d{} of {} at ({}, {}, {}): symbolic {} vs fd {}", var.name(), e, u, v, x, exact, fd
            );
        }
    }
}

#[test]
fn corpus_round_trips() {
    let corpus = [
        "p*v*exp(-v)",
        "u*(1-v)",
        "-delta*u + p*v/(1 + v^n)",
        "2^3^2",
        "x/(1+x^4)",
        "-(u - v) - -u",
        "ln(1 + u)^2*cos(x)/sin(v + 1)",
        "a^-b^c",
    ];
    for s in corpus {
        let e = parse(s).unwrap();
        assert_eq!(parse(&e.to_string()).unwrap(), e, "{s}");
    }
}
