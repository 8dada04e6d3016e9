use super::{BinOp, Expr, Func, Var};

/// Symbolic derivative of `e` with respect to `var`.
///
/// The result is only constant-folded, not simplified; it is correct
/// pointwise rather than canonical.
pub fn diff(e: &Expr, var: Var) -> Expr {
    match e {
        Expr::Num(_) | Expr::Param(_) => Expr::Num(0.0),
        Expr::Var(w) => Expr::Num(if *w == var { 1.0 } else { 0.0 }),
        Expr::Neg(a) => neg(diff(a, var)),
        Expr::Call(f, a) => {
            let da = diff(a, var);
            let outer = match f {
                Func::Exp => e.clone(),
                Func::Ln => div(Expr::Num(1.0), (**a).clone()),
                Func::Sin => Expr::call(Func::Cos, (**a).clone()),
                Func::Cos => neg(Expr::call(Func::Sin, (**a).clone())),
            };
            mul(outer, da)
        }
        Expr::Bin(op, a, b) => {
            let (a, b) = (a.as_ref(), b.as_ref());
            match op {
                BinOp::Add => add(diff(a, var), diff(b, var)),
                BinOp::Sub => sub(diff(a, var), diff(b, var)),
                BinOp::Mul => add(mul(diff(a, var), b.clone()), mul(a.clone(), diff(b, var))),
                BinOp::Div => div(
                    sub(mul(diff(a, var), b.clone()), mul(a.clone(), diff(b, var))),
                    pow(b.clone(), Expr::Num(2.0)),
                ),
                BinOp::Pow if !b.depends_on(var) => {
                    // n a^(n-1) a'
                    let n_minus_1 = sub(b.clone(), Expr::Num(1.0));
                    mul(mul(b.clone(), pow(a.clone(), n_minus_1)), diff(a, var))
                }
                BinOp::Pow => {
                    // a^b (b' ln a + b a'/a)
                    let log_term = mul(diff(b, var), Expr::call(Func::Ln, a.clone()));
                    let base_term = div(mul(b.clone(), diff(a, var)), a.clone());
                    mul(e.clone(), add(log_term, base_term))
                }
            }
        }
    }
}

fn as_num(e: &Expr) -> Option<f64> {
    match e {
        Expr::Num(x) => Some(*x),
        _ => None,
    }
}

fn neg(a: Expr) -> Expr {
    match a {
        Expr::Num(x) => Expr::Num(-x),
        Expr::Neg(inner) => *inner,
        other => Expr::neg(other),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x + y),
        (Some(x), _) if x == 0.0 => b,
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::bin(BinOp::Add, a, b),
    }
}

fn sub(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x - y),
        (Some(x), _) if x == 0.0 => neg(b),
        (_, Some(y)) if y == 0.0 => a,
        _ => Expr::bin(BinOp::Sub, a, b),
    }
}

fn mul(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) => Expr::Num(x * y),
        (Some(x), _) | (_, Some(x)) if x == 0.0 => Expr::Num(0.0),
        (Some(x), _) if x == 1.0 => b,
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::bin(BinOp::Mul, a, b),
    }
}

fn div(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (Some(x), Some(y)) if y != 0.0 => Expr::Num(x / y),
        (Some(x), _) if x == 0.0 => Expr::Num(0.0),
        (_, Some(y)) if y == 1.0 => a,
        _ => Expr::bin(BinOp::Div, a, b),
    }
}

fn pow(a: Expr, b: Expr) -> Expr {
    match (as_num(&a), as_num(&b)) {
        (_, Some(y)) if y == 1.0 => a,
        (_, Some(y)) if y == 0.0 => Expr::Num(1.0),
        _ => Expr::bin(BinOp::Pow, a, b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, parse, Bindings};

    fn at(e: &Expr, pairs: &[(&str, f64)]) -> f64 {
        eval(e, &Bindings::from_pairs(pairs)).unwrap()
    }

    #[test]
    fn logistic_partial_in_u() {
        let d = diff(&parse("u*(1-v)").unwrap(), Var::U);
        for v in [0.0, 0.3, 0.9, 2.0] {
            assert_eq!(at(&d, &[("u", 0.7), ("v", v)]), 1.0 - v);
        }
    }

    #[test]
    fn nicholson_birth_derivative() {
        let d = diff(&parse("p*v*exp(-v)").unwrap(), Var::V);
        for v in [0.0, 0.5, 1.0, 2.5] {
            let got = at(&d, &[("p", 6.0), ("v", v)]);
            let want = 6.0 * (-v).exp() * (1.0 - v);
            assert!((got - want).abs() < 1e-14, "{v}: {got} vs {want}");
        }
    }

    #[test]
    fn constants_vanish() {
        assert_eq!(diff(&parse("c").unwrap(), Var::U), Expr::Num(0.0));
        assert_eq!(diff(&parse("3*v").unwrap(), Var::U), Expr::Num(0.0));
    }

    #[test]
    fn variable_exponent() {
        let d = diff(&parse("x^x").unwrap(), Var::X);
        let x: f64 = 1.7;
        assert!((at(&d, &[("x", x)]) - x.powf(x) * (x.ln() + 1.0)).abs() < 1e-13);
    }

    #[test]
    fn quotient_rule() {
        let d = diff(&parse("x/(1+x^4)").unwrap(), Var::X);
        let x: f64 = 0.8;
        let want = (1.0 - 3.0 * x.powi(4)) / (1.0 + x.powi(4)).powi(2);
        assert!((at(&d, &[("x", x)]) - want).abs() < 1e-14);
    }
}
