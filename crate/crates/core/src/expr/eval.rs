use std::collections::BTreeMap;

use thiserror::Error;

use super::{BinOp, Expr, Func, Var};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum EvalError {
    #[error("unbound name `{0}`")]
    Unbound(String),
    #[error("domain error in `{expr}`: {reason}")]
    Domain { expr: String, reason: String },
}

/// Name to value map used for both variables and parameters.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Bindings(BTreeMap<String, f64>);

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs(pairs: &[(&str, f64)]) -> Self {
        Bindings(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }

    pub fn set(&mut self, name: &str, value: f64) -> &mut Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

fn domain(e: &Expr, reason: &str) -> EvalError {
    EvalError::Domain { expr: e.to_string(), reason: reason.to_string() }
}

/// Evaluates `e` in IEEE double precision.
pub fn eval(e: &Expr, b: &Bindings) -> Result<f64, EvalError> {
    match e {
        Expr::Num(x) => Ok(*x),
        Expr::Var(v) => b.get(v.name()).ok_or_else(|| EvalError::Unbound(v.name().into())),
        Expr::Param(p) => b.get(p).ok_or_else(|| EvalError::Unbound(p.clone())),
        Expr::Neg(a) => Ok(-eval(a, b)?),
        Expr::Call(f, a) => {
            let x = eval(a, b)?;
            match f {
                Func::Exp => Ok(x.exp()),
                Func::Ln if x <= 0.0 => Err(domain(e, "logarithm of a non-positive value")),
                Func::Ln => Ok(x.ln()),
                Func::Sin => Ok(x.sin()),
                Func::Cos => Ok(x.cos()),
            }
        }
        Expr::Bin(op, l, r) => {
            let x = eval(l, b)?;
            let y = eval(r, b)?;
            match op {
                BinOp::Add => Ok(x + y),
                BinOp::Sub => Ok(x - y),
                BinOp::Mul => Ok(x * y),
                BinOp::Div if y == 0.0 => Err(domain(e, "division by zero")),
                BinOp::Div => Ok(x / y),
                BinOp::Pow => {
                    let z = pow(x, y);
                    if z.is_nan() && !x.is_nan() && !y.is_nan() {
                        Err(domain(e, "negative base with non-integer exponent"))
                    } else {
                        Ok(z)
                    }
                }
            }
        }
    }
}

fn pow(x: f64, y: f64) -> f64 {
    if y.fract() == 0.0 && y.abs() <= i32::MAX as f64 {
        x.powi(y as i32)
    } else {
        x.powf(y)
    }
}

#[derive(Clone, Debug, PartialEq)]
enum Op {
    Const(f64),
    Load(usize),
    Neg,
    Bin(BinOp),
    Call(Func),
}

/// Expression with parameters substituted, flattened to a postfix program.
///
/// Evaluation never fails; domain violations surface as NaN or infinities.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledExpr {
    ops: Vec<Op>,
    depth: usize,
}

impl CompiledExpr {
    pub fn new(e: &Expr, params: &Bindings) -> Result<Self, EvalError> {
        let mut ops = Vec::new();
        Self::emit(e, params, &mut ops)?;
        let mut depth = 0usize;
        let mut max_depth = 0usize;
        for op in &ops {
            match op {
                Op::Const(_) | Op::Load(_) => depth += 1,
                Op::Bin(_) => depth -= 1,
                Op::Neg | Op::Call(_) => {}
            }
            max_depth = max_depth.max(depth);
        }
        Ok(CompiledExpr { ops, depth: max_depth })
    }

    fn emit(e: &Expr, params: &Bindings, ops: &mut Vec<Op>) -> Result<(), EvalError> {
        match e {
            Expr::Num(x) => ops.push(Op::Const(*x)),
            Expr::Var(v) => ops.push(Op::Load(v.slot())),
            Expr::Param(p) => {
                let x = params.get(p).ok_or_else(|| EvalError::Unbound(p.clone()))?;
                ops.push(Op::Const(x));
            }
            Expr::Neg(a) => {
                Self::emit(a, params, ops)?;
                ops.push(Op::Neg);
            }
            Expr::Call(f, a) => {
                Self::emit(a, params, ops)?;
                ops.push(Op::Call(*f));
            }
            Expr::Bin(op, a, b) => {
                Self::emit(a, params, ops)?;
                Self::emit(b, params, ops)?;
                ops.push(Op::Bin(*op));
            }
        }
        Ok(())
    }

    /// Evaluates at `(u, v, x)`.
    pub fn eval(&self, u: f64, v: f64, x: f64) -> f64 {
        let vars = [u, v, x];
        let mut stack = [0.0f64; 32];
        let mut heap;
        let st: &mut [f64] = if self.depth <= stack.len() {
            &mut stack
        } else {
            heap = vec![0.0; self.depth];
            &mut heap
        };
        let mut sp = 0usize;
        for op in &self.ops {
            match op {
                Op::Const(c) => {
                    st[sp] = *c;
                    sp += 1;
                }
                Op::Load(i) => {
                    st[sp] = vars[*i];
                    sp += 1;
                }
                Op::Neg => st[sp - 1] = -st[sp - 1],
                Op::Call(f) => {
                    let a = st[sp - 1];
                    st[sp - 1] = match f {
                        Func::Exp => a.exp(),
                        Func::Ln => a.ln(),
                        Func::Sin => a.sin(),
                        Func::Cos => a.cos(),
                    };
                }
                Op::Bin(op) => {
                    let b = st[sp - 1];
                    let a = st[sp - 2];
                    sp -= 1;
                    st[sp - 1] = match op {
                        BinOp::Add => a + b,
                        BinOp::Sub => a - b,
                        BinOp::Mul => a * b,
                        BinOp::Div => a / b,
                        BinOp::Pow => pow(a, b),
                    };
                }
            }
        }
        st[0]
    }

    pub fn eval_var(&self, var: Var, value: f64) -> f64 {
        match var {
            Var::U => self.eval(value, 0.0, 0.0),
            Var::V => self.eval(0.0, value, 0.0),
            Var::X => self.eval(0.0, 0.0, value),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    #[test]
    fn logistic_with_delay() {
        let e = parse("u*(1-v)").unwrap();
        let b = Bindings::from_pairs(&[("u", 0.5), ("v", 0.5)]);
        assert_eq!(eval(&e, &b).unwrap(), 0.25);
    }

    #[test]
    fn zero_population_gives_zero_birth() {
        let e = parse("p*v*exp(-v)").unwrap();
        for p in [0.5, 6.0, 1e3] {
            let b = Bindings::from_pairs(&[("p", p), ("v", 0.0)]);
            assert_eq!(eval(&e, &b).unwrap(), 0.0);
        }
    }

    #[test]
    fn log_of_zero_is_domain_error() {
        let e = parse("1 + ln(u)").unwrap();
        let err = eval(&e, &Bindings::from_pairs(&[("u", 0.0)])).unwrap_err();
        match err {
            EvalError::Domain { expr, .. } => assert_eq!(expr, "ln(u)"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn division_by_zero_names_subexpression() {
        let e = parse("u + 1/(v - 1)").unwrap();
        let err = eval(&e, &Bindings::from_pairs(&[("u", 0.0), ("v", 1.0)])).unwrap_err();
        assert_eq!(err, EvalError::Domain { expr: "1/(v - 1)".into(), reason: "division by zero".into() });
    }

    #[test]
    fn unbound_parameter() {
        let e = parse("p*v").unwrap();
        assert_eq!(eval(&e, &Bindings::from_pairs(&[("v", 1.0)])), Err(EvalError::Unbound("p".into())));
        assert!(CompiledExpr::new(&e, &Bindings::new()).is_err());
    }

    #[test]
    fn compiled_matches_tree_walk() {
        let e = parse("p*v*exp(-v) - delta*u + sin(x)^2/(1 + cos(u*v)^2) + v^0.5").unwrap();
        let params = Bindings::from_pairs(&[("p", 6.0), ("delta", 1.3)]);
        let c = CompiledExpr::new(&e, &params).unwrap();
        for i in 0..20 {
            let (u, v, x) = (0.1 * i as f64, 0.07 * i as f64, 1.0 - 0.05 * i as f64);
            let mut b = params.clone();
            b.set("u", u).set("v", v).set("x", x);
            assert_eq!(c.eval(u, v, x), eval(&e, &b).unwrap());
        }
    }
}
