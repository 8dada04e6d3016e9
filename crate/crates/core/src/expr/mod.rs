//! Small arithmetic expressions over the state variables `u`, `v`, `x`.
//!
//! Used to define custom nonlinearities `f(u, v)` and birth functions `g(x)`
//! from the command line. The grammar is fixed:
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | name | func '(' expr ')' | '(' expr ')'
//! func    := exp | ln | sin | cos
//! ```
//!
//! `^` is right-associative and binds tighter than unary minus, so
//! `-2^2 == -4` and `2^3^2 == 512`. Any name other than `u`, `v`, `x` and the
//! four function names is a parameter that must be bound at evaluation time.

mod diff;
mod eval;
mod parser;

use std::fmt;

pub use diff::diff;
pub use eval::{eval, Bindings, CompiledExpr, EvalError};
pub use parser::{parse, ParseError};

/// State variable of a nonlinearity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Var {
    U,
    V,
    X,
}

impl Var {
    pub fn name(self) -> &'static str {
        match self {
            Var::U => "u",
            Var::V => "v",
            Var::X => "x",
        }
    }

    pub fn from_name(name: &str) -> Option<Var> {
        match name {
            "u" => Some(Var::U),
            "v" => Some(Var::V),
            "x" => Some(Var::X),
            _ => None,
        }
    }

    fn slot(self) -> usize {
        self as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl BinOp {
    fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Pow => "^",
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
            BinOp::Pow => 4,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Exp,
    Ln,
    Sin,
    Cos,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Ln => "ln",
            Func::Sin => "sin",
            Func::Cos => "cos",
        }
    }

    pub fn from_name(name: &str) -> Option<Func> {
        match name {
            "exp" => Some(Func::Exp),
            "ln" => Some(Func::Ln),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            _ => None,
        }
    }
}

/// Expression tree.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var(Var),
    Param(String),
    Neg(Box<Expr>),
    Bin(BinOp, Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

const UNARY_PREC: u8 = 3;
const ATOM_PREC: u8 = 5;

impl Expr {
    pub fn num(x: f64) -> Expr {
        Expr::Num(x)
    }

    pub fn bin(op: BinOp, a: Expr, b: Expr) -> Expr {
        Expr::Bin(op, Box::new(a), Box::new(b))
    }

    pub fn call(f: Func, a: Expr) -> Expr {
        Expr::Call(f, Box::new(a))
    }

    pub fn neg(a: Expr) -> Expr {
        Expr::Neg(Box::new(a))
    }

    /// Names of all parameters in the tree, sorted and deduplicated.
    pub fn params(&self) -> Vec<String> {
        let mut out = Vec::new();
        self.collect_params(&mut out);
        out.sort();
        out.dedup();
        out
    }

    fn collect_params(&self, out: &mut Vec<String>) {
        match self {
            Expr::Param(p) => out.push(p.clone()),
            Expr::Neg(a) | Expr::Call(_, a) => a.collect_params(out),
            Expr::Bin(_, a, b) => {
                a.collect_params(out);
                b.collect_params(out);
            }
            Expr::Num(_) | Expr::Var(_) => {}
        }
    }

    pub fn depends_on(&self, var: Var) -> bool {
        match self {
            Expr::Var(w) => *w == var,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on(var),
            Expr::Bin(_, a, b) => a.depends_on(var) || b.depends_on(var),
            Expr::Num(_) | Expr::Param(_) => false,
        }
    }

    fn precedence(&self) -> u8 {
        match self {
            Expr::Num(x) if x.is_sign_negative() => UNARY_PREC,
            Expr::Num(_) | Expr::Var(_) | Expr::Param(_) | Expr::Call(..) => ATOM_PREC,
            Expr::Neg(_) => UNARY_PREC,
            Expr::Bin(op, ..) => op.precedence(),
        }
    }
}

fn write_child(f: &mut fmt::Formatter<'_>, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        write!(f, "({e})")
    } else {
        write!(f, "{e}")
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(x) => {
                if x.is_sign_negative() {
                    write!(f, "-{}", -x)
                } else {
                    write!(f, "{x}")
                }
            }
            Expr::Var(v) => f.write_str(v.name()),
            Expr::Param(p) => f.write_str(p),
            Expr::Neg(a) => {
                f.write_str("-")?;
                write_child(f, a, a.precedence() < UNARY_PREC)
            }
            Expr::Call(func, a) => write!(f, "{}({a})", func.name()),
            Expr::Bin(op, a, b) => {
                let p = op.precedence();
                if *op == BinOp::Pow {
                    // right-associative; the exponent may itself be a unary minus
                    write_child(f, a, a.precedence() <= p)?;
                    f.write_str("^")?;
                    write_child(f, b, b.precedence() < UNARY_PREC)
                } else {
                    write_child(f, a, a.precedence() < p)?;
                    match op {
                        BinOp::Add | BinOp::Sub => write!(f, " {} ", op.symbol())?,
                        _ => f.write_str(op.symbol())?,
                    }
                    write_child(f, b, b.precedence() <= p)
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn printing_keeps_associativity() {
        for s in ["a - (b - c)", "(a - b) - c", "2^3^2", "(2^3)^2", "-2^2", "(-2)^2", "2^-x", "u*-v", "a/(b*c)", "--u"] {
            let e = parse(s).unwrap();
            let back = parse(&e.to_string()).unwrap();
            assert_eq!(e, back, "{s} printed as {e}");
        }
    }

    #[test]
    fn negative_literals_print_reparseably() {
        let e = Expr::bin(BinOp::Pow, Expr::num(-2.0), Expr::num(2.0));
        let back = parse(&e.to_string()).unwrap();
        let b = Bindings::new();
        assert_eq!(eval(&back, &b).unwrap(), 4.0);
    }

    #[test]
    fn params_are_collected() {
        let e = parse("p*v*exp(-v) + q - p").unwrap();
        assert_eq!(e.params(), vec!["p".to_string(), "q".to_string()]);
        assert!(e.depends_on(Var::V));
        assert!(!e.depends_on(Var::U));
    }
}
