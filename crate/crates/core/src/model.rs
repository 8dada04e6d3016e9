//! Monostable delayed nonlinearities `f(u, v)`, their linearizations at the
//! two equilibria, and the structural checks the front theory relies on.
//!
//! `u` is the instantaneous state and `v` the delayed one. Built-in families
//! are stored as expressions so that every model, built-in or not, goes through
//! the same symbolic differentiation path.

use std::fmt;

use thiserror::Error;

use crate::expr::{self, BinOp, Bindings, CompiledExpr, EvalError, Expr, ParseError, Var};
use crate::numeric::bisect;

/// Inequality slack used by every lattice check.
pub const GRID_SLACK: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ModelError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("monostability violated: {0}")]
    Monostability(String),
    #[error("could not locate the positive equilibrium: {0}")]
    Equilibrium(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelClass {
    Kpp,
    Mg,
    Custom,
}

impl fmt::Display for ModelClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelClass::Kpp => "KPPClass",
            ModelClass::Mg => "MGClass",
            ModelClass::Custom => "Custom",
        })
    }
}

/// How the positive equilibrium of a custom model is obtained.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum KappaSpec {
    Value(f64),
    /// `[a, b]` with `f(a,a) > 0 > f(b,b)`.
    Bracket(f64, f64),
}

/// Everything needed to construct a model.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSource {
    /// `f(u, v) = u (1 - v)`.
    KppFisher,
    /// `f(u, v) = -delta u + p v / (1 + v^exponent)`.
    MackeyGlass { p: f64, delta: f64, exponent: f64 },
    /// `f(u, v) = -delta u + p v exp(-v)`.
    Nicholson { p: f64, delta: f64 },
    /// Arbitrary `f(u, v)` given as an expression.
    CustomF { f: String, params: Vec<(String, f64)>, kappa: KappaSpec },
    /// `f(u, v) = -delta u + g(v)`; `g` may be written in `v` or `x`.
    CustomG { g: String, delta: f64, params: Vec<(String, f64)>, kappa: KappaSpec },
}

/// Linearization coefficients at the two equilibria.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LinearizationData {
    pub alpha0: f64,
    pub beta0: f64,
    pub alpha_k: f64,
    pub beta_k: f64,
}

impl LinearizationData {
    pub fn new(alpha0: f64, beta0: f64, alpha_k: f64, beta_k: f64) -> Self {
        LinearizationData { alpha0, beta0, alpha_k, beta_k }
    }

    /// Names of the standing assumptions that fail for these coefficients.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.alpha0 + self.beta0 <= 0.0 {
            out.push("alpha0 + beta0 > 0");
        }
        if self.alpha_k + self.beta_k >= 0.0 {
            out.push("alpha_kappa + beta_kappa < 0");
        }
        if self.beta0 < 0.0 {
            out.push("beta0 >= 0");
        }
        if self.beta_k >= 0.0 {
            out.push("beta_kappa < 0");
        }
        out
    }
}

#[derive(Clone, Debug)]
enum Kind {
    General { f: CompiledExpr, f1: CompiledExpr, f2: CompiledExpr },
    Birth { delta: f64, g: CompiledExpr, dg: CompiledExpr },
}

/// A validated monostable model. Immutable once built.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    name: String,
    class: ModelClass,
    source: ModelSource,
    kind: Kind,
    formula: String,
    kappa: f64,
}

impl ModelSpec {
    pub fn kpp_fisher() -> ModelSpec {
        build_model(&ModelSource::KppFisher).expect("built-in KPP-Fisher model is valid")
    }

    pub fn nicholson(p: f64, delta: f64) -> Result<ModelSpec, ModelError> {
        build_model(&ModelSource::Nicholson { p, delta })
    }

    pub fn mackey_glass(p: f64, delta: f64, exponent: f64) -> Result<ModelSpec, ModelError> {
        build_model(&ModelSource::MackeyGlass { p, delta, exponent })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn class(&self) -> ModelClass {
        self.class
    }

    pub fn source(&self) -> &ModelSource {
        &self.source
    }

    /// Human-readable formula for `f(u, v)` with parameters left symbolic.
    pub fn formula(&self) -> &str {
        &self.formula
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    /// `(p, delta)` for the Nicholson family.
    pub fn nicholson_params(&self) -> Option<(f64, f64)> {
        match self.source {
            ModelSource::Nicholson { p, delta } => Some((p, delta)),
            _ => None,
        }
    }

    /// Decay rate `delta` when the model has the form `-delta u + g(v)`.
    pub fn delta(&self) -> Option<f64> {
        match self.kind {
            Kind::Birth { delta, .. } => Some(delta),
            Kind::General { .. } => None,
        }
    }

    pub fn has_birth_form(&self) -> bool {
        matches!(self.kind, Kind::Birth { .. })
    }

    pub fn f(&self, u: f64, v: f64) -> f64 {
        match &self.kind {
            Kind::General { f, .. } => f.eval(u, v, 0.0),
            Kind::Birth { delta, g, .. } => -delta * u + g.eval(0.0, v, v),
        }
    }

    /// Partial derivative in the instantaneous argument.
    pub fn f1(&self, u: f64, v: f64) -> f64 {
        match &self.kind {
            Kind::General { f1, .. } => f1.eval(u, v, 0.0),
            Kind::Birth { delta, .. } => -delta,
        }
    }

    /// Partial derivative in the delayed argument.
    pub fn f2(&self, u: f64, v: f64) -> f64 {
        match &self.kind {
            Kind::General { f2, .. } => f2.eval(u, v, 0.0),
            Kind::Birth { dg, .. } => dg.eval(0.0, v, v),
        }
    }

    /// Birth function `g(v)` for models of the form `-delta u + g(v)`.
    pub fn g(&self, v: f64) -> Option<f64> {
        match &self.kind {
            Kind::Birth { g, .. } => Some(g.eval(0.0, v, v)),
            Kind::General { .. } => None,
        }
    }

    pub fn dg(&self, v: f64) -> Option<f64> {
        match &self.kind {
            Kind::Birth { dg, .. } => Some(dg.eval(0.0, v, v)),
            Kind::General { .. } => None,
        }
    }

    /// `f(x, x)`, the nonlinearity along the diagonal.
    pub fn diagonal(&self, x: f64) -> f64 {
        self.f(x, x)
    }
}

fn compile(e: &Expr, params: &Bindings) -> Result<CompiledExpr, ModelError> {
    Ok(CompiledExpr::new(e, params)?)
}

fn bindings(pairs: &[(String, f64)]) -> Bindings {
    let mut b = Bindings::new();
    for (k, v) in pairs {
        b.set(k, *v);
    }
    b
}

fn positive(name: &str, x: f64) -> Result<(), ModelError> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(ModelError::InvalidParameter(format!("{name} must be positive and finite, got {x}")))
    }
}

fn birth_kind(g_text: &str, delta: f64, params: &Bindings) -> Result<Kind, ModelError> {
    let g = expr::parse(g_text)?;
    if g.depends_on(Var::U) {
        return Err(ModelError::InvalidParameter("birth function must not depend on u".into()));
    }
    let dg = Expr::bin(BinOp::Add, expr::diff(&g, Var::V), expr::diff(&g, Var::X));
    Ok(Kind::Birth { delta, g: compile(&g, params)?, dg: compile(&dg, params)? })
}

fn general_kind(f_text: &str, params: &Bindings) -> Result<Kind, ModelError> {
    let f = expr::parse(f_text)?;
    if f.depends_on(Var::X) {
        return Err(ModelError::InvalidParameter("f(u, v) must be written in u and v only".into()));
    }
    Ok(Kind::General {
        f1: compile(&expr::diff(&f, Var::U), params)?,
        f2: compile(&expr::diff(&f, Var::V), params)?,
        f: compile(&f, params)?,
    })
}

/// Builds and validates a model.
pub fn build_model(source: &ModelSource) -> Result<ModelSpec, ModelError> {
    let (name, class, kind, formula, kappa) = match source {
        ModelSource::KppFisher => {
            let kind = general_kind("u*(1-v)", &Bindings::new())?;
            ("kpp".to_string(), ModelClass::Kpp, kind, "u*(1 - v)".to_string(), KappaSpec::Value(1.0))
        }
        ModelSource::Nicholson { p, delta } => {
            positive("p", *p)?;
            positive("delta", *delta)?;
            if p / delta <= 1.0 {
                return Err(ModelError::InvalidParameter(format!("Nicholson requires p/delta > 1, got {}", p / delta)));
            }
            let params = Bindings::from_pairs(&[("p", *p)]);
            let kind = birth_kind("p*v*exp(-v)", *delta, &params)?;
            let formula = "-delta*u + p*v*exp(-v)".to_string();
            ("nicholson".to_string(), ModelClass::Mg, kind, formula, KappaSpec::Value((p / delta).ln()))
        }
        ModelSource::MackeyGlass { p, delta, exponent } => {
            positive("p", *p)?;
            positive("delta", *delta)?;
            positive("exponent", *exponent)?;
            if p / delta <= 1.0 {
                return Err(ModelError::InvalidParameter(format!("Mackey-Glass requires p/delta > 1, got {}", p / delta)));
            }
            let params = Bindings::from_pairs(&[("p", *p), ("n", *exponent)]);
            let kind = birth_kind("p*v/(1 + v^n)", *delta, &params)?;
            let kappa = (p / delta - 1.0).powf(1.0 / exponent);
            let formula = "-delta*u + p*v/(1 + v^n)".to_string();
            ("mackey-glass".to_string(), ModelClass::Mg, kind, formula, KappaSpec::Value(kappa))
        }
        ModelSource::CustomF { f, params, kappa } => {
            let kind = general_kind(f, &bindings(params))?;
            ("custom".to_string(), ModelClass::Custom, kind, f.clone(), *kappa)
        }
        ModelSource::CustomG { g, delta, params, kappa } => {
            positive("delta", *delta)?;
            let kind = birth_kind(g, *delta, &bindings(params))?;
            ("custom".to_string(), ModelClass::Mg, kind, format!("-delta*u + {g}"), *kappa)
        }
    };
    let mut model = ModelSpec { name, class, source: source.clone(), kind, formula, kappa: f64::NAN };
    model.kappa = match kappa {
        KappaSpec::Value(k) => k,
        KappaSpec::Bracket(a, b) => locate_kappa(&model, a, b)?,
    };
    validate(&model)?;
    Ok(model)
}

fn locate_kappa(m: &ModelSpec, a: f64, b: f64) -> Result<f64, ModelError> {
    let (fa, fb) = (m.diagonal(a), m.diagonal(b));
    if !(fa > 0.0 && fb < 0.0) {
        return Err(ModelError::Equilibrium(format!(
            "bracket [{a}, {b}] needs f(a,a) > 0 > f(b,b), got {fa} and {fb}"
        )));
    }
    bisect(|x| m.diagonal(x), a, b, 1e-12)
        .ok_or_else(|| ModelError::Equilibrium(format!("bisection failed on [{a}, {b}]")))
}

fn validate(m: &ModelSpec) -> Result<(), ModelError> {
    let k = m.kappa;
    if !(k > 0.0 && k.is_finite()) {
        return Err(ModelError::Equilibrium(format!("kappa must be positive and finite, got {k}")));
    }
    let f00 = m.f(0.0, 0.0);
    if !(f00.abs() <= 1e-10) {
        return Err(ModelError::Monostability(format!("f(0,0) = 0 fails: f(0,0) = {f00}")));
    }
    let fkk = m.f(k, k);
    if !(fkk.abs() <= 1e-10) {
        return Err(ModelError::Monostability(format!("f(kappa,kappa) = 0 fails: f({k},{k}) = {fkk}")));
    }
    let slope0 = m.f1(0.0, 0.0) + m.f2(0.0, 0.0);
    if !(slope0 > 0.0) {
        return Err(ModelError::Monostability(format!("g'(0) > 0 fails: g'(0) = {slope0}")));
    }
    let slope_k = m.f1(k, k) + m.f2(k, k);
    if !(slope_k < 0.0) {
        return Err(ModelError::Monostability(format!("g'(kappa) < 0 fails: g'(kappa) = {slope_k}")));
    }
    let n = 1000;
    for i in 1..=n {
        let x = k * i as f64 / (n + 1) as f64;
        let gx = m.diagonal(x);
        if !(gx > 0.0) {
            return Err(ModelError::Monostability(format!("f(x,x) > 0 on (0, kappa) fails at x = {x}: {gx}")));
        }
    }
    Ok(())
}

/// The four partial derivatives at `(0,0)` and `(kappa,kappa)`.
pub fn linearization(m: &ModelSpec) -> LinearizationData {
    let k = m.kappa;
    LinearizationData {
        alpha0: m.f1(0.0, 0.0),
        beta0: m.f2(0.0, 0.0),
        alpha_k: m.f1(k, k),
        beta_k: m.f2(k, k),
    }
}

fn lattice(kappa: f64, n: usize) -> impl Iterator<Item = (f64, f64)> {
    let step = kappa / (n - 1) as f64;
    (0..n).flat_map(move |i| (0..n).map(move |j| (i as f64 * step, j as f64 * step)))
}

/// Whether `f` lies below both of its linearizations on an `n_grid` square
/// lattice over `[0, kappa]^2`. When true the monotone-front domain equals the
/// linear-determinacy domain.
pub fn check_subtangency(m: &ModelSpec, n_grid: usize) -> bool {
    let n = n_grid.max(64);
    let lin = linearization(m);
    let k = m.kappa;
    lattice(k, n).all(|(x, y)| {
        let fx = m.f(x, y);
        fx <= lin.alpha0 * x + lin.beta0 * y + GRID_SLACK
            && fx <= lin.alpha_k * (x - k) + lin.beta_k * (y - k) + GRID_SLACK
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypotheses {
    MgSatisfied,
    KppSatisfied,
    Neither,
}

impl fmt::Display for Hypotheses {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypotheses::MgSatisfied => "MG-satisfied",
            Hypotheses::KppSatisfied => "KPP-satisfied",
            Hypotheses::Neither => "neither",
        })
    }
}

/// Pointwise version of the sign hypotheses, evaluated on lattices over
/// `[0, kappa]^2` instead of over all monotone test profiles.
pub fn check_hypotheses(m: &ModelSpec) -> Hypotheses {
    let lin = linearization(m);
    let k = m.kappa;
    if m.has_birth_form() {
        let signs_ok = lin.alpha0 + lin.beta0 > 0.0
            && lin.alpha0 < 0.0
            && lin.beta0 > 0.0
            && lin.alpha_k < 0.0
            && lin.beta_k < 0.0;
        if signs_ok && birth_critical_points(m, 10_000) == 1 {
            return Hypotheses::MgSatisfied;
        }
        return Hypotheses::Neither;
    }
    let signs_ok = lin.beta0.abs() <= GRID_SLACK
        && lin.alpha_k.abs() <= GRID_SLACK
        && lin.beta_k < 0.0
        && lin.alpha0 > 0.0;
    let lattice_ok = || {
        lattice(k, 201).all(|(x, y)| {
            let a = m.f1(x, y);
            a >= -GRID_SLACK && a <= lin.alpha0 + GRID_SLACK && m.f2(x, y) <= GRID_SLACK
        })
    };
    if signs_ok && lattice_ok() {
        Hypotheses::KppSatisfied
    } else {
        Hypotheses::Neither
    }
}

/// Number of sign changes of `g'` on an `n`-point grid of `(0, kappa)`.
fn birth_critical_points(m: &ModelSpec, n: usize) -> usize {
    let k = m.kappa;
    let signs: Vec<f64> = (1..n)
        .filter_map(|i| m.dg(k * i as f64 / n as f64))
        .filter(|d| *d != 0.0)
        .collect();
    signs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn nicholson_six() {
        let m = ModelSpec::nicholson(6.0, 1.0).unwrap();
        assert!(close(m.kappa(), 6f64.ln(), 1e-15));
        let lin = linearization(&m);
        assert_eq!(lin.alpha0, -1.0);
        assert!(close(lin.beta0, 6.0, 1e-14));
        assert_eq!(lin.alpha_k, -1.0);
        assert!(close(lin.beta_k, 1.0 - 6f64.ln(), 1e-14));
        assert!(close(lin.beta_k, -0.7918, 1e-4));
    }

    #[test]
    fn nicholson_below_threshold_is_rejected() {
        let err = ModelSpec::nicholson(1.0, 1.0).unwrap_err();
        assert!(err.to_string().contains("p/delta > 1"), "{err}");
    }

    #[test]
    fn kpp_fisher_linearization() {
        let m = ModelSpec::kpp_fisher();
        assert_eq!(m.kappa(), 1.0);
        assert_eq!(linearization(&m), LinearizationData::new(1.0, 0.0, 0.0, -1.0));
        assert_eq!(check_hypotheses(&m), Hypotheses::KppSatisfied);
        assert!(check_subtangency(&m, 64));
    }

    #[test]
    fn mackey_glass_shares_decay_coefficient() {
        let m = ModelSpec::mackey_glass(2.0, 1.0, 4.0).unwrap();
        assert!(close(m.kappa(), 1.0, 1e-15));
        let lin = linearization(&m);
        assert_eq!((lin.alpha0, lin.alpha_k), (-1.0, -1.0));
        assert!(close(lin.beta0, 2.0, 1e-14));
        assert!(close(lin.beta_k, -1.0, 1e-14));
        assert_eq!(check_hypotheses(&m), Hypotheses::MgSatisfied);
    }

    #[test]
    fn custom_partials_match_central_differences() {
        let src = ModelSource::CustomF {
            f: "u*(1 - u - a*v)/(1 + u*v)".into(),
            params: vec![("a".into(), 0.5)],
            kappa: KappaSpec::Bracket(0.1, 2.0),
        };
        let m = build_model(&src).unwrap();
        // diagonal root of x(1 - 1.5x) = 0
        assert!(close(m.kappa(), 2.0 / 3.0, 1e-11));
        let h = 1e-6;
        for &(u, v) in &[(0.1, 0.2), (0.4, 0.05), (0.6, 0.6), (0.3, 0.5)] {
            let d1 = (m.f(u + h, v) - m.f(u - h, v)) / (2.0 * h);
            let d2 = (m.f(u, v + h) - m.f(u, v - h)) / (2.0 * h);
            assert!(close(m.f1(u, v), d1, 1e-6 * (1.0 + d1.abs())));
            assert!(close(m.f2(u, v), d2, 1e-6 * (1.0 + d2.abs())));
        }
    }

    #[test]
    fn subtangency_of_nicholson_depends_on_ratio() {
        for ratio in [4.0, 6.0, std::f64::consts::E.powi(2)] {
            assert!(check_subtangency(&ModelSpec::nicholson(ratio, 1.0).unwrap(), 256), "{ratio}");
        }
        assert!(!check_subtangency(&ModelSpec::nicholson(10.0, 1.0).unwrap(), 256));
    }

    #[test]
    fn logistic_without_delay_coupling_is_neither() {
        let src = ModelSource::CustomF { f: "u*(1-u)".into(), params: vec![], kappa: KappaSpec::Value(1.0) };
        let m = build_model(&src).unwrap();
        assert_eq!(linearization(&m).beta_k, 0.0);
        assert_eq!(check_hypotheses(&m), Hypotheses::Neither);
    }

    #[test]
    fn nicholson_is_mg() {
        assert_eq!(check_hypotheses(&ModelSpec::nicholson(6.0, 1.0).unwrap()), Hypotheses::MgSatisfied);
        // g' keeps one sign on (0, kappa) below p/delta = e
        assert_eq!(check_hypotheses(&ModelSpec::nicholson(2.0, 1.0).unwrap()), Hypotheses::Neither);
    }

    #[test]
    fn birth_function_may_use_x() {
        let src = ModelSource::CustomG {
            g: "p*x*exp(-x)".into(),
            delta: 1.0,
            params: vec![("p".into(), 6.0)],
            kappa: KappaSpec::Bracket(0.5, 3.0),
        };
        let m = build_model(&src).unwrap();
        let reference = ModelSpec::nicholson(6.0, 1.0).unwrap();
        assert!(close(m.kappa(), reference.kappa(), 1e-11));
        assert!(close(m.f2(0.7, 0.7), reference.f2(0.7, 0.7), 1e-14));
    }

    #[test]
    fn monostability_failures_are_named() {
        let bad = ModelSource::CustomF { f: "u*(v-1)".into(), params: vec![], kappa: KappaSpec::Value(1.0) };
        let err = build_model(&bad).unwrap_err();
        assert!(matches!(err, ModelError::Monostability(ref s) if s.contains("g'(0)")), "{err}");
        let wrong_kappa = ModelSource::CustomF { f: "u*(1-v)".into(), params: vec![], kappa: KappaSpec::Value(0.9) };
        assert!(matches!(build_model(&wrong_kappa), Err(ModelError::Monostability(_))));
    }
}
