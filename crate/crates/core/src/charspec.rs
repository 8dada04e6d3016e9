//! Roots of the characteristic quasi-polynomials
//! `chi(z) = z^2 - c z + alpha + beta exp(-c h z)` at the two equilibria.
//!
//! Real roots come from a critical-point analysis of the real restriction,
//! complex roots from the argument principle on recursively split rectangles.

use std::f64::consts::PI;
use std::fmt;

use num_complex::Complex64;
use thiserror::Error;

use crate::model::LinearizationData;
use crate::numeric::{expand_until, safeguarded_newton};

/// Collapse width below which two real roots are reported as one double root.
pub const DOUBLE_ROOT_WIDTH: f64 = 1e-8;

/// Residual bound `|chi(z)| <= ROOT_RESIDUAL (1 + |z|^2)` for accepted roots.
pub const ROOT_RESIDUAL: f64 = 1e-9;

const MAX_DEPTH: usize = 40;
const INITIAL_SAMPLES: usize = 512;
const MAX_SAMPLES: usize = 1 << 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Side {
    AtZero,
    AtKappa,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::AtZero => "zero",
            Side::AtKappa => "kappa",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CharFunction {
    pub side: Side,
    pub c: f64,
    pub h: f64,
    pub alpha: f64,
    pub beta: f64,
}

impl CharFunction {
    /// Picks `(alpha0, beta0)` or `(alpha_kappa, beta_kappa)` by side.
    pub fn new(side: Side, c: f64, h: f64, lin: &LinearizationData) -> Self {
        let (alpha, beta) = match side {
            Side::AtZero => (lin.alpha0, lin.beta0),
            Side::AtKappa => (lin.alpha_k, lin.beta_k),
        };
        CharFunction { side, c, h, alpha, beta }
    }

    pub fn with_coeffs(side: Side, c: f64, h: f64, alpha: f64, beta: f64) -> Self {
        CharFunction { side, c, h, alpha, beta }
    }

    /// The delay `r = c h` multiplying `z` in the exponential.
    pub fn delay(&self) -> f64 {
        self.c * self.h
    }

    /// `false` when the side's sign requirement on `beta` fails.
    pub fn is_admissible(&self) -> bool {
        match self.side {
            Side::AtZero => self.beta >= 0.0,
            Side::AtKappa => self.beta < 0.0,
        }
    }

    pub fn chi(&self, z: Complex64) -> Complex64 {
        z * z - self.c * z + self.alpha + self.beta * (-self.delay() * z).exp()
    }

    pub fn dchi(&self, z: Complex64) -> Complex64 {
        let r = self.delay();
        2.0 * z - self.c - r * self.beta * (-r * z).exp()
    }

    /// `(F, F', F'')` of the real restriction at `x`.
    pub fn real_parts(&self, x: f64) -> (f64, f64, f64) {
        let r = self.delay();
        let e = self.beta * (-r * x).exp();
        (x * x - self.c * x + self.alpha + e, 2.0 * x - self.c - r * e, 2.0 + r * r * e)
    }

    fn is_quadratic(&self) -> bool {
        self.delay() == 0.0 || self.beta == 0.0
    }
}

/// Residual scale used in root acceptance.
pub fn residual_bound(z: Complex64) -> f64 {
    ROOT_RESIDUAL * (1.0 + z.norm_sqr())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ComplexRoot {
    pub z: Complex64,
    pub residual: f64,
}

/// Rectangle `[re_min, re_max] x [-im_max, im_max]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Strip {
    pub re_min: f64,
    pub re_max: f64,
    pub im_max: f64,
}

impl Strip {
    pub fn new(re_min: f64, re_max: f64, im_max: f64) -> Self {
        Strip { re_min, re_max, im_max }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootSet {
    /// Ascending.
    pub real: Vec<RealRoot>,
    /// Non-real roots, conjugate pairs adjacent, sorted by decreasing real part.
    pub complex: Vec<ComplexRoot>,
    pub strip: Option<Strip>,
    /// Argument-principle count over the (possibly nudged) strip.
    pub contour_count: Option<usize>,
}

impl RootSet {
    /// Real roots with multiplicity plus complex roots.
    pub fn counted(&self) -> usize {
        self.real.iter().map(|r| r.multiplicity as usize).sum::<usize>() + self.complex.len()
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum RootError {
    #[error("contour passes within tolerance of a root near {0}; nudging failed")]
    ContourTooClose(Complex64),
    #[error("root search did not converge: {0}")]
    NonConvergence(String),
}

fn double_root_width(f: f64, f2: f64) -> f64 {
    2.0 * (2.0 * f.abs() / f2.abs()).sqrt()
}

fn refine(cf: &CharFunction, a: f64, b: f64) -> Option<f64> {
    safeguarded_newton(
        |x| {
            let (f, d, _) = cf.real_parts(x);
            (f, d)
        },
        a,
        b,
        1e-15,
    )
}

/// Zero of `F'` inside a sign-changing bracket.
fn critical_point(cf: &CharFunction, a: f64, b: f64) -> Option<f64> {
    safeguarded_newton(
        |x| {
            let (_, d, d2) = cf.real_parts(x);
            (d, d2)
        },
        a,
        b,
        1e-15,
    )
}

/// Root of `F` reached by walking from `x0` in direction `dir` until the sign
/// of `F` becomes `target_sign`.
fn root_beyond(cf: &CharFunction, x0: f64, dir: f64, target_sign: f64) -> Option<f64> {
    let (prev, hit) = expand_until(x0, dir, 0.25, 200, |x| {
        let f = cf.real_parts(x).0;
        f * target_sign > 0.0
    })?;
    refine(cf, prev, hit)
}

fn quadratic_roots(c: f64, q: f64) -> Vec<RealRoot> {
    // x^2 - c x + q
    let disc = c * c - 4.0 * q;
    let width = disc.abs().sqrt();
    if width < DOUBLE_ROOT_WIDTH {
        return vec![RealRoot { value: 0.5 * c, multiplicity: 2 }];
    }
    if disc < 0.0 {
        return Vec::new();
    }
    let big = 0.5 * (c + c.signum() * width);
    let (x1, x2) = if big == 0.0 { (-0.5 * width, 0.5 * width) } else { (q / big, big) };
    let (lo, hi) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
    vec![RealRoot { value: lo, multiplicity: 1 }, RealRoot { value: hi, multiplicity: 1 }]
}

/// All real roots of `chi`, ascending, with multiplicity (at most three).
pub fn real_roots(cf: &CharFunction) -> Vec<RealRoot> {
    if cf.is_quadratic() {
        return quadratic_roots(cf.c, cf.alpha + cf.beta);
    }
    let simple = |v: Option<f64>| v.map(|value| RealRoot { value, multiplicity: 1 });
    let double = |value: f64| RealRoot { value, multiplicity: 2 };
    let mut out = Vec::new();
    if cf.beta > 0.0 {
        // convex: F' increases through a single critical point
        let d0 = cf.real_parts(0.0).1;
        let dir = if d0 < 0.0 { 1.0 } else { -1.0 };
        let Some((p, q)) = expand_until(0.0, dir, 0.25, 200, |x| cf.real_parts(x).1 * dir > 0.0) else {
            return out;
        };
        let Some(xs) = critical_point(cf, p, q) else { return out };
        let (f, _, f2) = cf.real_parts(xs);
        if double_root_width(f, f2) < DOUBLE_ROOT_WIDTH {
            out.push(double(xs));
        } else if f < 0.0 {
            out.extend(simple(root_beyond(cf, xs, -1.0, 1.0)));
            out.extend(simple(root_beyond(cf, xs, 1.0, 1.0)));
        }
        return out;
    }
    // beta < 0: F' is smallest at the inflection point
    let r = cf.delay();
    let x_infl = (-r * r * cf.beta / 2.0).ln() / r;
    let (_, d_infl, _) = cf.real_parts(x_infl);
    if d_infl >= 0.0 {
        let f0 = cf.real_parts(x_infl).0;
        let dir = if f0 < 0.0 { 1.0 } else { -1.0 };
        out.extend(simple(root_beyond(cf, x_infl, dir, dir)));
        return out;
    }
    let left = expand_until(x_infl, -1.0, 0.25, 200, |x| cf.real_parts(x).1 > 0.0)
        .and_then(|(p, q)| critical_point(cf, q, p));
    let right = expand_until(x_infl, 1.0, 0.25, 200, |x| cf.real_parts(x).1 > 0.0)
        .and_then(|(p, q)| critical_point(cf, p, q));
    let (Some(a), Some(b)) = (left, right) else { return out };
    let (fa, _, fa2) = cf.real_parts(a);
    let (fb, _, fb2) = cf.real_parts(b);
    let a_double = double_root_width(fa, fa2) < DOUBLE_ROOT_WIDTH;
    let b_double = double_root_width(fb, fb2) < DOUBLE_ROOT_WIDTH;
    if a_double {
        out.push(double(a));
        out.extend(simple(root_beyond(cf, b, 1.0, 1.0)));
    } else if b_double {
        out.extend(simple(root_beyond(cf, a, -1.0, -1.0)));
        out.push(double(b));
    } else if fa > 0.0 && fb < 0.0 {
        out.extend(simple(root_beyond(cf, a, -1.0, -1.0)));
        out.extend(simple(refine(cf, a, b)));
        out.extend(simple(root_beyond(cf, b, 1.0, 1.0)));
    } else if fa > 0.0 {
        out.extend(simple(root_beyond(cf, a, -1.0, -1.0)));
    } else {
        out.extend(simple(root_beyond(cf, b, 1.0, 1.0)));
    }
    out
}

/// Smallest positive real root, the decay rate of a front into zero.
pub fn leading_positive_root(cf: &CharFunction) -> Option<f64> {
    real_roots(cf).into_iter().map(|r| r.value).find(|&x| x > 0.0)
}

/// Largest negative real root, the approach rate of a front to `kappa`.
pub fn leading_negative_root(cf: &CharFunction) -> Option<f64> {
    real_roots(cf).into_iter().map(|r| r.value).filter(|&x| x < 0.0).next_back()
}

#[derive(Clone, Copy, Debug)]
struct Rect {
    x0: f64,
    x1: f64,
    y0: f64,
    y1: f64,
}

impl Rect {
    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.x0 - slack && z.re <= self.x1 + slack && z.im >= self.y0 - slack && z.im <= self.y1 + slack
    }

    fn size(&self) -> f64 {
        (self.x1 - self.x0).max(self.y1 - self.y0)
    }
}

/// Winding number of `chi` around `rect` by trapezoid integration of
/// `chi'/chi`, doubling the samples until the value settles on an integer.
fn winding(cf: &CharFunction, rect: Rect) -> Result<usize, RootError> {
    let corners = [
        Complex64::new(rect.x0, rect.y0),
        Complex64::new(rect.x1, rect.y0),
        Complex64::new(rect.x1, rect.y1),
        Complex64::new(rect.x0, rect.y1),
    ];
    let g = |z: Complex64| -> Result<Complex64, RootError> {
        let f = cf.chi(z);
        if f.norm() < residual_bound(z) {
            return Err(RootError::ContourTooClose(z));
        }
        Ok(cf.dchi(z) / f)
    };
    // per-edge trapezoid sums, refined by adding midpoints
    let mut sums = [Complex64::new(0.0, 0.0); 4];
    let mut n = INITIAL_SAMPLES;
    for (k, s) in sums.iter_mut().enumerate() {
        let (a, b) = (corners[k], corners[(k + 1) % 4]);
        let dz = (b - a) / n as f64;
        let mut acc = 0.5 * (g(a)? + g(b)?);
        for i in 1..n {
            acc += g(a + dz * i as f64)?;
        }
        *s = acc * dz;
    }
    let total = |sums: &[Complex64; 4]| sums.iter().sum::<Complex64>() / Complex64::new(0.0, 2.0 * PI);
    let mut prev = total(&sums);
    while n < MAX_SAMPLES {
        for (k, s) in sums.iter_mut().enumerate() {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            let dz = (b - a) / n as f64;
            let mut mid = Complex64::new(0.0, 0.0);
            for i in 0..n {
                mid += g(a + dz * (i as f64 + 0.5))?;
            }
            *s = 0.5 * *s + 0.5 * mid * dz;
        }
        n *= 2;
        let cur = total(&sums);
        let k = cur.re.round();
        if k >= 0.0 && (cur.re - k).abs() < 1e-3 && cur.im.abs() < 1e-3 && prev.re.round() == k {
            return Ok(k as usize);
        }
        prev = cur;
    }
    Err(RootError::NonConvergence(format!(
        "winding number on [{}, {}] x [{}, {}] did not settle ({})",
        rect.x0, rect.x1, rect.y0, rect.y1, prev
    )))
}

fn newton_complex(cf: &CharFunction, z0: Complex64) -> Option<Complex64> {
    let mut z = z0;
    for _ in 0..100 {
        let d = cf.dchi(z);
        if d.norm() == 0.0 {
            return None;
        }
        let step = cf.chi(z) / d;
        z -= step;
        if !z.re.is_finite() || !z.im.is_finite() {
            return None;
        }
        if step.norm() <= 1e-15 * (1.0 + z.norm()) {
            break;
        }
    }
    (cf.chi(z).norm() <= residual_bound(z)).then_some(z)
}

const SPLITS: [f64; 7] = [0.5, 0.4375, 0.5625, 0.375, 0.625, 0.3125, 0.6875];

struct Search<'a> {
    cf: &'a CharFunction,
    real: &'a [RealRoot],
    upper: Vec<Complex64>,
}

impl Search<'_> {
    fn real_inside(&self, r: Rect) -> usize {
        self.real
            .iter()
            .filter(|x| x.value > r.x0 && x.value < r.x1)
            .map(|x| x.multiplicity as usize)
            .sum()
    }

    fn accept(&mut self, z: Complex64) {
        let z = Complex64::new(z.re, z.im.abs());
        if !self.upper.iter().any(|w| (w - z).norm() <= 1e-9 * (1.0 + z.norm())) {
            self.upper.push(z);
        }
    }

    /// Box in the open upper half plane holding `n` roots.
    fn upper_box(&mut self, r: Rect, n: usize, depth: usize) -> Result<(), RootError> {
        if n == 0 {
            return Ok(());
        }
        if depth > MAX_DEPTH {
            return Err(RootError::NonConvergence(format!("subdivision depth exceeded near {}", r.x0)));
        }
        if n == 1 {
            let centre = Complex64::new(0.5 * (r.x0 + r.x1), 0.5 * (r.y0 + r.y1));
            if let Some(z) = newton_complex(self.cf, centre) {
                if r.contains(z, 1e-9 * r.size()) && z.im > 0.0 {
                    self.accept(z);
                    return Ok(());
                }
            }
        }
        for &sx in &SPLITS {
            for &sy in &SPLITS {
                let xm = r.x0 + sx * (r.x1 - r.x0);
                let ym = r.y0 + sy * (r.y1 - r.y0);
                let kids = [
                    Rect { x0: r.x0, x1: xm, y0: r.y0, y1: ym },
                    Rect { x0: xm, x1: r.x1, y0: r.y0, y1: ym },
                    Rect { x0: r.x0, x1: xm, y0: ym, y1: r.y1 },
                    Rect { x0: xm, x1: r.x1, y0: ym, y1: r.y1 },
                ];
                let Ok(counts) = kids.iter().map(|k| winding(self.cf, *k)).collect::<Result<Vec<_>, _>>() else {
                    continue;
                };
                if counts.iter().sum::<usize>() != n {
                    continue;
                }
                for (k, c) in kids.iter().zip(counts) {
                    self.upper_box(*k, c, depth + 1)?;
                }
                return Ok(());
            }
        }
        Err(RootError::NonConvergence(format!(
            "could not split [{}, {}] x [{}, {}] consistently",
            r.x0, r.x1, r.y0, r.y1
        )))
    }

    /// Box symmetric about the real axis holding `n_complex` non-real roots.
    fn straddling_box(&mut self, r: Rect, n_complex: usize, depth: usize) -> Result<(), RootError> {
        if n_complex == 0 {
            return Ok(());
        }
        if depth > MAX_DEPTH {
            return Err(RootError::NonConvergence(format!("subdivision depth exceeded near {}", r.x0)));
        }
        if n_complex == 2 && self.real_inside(r) == 0 {
            let seed = Complex64::new(0.5 * (r.x0 + r.x1), 0.5 * r.y1);
            if let Some(z) = newton_complex(self.cf, seed) {
                if r.contains(z, 1e-9 * r.size()) && z.im.abs() > 0.0 {
                    self.accept(z);
                    return Ok(());
                }
            }
        }
        let width = r.x1 - r.x0;
        for &sx in &SPLITS {
            let xm = r.x0 + sx * width;
            if self.real.iter().any(|x| (x.value - xm).abs() < 1e-6 * width) {
                continue;
            }
            for &sy in &SPLITS {
                let ym = sy * r.y1;
                let top = Rect { x0: r.x0, x1: r.x1, y0: ym, y1: r.y1 };
                let left = Rect { x0: r.x0, x1: xm, y0: -ym, y1: ym };
                let right = Rect { x0: xm, x1: r.x1, y0: -ym, y1: ym };
                let (Ok(nt), Ok(nl), Ok(nr)) = (winding(self.cf, top), winding(self.cf, left), winding(self.cf, right)) else {
                    continue;
                };
                let (rl, rr) = (self.real_inside(left), self.real_inside(right));
                if nl < rl || nr < rr || 2 * nt + (nl - rl) + (nr - rr) != n_complex {
                    continue;
                }
                self.upper_box(top, nt, depth + 1)?;
                self.straddling_box(left, nl - rl, depth + 1)?;
                self.straddling_box(right, nr - rr, depth + 1)?;
                return Ok(());
            }
        }
        Err(RootError::NonConvergence(format!(
            "could not split [{}, {}] x [-{}, {}] consistently",
            r.x0, r.x1, r.y1, r.y1
        )))
    }
}

/// All roots of `chi` in `strip`, complex ones located by the argument
/// principle and polished by Newton.
pub fn complex_roots_in_strip(cf: &CharFunction, strip: Strip) -> Result<RootSet, RootError> {
    let all_real = real_roots(cf);
    let mut last_err = None;
    for nudge in [0.0, 1e-8, 1e-7, 1e-6] {
        let rect = Rect {
            x0: strip.re_min - nudge,
            x1: strip.re_max + nudge,
            y0: -(strip.im_max + nudge),
            y1: strip.im_max + nudge,
        };
        let total = match winding(cf, rect) {
            Ok(n) => n,
            Err(e @ RootError::ContourTooClose(_)) => {
                last_err = Some(e);
                continue;
            }
            Err(e) => return Err(e),
        };
        let real: Vec<RealRoot> = all_real.iter().copied().filter(|x| x.value > rect.x0 && x.value < rect.x1).collect();
        let n_real: usize = real.iter().map(|x| x.multiplicity as usize).sum();
        if total < n_real || !(total - n_real).is_multiple_of(2) {
            return Err(RootError::NonConvergence(format!(
                "contour count {total} inconsistent with {n_real} real roots"
            )));
        }
        let mut search = Search { cf, real: &real, upper: Vec::new() };
        search.straddling_box(rect, total - n_real, 0)?;
        let mut upper = search.upper;
        upper.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
        let complex = upper
            .iter()
            .flat_map(|z| [*z, z.conj()])
            .map(|z| ComplexRoot { z, residual: cf.chi(z).norm() })
            .collect();
        return Ok(RootSet { real, complex, strip: Some(strip), contour_count: Some(total) });
    }
    Err(last_err.unwrap_or(RootError::NonConvergence("strip nudging exhausted".into())))
}

#[derive(Clone, Debug, PartialEq)]
pub enum LawStatus {
    Pass,
    NotApplicable,
    Fail { root: Complex64, detail: String },
}

impl LawStatus {
    pub fn is_fail(&self) -> bool {
        matches!(self, LawStatus::Fail { .. })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RootLawReport {
    pub residuals: LawStatus,
    /// Complex roots lie strictly left of the smaller positive real root.
    pub ordering: LawStatus,
    /// Complex roots lie strictly left of the larger negative real root.
    pub kappa_separation: LawStatus,
    /// Complex roots left of the smaller positive real root have `|Im| > pi/(c h)`.
    pub imaginary_bound: LawStatus,
}

impl RootLawReport {
    pub fn all_pass(&self) -> bool {
        ![&self.residuals, &self.ordering, &self.kappa_separation, &self.imaginary_bound]
            .iter()
            .any(|s| s.is_fail())
    }
}

fn first_failure<'a, I, P>(roots: I, ok: P, detail: &str) -> LawStatus
where
    I: IntoIterator<Item = &'a ComplexRoot>,
    P: Fn(&ComplexRoot) -> bool,
{
    match roots.into_iter().find(|r| !ok(r)) {
        Some(r) => LawStatus::Fail { root: r.z, detail: detail.to_string() },
        None => LawStatus::Pass,
    }
}

/// Checks the ordering and separation laws that located roots must obey.
pub fn verify_root_laws(cf: &CharFunction, roots: &RootSet) -> RootLawReport {
    let residual_fail = roots
        .real
        .iter()
        .map(|r| Complex64::new(r.value, 0.0))
        .chain(roots.complex.iter().map(|r| r.z))
        .find(|&z| cf.chi(z).norm() > residual_bound(z));
    let residuals = match residual_fail {
        Some(z) => LawStatus::Fail { root: z, detail: "residual above bound".into() },
        None => LawStatus::Pass,
    };

    let positives: Vec<&RealRoot> = roots.real.iter().filter(|r| r.value > 0.0).collect();
    let ordering = match cf.side {
        Side::AtZero if cf.beta > 0.0 && positives.len() == 2 && positives.iter().all(|r| r.multiplicity == 1) => {
            let lambda = positives[0].value;
            first_failure(&roots.complex, |r| r.z.re < lambda, "complex root not left of the smaller real root")
        }
        _ => LawStatus::NotApplicable,
    };

    let negatives: u32 = roots.real.iter().filter(|r| r.value < 0.0).map(|r| r.multiplicity).sum();
    let kappa_separation = match cf.side {
        Side::AtKappa if negatives >= 2 => {
            let lambda2 = roots.real.iter().filter(|r| r.value < 0.0).next_back().map(|r| r.value).unwrap_or(0.0);
            first_failure(&roots.complex, |r| r.z.re < lambda2, "complex root not left of the larger negative root")
        }
        _ => LawStatus::NotApplicable,
    };

    let imaginary_bound = match (cf.side, positives.first()) {
        (Side::AtZero, Some(lambda)) if cf.delay() > 0.0 => {
            let bound = PI / cf.delay();
            first_failure(
                roots.complex.iter().filter(|r| r.z.re <= lambda.value),
                |r| r.z.im.abs() > bound,
                "imaginary part not above pi/(c h)",
            )
        }
        _ => LawStatus::NotApplicable,
    };

    RootLawReport { residuals, ordering, kappa_separation, imaginary_bound }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn values(rs: &[RealRoot]) -> Vec<(f64, u32)> {
        rs.iter().map(|r| (r.value, r.multiplicity)).collect()
    }

    #[test]
    fn chi_plug_in_values() {
        let cf = CharFunction::with_coeffs(Side::AtKappa, 2.0, 0.0, 0.0, -1.0);
        assert_eq!(cf.chi(Complex64::new(1.0, 0.0)), Complex64::new(-2.0, 0.0));
        let cf = CharFunction::with_coeffs(Side::AtZero, 2.5, 0.7, 1.0, 0.0);
        assert_eq!(cf.chi(Complex64::new(0.5, 0.0)).norm(), 0.0);
        let cf = CharFunction::with_coeffs(Side::AtZero, 1.0, 1.0, -1.0, 6.0);
        assert_eq!(cf.chi(Complex64::new(0.0, 0.0)), Complex64::new(5.0, 0.0));
    }

    #[test]
    fn quadratic_cases() {
        for h in [0.0, 0.4, 3.0] {
            let cf = CharFunction::with_coeffs(Side::AtZero, 2.5, h, 1.0, 0.0);
            assert_eq!(values(&real_roots(&cf)), vec![(0.5, 1), (2.0, 1)]);
        }
        let cf = CharFunction::with_coeffs(Side::AtZero, 2.0, 0.0, 0.0, 1.0);
        assert_eq!(values(&real_roots(&cf)), vec![(1.0, 2)]);
        let cf = CharFunction::with_coeffs(Side::AtKappa, 2.0, 0.0, 0.0, -1.0);
        let got = values(&real_roots(&cf));
        assert_eq!(got.len(), 2);
        assert!((got[0].0 - (1.0 - 2f64.sqrt())).abs() < 1e-15);
        assert!((got[1].0 - (1.0 + 2f64.sqrt())).abs() < 1e-15);
    }

    /// Sign-change scan over a dense grid as an independent oracle.
    fn scan_roots(cf: &CharFunction, lo: f64, hi: f64, n: usize) -> Vec<f64> {
        let xs: Vec<f64> = (0..=n).map(|i| lo + (hi - lo) * i as f64 / n as f64).collect();
        let mut out = Vec::new();
        for w in xs.windows(2) {
            let (fa, fb) = (cf.real_parts(w[0]).0, cf.real_parts(w[1]).0);
            if fa.signum() != fb.signum() {
                let (mut a, mut b) = (w[0], w[1]);
                for _ in 0..100 {
                    let m = 0.5 * (a + b);
                    if cf.real_parts(m).0.signum() == fa.signum() {
                        a = m
                    } else {
                        b = m
                    }
                }
                out.push(0.5 * (a + b));
            }
        }
        out
    }

    #[test]
    fn kappa_roots_match_scan() {
        // c = 1 already lies above the kappa-side critical speed at h = 1
        for (c, expected) in [(1.0, 1), (0.5, 3), (0.2, 3)] {
            let cf = CharFunction::with_coeffs(Side::AtKappa, c, 1.0, -1.0, -1.0);
            let got = real_roots(&cf);
            let want = scan_roots(&cf, -50.0, 50.0, 200_000);
            assert_eq!(got.len(), expected, "c = {c}");
            assert_eq!(want.len(), expected, "c = {c}");
            for (g, w) in got.iter().zip(&want) {
                assert!((g.value - w).abs() < 1e-11, "{} vs {}", g.value, w);
            }
            assert!(got.last().unwrap().value > 0.0);
        }
    }

    #[test]
    fn convex_side_matches_scan() {
        let cf = CharFunction::with_coeffs(Side::AtZero, 3.0, 1.0, -1.0, 6.0);
        let got = real_roots(&cf);
        let want = scan_roots(&cf, -50.0, 50.0, 100_000);
        assert_eq!(got.len(), 2);
        for (g, w) in got.iter().zip(&want) {
            assert!((g.value - w).abs() < 1e-11);
        }
        let slow = CharFunction::with_coeffs(Side::AtZero, 1.0, 1.0, -1.0, 6.0);
        assert!(real_roots(&slow).is_empty());
    }

    #[test]
    fn quadratic_strip_has_no_complex_roots() {
        let cf = CharFunction::with_coeffs(Side::AtZero, 2.5, 0.0, 1.0, 0.0);
        let rs = complex_roots_in_strip(&cf, Strip::new(-3.0, 3.0, 10.0)).unwrap();
        assert_eq!(values(&rs.real), vec![(0.5, 1), (2.0, 1)]);
        assert!(rs.complex.is_empty());
        assert_eq!(rs.contour_count, Some(2));
    }

    #[test]
    fn nicholson_zero_side_laws() {
        let cf = CharFunction::with_coeffs(Side::AtZero, 3.0, 1.0, -1.0, 6.0);
        let lambda = leading_positive_root(&cf).unwrap();
        let rs = complex_roots_in_strip(&cf, Strip::new(-4.0, 4.0, 30.0)).unwrap();
        assert!(!rs.complex.is_empty());
        assert_eq!(rs.contour_count, Some(rs.counted()));
        for r in &rs.complex {
            assert!(r.residual <= residual_bound(r.z));
            if r.z.re <= lambda {
                assert!(r.z.im.abs() > PI / 3.0);
            }
        }
        for pair in rs.complex.chunks(2) {
            assert_eq!(pair[0].z.re.to_bits(), pair[1].z.re.to_bits());
            assert_eq!(pair[0].z.im, -pair[1].z.im);
        }
        let report = verify_root_laws(&cf, &rs);
        assert!(report.all_pass(), "{report:?}");
        assert_eq!(report.ordering, LawStatus::Pass);
        assert_eq!(report.imaginary_bound, LawStatus::Pass);
    }

    #[test]
    fn planted_violation_is_reported() {
        let cf = CharFunction::with_coeffs(Side::AtZero, 3.0, 1.0, -1.0, 6.0);
        let mut rs = complex_roots_in_strip(&cf, Strip::new(-4.0, 4.0, 30.0)).unwrap();
        let lambda = leading_positive_root(&cf).unwrap();
        let fake = Complex64::new(lambda + 0.1, 0.2);
        rs.complex.push(ComplexRoot { z: fake, residual: 0.0 });
        let report = verify_root_laws(&cf, &rs);
        assert!(report.ordering.is_fail());
        assert!(report.residuals.is_fail());
    }

    #[test]
    fn ordering_not_applicable_without_delay_coupling() {
        let cf = CharFunction::with_coeffs(Side::AtZero, 2.5, 1.0, 1.0, 0.0);
        let rs = complex_roots_in_strip(&cf, Strip::new(-3.0, 3.0, 10.0)).unwrap();
        assert_eq!(verify_root_laws(&cf, &rs).ordering, LawStatus::NotApplicable);
    }

    #[test]
    fn kappa_side_separation() {
        let p: f64 = 6.0;
        let cf = CharFunction::with_coeffs(Side::AtKappa, 0.5, 1.0, -1.0, 1.0 - p.ln());
        let rs = complex_roots_in_strip(&cf, Strip::new(-30.0, 3.0, 40.0)).unwrap();
        let negatives = rs.real.iter().filter(|r| r.value < 0.0).count();
        assert_eq!(negatives, 2);
        assert!(!rs.complex.is_empty());
        assert_eq!(verify_root_laws(&cf, &rs).kappa_separation, LawStatus::Pass);
    }
}
