//! Critical speeds at which the characteristic functions acquire a double
//! real root, their large-delay constants, and the delay at which the two
//! speed curves meet.
//!
//! Both double-root systems reduce to one scalar equation in the product
//! `omega = (delay) * (root)`. The scalar root seeds a damped two-dimensional
//! Newton polish on the original system.

use std::fmt;

use nalgebra::{Matrix4, Vector4};
use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::charspec::{CharFunction, Side};
use crate::model::LinearizationData;
use crate::numeric::{bisect, expand_until, safeguarded_newton, solve2};

/// Bound on `|chi|` and `|chi'|` at a reported double root.
pub const CERTIFICATE_TOL: f64 = 1e-9;

/// Speeds above this cap are reported as infinite.
pub const SPEED_CAP: f64 = 1e6;

/// A wave speed or the explicit marker for an unbounded curve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Speed {
    Finite(f64),
    Infinite,
}

impl Speed {
    pub fn finite(&self) -> Option<f64> {
        match self {
            Speed::Finite(c) => Some(*c),
            Speed::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Speed::Infinite)
    }

    /// Ordering helper; not for use in arithmetic.
    pub fn as_f64(&self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

impl fmt::Display for Speed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Speed::Finite(c) => write!(f, "{c}"),
            Speed::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum SpeedError {
    #[error("no root: {0}")]
    NoRoot(String),
    #[error("linearization not admissible for the {side} side: {reason}")]
    Inadmissible { side: Side, reason: String },
    #[error("double-root solve failed on the {side} side at h = {h}: {reason}")]
    SolveFailure { side: Side, h: f64, reason: String },
    #[error("bracket failure: {0}")]
    BracketFailure(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootSign {
    Positive,
    Negative,
}

/// Root of `-2 alpha = beta exp(-omega) (2 + omega)` of the requested sign.
pub fn omega_const(alpha: f64, beta: f64, sign: RootSign) -> Result<f64, SpeedError> {
    let q = |w: f64| (-w).exp() * (2.0 + w);
    let dq = |w: f64| -(-w).exp() * (1.0 + w);
    let resid = |w: f64| (beta * q(w) + 2.0 * alpha, beta * dq(w));
    match sign {
        RootSign::Positive => {
            // q falls from 2 to 0 on (0, inf), so the level -2 alpha/beta must lie in (0, 2)
            if !(beta > 0.0 && alpha < 0.0 && alpha + beta > 0.0) {
                return Err(SpeedError::NoRoot(format!(
                    "positive root needs alpha < 0 < alpha + beta, beta > 0 (alpha = {alpha}, beta = {beta})"
                )));
            }
            let (_, hi) = expand_until(0.0, 1.0, 1.0, 200, |w| resid(w).0 < 0.0)
                .ok_or_else(|| SpeedError::NoRoot("positive root not bracketed".into()))?;
            safeguarded_newton(resid, 0.0, hi, 1e-16).ok_or_else(|| SpeedError::NoRoot("refinement failed".into()))
        }
        RootSign::Negative => {
            // q increases on (-inf, -1] up to e and the level is below 2
            if !(beta < 0.0 && alpha + beta < 0.0) {
                return Err(SpeedError::NoRoot(format!(
                    "negative root needs beta < 0 and alpha + beta < 0 (alpha = {alpha}, beta = {beta})"
                )));
            }
            let (_, lo) = expand_until(-1.0, -1.0, 1.0, 200, |w| resid(w).0 > 0.0)
                .ok_or_else(|| SpeedError::NoRoot("negative root not bracketed".into()))?;
            safeguarded_newton(resid, lo, -1.0, 1e-16).ok_or_else(|| SpeedError::NoRoot("refinement failed".into()))
        }
    }
}

/// Large-delay constants of both speed curves.
///
/// `theta1` is `None` when `alpha0 >= 0`: the lower curve then tends to
/// `2 sqrt(alpha0)` (or decays slower than `1/h`), so `h c0(h)` is unbounded.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AsymptoticConstants {
    pub omega0: Option<f64>,
    pub omega_k: f64,
    pub theta1: Option<f64>,
    pub theta: f64,
}

pub fn theta_of(omega: f64, beta: f64) -> f64 {
    (2.0 * omega / beta).sqrt() * (omega / 2.0).exp()
}

pub fn asymptotic_constants(lin: &LinearizationData) -> Result<AsymptoticConstants, SpeedError> {
    let omega_k = omega_const(lin.alpha_k, lin.beta_k, RootSign::Negative)?;
    let omega0 = if lin.alpha0 < 0.0 { Some(omega_const(lin.alpha0, lin.beta0, RootSign::Positive)?) } else { None };
    Ok(AsymptoticConstants {
        omega0,
        omega_k,
        theta1: omega0.map(|w| theta_of(w, lin.beta0)),
        theta: theta_of(omega_k, lin.beta_k),
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CriticalSpeedResult {
    pub h: f64,
    pub side: Side,
    pub c_star: Speed,
    /// Double root `z` of the characteristic function at `c_star`.
    pub double_root: Option<f64>,
}

impl CriticalSpeedResult {
    /// `(|chi|, |chi'|)` at the double root, `None` for infinite speeds.
    pub fn certificate(&self, lin: &LinearizationData) -> Option<(f64, f64)> {
        let c = self.c_star.finite()?;
        let z = Complex64::new(self.double_root?, 0.0);
        let cf = CharFunction::new(self.side, c, self.h, lin);
        Some((cf.chi(z).norm(), cf.dchi(z).norm()))
    }
}

fn check_zero_side(lin: &LinearizationData) -> Result<(), SpeedError> {
    if !(lin.alpha0 + lin.beta0 > 0.0 && lin.beta0 >= 0.0) {
        return Err(SpeedError::Inadmissible {
            side: Side::AtZero,
            reason: format!("need alpha0 + beta0 > 0 and beta0 >= 0 (got {}, {})", lin.alpha0, lin.beta0),
        });
    }
    Ok(())
}

fn check_kappa_side(lin: &LinearizationData) -> Result<(), SpeedError> {
    if !(lin.alpha_k + lin.beta_k < 0.0 && lin.beta_k < 0.0) {
        return Err(SpeedError::Inadmissible {
            side: Side::AtKappa,
            reason: format!("need alpha_k + beta_k < 0 and beta_k < 0 (got {}, {})", lin.alpha_k, lin.beta_k),
        });
    }
    Ok(())
}

/// Damped Newton on a 2x2 system; a step is halved up to 30 times while it
/// fails to decrease the residual norm.
fn damped_newton2<F>(mut x: [f64; 2], f: F) -> Option<[f64; 2]>
where
    F: Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]),
{
    let norm = |r: [f64; 2]| r[0].hypot(r[1]);
    let (mut r, mut j) = f(x);
    for _ in 0..60 {
        let res = norm(r);
        if res == 0.0 {
            break;
        }
        let (d0, d1) = solve2(j[0][0], j[0][1], j[1][0], j[1][1], -r[0], -r[1])?;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=30 {
            let cand = [x[0] + t * d0, x[1] + t * d1];
            let (rc, jc) = f(cand);
            if norm(rc).is_finite() && norm(rc) < res {
                x = cand;
                r = rc;
                j = jc;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted || (d0.abs() <= 1e-16 * x[0].abs() && d1.abs() <= 1e-16 * x[1].abs()) {
            break;
        }
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// `chi` and `chi'` in `(c, z)` with their Jacobian.
fn zero_system(alpha: f64, beta: f64, h: f64) -> impl Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    move |[c, z]| {
        let e = beta * (-c * h * z).exp();
        let g1 = z * z - c * z + alpha + e;
        let g2 = 2.0 * z - c - c * h * e;
        let g1_c = -z - h * z * e;
        let g2_c = -1.0 - h * e + c * h * h * z * e;
        let g2_z = 2.0 + c * c * h * h * e;
        ([g1, g2], [[g1_c, g2], [g2_c, g2_z]])
    }
}

/// Kappa-side system in `(eps, lambda)` with `eps = c^-2` and `lambda = c z`.
fn kappa_system(alpha: f64, beta: f64, h: f64) -> impl Fn([f64; 2]) -> ([f64; 2], [[f64; 2]; 2]) {
    move |[eps, lam]| {
        let e = beta * (-h * lam).exp();
        let h1 = eps * lam * lam - lam + alpha + e;
        let h2 = 2.0 * eps * lam - 1.0 - h * e;
        ([h1, h2], [[lam * lam, h2], [2.0 * lam, 2.0 * eps + h * h * e]])
    }
}

/// Lower critical speed: the unique `c` at which the zero-side function has a
/// double positive root.
pub fn critical_speed_zero(h: f64, lin: &LinearizationData) -> Result<CriticalSpeedResult, SpeedError> {
    check_zero_side(lin)?;
    let (alpha, beta) = (lin.alpha0, lin.beta0);
    let done = |c: f64, z: f64| CriticalSpeedResult { h, side: Side::AtZero, c_star: Speed::Finite(c), double_root: Some(z) };
    if beta == 0.0 {
        return Ok(done(2.0 * alpha.sqrt(), alpha.sqrt()));
    }
    if h == 0.0 {
        let c = 2.0 * (alpha + beta).sqrt();
        return Ok(done(c, 0.5 * c));
    }
    let fail = |reason: &str| SpeedError::SolveFailure { side: Side::AtZero, h, reason: reason.to_string() };
    // with t = c h z the derivative equation fixes c and z as functions of t
    let speed_of = |t: f64| (2.0 * t / (h * (1.0 + h * beta * (-t).exp()))).sqrt();
    let resid = |t: f64| {
        let c = speed_of(t);
        let z = t / (c * h);
        z * z - c * z + alpha + beta * (-t).exp()
    };
    let (_, hi) = expand_until(0.0, 1.0, 1.0, 200, |t| resid(t) < 0.0).ok_or_else(|| fail("residual never turns negative"))?;
    let t = bisect(resid, 1e-300, hi, 0.0).ok_or_else(|| fail("bisection failed"))?;
    let c0 = speed_of(t);
    let z0 = t / (c0 * h);
    let [c, z] = damped_newton2([c0, z0], zero_system(alpha, beta, h)).ok_or_else(|| fail("Newton polish failed"))?;
    let mut c = c;
    if alpha > 0.0 && h > 1e4 {
        c = c.max(2.0 * alpha.sqrt());
    }
    Ok(done(c, z))
}

/// Whether the kappa-side curve is infinite at `h`: the first-order limit
/// `-lambda + alpha + beta exp(-h lambda) = 0` already has a negative root.
pub fn kappa_speed_is_infinite(h: f64, lin: &LinearizationData) -> bool {
    let hb = h * lin.beta_k.abs();
    h == 0.0 || (hb < 1.0 && std::f64::consts::E * hb * (-lin.alpha_k * h).exp() <= 1.0)
}

/// Upper critical speed: the largest `c` for which the kappa-side function
/// keeps its two negative real roots.
pub fn critical_speed_kappa(h: f64, lin: &LinearizationData) -> Result<CriticalSpeedResult, SpeedError> {
    check_kappa_side(lin)?;
    if kappa_speed_is_infinite(h, lin) {
        return Ok(CriticalSpeedResult { h, side: Side::AtKappa, c_star: Speed::Infinite, double_root: None });
    }
    let (alpha, beta) = (lin.alpha_k, lin.beta_k);
    let fail = |reason: &str| SpeedError::SolveFailure { side: Side::AtKappa, h, reason: reason.to_string() };
    // omega = h lambda; the scaled root must keep eps = (1 + h beta e^-omega)/(2 lambda) positive
    let k = |w: f64| -w + h * beta * (-w).exp() * (w + 2.0) + 2.0 * alpha * h;
    let w_max = (h * beta.abs()).ln().min(0.0);
    let (_, lo) = expand_until(w_max, -1.0, 1.0, 200, |w| k(w) > 0.0).ok_or_else(|| fail("scalar residual not bracketed"))?;
    let w = bisect(k, lo, w_max, 0.0).ok_or_else(|| fail("bisection failed"))?;
    let lam0 = w / h;
    let eps0 = (1.0 + h * beta * (-w).exp()) / (2.0 * lam0);
    let [eps, lam] = damped_newton2([eps0, lam0], kappa_system(alpha, beta, h)).ok_or_else(|| fail("Newton polish failed"))?;
    if !(eps > 0.0 && lam < 0.0) {
        return Err(fail("polished root left the admissible region"));
    }
    let c = eps.powf(-0.5);
    if c > SPEED_CAP {
        return Ok(CriticalSpeedResult { h, side: Side::AtKappa, c_star: Speed::Infinite, double_root: None });
    }
    Ok(CriticalSpeedResult { h, side: Side::AtKappa, c_star: Speed::Finite(c), double_root: Some(lam / c) })
}

pub fn critical_speed(side: Side, h: f64, lin: &LinearizationData) -> Result<CriticalSpeedResult, SpeedError> {
    match side {
        Side::AtZero => critical_speed_zero(h, lin),
        Side::AtKappa => critical_speed_kappa(h, lin),
    }
}

/// Least delay at which the kappa-side curve is finite, to `1e-9` in `h`.
pub fn kappa_finite_onset(lin: &LinearizationData) -> f64 {
    // beyond 1/|beta_k| the curve is always finite
    let mut lo = 0.0;
    let mut hi = 1.0 / lin.beta_k.abs();
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if kappa_speed_is_infinite(mid, lin) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Intersection {
    /// Crossing delay from bisection on the sign of the curve difference.
    pub h0: f64,
    /// The same crossing from Newton on the joint four-equation system.
    pub h0_newton: f64,
    /// Common speed at the crossing.
    pub c0: f64,
    /// Derivative of `c_zero - c_kappa` at the crossing; positive means transversal.
    pub slope: f64,
    /// Least delay with finite upper curve.
    pub h_fin: f64,
}

impl Intersection {
    pub fn transversal(&self) -> bool {
        self.slope > 0.0
    }
}

fn curve_gap(h: f64, lin: &LinearizationData) -> Result<f64, SpeedError> {
    let upper = critical_speed_kappa(h, lin)?.c_star;
    let lower = critical_speed_zero(h, lin)?.c_star.as_f64();
    Ok(match upper {
        Speed::Infinite => f64::INFINITY,
        Speed::Finite(c) => c - lower,
    })
}

/// The unique delay where the two speed curves cross, if any.
pub fn h_star_intersection(lin: &LinearizationData) -> Result<Option<Intersection>, SpeedError> {
    check_zero_side(lin)?;
    check_kappa_side(lin)?;
    let consts = asymptotic_constants(lin)?;
    if let Some(theta1) = consts.theta1 {
        if consts.theta >= theta1 {
            return Ok(None);
        }
    }
    let h_fin = kappa_finite_onset(lin);
    let mut hi = (2.0 * h_fin).max(1.0);
    while curve_gap(hi, lin)? > 0.0 {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(SpeedError::BracketFailure("curve difference keeps its sign up to h = 1e6".into()));
        }
    }
    let mut lo = h_fin;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi || hi - lo <= 1e-13 * hi {
            break;
        }
        if curve_gap(mid, lin)? > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let h0 = 0.5 * (lo + hi);
    let lower = critical_speed_zero(h0, lin)?;
    let upper = critical_speed_kappa(h0, lin)?;
    let c0 = lower.c_star.as_f64();
    let h0_newton = joint_newton(
        lin,
        [h0, c0, lower.double_root.unwrap_or(0.0), upper.double_root.unwrap_or(-1.0)],
    )
    .ok_or_else(|| SpeedError::SolveFailure { side: Side::AtKappa, h: h0, reason: "joint Newton failed".into() })?;
    let step = 1e-5 * h0.max(1e-3);
    let slope = -(curve_gap(h0 + step, lin)? - curve_gap(h0 - step, lin)?) / (2.0 * step);
    Ok(Some(Intersection { h0, h0_newton, c0, slope, h_fin }))
}

/// Newton on `chi0(z0) = chi0'(z0) = chik(zk) = chik'(zk) = 0` in
/// `(h, c, z0, zk)`; returns the refined `h`.
fn joint_newton(lin: &LinearizationData, start: [f64; 4]) -> Option<f64> {
    let parts = |alpha: f64, beta: f64, h: f64, c: f64, z: f64| {
        let e = beta * (-c * h * z).exp();
        let f = z * z - c * z + alpha + e;
        let df = 2.0 * z - c - c * h * e;
        // rows: d/dh, d/dc, d/dz
        let f_row = [-c * z * e, -z - h * z * e, df];
        let df_row = [-c * e + c * c * h * z * e, -1.0 - h * e + c * h * h * z * e, 2.0 + c * c * h * h * e];
        (f, df, f_row, df_row)
    };
    let mut x = Vector4::from(start);
    for _ in 0..50 {
        let (h, c, z0, zk) = (x[0], x[1], x[2], x[3]);
        let (f0, d0, f0r, d0r) = parts(lin.alpha0, lin.beta0, h, c, z0);
        let (fk, dk, fkr, dkr) = parts(lin.alpha_k, lin.beta_k, h, c, zk);
        let r = Vector4::new(f0, d0, fk, dk);
        let j = Matrix4::new(
            f0r[0], f0r[1], f0r[2], 0.0, //
            d0r[0], d0r[1], d0r[2], 0.0, //
            fkr[0], fkr[1], 0.0, fkr[2], //
            dkr[0], dkr[1], 0.0, dkr[2],
        );
        let dx = j.lu().solve(&(-r))?;
        x += dx;
        if dx.amax() <= 1e-15 * (1.0 + x.amax()) {
            break;
        }
    }
    x.iter().all(|v| v.is_finite()).then_some(x[0])
}

#[derive(Clone, Debug, PartialEq)]
pub struct SpeedCurve {
    pub side: Side,
    pub samples: Vec<CriticalSpeedResult>,
    /// First `h` where the curve increases by more than `1e-8`, if any.
    pub monotone_violation: Option<f64>,
}

impl SpeedCurve {
    pub fn is_monotone(&self) -> bool {
        self.monotone_violation.is_none()
    }
}

/// Evenly spaced samples of one speed curve on `[h_min, h_max]`.
///
/// Every sample is solved independently from its own scalar reduction, so the
/// samples are computed in parallel.
pub fn speed_curve(lin: &LinearizationData, side: Side, h_min: f64, h_max: f64, n: usize) -> Result<SpeedCurve, SpeedError> {
    if !(h_min >= 0.0 && h_max > h_min && n >= 2) {
        return Err(SpeedError::BracketFailure(format!("bad sampling range [{h_min}, {h_max}] with n = {n}")));
    }
    let hs: Vec<f64> = (0..n).map(|i| h_min + (h_max - h_min) * i as f64 / (n - 1) as f64).collect();
    let samples = hs.par_iter().map(|&h| critical_speed(side, h, lin)).collect::<Result<Vec<_>, _>>()?;
    let monotone_violation = samples
        .windows(2)
        .find(|w| match (w[0].c_star, w[1].c_star) {
            (Speed::Finite(a), Speed::Finite(b)) => b > a + 1e-8,
            (Speed::Finite(_), Speed::Infinite) => true,
            _ => false,
        })
        .map(|w| w[1].h);
    Ok(SpeedCurve { side, samples, monotone_violation })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::charspec::real_roots;

    fn nicholson(p: f64, delta: f64) -> LinearizationData {
        LinearizationData::new(-delta, p, -delta, delta * (std::f64::consts::E * delta / p).ln())
    }

    #[test]
    fn omega_examples() {
        let w0 = omega_const(-1.0, 2.0, RootSign::Positive).unwrap();
        assert!((w0.exp() - 2.0 - w0).abs() < 1e-12);
        assert!((w0 - 1.1461932206205825).abs() < 1e-12);
        let wk = omega_const(-1.0, -1.0, RootSign::Negative).unwrap();
        assert!(wk > -2.3 && wk < -2.2);
        assert!((-(-wk).exp() * (2.0 + wk) - 2.0).abs() < 1e-12);
        assert!(matches!(omega_const(0.0, 2.0, RootSign::Positive), Err(SpeedError::NoRoot(_))));
    }

    #[test]
    fn closed_form_zero_side() {
        let kpp = LinearizationData::new(1.0, 0.0, 0.0, -1.0);
        for h in [0.0, 0.5, 1.0, 5.0, 1e5] {
            assert_eq!(critical_speed_zero(h, &kpp).unwrap().c_star, Speed::Finite(2.0));
        }
        let pure_delay = LinearizationData::new(0.0, 1.0, -1.0, -1.0);
        let r = critical_speed_zero(0.0, &pure_delay).unwrap();
        assert_eq!(r.c_star, Speed::Finite(2.0));
        assert_eq!(r.double_root, Some(1.0));
    }

    #[test]
    fn certificates_and_fold_on_both_sides() {
        let lin = nicholson(6.0, 1.0);
        for h in [0.05, 0.3, 1.0, 2.5, 7.0, 40.0] {
            for side in [Side::AtZero, Side::AtKappa] {
                let r = critical_speed(side, h, &lin).unwrap();
                let Some(c) = r.c_star.finite() else { continue };
                let (a, b) = r.certificate(&lin).unwrap();
                assert!(a <= CERTIFICATE_TOL && b <= CERTIFICATE_TOL, "{side} h={h}: {a} {b}");
                let count = |c: f64| {
                    real_roots(&CharFunction::new(side, c, h, &lin))
                        .iter()
                        .filter(|x| if side == Side::AtZero { x.value > 0.0 } else { x.value < 0.0 })
                        .count()
                };
                assert_eq!(count(c * 1.001), if side == Side::AtZero { 2 } else { 0 }, "{side} h={h}");
                assert_eq!(count(c * 0.999), if side == Side::AtZero { 0 } else { 2 }, "{side} h={h}");
            }
        }
    }

    #[test]
    fn kappa_infinite_up_to_threshold() {
        let lin = nicholson(6.0, 1.0);
        let h_fin = kappa_finite_onset(&lin);
        let residual = std::f64::consts::E * lin.beta_k.abs() * h_fin * h_fin.exp() - 1.0;
        assert!(residual.abs() < 1e-10, "{residual}");
        assert!(critical_speed_kappa(0.0, &lin).unwrap().c_star.is_infinite());
        assert!(critical_speed_kappa(0.999 * h_fin, &lin).unwrap().c_star.is_infinite());
        assert!(critical_speed_kappa(1.01 * h_fin, &lin).unwrap().c_star.finite().is_some());
    }

    #[test]
    fn large_delay_asymptotics() {
        let h = 1e3;
        let lower = LinearizationData::new(-1.0, 2.0, -1.0, -1.0);
        let consts = asymptotic_constants(&lower).unwrap();
        let c0 = critical_speed_zero(h, &lower).unwrap().c_star.finite().unwrap();
        let ck = critical_speed_kappa(h, &lower).unwrap().c_star.finite().unwrap();
        let r0 = h * c0 / consts.theta1.unwrap();
        let rk = h * ck / consts.theta;
        assert!((0.99..=1.01).contains(&r0), "{r0}");
        assert!((0.99..=1.01).contains(&rk), "{rk}");
    }

    #[test]
    fn intersection_cases() {
        let bounded = h_star_intersection(&nicholson(5.0, 1.0)).unwrap().expect("p/delta = 5 crosses");
        assert!((bounded.h0 - bounded.h0_newton).abs() < 1e-6, "{bounded:?}");
        assert!(bounded.transversal());
        assert!(h_star_intersection(&nicholson(2.75, 1.0)).unwrap().is_none());
    }

    #[test]
    fn curves_decrease() {
        let lin = nicholson(6.0, 1.0);
        let h_fin = kappa_finite_onset(&lin);
        let upper = speed_curve(&lin, Side::AtKappa, h_fin + 0.01, 5.0, 40).unwrap();
        assert!(upper.is_monotone());
        let cs: Vec<f64> = upper.samples.iter().map(|s| s.c_star.as_f64()).collect();
        assert!(cs.windows(2).all(|w| w[1] < w[0]));
        let kpp = LinearizationData::new(1.0, 0.0, 0.0, -1.0);
        let flat = speed_curve(&kpp, Side::AtZero, 0.0, 3.0, 2).unwrap();
        assert_eq!(flat.samples.len(), 2);
        assert!(flat.samples.iter().all(|s| s.c_star == Speed::Finite(2.0)));
    }
}
