//! The closed region of `(h, c)` between the two critical speed curves,
//! explicit boundary equations for the KPP and Nicholson families, and the
//! Nicholson threshold constants.

use std::f64::consts::E;
use std::fmt;

use thiserror::Error;

use crate::model::{check_hypotheses, check_subtangency, linearization, Hypotheses, LinearizationData, ModelClass, ModelSpec};
use crate::numeric::{bisect, golden_min, safeguarded_newton};
use crate::speeds::{
    asymptotic_constants, critical_speed_kappa, critical_speed_zero, h_star_intersection, speed_curve, Intersection, Speed,
    SpeedCurve, SpeedError, SPEED_CAP,
};

#[derive(Clone, Debug, PartialEq, Error)]
pub enum AtlasError {
    #[error(transparent)]
    Speed(#[from] SpeedError),
    #[error("boundary cross-validation failed at h = {h}: {detail}")]
    Mismatch { h: f64, detail: String },
    #[error("{0}")]
    Unsupported(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PointClass {
    BelowLower,
    InDomain,
    AboveUpper,
    OnBoundary,
}

impl fmt::Display for PointClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PointClass::BelowLower => "BelowLower",
            PointClass::InDomain => "InDomain",
            PointClass::AboveUpper => "AboveUpper",
            PointClass::OnBoundary => "OnBoundary",
        })
    }
}

pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-8;

/// Locates `(h, c)` relative to the two speed curves.
pub fn classify_point(h: f64, c: f64, lin: &LinearizationData, tol: f64) -> Result<PointClass, SpeedError> {
    let lower = critical_speed_zero(h, lin)?.c_star.as_f64();
    let upper = critical_speed_kappa(h, lin)?.c_star;
    let near_upper = upper.finite().is_some_and(|u| (c - u).abs() <= tol);
    Ok(if (c - lower).abs() <= tol || near_upper {
        PointClass::OnBoundary
    } else if c < lower {
        PointClass::BelowLower
    } else if upper.finite().is_some_and(|u| c > u) {
        PointClass::AboveUpper
    } else {
        PointClass::InDomain
    })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Asymptote {
    /// The upper curve blows up as `h` decreases to this value.
    Vertical { h: f64 },
    /// The lower curve tends to this speed as `h` grows.
    Horizontal { c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DomainShape {
    /// The curves cross, so the region ends at a finite delay.
    Bounded,
    Unbounded,
}

#[derive(Clone, Debug, PartialEq)]
pub struct DomainAtlas {
    pub lower: SpeedCurve,
    pub upper: SpeedCurve,
    pub intersection: Option<Intersection>,
    pub asymptotes: Vec<Asymptote>,
    pub shape: DomainShape,
    /// Sub-tangency holds, so the sampled region is also the closure of the
    /// monotone-front domain.
    pub subtangent: bool,
    pub hypotheses: Hypotheses,
    /// Lower curve stays at or below the upper curve at every sample before the crossing.
    pub ordered: bool,
}

/// Samples both boundaries on `[0, h_max]` and attaches the crossing point,
/// asymptotes and structural flags.
pub fn trace_atlas(m: &ModelSpec, h_max: f64, n: usize) -> Result<DomainAtlas, AtlasError> {
    if n < 16 {
        return Err(AtlasError::Unsupported(format!("atlas tracing needs n >= 16, got {n}")));
    }
    let lin = linearization(m);
    let (lower, upper) = rayon::join(
        || speed_curve(&lin, crate::charspec::Side::AtZero, 0.0, h_max, n),
        || speed_curve(&lin, crate::charspec::Side::AtKappa, 0.0, h_max, n),
    );
    let (lower, upper) = (lower?, upper?);
    let intersection = h_star_intersection(&lin)?;
    let mut asymptotes = Vec::new();
    if m.class() == ModelClass::Kpp {
        asymptotes.push(Asymptote::Vertical { h: -1.0 / (E * lin.beta_k) });
    }
    if lin.alpha0 > 0.0 {
        asymptotes.push(Asymptote::Horizontal { c: 2.0 * lin.alpha0.sqrt() });
    }
    let limit = intersection.map(|x| x.h0).unwrap_or(f64::INFINITY);
    let ordered = lower
        .samples
        .iter()
        .zip(&upper.samples)
        .filter(|(l, _)| l.h <= limit)
        .all(|(l, u)| l.c_star.as_f64() <= u.c_star.as_f64() + 1e-9);
    Ok(DomainAtlas {
        lower,
        upper,
        shape: if intersection.is_some() { DomainShape::Bounded } else { DomainShape::Unbounded },
        intersection,
        asymptotes,
        subtangent: check_subtangency(m, 128),
        hypotheses: check_hypotheses(m),
        ordered,
    })
}

/// First crossing of `resid` from positive to non-positive when `c` grows
/// geometrically from `1e-3`; infinite if none below the speed cap.
fn first_crossing<F: Fn(f64) -> f64>(resid: F) -> Speed {
    let mut prev = 1e-3;
    if resid(prev) <= 0.0 {
        return Speed::Finite(prev);
    }
    let mut c = prev;
    while c < SPEED_CAP {
        c = (c * 1.25).min(SPEED_CAP);
        if resid(c) <= 0.0 {
            return bisect(&resid, prev, c, 0.0).map(Speed::Finite).unwrap_or(Speed::Infinite);
        }
        prev = c;
    }
    Speed::Infinite
}

/// Upper speed of a KPP-type model from its explicit boundary equation
/// `2 + sqrt(c^4 h^2 + 4) = -beta c^2 h^2 exp(1 + 2/(c^2 h + sqrt(c^4 h^2 + 4)))`.
pub fn kpp_upper_boundary(h: f64, beta_k: f64) -> Speed {
    if !(h > 0.0 && beta_k < 0.0) {
        return Speed::Infinite;
    }
    first_crossing(|c| {
        let s = (c.powi(4) * h * h + 4.0).sqrt();
        // log form of (2 + s) - |beta| c^2 h^2 exp(...)
        (2.0 + s).ln() - (-beta_k * c * c * h * h).ln() - 1.0 - 2.0 / (c * c * h + s)
    })
}

fn nicholson_root(c: f64, h: f64, delta: f64) -> f64 {
    (c.powi(4) * h * h + 4.0 * c * c * h * h * delta + 4.0).sqrt()
}

/// Lower Nicholson speed from its explicit equation.
pub fn nicholson_lower(h: f64, p: f64, delta: f64) -> Speed {
    if h == 0.0 {
        return Speed::Finite(2.0 * (p - delta).sqrt());
    }
    let resid = |c: f64| {
        let s = nicholson_root(c, h, delta);
        // increasing in c; negated for the shared crossing search
        -(((c * c + 4.0 * delta) / (2.0 + s)).ln() - (E * p).ln() + 0.5 * (s + c * c * h))
    };
    first_crossing(resid)
}

/// Upper Nicholson-type speed from the explicit equation, for any negative
/// slope `beta` at the positive equilibrium.
pub fn nicholson_upper(h: f64, delta: f64, beta: f64) -> Speed {
    if !(h > 0.0 && beta < 0.0) {
        return Speed::Infinite;
    }
    let ha = threshold_delay(delta, beta);
    if h <= ha {
        return Speed::Infinite;
    }
    first_crossing(|c| {
        let s = nicholson_root(c, h, delta);
        (2.0 + s).ln() - (E * c * c * h * h * beta.abs()).ln() - 0.5 * (s - c * c * h)
    })
}

/// Delay `h` solving `e |beta| h exp(delta h) = 1`.
pub fn threshold_delay(delta: f64, beta: f64) -> f64 {
    // log form 1 + ln|beta| + ln h + delta h = 0 is increasing in h
    let f = |h: f64| (1.0 + beta.abs().ln() + h.ln() + delta * h, 1.0 / h + delta);
    let mut hi = 1.0;
    while f(hi).0 < 0.0 {
        hi *= 2.0;
    }
    let mut lo = hi;
    while f(lo).0 > 0.0 {
        lo *= 0.5;
    }
    safeguarded_newton(f, lo, hi, 1e-16).unwrap_or(f64::NAN)
}

/// Both Nicholson boundary speeds from the explicit equations, each
/// cross-validated against the generic double-root solver.
pub fn nicholson_boundaries(h: f64, p: f64, delta: f64) -> Result<(Speed, Speed), AtlasError> {
    if !(p / delta > 1.0 && h >= 0.0) {
        return Err(AtlasError::Unsupported(format!("need p/delta > 1 and h >= 0 (p = {p}, delta = {delta}, h = {h})")));
    }
    let lin = nicholson_linearization(p, delta);
    let lower = nicholson_lower(h, p, delta);
    let generic_lower = critical_speed_zero(h, &lin)?.c_star;
    agree(h, "lower", lower, generic_lower)?;
    let upper = if lin.beta_k < 0.0 { nicholson_upper(h, delta, lin.beta_k) } else { Speed::Infinite };
    if lin.beta_k < 0.0 {
        agree(h, "upper", upper, critical_speed_kappa(h, &lin)?.c_star)?;
    }
    Ok((lower, upper))
}

fn agree(h: f64, which: &str, explicit: Speed, generic: Speed) -> Result<(), AtlasError> {
    match (explicit, generic) {
        (Speed::Infinite, Speed::Infinite) => Ok(()),
        (Speed::Finite(a), Speed::Finite(b)) if (a - b).abs() <= 1e-6 * a.abs().max(1.0) => Ok(()),
        (a, b) => Err(AtlasError::Mismatch { h, detail: format!("{which} curve: explicit {a} vs double-root {b}") }),
    }
}

pub fn nicholson_linearization(p: f64, delta: f64) -> LinearizationData {
    LinearizationData::new(-delta, p, -delta, delta * (E * delta / p).ln())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Nu0 {
    /// From the scalar threshold equation.
    pub nu0: f64,
    pub t0: f64,
    /// From equating the two large-delay constants along `p/delta`.
    pub nu0_theta: f64,
}

/// The `p/delta` threshold at which the Nicholson domain changes from
/// unbounded to bounded, computed two ways.
pub fn nicholson_nu0() -> Nu0 {
    let s = |t: f64| (1.0 + 2.0 * t).sqrt();
    let resid = |t: f64| {
        let lhs = ((-1.0 + s(t)) / t).ln() - 2.0 + s(t);
        let rhs = (1.0 + s(t)) / t * (-1.0 - s(t)).exp();
        lhs - rhs
    };
    let t0 = bisect(resid, 0.1, 50.0, 0.0).expect("threshold equation changes sign on [0.1, 50]");
    let nu0 = (-1.0 + s(t0)) / t0 * (-1.0 + s(t0)).exp();
    let gap = |ratio: f64| {
        let lin = nicholson_linearization(ratio, 1.0);
        let consts = asymptotic_constants(&lin).expect("admissible for ratio in (e, e^2)");
        consts.theta - consts.theta1.expect("alpha0 < 0")
    };
    let nu0_theta = bisect(gap, E * (1.0 + 1e-9), E * E, 0.0).expect("theta gap changes sign on (e, e^2]");
    Nu0 { nu0, t0, nu0_theta }
}

/// Secant-slope bound replacing the equilibrium slope when `g` is not
/// concave enough, together with the guaranteed-existence curve it induces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BetaKappaMinus {
    pub beta_k_minus: f64,
    pub beta_k: f64,
    /// Where the infimum of secant slopes is attained (`kappa` for the endpoint limit).
    pub argmin: f64,
    /// `beta_k_minus == beta_k`, so the guaranteed curve is the standard one.
    pub equivalent: bool,
    pub delta: f64,
    pub h_a_minus: f64,
    /// Crossing of the reduced upper curve with the lower curve.
    pub h0_minus: Option<f64>,
}

impl BetaKappaMinus {
    /// Reduced upper speed at `h`.
    pub fn c_kappa_minus(&self, h: f64) -> Speed {
        nicholson_upper(h, self.delta, self.beta_k_minus)
    }
}

/// Infimum over `(0, kappa)` of the secant slopes of `g` to `(kappa, g(kappa))`.
pub fn beta_kappa_minus(m: &ModelSpec) -> Result<BetaKappaMinus, AtlasError> {
    let (Some(delta), Some(_)) = (m.delta(), m.g(0.0)) else {
        return Err(AtlasError::Unsupported("secant bound needs a model of the form -delta u + g(v)".into()));
    };
    let k = m.kappa();
    let gk = m.g(k).unwrap_or(f64::NAN);
    let beta_k = m.dg(k).unwrap_or(f64::NAN);
    if !(beta_k < 0.0) {
        return Err(AtlasError::Unsupported(format!("slope at the positive equilibrium must be negative, got {beta_k}")));
    }
    let secant = |x: f64| (m.g(x).unwrap_or(f64::NAN) - gk) / (x - k);
    let n = 10_000;
    let grid: Vec<f64> = (1..n).map(|i| k * i as f64 / n as f64).collect();
    let (imin, smin) = grid
        .iter()
        .map(|&x| secant(x))
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");
    let (mut argmin, mut best) = (grid[imin], smin);
    if imin + 1 < grid.len() {
        let lo = if imin == 0 { grid[0] } else { grid[imin - 1] };
        let (x, s) = golden_min(secant, lo, grid[imin + 1], 1e-12 * k);
        if s < best {
            argmin = x;
            best = s;
        }
    }
    let equivalent = best >= beta_k;
    let beta_k_minus = if equivalent {
        argmin = k;
        beta_k
    } else {
        best
    };
    let h_a_minus = threshold_delay(delta, beta_k_minus);
    let lin = linearization(m);
    let reduced = BetaKappaMinus { beta_k_minus, beta_k, argmin, equivalent, delta, h_a_minus, h0_minus: None };
    let gap = |h: f64| -> Result<f64, SpeedError> {
        let lower = critical_speed_zero(h, &lin)?.c_star.as_f64();
        Ok(reduced.c_kappa_minus(h).as_f64() - lower)
    };
    let mut hi = (2.0 * h_a_minus).max(1.0);
    while gap(hi)? > 0.0 && hi < 1e6 {
        hi *= 2.0;
    }
    let h0_minus = if gap(hi)? > 0.0 {
        None
    } else {
        let mut lo = h_a_minus;
        while hi - lo > 1e-12 * hi {
            let mid = 0.5 * (lo + hi);
            if gap(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    };
    Ok(BetaKappaMinus { h0_minus, ..reduced })
}

/// Named constants of the Nicholson family at one `(p, delta)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NicholsonConstants {
    pub p: f64,
    pub delta: f64,
    pub kappa: f64,
    pub beta_k: f64,
    /// `None` when `p/delta <= e`, where the upper curve is infinite for every `h`.
    pub h_a: Option<f64>,
    pub nu0: f64,
    pub t0: f64,
    pub h0: Option<f64>,
    pub beta_k_minus: Option<f64>,
    pub h_a_minus: Option<f64>,
    pub h0_minus: Option<f64>,
}

pub fn nicholson_constants(p: f64, delta: f64) -> Result<NicholsonConstants, AtlasError> {
    let m = ModelSpec::nicholson(p, delta).map_err(|e| AtlasError::Unsupported(e.to_string()))?;
    let lin = linearization(&m);
    let nu = nicholson_nu0();
    let admissible = lin.beta_k < 0.0;
    let h_a = admissible.then(|| threshold_delay(delta, lin.beta_k));
    let h0 = if admissible { h_star_intersection(&lin)?.map(|x| x.h0) } else { None };
    let minus = if admissible { Some(beta_kappa_minus(&m)?) } else { None };
    Ok(NicholsonConstants {
        p,
        delta,
        kappa: m.kappa(),
        beta_k: lin.beta_k,
        h_a,
        nu0: nu.nu0,
        t0: nu.t0,
        h0,
        beta_k_minus: minus.map(|b| b.beta_k_minus),
        h_a_minus: minus.map(|b| b.h_a_minus),
        h0_minus: minus.and_then(|b| b.h0_minus),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kpp_points() {
        let lin = LinearizationData::new(1.0, 0.0, 0.0, -1.0);
        assert_eq!(classify_point(0.3, 1.9, &lin, DEFAULT_CLASSIFY_TOL).unwrap(), PointClass::BelowLower);
        assert_eq!(classify_point(0.3, 5.0, &lin, DEFAULT_CLASSIFY_TOL).unwrap(), PointClass::InDomain);
        assert_eq!(classify_point(0.3, 2.0, &lin, DEFAULT_CLASSIFY_TOL).unwrap(), PointClass::OnBoundary);
        assert!(kpp_upper_boundary(0.3, -1.0).is_infinite());
    }

    #[test]
    fn kpp_explicit_upper_matches_double_root() {
        let lin = LinearizationData::new(1.0, 0.0, 0.0, -1.0);
        for h in [0.4, 0.5, 1.0, 2.0] {
            let explicit = kpp_upper_boundary(h, -1.0).finite().unwrap();
            let generic = critical_speed_kappa(h, &lin).unwrap().c_star.finite().unwrap();
            assert!((explicit - generic).abs() < 1e-8 * generic, "h={h}: {explicit} vs {generic}");
        }
        // independent root-bracketing oracle: c ~ (h - 1/e)^(-1/2) near the asymptote
        for (gap, oracle) in [(1e-4, 99.99320437257248), (1e-6, 999.999320534249)] {
            let c = kpp_upper_boundary(1.0 / E + gap, -1.0).finite().unwrap();
            assert!((c - oracle).abs() < 1e-6 * oracle, "{c} vs {oracle}");
        }
    }

    #[test]
    fn nicholson_explicit_matches_generic() {
        let (lower, upper) = nicholson_boundaries(0.0, 6.0, 1.0).unwrap();
        assert_eq!(lower, Speed::Finite(2.0 * 5f64.sqrt()));
        assert!(upper.is_infinite());
        for h in [0.2, 0.5, 1.0, 2.0, 4.0] {
            nicholson_boundaries(h, 6.0, 1.0).unwrap();
        }
    }

    #[test]
    fn threshold_delay_identity() {
        let beta = 1.0 - 6f64.ln();
        let ha = threshold_delay(1.0, beta);
        assert!((E * beta.abs() * ha * ha.exp() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn nu0_two_routes() {
        let nu = nicholson_nu0();
        assert!((nu.nu0 - 2.808).abs() < 5e-3);
        assert!(nu.nu0 > E && nu.nu0 < E * E);
        assert!((nu.nu0 - nu.nu0_theta).abs() < 1e-6, "{nu:?}");
    }

    #[test]
    fn secant_bound() {
        let at_threshold = beta_kappa_minus(&ModelSpec::nicholson(E * E, 1.0).unwrap()).unwrap();
        assert!(at_threshold.equivalent);
        let strong = ModelSpec::nicholson(10.0, 1.0).unwrap();
        let b = beta_kappa_minus(&strong).unwrap();
        assert!(b.beta_k_minus < b.beta_k);
        let ha = threshold_delay(1.0, b.beta_k);
        assert!(b.h_a_minus > 0.0 && b.h_a_minus <= ha);
        let k = strong.kappa();
        let gk = strong.g(k).unwrap();
        for i in 0..=2000 {
            let x = k * i as f64 / 2000.0;
            assert!(strong.g(x).unwrap() <= b.beta_k_minus * (x - k) + gk + 1e-12);
        }
        let lin = linearization(&strong);
        let h0m = b.h0_minus.unwrap();
        for i in 1..=20 {
            let h = h0m * i as f64 / 20.0;
            let reduced = b.c_kappa_minus(h).as_f64();
            let standard = critical_speed_kappa(h, &lin).unwrap().c_star.as_f64();
            assert!(reduced <= standard * (1.0 + 1e-9), "h={h}: {reduced} vs {standard}");
        }
    }

    #[test]
    fn atlas_shapes() {
        let kpp = trace_atlas(&ModelSpec::kpp_fisher(), 2.0, 16).unwrap();
        assert!(kpp.lower.samples.iter().all(|s| s.c_star == Speed::Finite(2.0)));
        assert!(matches!(kpp.asymptotes[0], Asymptote::Vertical { h } if (h - 1.0 / E).abs() < 1e-15));
        assert!(kpp.subtangent && kpp.ordered);
        let bounded = trace_atlas(&ModelSpec::nicholson(5.0, 1.0).unwrap(), 5.0, 16).unwrap();
        assert_eq!(bounded.shape, DomainShape::Bounded);
        let open = trace_atlas(&ModelSpec::nicholson(2.75, 1.0).unwrap(), 5.0, 16).unwrap();
        assert_eq!(open.shape, DomainShape::Unbounded);
    }
}
