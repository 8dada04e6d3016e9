//! Built-in verification suite behind `wfa verify` and the `acceptance` test target.

use std::f64::consts::E;
use std::time::Instant;

use rand::{rngs::StdRng, Rng, SeedableRng};
use rayon::prelude::*;

use crate::atlas::{kpp_upper_boundary, nicholson_boundaries, nicholson_constants, nicholson_linearization, nicholson_nu0};
use crate::charspec::{complex_roots_in_strip, real_roots, verify_root_laws, CharFunction, Side, Strip};
use crate::model::{check_subtangency, linearization, LinearizationData, ModelSpec};
use crate::profile::{
    check_monotone, lyapunov_vminus, oscillation_diagnostic, oscillation_verdict, sign_changes, solve_profile,
    InitialGuess, ProfileOptions, Verdict, WaveProfile,
};
use crate::speeds::{
    asymptotic_constants, critical_speed, critical_speed_kappa, critical_speed_zero, h_star_intersection,
    kappa_finite_onset, Speed, CERTIFICATE_TOL,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    /// The twelve acceptance checks.
    Fast,
    /// Adds a grid-refinement study and a two-seed comparison of the profile solver.
    Full,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckOutcome {
    pub id: usize,
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed value, in the units of `tolerance`.
    pub value: f64,
    pub tolerance: String,
    pub detail: String,
    pub seconds: f64,
}

impl CheckOutcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2} {:<34} value {:<12.6e} tol {:<28} {:.2}s  {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.value,
            self.tolerance,
            self.seconds,
            self.detail
        )
    }
}

/// Pass/fail bookkeeping for one check: every sub-check records its own failure.
struct Tally {
    failures: Vec<String>,
    worst: f64,
    notes: Vec<String>,
}

impl Tally {
    fn new() -> Self {
        Tally { failures: Vec::new(), worst: 0.0, notes: Vec::new() }
    }

    fn require(&mut self, ok: bool, what: impl FnOnce() -> String) {
        if !ok {
            self.failures.push(what());
        }
    }

    fn observe(&mut self, x: f64) {
        if x.is_nan() || x > self.worst {
            self.worst = x;
        }
    }

    fn note(&mut self, s: String) {
        self.notes.push(s);
    }

    fn finish(self, id: usize, name: &'static str, tolerance: &str, start: Instant) -> CheckOutcome {
        let mut detail = self.notes.join("; ");
        if !self.failures.is_empty() {
            if !detail.is_empty() {
                detail.push_str("; ");
            }
            detail.push_str("failed: ");
            detail.push_str(&self.failures.join("; "));
        }
        CheckOutcome {
            id,
            name,
            passed: self.failures.is_empty(),
            value: self.worst,
            tolerance: tolerance.to_string(),
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

pub const CHECK_NAMES: [&str; 12] = [
    "nu0 threshold",
    "closed-form lower speeds",
    "double-root certificates",
    "large-delay asymptotics",
    "KPP asymptote",
    "explicit vs generic boundaries",
    "curve intersection",
    "root laws",
    "profile solver grid",
    "oscillation verdicts",
    "sub-tangency gate",
    "sign-change functional",
];

/// Runs check `id` (1 to 12).
pub fn run_check(id: usize) -> CheckOutcome {
    match id {
        1 => nu0_threshold(),
        2 => closed_form_speeds(),
        3 => certificates(),
        4 => asymptotics(),
        5 => kpp_asymptote(),
        6 => explicit_boundaries(),
        7 => intersection(),
        8 => root_laws(),
        9 => profile_grid(),
        10 => verdicts(),
        11 => subtangency(),
        12 => sign_change_laws(),
        _ => panic!("no check {id}"),
    }
}

pub fn run_suite(suite: Suite) -> Vec<CheckOutcome> {
    let mut out: Vec<CheckOutcome> = (1..=12).map(run_check).collect();
    if suite == Suite::Full {
        out.push(grid_refinement());
        out.push(seed_agreement());
    }
    out
}

fn nicholson(p: f64, delta: f64) -> ModelSpec {
    ModelSpec::nicholson(p, delta).expect("valid Nicholson parameters")
}

fn geometric(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64)).collect()
}

fn nu0_threshold() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let r = nicholson_nu0();
    let off = (r.nu0 - 2.808).abs();
    let routes = (r.nu0 - r.nu0_theta).abs();
    t.observe(off);
    t.require(off <= 5e-3, || format!("nu0 = {} is {off:e} from 2.808", r.nu0));
    t.require(routes <= 1e-6, || format!("routes differ by {routes:e}"));
    t.note(format!("nu0 = {:.10}, theta route {:.10}, t0 = {:.6}", r.nu0, r.nu0_theta, r.t0));
    t.finish(1, CHECK_NAMES[0], "5e-3 (routes 1e-6)", start)
}

fn closed_form_speeds() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let kpp = linearization(&ModelSpec::kpp_fisher());
    for h in [0.0, 0.5, 1.0, 5.0] {
        match critical_speed_zero(h, &kpp).map(|r| r.c_star) {
            Ok(Speed::Finite(c)) => {
                t.observe((c - 2.0).abs());
                t.require((c - 2.0).abs() <= 1e-10, || format!("KPP h={h}: {c}"));
            }
            other => t.require(false, || format!("KPP h={h}: {other:?}")),
        }
    }
    for (p, d) in [(6.0, 1.0), (5.0, 2.0)] {
        let want = 2.0 * f64::sqrt(p - d);
        match critical_speed_zero(0.0, &nicholson_linearization(p, d)).map(|r| r.c_star) {
            Ok(Speed::Finite(c)) => {
                t.observe((c - want).abs());
                t.require((c - want).abs() <= 1e-10, || format!("Nicholson ({p},{d}): {c} vs {want}"));
            }
            other => t.require(false, || format!("Nicholson ({p},{d}): {other:?}")),
        }
    }
    t.finish(2, CHECK_NAMES[1], "1e-10", start)
}

/// Real roots on the side's half-line.
fn side_root_count(side: Side, c: f64, h: f64, lin: &LinearizationData) -> u32 {
    real_roots(&CharFunction::new(side, c, h, lin))
        .iter()
        .filter(|r| if side == Side::AtZero { r.value > 0.0 } else { r.value < 0.0 })
        .map(|r| r.multiplicity)
        .sum()
}

fn certificates() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let lin = nicholson_linearization(6.0, 1.0);
    let h_fin = kappa_finite_onset(&lin);
    let grids = [(Side::AtZero, geometric(0.02, 50.0, 50)), (Side::AtKappa, geometric(1.01 * h_fin, 50.0, 50))];
    for (side, hs) in grids {
        for h in hs {
            let r = match critical_speed(side, h, &lin) {
                Ok(r) => r,
                Err(e) => {
                    t.require(false, || format!("{side} h={h}: {e}"));
                    continue;
                }
            };
            let (Some(c), Some((a, b))) = (r.c_star.finite(), r.certificate(&lin)) else {
                t.require(false, || format!("{side} h={h}: no finite speed"));
                continue;
            };
            t.observe(a.max(b));
            t.require(a <= CERTIFICATE_TOL && b <= CERTIFICATE_TOL, || format!("{side} h={h}: |chi| {a:e} |chi'| {b:e}"));
            // roots on the side's half-line exist only beyond the fold
            let (above, below) = (side_root_count(side, c * 1.001, h, &lin), side_root_count(side, c * 0.999, h, &lin));
            let want = if side == Side::AtZero { (2, 0) } else { (0, 2) };
            t.require((above, below) == want, || format!("{side} h={h}: fold counts {above}/{below}"));
        }
    }
    t.finish(3, CHECK_NAMES[2], "1e-9 on |chi|, |chi'|", start)
}

fn asymptotics() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let lin = LinearizationData::new(-1.0, 2.0, -1.0, -1.0);
    let h = 1e3;
    let result = (|| -> Result<(f64, f64), String> {
        let consts = asymptotic_constants(&lin).map_err(|e| e.to_string())?;
        let c0 = critical_speed_zero(h, &lin).map_err(|e| e.to_string())?.c_star.as_f64();
        let ck = critical_speed_kappa(h, &lin).map_err(|e| e.to_string())?.c_star.as_f64();
        let theta1 = consts.theta1.ok_or("theta_1 undefined")?;
        Ok((h * c0 / theta1, h * ck / consts.theta))
    })();
    match result {
        Ok((r0, rk)) => {
            for (name, r) in [("h c0 / theta1", r0), ("h ck / theta", rk)] {
                t.observe((r - 1.0).abs());
                t.require((0.99..=1.01).contains(&r), || format!("{name} = {r}"));
            }
            t.note(format!("ratios {r0:.6}, {rk:.6}"));
        }
        Err(e) => t.require(false, || e),
    }
    t.finish(4, CHECK_NAMES[3], "ratio in [0.99, 1.01]", start)
}

fn kpp_asymptote() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let beta_k = linearization(&ModelSpec::kpp_fisher()).beta_k;
    let at = kpp_upper_boundary(0.30, beta_k);
    t.require(at.is_infinite(), || format!("h = 0.30 gives {at:?}"));
    let h_near = -1.0 / (E * beta_k) + 1e-4;
    let near = kpp_upper_boundary(h_near, beta_k).as_f64();
    t.note(format!("upper speed {near:.6} at 1e-4 past the asymptote"));
    t.require(near > 1e3, || format!("upper speed {near} at 1e-4 past the asymptote is not above 1e3"));
    let hs: Vec<f64> = (0..50).map(|i| 0.4 + 1.6 * i as f64 / 49.0).collect();
    let cs: Vec<Speed> = hs.iter().map(|&h| kpp_upper_boundary(h, beta_k)).collect();
    for (h, c) in hs.iter().zip(&cs) {
        t.require(c.finite().is_some(), || format!("h={h}: {c:?}"));
    }
    for (i, w) in cs.windows(2).enumerate() {
        let d = w[1].as_f64() - w[0].as_f64();
        t.observe(d.max(0.0));
        t.require(d < 0.0, || format!("not decreasing at h={}", hs[i]));
    }
    t.finish(5, CHECK_NAMES[4], "+inf at 0.30, >1e3 near 1/e", start)
}

fn explicit_boundaries() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let (p, d) = (6.0, 1.0);
    let lin = nicholson_linearization(p, d);
    let hs = geometric(0.02, 20.0, 50);
    let mut lower = Vec::new();
    let mut upper = Vec::new();
    for &h in &hs {
        let explicit = match nicholson_boundaries(h, p, d) {
            Ok(pair) => pair,
            Err(e) => {
                t.require(false, || format!("h={h}: {e}"));
                continue;
            }
        };
        let generic = (critical_speed_zero(h, &lin), critical_speed_kappa(h, &lin));
        let (Ok(g0), Ok(gk)) = generic else {
            t.require(false, || format!("h={h}: generic solver failed"));
            continue;
        };
        for (name, a, b) in [("lower", explicit.0, g0.c_star), ("upper", explicit.1, gk.c_star)] {
            match (a, b) {
                (Speed::Infinite, Speed::Infinite) => {}
                (Speed::Finite(x), Speed::Finite(y)) => {
                    let rel = (x - y).abs() / x.abs().max(1.0);
                    t.observe(rel);
                    t.require(rel <= 1e-6, || format!("{name} h={h}: {x} vs {y}"));
                }
                _ => t.require(false, || format!("{name} h={h}: {a:?} vs {b:?}")),
            }
        }
        lower.push((h, explicit.0.as_f64()));
        upper.push((h, explicit.1.as_f64()));
    }
    for (name, curve, strict) in [("lower", &lower, true), ("upper", &upper, false)] {
        for w in curve.windows(2) {
            let ((h0, c0), (h1, c1)) = (w[0], w[1]);
            if c0.is_infinite() {
                continue;
            }
            let slope = (c1 - c0) / (h1 - h0);
            let ok = if strict { slope < 0.0 } else { slope <= 0.0 };
            t.require(ok, || format!("{name} curve rises between h={h0} and h={h1}"));
        }
    }
    t.finish(6, CHECK_NAMES[5], "1e-6 relative", start)
}

fn intersection() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    match h_star_intersection(&nicholson_linearization(5.0, 1.0)) {
        Ok(Some(x)) => {
            let gap = (x.h0 - x.h0_newton).abs();
            t.observe(gap);
            t.require(gap <= 1e-6, || format!("bisection {} vs Newton {}", x.h0, x.h0_newton));
            t.require(x.transversal(), || format!("slope {} at the crossing", x.slope));
            t.note(format!("h0 = {:.9}, c0 = {:.9}, slope {:.4e}", x.h0, x.c0, x.slope));
        }
        other => t.require(false, || format!("p/delta = 5: {other:?}")),
    }
    let lin = nicholson_linearization(2.75, 1.0);
    match h_star_intersection(&lin) {
        Ok(None) => {}
        other => t.require(false, || format!("p/delta = 2.75: {other:?}")),
    }
    // independent scan: the upper curve stays above the lower one up to h = 1e3
    let h_fin = kappa_finite_onset(&lin);
    for h in geometric(1.001 * h_fin, 1e3, 200) {
        let (Ok(lo), Ok(up)) = (critical_speed_zero(h, &lin), critical_speed_kappa(h, &lin)) else {
            t.require(false, || format!("p/delta = 2.75 h={h}: solver failed"));
            continue;
        };
        let (lo, up) = (lo.c_star.as_f64(), up.c_star.as_f64());
        t.require(up > lo, || format!("p/delta = 2.75 crosses near h={h}"));
    }
    t.finish(7, CHECK_NAMES[6], "1e-6", start)
}

fn root_laws() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let lin = nicholson_linearization(6.0, 1.0);
    let h_fin = kappa_finite_onset(&lin);
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let mut cases = Vec::new();
    for _ in 0..20 {
        let h = rng.gen_range(0.1..5.0);
        let c0 = critical_speed_zero(h, &lin).map(|r| r.c_star.as_f64()).unwrap_or(f64::NAN);
        cases.push((Side::AtZero, h, c0 * rng.gen_range(1.05..3.0)));
    }
    for _ in 0..20 {
        let h = rng.gen_range(1.1 * h_fin..5.0);
        let ck = critical_speed_kappa(h, &lin).map(|r| r.c_star.as_f64()).unwrap_or(f64::NAN);
        cases.push((Side::AtKappa, h, ck * rng.gen_range(0.2..0.95)));
    }
    let results: Vec<_> = cases
        .par_iter()
        .map(|&(side, h, c)| {
            let cf = CharFunction::new(side, c, h, &lin);
            (side, h, c, complex_roots_in_strip(&cf, Strip::new(-6.0, 6.0, 40.0)).map(|rs| (verify_root_laws(&cf, &rs), rs)))
        })
        .collect();
    let mut complex = 0;
    for (side, h, c, r) in results {
        match r {
            Ok((laws, rs)) => {
                complex += rs.complex.len();
                t.require(rs.contour_count == Some(rs.counted()), || {
                    format!("{side} h={h:.4} c={c:.4}: contour {:?} vs {} roots", rs.contour_count, rs.counted())
                });
                t.require(laws.all_pass(), || format!("{side} h={h:.4} c={c:.4}: {laws:?}"));
            }
            Err(e) => t.require(false, || format!("{side} h={h:.4} c={c:.4}: {e}")),
        }
    }
    t.note(format!("40 instances, {complex} complex roots"));
    t.finish(8, CHECK_NAMES[7], "exact counts", start)
}

/// Converged, accurate, monotone and strictly inside `(0, kappa)`.
fn profile_failures(w: &WaveProfile) -> Vec<String> {
    let mut out = Vec::new();
    let tag = format!("h={} c={}", w.h, w.c);
    if !w.converged {
        out.push(format!("{tag}: not converged (change {:e})", w.last_change));
    }
    if !(w.residual < 1e-6) {
        out.push(format!("{tag}: residual {:e}", w.residual));
    }
    if !check_monotone(w, None).monotone {
        out.push(format!("{tag}: not monotone"));
    }
    if !w.phi.iter().all(|&p| p > 0.0 && p < w.kappa) {
        out.push(format!("{tag}: leaves (0, kappa)"));
    }
    match w.exponents {
        Some(e) => {
            let lm = e.lambda_c.map(|l| e.lambda_minus / l);
            let lp = e.lambda2_c.map(|l| e.lambda_plus / l);
            if !lm.is_some_and(|r| (0.98..=1.02).contains(&r)) {
                out.push(format!("{tag}: left exponent ratio {lm:?}"));
            }
            if !lp.is_some_and(|r| (0.95..=1.05).contains(&r)) {
                out.push(format!("{tag}: right exponent ratio {lp:?}"));
            }
        }
        None => out.push(format!("{tag}: no exponent fit")),
    }
    out
}

fn profile_grid() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let m = ModelSpec::kpp_fisher();
    let cases: Vec<(f64, f64)> = [0.0, 0.15, 0.3].iter().flat_map(|&h| [2.2, 3.0, 5.0].map(|c| (h, c))).collect();
    let runs: Vec<_> = cases.par_iter().map(|&(h, c)| (h, c, solve_profile(&m, h, c, &ProfileOptions::default()))).collect();
    for (h, c, r) in runs {
        match r {
            Ok(w) => {
                t.observe(w.residual);
                for f in profile_failures(&w) {
                    t.require(false, || f);
                }
            }
            Err(e) => t.require(false, || format!("h={h} c={c}: {e}")),
        }
    }
    t.finish(9, CHECK_NAMES[8], "residual 1e-6, exponents 2%/5%", start)
}

fn verdicts() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    for (ratio, want) in [(5.0, Verdict::EventuallyMonotoneExcluded), (2.75, Verdict::Monotone)] {
        let run = || -> Result<(f64, f64, crate::profile::OscillationReport), String> {
            let k = nicholson_constants(ratio, 1.0).map_err(|e| e.to_string())?;
            // without a crossing, the delay where the upper curve turns finite anchors the construction
            let anchor = k.h0.or(k.h_a).ok_or("no anchor delay")?;
            let h = anchor + 0.5;
            let m = nicholson(ratio, 1.0);
            let c = critical_speed_zero(h, &linearization(&m)).map_err(|e| e.to_string())?.c_star.as_f64();
            let report = oscillation_verdict(&m, h, c, &ProfileOptions::default()).map_err(|e| e.to_string())?;
            Ok((h, c, report))
        };
        match run() {
            Ok((h, c, report)) => {
                t.note(format!("p/delta={ratio}: h={h:.6} c={c:.6} -> {}", report.verdict));
                t.require(report.verdict == want, || format!("p/delta={ratio}: {} instead of {want}", report.verdict));
                if want == Verdict::Monotone {
                    let ok = report.profile.as_ref().is_some_and(|w| w.converged && check_monotone(w, None).monotone);
                    t.require(ok, || format!("p/delta={ratio}: profile not converged and monotone"));
                }
            }
            Err(e) => t.require(false, || format!("p/delta={ratio}: {e}")),
        }
    }
    t.finish(10, CHECK_NAMES[9], "exact verdicts", start)
}

fn subtangency() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let cases = [
        ("Nicholson p/delta=4", nicholson(4.0, 1.0), true),
        ("Nicholson p/delta=e^2", nicholson(E * E, 1.0), true),
        ("KPP-Fisher", ModelSpec::kpp_fisher(), true),
        ("Nicholson p/delta=10", nicholson(10.0, 1.0), false),
    ];
    for (name, m, want) in cases {
        let got = check_subtangency(&m, 128);
        t.require(got == want, || format!("{name}: {got}"));
    }
    t.finish(11, CHECK_NAMES[10], "exact", start)
}

fn sign_change_laws() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let examples: [(&[f64], usize); 3] = [(&[1.0, 2.0, 0.5], 0), (&[1.0, -1.0, 1.0], 2), (&[1.0, 0.0, -1.0, 0.0, 1.0], 2)];
    for (xs, want) in examples {
        let got = sign_changes(xs);
        t.require(got == want, || format!("sc({xs:?}) = {got}"));
    }
    let mut rng = StdRng::seed_from_u64(12);
    for _ in 0..2000 {
        let len = rng.gen_range(1..40);
        let seg: Vec<f64> = (0..len).map(|_| if rng.gen_bool(0.1) { 0.0 } else { rng.gen_range(-1.0..1.0) }).collect();
        let v = lyapunov_vminus(&seg, rng.gen_range(-1.0..1.0));
        t.require(v % 2 == 1, || format!("V- = {v} for {seg:?}"));
    }
    match solve_profile(&ModelSpec::kpp_fisher(), 0.3, 2.2, &ProfileOptions::default()) {
        Ok(w) if w.converged && check_monotone(&w, None).monotone => {
            let d = oscillation_diagnostic(&w);
            let worst = d.vminus.iter().map(|&(_, v)| v).max().unwrap_or(0);
            t.observe(worst as f64);
            t.require(d.vminus.iter().all(|&(_, v)| v == 1), || format!("V- trace {:?}", d.vminus));
            t.note(format!("{} windows", d.vminus.len()));
        }
        Ok(_) => t.require(false, || "KPP h=0.3 c=2.2 profile not converged and monotone".into()),
        Err(e) => t.require(false, || e.to_string()),
    }
    t.finish(12, CHECK_NAMES[11], "V- = 1 on monotone tails", start)
}

/// Profile at the default step and at half of it; the difference should sit
/// at the level of the interpolation error.
fn grid_refinement() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let m = ModelSpec::kpp_fisher();
    let (h, c) = (0.15, 3.0);
    let coarse = solve_profile(&m, h, c, &ProfileOptions::default());
    let fine = coarse.as_ref().ok().map(|w| {
        solve_profile(&m, h, c, &ProfileOptions { half_width: Some(w.half_width), nodes: Some(2 * w.len() - 1), ..Default::default() })
    });
    match (coarse, fine) {
        (Ok(a), Some(Ok(b))) => {
            let diff = (0..a.len()).map(|i| (a.phi[i] - b.phi[2 * i]).abs()).fold(0.0, f64::max);
            t.observe(diff);
            t.require(a.converged && b.converged, || "not converged".into());
            t.require(diff <= 1e-6, || format!("refinement changes the profile by {diff:e}"));
            t.note(format!("n = {} vs {}", a.len(), b.len()));
        }
        _ => t.require(false, || "solver error".into()),
    }
    t.finish(13, "grid refinement", "1e-6", start)
}

fn seed_agreement() -> CheckOutcome {
    let start = Instant::now();
    let mut t = Tally::new();
    let m = ModelSpec::kpp_fisher();
    let opts = ProfileOptions::default();
    let a = solve_profile(&m, 0.15, 3.0, &opts);
    let b = solve_profile(&m, 0.15, 3.0, &ProfileOptions { initial: InitialGuess::Ramp, ..opts });
    match (a, b) {
        (Ok(a), Ok(b)) => {
            let diff = a.phi.iter().zip(&b.phi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
            t.observe(diff);
            t.require(diff <= 10.0 * opts.tol, || format!("seeds differ by {diff:e}"));
        }
        _ => t.require(false, || "solver error".into()),
    }
    t.finish(14, "two-seed agreement", "10 tol", start)
}
