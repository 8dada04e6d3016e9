//! Profile solver against independent oracles.

use wavefront_atlas::model::ModelSpec;
use wavefront_atlas::profile::{apply_operator, check_monotone, solve_profile, InitialGuess, ProfileOptions};

/// Fisher front `phi'' - c phi' + phi (1 - phi) = 0` by shooting backwards along
/// the stable direction of `phi = 1`, shifted so that `phi(0) = 1/2`.
fn fisher_by_shooting(c: f64) -> Vec<(f64, f64)> {
    let rate = 0.5 * (c - (c * c + 4.0).sqrt());
    let rhs = |y: [f64; 2]| [y[1], c * y[1] - y[0] * (1.0 - y[0])];
    let eps = 1e-9;
    let mut y = [1.0 - eps, -rate * eps];
    let dt = -1e-3;
    let mut t = 0.0;
    let mut path = vec![(t, y[0])];
    while y[0] > 1e-7 {
        let k1 = rhs(y);
        let k2 = rhs([y[0] + 0.5 * dt * k1[0], y[1] + 0.5 * dt * k1[1]]);
        let k3 = rhs([y[0] + 0.5 * dt * k2[0], y[1] + 0.5 * dt * k2[1]]);
        let k4 = rhs([y[0] + dt * k3[0], y[1] + dt * k3[1]]);
        for i in 0..2 {
            y[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        t += dt;
        path.push((t, y[0]));
    }
    path.reverse();
    let k = path.windows(2).position(|w| w[0].1 <= 0.5 && w[1].1 > 0.5).unwrap();
    let ((t0, p0), (t1, p1)) = (path[k], path[k + 1]);
    let mid = t0 + (0.5 - p0) / (p1 - p0) * (t1 - t0);
    path.into_iter().map(|(t, p)| (t - mid, p)).collect()
}

fn lookup(path: &[(f64, f64)], t: f64) -> f64 {
    let k = path.partition_point(|&(s, _)| s < t);
    let ((t0, p0), (t1, p1)) = (path[k - 1], path[k]);
    p0 + (t - t0) / (t1 - t0) * (p1 - p0)
}

#[test]
fn fisher_front_matches_shooting() {
    let c = 2.5;
    let oracle = fisher_by_shooting(c);
    let w = solve_profile(&ModelSpec::kpp_fisher(), 0.0, c, &ProfileOptions::default()).unwrap();
    assert!(w.converged);
    for t in [-8.0, -4.0, -1.0, 1.0, 4.0, 8.0] {
        let (got, want) = (w.value(t), lookup(&oracle, t));
        assert!((got - want).abs() < 1e-5, "t={t}: {got} vs {want}");
    }
    assert!(w.residual < 1e-6);
}

/// Largest negative root of `z^2 - c z - e^{-c h z}`, by bisection.
fn kpp_kappa_root(c: f64, h: f64) -> f64 {
    let f = |z: f64| z * z - c * z - (-c * h * z).exp();
    // f(0) = -1 and f grows without bound as z decreases while the exponential is small enough
    let (mut lo, mut hi) = (-1.0, 0.0);
    while f(lo) < 0.0 {
        lo *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) < 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn delayed_kpp_tail_exponents() {
    let (h, c) = (0.2, 2.2);
    let w = solve_profile(&ModelSpec::kpp_fisher(), h, c, &ProfileOptions::default()).unwrap();
    assert!(w.converged);
    let e = w.exponents.unwrap();
    // no delayed term at zero for u (1 - v): lambda solves z^2 - c z + 1 = 0
    let lambda = 0.5 * (c - (c * c - 4.0).sqrt());
    let lambda2 = kpp_kappa_root(c, h);
    assert!((e.lambda_minus / lambda - 1.0).abs() < 0.02, "{} vs {lambda}", e.lambda_minus);
    assert!((e.lambda_plus / lambda2 - 1.0).abs() < 0.05, "{} vs {lambda2}", e.lambda_plus);
}

#[test]
fn converged_profile_is_a_fixed_point() {
    let m = ModelSpec::kpp_fisher();
    let opts = ProfileOptions::default();
    let a = solve_profile(&m, 0.3, 3.0, &opts).unwrap();
    assert!(a.converged);
    let image = apply_operator(&a, &m);
    let once = image.iter().zip(&a.phi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(once <= 10.0 * opts.tol, "{once}");
    assert!(check_monotone(&a, None).monotone);
    assert!(a.phi.iter().all(|&p| p > 0.0 && p < a.kappa));
}

#[test]
fn tanh_and_ramp_seeds_reach_the_same_front() {
    let m = ModelSpec::kpp_fisher();
    let opts = ProfileOptions::default();
    let a = solve_profile(&m, 0.15, 3.0, &opts).unwrap();
    let b = solve_profile(&m, 0.15, 3.0, &ProfileOptions { initial: InitialGuess::Ramp, ..opts }).unwrap();
    assert!(a.converged && b.converged);
    let seeds = a.phi.iter().zip(&b.phi).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
    assert!(seeds <= 10.0 * opts.tol, "{seeds}");
}

#[test]
fn forced_run_below_the_lower_curve_reports_its_state() {
    // below c0 the tails fall back to the kernel roots; the solver must still return
    let m = ModelSpec::kpp_fisher();
    let opts = ProfileOptions { force: true, max_iter: 60, ..ProfileOptions::default() };
    let w = solve_profile(&m, 0.0, 1.5, &opts).unwrap();
    assert!(w.tails.left_fallback);
    assert!(w.iterations <= 60);
    assert!(w.phi.iter().all(|p| p.is_finite()));
}
