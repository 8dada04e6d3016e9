//! Root bracketing, refinement and a small Krylov solver shared by the solvers.

/// Bisection on `[a, b]` where `f(a)` and `f(b)` have opposite signs (or one is zero).
///
/// Stops when the bracket is narrower than `xtol` or after 200 halvings.
/// Returns `None` when the endpoints do not bracket a sign change.
pub fn bisect<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> Option<f64> {
    let mut fa = f(a);
    let fb = f(b);
    if fa == 0.0 {
        return Some(a);
    }
    if fb == 0.0 {
        return Some(b);
    }
    if fa.is_nan() || fb.is_nan() || fa.signum() == fb.signum() {
        return None;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (b - a).abs() <= xtol || m == a || m == b {
            return Some(m);
        }
        let fm = f(m);
        if fm == 0.0 {
            return Some(m);
        }
        if fm.signum() == fa.signum() {
            a = m;
            fa = fm;
        } else {
            b = m;
        }
    }
    Some(0.5 * (a + b))
}

/// Newton's method kept inside a sign-changing bracket; falls back to
/// bisection whenever a Newton step leaves the bracket or stalls.
pub fn safeguarded_newton<F>(mut fdf: F, a: f64, b: f64, xtol: f64) -> Option<f64>
where
    F: FnMut(f64) -> (f64, f64),
{
    let (mut lo, mut hi) = if a < b { (a, b) } else { (b, a) };
    let (flo, _) = fdf(lo);
    let (fhi, _) = fdf(hi);
    if flo == 0.0 {
        return Some(lo);
    }
    if fhi == 0.0 {
        return Some(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        return None;
    }
    let lo_sign = flo.signum();
    let mut x = 0.5 * (lo + hi);
    let mut last_step = hi - lo;
    for _ in 0..300 {
        let (fx, dfx) = fdf(x);
        if fx == 0.0 {
            return Some(x);
        }
        if fx.signum() == lo_sign {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let step = (newton - x).abs();
        let next = if dfx != 0.0 && newton.is_finite() && newton > lo && newton < hi && step < 0.5 * last_step {
            last_step = step;
            newton
        } else {
            last_step = hi - lo;
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= xtol * (1.0 + x.abs()) || hi - lo <= xtol * (1.0 + x.abs()) {
            return Some(next);
        }
        x = next;
    }
    Some(x)
}

/// Expands `x0 + dir * step * 2^k` until `pred` holds, starting at `step`.
/// Returns the first point satisfying `pred` and the previous probe.
pub fn expand_until<P: FnMut(f64) -> bool>(x0: f64, dir: f64, step: f64, max_doublings: usize, mut pred: P) -> Option<(f64, f64)> {
    let mut prev = x0;
    let mut s = step;
    for _ in 0..max_doublings {
        let x = x0 + dir * s;
        if pred(x) {
            return Some((prev, x));
        }
        prev = x;
        s *= 2.0;
    }
    None
}

/// Golden-section search for a minimiser of a unimodal `f` on `[a, b]`.
pub fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut a: f64, mut b: f64, xtol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    while (b - a).abs() > xtol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Solves the 2x2 system `[[a, b], [c, d]] x = r` by Cramer's rule.
pub fn solve2(a: f64, b: f64, c: f64, d: f64, r0: f64, r1: f64) -> Option<(f64, f64)> {
    let det = a * d - b * c;
    if det == 0.0 || !det.is_finite() {
        return None;
    }
    Some(((r0 * d - b * r1) / det, (a * r1 - c * r0) / det))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Restarted GMRES for `A x = b` with a matrix-free `A`, starting from zero.
/// Returns the iterate and its relative residual.
pub fn gmres<F: FnMut(&[f64]) -> Vec<f64>>(mut apply: F, b: &[f64], restart: usize, max_iter: usize, rtol: f64) -> (Vec<f64>, f64) {
    let n = b.len();
    let bnorm = norm(b);
    let mut x = vec![0.0; n];
    if bnorm == 0.0 {
        return (x, 0.0);
    }
    let mut rel = 1.0;
    let mut done = 0;
    while done < max_iter {
        let ax = apply(&x);
        let r: Vec<f64> = b.iter().zip(&ax).map(|(b, a)| b - a).collect();
        let beta = norm(&r);
        rel = beta / bnorm;
        if rel <= rtol {
            break;
        }
        let mut basis = vec![r.iter().map(|v| v / beta).collect::<Vec<f64>>()];
        let mut hess: Vec<Vec<f64>> = Vec::new();
        let (mut cs, mut sn): (Vec<f64>, Vec<f64>) = (Vec::new(), Vec::new());
        let mut g = vec![beta];
        for k in 0..restart.min(max_iter - done) {
            done += 1;
            let mut w = apply(&basis[k]);
            let mut col = vec![0.0; k + 2];
            // modified Gram-Schmidt
            for (j, v) in basis.iter().enumerate() {
                col[j] = dot(&w, v);
                for (wi, vi) in w.iter_mut().zip(v) {
                    *wi -= col[j] * vi;
                }
            }
            col[k + 1] = norm(&w);
            for j in 0..k {
                let t = cs[j] * col[j] + sn[j] * col[j + 1];
                col[j + 1] = -sn[j] * col[j] + cs[j] * col[j + 1];
                col[j] = t;
            }
            let denom = col[k].hypot(col[k + 1]);
            let (c, s) = if denom == 0.0 { (1.0, 0.0) } else { (col[k] / denom, col[k + 1] / denom) };
            cs.push(c);
            sn.push(s);
            let next_norm = col[k + 1];
            col[k] = denom;
            col[k + 1] = 0.0;
            g.push(-s * g[k]);
            g[k] *= c;
            hess.push(col);
            rel = g[k + 1].abs() / bnorm;
            if rel <= rtol || next_norm == 0.0 {
                break;
            }
            basis.push(w.iter().map(|v| v / next_norm).collect());
        }
        // back substitution on the triangular factor
        let m = hess.len();
        let mut y = vec![0.0; m];
        for i in (0..m).rev() {
            let mut acc = g[i];
            for j in i + 1..m {
                acc -= hess[j][i] * y[j];
            }
            y[i] = acc / hess[i][i];
        }
        for (j, yj) in y.iter().enumerate() {
            for (xi, vi) in x.iter_mut().zip(&basis[j]) {
                *xi += yj * vi;
            }
        }
        if rel <= rtol {
            break;
        }
    }
    (x, rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisect_sqrt2() {
        let r = bisect(|x| x * x - 2.0, 0.0, 2.0, 1e-14).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-13);
        assert!(bisect(|x| x * x + 1.0, -1.0, 1.0, 1e-12).is_none());
    }

    #[test]
    fn newton_converges_inside_bracket() {
        let r = safeguarded_newton(|x| (x.exp() - 2.0 - x, x.exp() - 1.0), 1.0, 2.0, 1e-15).unwrap();
        assert!((r.exp() - 2.0 - r).abs() < 1e-14);
        assert!((r - 1.1461932206205825).abs() < 1e-13);
    }

    #[test]
    fn golden_finds_parabola_vertex() {
        // comparisons near a quadratic minimum resolve x only to about sqrt(eps)
        let (x, fx) = golden_min(|x| (x - 0.3).powi(2) + 1.0, -2.0, 5.0, 1e-10);
        assert!((x - 0.3).abs() < 1e-7);
        assert!((fx - 1.0).abs() < 1e-14);
    }

    #[test]
    fn expansion_stops_at_first_hit() {
        let (prev, hit) = expand_until(0.0, 1.0, 1e-3, 60, |x| x > 10.0).unwrap();
        assert!(hit > 10.0 && prev <= 10.0);
        assert!(expand_until(0.0, -1.0, 1.0, 5, |x| x < -1e6).is_none());
    }

    #[test]
    fn gmres_solves_nonsymmetric_system() {
        // tridiagonal, nonsymmetric, diagonally dominant
        let n = 200;
        let apply = |x: &[f64]| -> Vec<f64> {
            (0..n)
                .map(|i| {
                    let left = if i > 0 { -1.3 * x[i - 1] } else { 0.0 };
                    let right = if i + 1 < n { -0.4 * x[i + 1] } else { 0.0 };
                    3.0 * x[i] + left + right
                })
                .collect()
        };
        let truth: Vec<f64> = (0..n).map(|i| (i as f64 * 0.1).sin()).collect();
        let b = apply(&truth);
        let (x, rel) = gmres(apply, &b, 20, 400, 1e-12);
        assert!(rel <= 1e-12);
        assert!(x.iter().zip(&truth).all(|(a, b)| (a - b).abs() < 1e-9));
    }
}
