//! Travelling-wave profiles as fixed points of the integral form of
//! `phi'' - c phi' + f(phi(t), phi(t - c h)) = 0`, plus tail exponents and
//! sign-change diagnostics.

use std::fmt;

use thiserror::Error;

use crate::atlas::{classify_point, PointClass, DEFAULT_CLASSIFY_TOL};
use crate::charspec::{leading_negative_root, real_roots, CharFunction, RealRoot, Side};
use crate::model::{linearization, ModelSpec};
use crate::speeds::{critical_speed_kappa, critical_speed_zero, SpeedError};

/// Grid spacing targeted by the automatic node count; the finite-difference
/// residual is second order, so this keeps it near `1e-7` for unit-scale fronts.
const TARGET_STEP: f64 = 0.003;
const MIN_NODES: usize = 4096;
/// Default half-width: targets for the decay exponent `|rate| L` at each end.
const LEFT_DEPTH: f64 = 30.0;
const RIGHT_DEPTH: f64 = 25.0;
const MIN_DEPTH: f64 = 18.0;
/// Tail windows use values between these fractions of `kappa`.
const TAIL_BAND: (f64, f64) = (1e-12, 1e-4);
const MIN_TAIL_NODES: usize = 20;
const ANDERSON_DEPTH: usize = 10;
const STAGNATION_WINDOW: usize = 20;

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ProfileError {
    #[error("(h, c) = ({h}, {c}) is {class}; pass --force to solve outside the domain")]
    Precondition { h: f64, c: f64, class: PointClass },
    #[error(transparent)]
    Speed(#[from] SpeedError),
    #[error("invalid profile options: {0}")]
    Options(String),
    #[error("{side} tail has only {usable} usable nodes (need {MIN_TAIL_NODES})")]
    InsufficientTail { side: &'static str, usable: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitialGuess {
    Tanh,
    Ramp,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProfileOptions {
    /// Half-width `L` of the grid; `None` picks `max(60/lambda, 60/|lambda2|)`.
    pub half_width: Option<f64>,
    /// Node count; `None` picks a power of two with spacing near 0.003.
    pub nodes: Option<usize>,
    pub tol: f64,
    pub max_iter: usize,
    pub damping: f64,
    pub force: bool,
    pub initial: InitialGuess,
    /// Anderson mixing on top of the damped map.
    pub accelerate: bool,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        ProfileOptions {
            half_width: None,
            nodes: None,
            tol: 1e-8,
            max_iter: 500,
            damping: 0.5,
            force: false,
            initial: InitialGuess::Tanh,
            accelerate: true,
        }
    }
}

/// Decay rates of the exponential extensions beyond the grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TailRates {
    pub left: f64,
    pub right: f64,
    /// Distance from `left` to the next positive characteristic root; zero at a
    /// double root, infinite when there is none.
    pub left_gap: f64,
    /// No positive characteristic root at the zero equilibrium; the kernel root was used.
    pub left_fallback: bool,
    pub right_fallback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Exponents {
    pub lambda_minus: f64,
    pub lambda_plus: f64,
    pub r2_minus: f64,
    pub r2_plus: f64,
    /// Characteristic roots the fits should reproduce, when they exist.
    pub lambda_c: Option<f64>,
    pub lambda2_c: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct WaveProfile {
    pub half_width: f64,
    pub step: f64,
    pub phi: Vec<f64>,
    pub dphi: Vec<f64>,
    pub c: f64,
    pub h: f64,
    pub kappa: f64,
    pub tails: TailRates,
    pub residual: f64,
    pub iterations: usize,
    /// Sup-norm change of the last damped, re-anchored sweep.
    pub last_change: f64,
    /// `sup |A(phi) - phi|` without re-anchoring; it stays near `last_change`
    /// except at a double root, where the truncated tail leaves a slow drift.
    pub drift: f64,
    pub converged: bool,
    pub exponents: Option<Exponents>,
}

impl WaveProfile {
    /// Wraps sampled values on the uniform grid over `[-half_width, half_width]`.
    /// Derivatives come from central differences.
    pub fn from_samples(phi: Vec<f64>, half_width: f64, c: f64, h: f64, kappa: f64) -> WaveProfile {
        let n = phi.len();
        let step = 2.0 * half_width / (n - 1) as f64;
        let dphi = central_derivative(&phi, step);
        WaveProfile {
            half_width,
            step,
            phi,
            dphi,
            c,
            h,
            kappa,
            tails: TailRates { left: 1.0, right: -1.0, left_gap: f64::INFINITY, left_fallback: false, right_fallback: false },
            residual: f64::NAN,
            iterations: 0,
            last_change: 0.0,
            drift: f64::NAN,
            converged: true,
            exponents: None,
        }
    }

    /// Magnitude below which tail values are iteration noise: a hundred
    /// times the last correction, and never under `1e-12 kappa`.
    pub fn noise_floor(&self) -> f64 {
        (TAIL_BAND.0 * self.kappa).max(100.0 * self.last_change)
    }

    pub fn len(&self) -> usize {
        self.phi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phi.is_empty()
    }

    pub fn t(&self, i: usize) -> f64 {
        -self.half_width + i as f64 * self.step
    }

    fn grid(&self) -> Grid<'_> {
        Grid::new(&self.phi, self.half_width, self.step, self.kappa, self.tails)
    }

    /// Value at any `t`, using the tail extensions outside the grid.
    pub fn value(&self, t: f64) -> f64 {
        self.grid().value(t)
    }
}

fn central_derivative(phi: &[f64], dt: f64) -> Vec<f64> {
    let n = phi.len();
    (0..n)
        .map(|i| match i {
            0 => (phi[1] - phi[0]) / dt,
            _ if i == n - 1 => (phi[n - 1] - phi[n - 2]) / dt,
            _ => (phi[i + 1] - phi[i - 1]) / (2.0 * dt),
        })
        .collect()
}

/// Uniform-grid view with the exponential tail extensions.
#[derive(Clone, Copy)]
struct Grid<'a> {
    phi: &'a [f64],
    l: f64,
    dt: f64,
    kappa: f64,
    tails: TailRates,
}

impl<'a> Grid<'a> {
    fn new(phi: &'a [f64], l: f64, dt: f64, kappa: f64, tails: TailRates) -> Self {
        Grid { phi, l, dt, kappa, tails }
    }

    /// A perturbation `v` of a state, extended by the linearized tails.
    fn tangent(v: &'a [f64], state: &Grid) -> Self {
        Grid { phi: v, l: state.l, dt: state.dt, kappa: 0.0, tails: state.tails }
    }

    /// Left extension at `x = t + L <= 0`. Below the grid the profile follows
    /// `e^{l1 t} - e^{l2 t}` for the two smallest positive roots, which becomes
    /// `-t e^{l1 t}` when they merge and a pure exponential when they are far apart.
    fn left_tail(&self, x: f64) -> f64 {
        let TailRates { left, left_gap: gap, .. } = self.tails;
        let shape = if !gap.is_finite() || self.tails.left_fallback {
            1.0
        } else if gap * self.l < 1e-8 {
            (self.l - x) / self.l
        } else {
            (gap * (x - self.l)).exp_m1() / (-gap * self.l).exp_m1()
        };
        self.phi[0] * shape * (left * x).exp()
    }

    /// `int_{-inf}^{-L} e^{z1 (-L - s)} H(s) ds` for the left extension,
    /// with `H` the linearized source of that extension.
    fn left_integral(&self, z1: f64, z2: f64, h0: f64) -> f64 {
        let TailRates { left, left_gap: gap, left_fallback, .. } = self.tails;
        if left_fallback {
            return h0 / (left - z1);
        }
        let correction = if !gap.is_finite() {
            0.0
        } else if gap * self.l < 1e-8 {
            1.0 / self.l
        } else {
            gap * (-gap * self.l).exp() / -(-gap * self.l).exp_m1()
        };
        self.phi[0] * (z2 - left + correction)
    }

    /// Value at integer node `j`, which may lie outside the grid.
    fn node(&self, j: i64) -> f64 {
        let n = self.phi.len() as i64;
        if j < 0 {
            self.left_tail(j as f64 * self.dt)
        } else if j >= n {
            let gap = self.kappa - self.phi[n as usize - 1];
            self.kappa - gap * (self.tails.right * (j - n + 1) as f64 * self.dt).exp()
        } else {
            self.phi[j as usize]
        }
    }

    /// Four-point Lagrange interpolation, with tails beyond the ends.
    fn value(&self, t: f64) -> f64 {
        let n = self.phi.len();
        if t <= -self.l {
            return self.left_tail(t + self.l);
        }
        if t >= self.l {
            let gap = self.kappa - self.phi[n - 1];
            return self.kappa - gap * (self.tails.right * (t - self.l)).exp();
        }
        let pos = (t + self.l) / self.dt;
        let j = pos.floor() as i64;
        let s = pos - j as f64;
        if s == 0.0 {
            return self.node(j);
        }
        let (p0, p1, p2, p3) = (self.node(j - 1), self.node(j), self.node(j + 1), self.node(j + 2));
        // weights for nodes at -1, 0, 1, 2
        let w0 = -s * (s - 1.0) * (s - 2.0) / 6.0;
        let w1 = (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0;
        let w2 = -(s + 1.0) * s * (s - 2.0) / 2.0;
        let w3 = (s + 1.0) * s * (s - 1.0) / 6.0;
        w0 * p0 + w1 * p1 + w2 * p2 + w3 * p3
    }

    /// `phi(t_i - c h)` at every node.
    fn delayed(&self, shift: f64) -> Vec<f64> {
        let n = self.phi.len();
        if shift == 0.0 {
            return self.phi.to_vec();
        }
        (0..n).map(|i| self.value(-self.l + i as f64 * self.dt - shift)).collect()
    }

    /// Location of `phi = kappa/2` nearest to `t = 0`.
    fn half_level(&self) -> Option<f64> {
        let half = 0.5 * self.kappa;
        let n = self.phi.len();
        let mid = (n - 1) as f64 / 2.0;
        let j = (1..n)
            .filter(|&j| (self.phi[j - 1] - half) * (self.phi[j] - half) <= 0.0)
            .min_by(|&a, &b| ((a as f64 - mid).abs()).total_cmp(&(b as f64 - mid).abs()))?;
        let t = |i: usize| -self.l + i as f64 * self.dt;
        crate::numeric::bisect(|s| self.value(s) - half, t(j - 1), t(j), 0.0)
    }
}

/// Roots of `z^2 - c z - 1`, ordered `z1 < 0 < z2`.
pub fn kernel_roots(c: f64) -> (f64, f64) {
    let d = (c * c + 4.0).sqrt();
    // stable pair: z1 z2 = -1
    let z2 = 0.5 * (c + d);
    (-1.0 / z2, z2)
}

/// Weights of `int_0^dt e^{z u} H(u) du` for `H` linear between its values at
/// `u = 0` (near) and `u = dt` (far).
fn segment_weights(z: f64, dt: f64) -> (f64, f64) {
    let x = z * dt;
    let a0 = if x == 0.0 { dt } else { dt * x.exp_m1() / x };
    let a1 = if x.abs() < 0.1 {
        // dt^2 * sum x^k / (k! (k + 2))
        let (mut term, mut sum) = (1.0, 0.5);
        for k in 1..12 {
            term *= x / k as f64;
            sum += term / (k + 2) as f64;
        }
        dt * dt * sum
    } else {
        (x.exp() * (x - 1.0) + 1.0) / (z * z)
    };
    (a0 - a1 / dt, a1 / dt)
}

struct Operator<'a> {
    m: &'a ModelSpec,
    c: f64,
    h: f64,
    z1: f64,
    z2: f64,
    w1: (f64, f64),
    w2: (f64, f64),
    e1: f64,
    e2: f64,
}

impl<'a> Operator<'a> {
    fn new(m: &'a ModelSpec, c: f64, h: f64, dt: f64) -> Self {
        let (z1, z2) = kernel_roots(c);
        Operator {
            m,
            c,
            h,
            z1,
            z2,
            w1: segment_weights(z1, dt),
            w2: segment_weights(-z2, dt),
            e1: (z1 * dt).exp(),
            e2: (-z2 * dt).exp(),
        }
    }

    /// `H = phi + f(phi, phi(. - c h))` at the nodes.
    fn source(&self, g: &Grid) -> Vec<f64> {
        let delayed = g.delayed(self.c * self.h);
        g.phi.iter().zip(&delayed).map(|(&u, &v)| u + self.m.f(u, v)).collect()
    }

    /// Convolves `H` with both kernels; returns the image and its exact derivative.
    fn integrate(&self, big_h: &[f64], g: &Grid) -> (Vec<f64>, Vec<f64>) {
        let n = big_h.len();
        let (kappa, tails) = (g.kappa, &g.tails);
        let mut fwd = vec![0.0; n];
        let mut bwd = vec![0.0; n];
        fwd[0] = g.left_integral(self.z1, self.z2, big_h[0]);
        for i in 0..n - 1 {
            fwd[i + 1] = self.e1 * fwd[i] + self.w1.0 * big_h[i + 1] + self.w1.1 * big_h[i];
        }
        bwd[n - 1] = kappa / self.z2 + (big_h[n - 1] - kappa) / (self.z2 - tails.right);
        for i in (0..n - 1).rev() {
            bwd[i] = self.e2 * bwd[i + 1] + self.w2.0 * big_h[i] + self.w2.1 * big_h[i + 1];
        }
        let scale = 1.0 / (self.z2 - self.z1);
        let phi = fwd.iter().zip(&bwd).map(|(a, b)| scale * (a + b)).collect();
        let dphi = fwd.iter().zip(&bwd).map(|(a, b)| scale * (self.z1 * a + self.z2 * b)).collect();
        (phi, dphi)
    }

    /// One application of the integral map; returns the image and its exact derivative.
    fn apply(&self, g: &Grid) -> (Vec<f64>, Vec<f64>) {
        let big_h = self.source(g);
        self.integrate(&big_h, g)
    }
}

/// Derivative of the integral map at a fixed state.
struct Tangent<'a, 'b> {
    op: &'b Operator<'a>,
    state: Grid<'b>,
    /// `1 + f_1` and `f_2` at every node.
    du: Vec<f64>,
    dv: Vec<f64>,
}

impl<'a, 'b> Tangent<'a, 'b> {
    fn new(op: &'b Operator<'a>, state: Grid<'b>) -> Self {
        let delayed = state.delayed(op.c * op.h);
        let du = state.phi.iter().zip(&delayed).map(|(&u, &v)| 1.0 + op.m.f1(u, v)).collect();
        let dv = state.phi.iter().zip(&delayed).map(|(&u, &v)| op.m.f2(u, v)).collect();
        Tangent {
            op,
            state,
            du,
            dv,
        }
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let g = Grid::tangent(v, &self.state);
        let vd = g.delayed(self.op.c * self.op.h);
        let hv: Vec<f64> = (0..v.len()).map(|i| self.du[i] * v[i] + self.dv[i] * vd[i]).collect();
        self.op.integrate(&hv, &g).0
    }
}

/// Node index and weights of the cubic interpolant at `t = 0`.
fn phase_stencil(l: f64, dt: f64) -> (usize, [f64; 4]) {
    let pos = l / dt;
    let j = pos.floor() as usize;
    let s = pos - j as f64;
    let w = [
        -s * (s - 1.0) * (s - 2.0) / 6.0,
        (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
        -(s + 1.0) * s * (s - 2.0) / 2.0,
        (s + 1.0) * s * (s - 1.0) / 6.0,
    ];
    (j, w)
}

fn phase_value(v: &[f64], stencil: &(usize, [f64; 4])) -> f64 {
    let (j, w) = stencil;
    (0..4).map(|k| w[k] * v[j - 1 + k]).sum()
}

/// One Newton step on `A(phi) - phi = 0` with the phase `phi(0) = kappa/2`,
/// bordered by a multiple of `phi'` so the translation mode stays solvable.
/// A converged bordered solve is a fixed point of the re-anchored map; at a
/// double root the truncated tail leaves a small drift `A(phi) - phi = -mu phi'`.
fn newton_step(op: &Operator, g: Grid, kappa: f64) -> Option<Vec<f64>> {
    let n = g.phi.len();
    let (image, dimage) = op.apply(&g);
    let resid: Vec<f64> = image.iter().zip(g.phi).map(|(a, p)| a - p).collect();
    let scale = dimage.iter().fold(0.0f64, |m, d| m.max(d.abs()));
    if scale == 0.0 {
        return None;
    }
    let psi: Vec<f64> = dimage.iter().map(|d| d / scale).collect();
    let stencil = phase_stencil(g.l, g.dt);
    let tangent = Tangent::new(op, g);
    let matvec = |x: &[f64]| -> Vec<f64> {
        let (v, mu) = (&x[..n], x[n]);
        let mut out: Vec<f64> = tangent.apply(v).iter().zip(v).zip(&psi).map(|((a, b), p)| a - b + mu * p).collect();
        out.push(phase_value(v, &stencil));
        out
    };
    let mut rhs: Vec<f64> = resid.iter().map(|r| -r).collect();
    rhs.push(0.5 * kappa - phase_value(g.phi, &stencil));
    let (x, rel) = crate::numeric::gmres(matvec, &rhs, 60, 1200, 1e-9);
    if !(rel.is_finite() && rel < 1e-3) {
        return None;
    }
Some(x[..n].iter().zip(g.phi).map(|(d, p)| p + d).collect())
}

/// Rates of the left and right exponential extensions at `(h, c)`.
pub fn tail_rates(m: &ModelSpec, h: f64, c: f64) -> TailRates {
    let lin = linearization(m);
    let (z1, z2) = kernel_roots(c);
    let positive: Vec<RealRoot> = real_roots(&CharFunction::new(Side::AtZero, c, h, &lin))
        .into_iter()
        .filter(|r| r.value > 0.0)
        .collect();
    let left = positive.first().map(|r| r.value);
    let left_gap = match positive.as_slice() {
        [first, ..] if first.multiplicity > 1 => 0.0,
        [first, second, ..] => second.value - first.value,
        _ => f64::INFINITY,
    };
    let right = leading_negative_root(&CharFunction::new(Side::AtKappa, c, h, &lin));
    TailRates {
        left: left.unwrap_or(z2),
        left_gap,
        right: right.unwrap_or(z1),
        left_fallback: left.is_none(),
        right_fallback: right.is_none(),
    }
}

fn auto_layout(rates: &TailRates, opts: &ProfileOptions) -> (f64, usize) {
    // decay exponents lambda L reached at each end: the left tail wants depth for the
    // linear regime, the right gap kappa - phi(L) must stay above the ~1e-13
    // roundoff of the recursions so that phi < kappa remains representable
    let (lam, mu) = (rates.left, rates.right.abs());
    let auto = (LEFT_DEPTH / lam).min(RIGHT_DEPTH / mu).max(MIN_DEPTH / lam).max(MIN_DEPTH / mu);
    let l = opts.half_width.unwrap_or(auto);
    let n = opts.nodes.unwrap_or_else(|| ((2.0 * l / TARGET_STEP).ceil() as usize).next_power_of_two().max(MIN_NODES));
    (l, n)
}

fn initial_guess(kind: InitialGuess, rates: &TailRates, kappa: f64, l: f64, n: usize) -> Vec<f64> {
    let dt = 2.0 * l / (n - 1) as f64;
    let (lam, mu) = (rates.left, rates.right);
    (0..n)
        .map(|i| {
            let t = -l + i as f64 * dt;
            match kind {
                // kappa/2 (1 + tanh(lam t/2)), written so the far tail does not cancel to zero
                InitialGuess::Tanh => kappa / (1.0 + (-lam * t).exp()),
                // linear core through kappa/2, exponential ends so the leading edge is not empty
                InitialGuess::Ramp => {
                    let w = 1.0 / lam;
                    let (a, b) = (-w, w);
                    if t < a {
                        0.0f64.max(kappa * 0.1 * (lam * (t - a)).exp())
                    } else if t > b {
                        kappa - kappa * 0.1 * (mu * (t - b)).exp()
                    } else {
                        kappa * (0.1 + 0.8 * (t - a) / (b - a))
                    }
                }
            }
        })
        .collect()
}

/// Shifts the profile so that `phi(0) = kappa/2`.
fn renormalize(phi: Vec<f64>, l: f64, dt: f64, kappa: f64, tails: TailRates) -> Vec<f64> {
    let g = Grid::new(&phi, l, dt, kappa, tails);
    match g.half_level() {
        Some(s) if s != 0.0 => (0..phi.len()).map(|i| g.value(-l + i as f64 * dt + s)).collect(),
        _ => phi,
    }
}

fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

/// Anderson mixing over the recent history of iterates and residuals.
struct Anderson {
    depth: usize,
    xs: Vec<Vec<f64>>,
    gs: Vec<Vec<f64>>,
}

impl Anderson {
    fn new(depth: usize) -> Self {
        Anderson { depth, xs: Vec::new(), gs: Vec::new() }
    }

    fn reset(&mut self) {
        self.xs.clear();
        self.gs.clear();
    }

    /// Given the current iterate `x` and its image `g`, proposes the next iterate.
    fn step(&mut self, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        self.xs.push(x.to_vec());
        self.gs.push(g.to_vec());
        if self.xs.len() > self.depth + 1 {
            self.xs.remove(0);
            self.gs.remove(0);
        }
        let k = self.xs.len();
        if k < 2 {
            return None;
        }
        let n = x.len();
        let resid = |j: usize, i: usize| self.gs[j][i] - self.xs[j][i];
        // columns: differences of successive residuals
        let m = k - 1;
        let df = nalgebra::DMatrix::from_fn(n, m, |i, j| resid(j + 1, i) - resid(j, i));
        let f = nalgebra::DVector::from_fn(n, |i, _| resid(k - 1, i));
        let gamma = df.svd(true, true).solve(&f, 1e-12).ok()?;
        let mut out = g.to_vec();
        for j in 0..m {
            let gj = gamma[j];
            for (i, o) in out.iter_mut().enumerate() {
                *o -= gj * (self.gs[j + 1][i] - self.gs[j][i]);
            }
        }
        out.iter().all(|v| v.is_finite()).then_some(out)
    }
}

/// Computes a profile by damped (optionally Anderson-mixed) iteration of the
/// integral map, re-anchored at `phi(0) = kappa/2` after every sweep.
pub fn solve_profile(m: &ModelSpec, h: f64, c: f64, opts: &ProfileOptions) -> Result<WaveProfile, ProfileError> {
    if !(opts.damping > 0.0 && opts.damping <= 1.0) {
        return Err(ProfileError::Options(format!("damping must lie in (0, 1], got {}", opts.damping)));
    }
    if !(c > 0.0 && h >= 0.0) {
        return Err(ProfileError::Options(format!("need c > 0 and h >= 0, got c = {c}, h = {h}")));
    }
    if !opts.force {
        let class = classify_point(h, c, &linearization(m), DEFAULT_CLASSIFY_TOL)?;
        if !matches!(class, PointClass::InDomain | PointClass::OnBoundary) {
            return Err(ProfileError::Precondition { h, c, class });
        }
    }
    let kappa = m.kappa();
    let tails = tail_rates(m, h, c);
    let (l, n) = auto_layout(&tails, opts);
    if n < 16 || !(l > 0.0) {
        return Err(ProfileError::Options(format!("grid too small: n = {n}, L = {l}")));
    }
    let dt = 2.0 * l / (n - 1) as f64;
    let op = Operator::new(m, c, h, dt);
    let d = opts.damping;
    // damped sweep, re-anchored, with its sup-norm change
    let map = |phi: &[f64]| -> (Vec<f64>, f64) {
        let g = Grid::new(phi, l, dt, kappa, tails);
        let (a, _) = op.apply(&g);
        let mixed = phi.iter().zip(&a).map(|(p, q)| (1.0 - d) * p + d * q).collect();
        let next = renormalize(mixed, l, dt, kappa, tails);
        let change = sup_diff(&next, phi);
        (next, change)
    };

    let mut phi = renormalize(initial_guess(opts.initial, &tails, kappa, l, n), l, dt, kappa, tails);
    let mut anderson = Anderson::new(ANDERSON_DEPTH);
    let mut change = f64::INFINITY;
    let mut history = Vec::new();
    let mut best = (f64::INFINITY, phi.clone());
    // plain damped steps remaining before mixing is retried
    let mut cooldown = 0usize;
    let mut newton = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let (next, sweep_change) = map(&phi);
        change = sweep_change;
        if change <= opts.tol {
            phi = next;
            break;
        }
        if !change.is_finite() || change > 100.0 * best.0 {
            // mixing went astray: restart from the best iterate seen so far
            anderson.reset();
            cooldown = 20;
            phi = best.1.clone();
            continue;
        }
        if change < best.0 {
            best = (change, phi.clone());
        }
        history.push(change);
        let k = history.len();
        // sweeps that stop gaining a factor two per twenty iterations hand over to Newton
        if !newton && k > STAGNATION_WINDOW && history[k - 1] > 0.5 * history[k - 1 - STAGNATION_WINDOW] {
            newton = true;
        }
        if newton {
            match newton_step(&op, Grid::new(&phi, l, dt, kappa, tails), kappa) {
                Some(p) if p.iter().all(|v| v.is_finite()) => phi = p,
                _ => phi = next,
            }
            continue;
        }
        let proposal = if opts.accelerate && cooldown == 0 { anderson.step(&phi, &next) } else { None };
        cooldown = cooldown.saturating_sub(1);
        phi = match proposal {
            Some(p) if change < 2.0 * best.0 => renormalize(p, l, dt, kappa, tails),
            Some(_) => {
                anderson.reset();
                next
            }
            None => next,
        };
    }
    let converged = change <= opts.tol;
    let g = Grid::new(&phi, l, dt, kappa, tails);
    let (image, dphi) = op.apply(&g);
    let drift = sup_diff(&image, &phi);
    let mut w = WaveProfile {
        half_width: l,
        step: dt,
        phi,
        dphi,
        c,
        h,
        kappa,
        tails,
        residual: f64::NAN,
        iterations,
        last_change: change,
        drift,
        converged,
        exponents: None,
    };
    w.residual = residual(&w, m);
    if converged {
        w.exponents = estimate_exponents(&w).ok();
    }
    Ok(w)
}

/// One application of the integral map to `w`, for consistency checks.
pub fn apply_operator(w: &WaveProfile, m: &ModelSpec) -> Vec<f64> {
    Operator::new(m, w.c, w.h, w.step).apply(&w.grid()).0
}

/// Sup over interior nodes of the finite-difference profile equation residual.
pub fn residual(w: &WaveProfile, m: &ModelSpec) -> f64 {
    residual_at_nodes(w, m).into_iter().fold(0.0, |a: f64, r| if r.is_nan() { f64::NAN } else { a.max(r.abs()) })
}

pub fn residual_at_nodes(w: &WaveProfile, m: &ModelSpec) -> Vec<f64> {
    let n = w.len();
    if n < 3 {
        return Vec::new();
    }
    let g = w.grid();
    let delayed = g.delayed(w.c * w.h);
    let dt = w.step;
    (1..n - 1)
        .map(|i| {
            let (a, b, c) = (w.phi[i - 1], w.phi[i], w.phi[i + 1]);
            (a - 2.0 * b + c) / (dt * dt) - w.c * (c - a) / (2.0 * dt) + m.f(b, delayed[i])
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MonotoneCheck {
    pub monotone: bool,
    /// First `t` with `phi' < -tol`.
    pub first_violation: Option<f64>,
}

/// Checks `phi' >= -tol` at every node; `tol = None` uses `1e-8 kappa`.
pub fn check_monotone(w: &WaveProfile, tol: Option<f64>) -> MonotoneCheck {
    let tol = tol.unwrap_or(1e-8 * w.kappa);
    let first = w.dphi.iter().position(|&d| d < -tol).map(|i| w.t(i));
    MonotoneCheck { monotone: first.is_none(), first_violation: first }
}

/// Least-squares slope and r^2.
fn fit_line(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for &(x, y) in pts {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, r2)
}

/// Fits `ln phi` on the left tail and `ln(kappa - phi)` on the right tail,
/// over nodes whose tail value lies in a fixed band of fractions of `kappa`.
pub fn estimate_exponents(w: &WaveProfile) -> Result<Exponents, ProfileError> {
    let lo = w.noise_floor();
    let hi = TAIL_BAND.1 * w.kappa;
    let mid = w.len() / 2;
    let left: Vec<(f64, f64)> =
        (0..mid).filter(|&i| w.phi[i] > lo && w.phi[i] <= hi).map(|i| (w.t(i), w.phi[i].ln())).collect();
    let right: Vec<(f64, f64)> = (mid..w.len())
        .filter(|&i| {
            let gap = w.kappa - w.phi[i];
            gap > lo && gap <= hi
        })
        .map(|i| (w.t(i), (w.kappa - w.phi[i]).ln()))
        .collect();
    if left.len() < MIN_TAIL_NODES {
        return Err(ProfileError::InsufficientTail { side: "left", usable: left.len() });
    }
    if right.len() < MIN_TAIL_NODES {
        return Err(ProfileError::InsufficientTail { side: "right", usable: right.len() });
    }
    let (lambda_minus, r2_minus) = fit_line(&left);
    let (lambda_plus, r2_plus) = fit_line(&right);
    let known = |fallback: bool, v: f64| (!fallback && v.is_finite()).then_some(v);
    Ok(Exponents {
        lambda_minus,
        lambda_plus,
        r2_minus,
        r2_plus,
        lambda_c: known(w.tails.left_fallback, w.tails.left),
        lambda2_c: known(w.tails.right_fallback, w.tails.right),
    })
}

/// Number of sign changes in a sequence, ignoring zeros.
pub fn sign_changes(samples: &[f64]) -> usize {
    let mut last = 0.0f64;
    let mut count = 0;
    for &v in samples.iter().filter(|v| **v != 0.0) {
        if last != 0.0 && (v > 0.0) != (last > 0.0) {
            count += 1;
        }
        last = v;
    }
    count
}

/// Odd sign-change functional of a delay segment followed by the derivative
/// at its right end.
pub fn lyapunov_vminus(segment: &[f64], right_derivative: f64) -> usize {
    let mut extended = segment.to_vec();
    extended.push(right_derivative);
    let sc = sign_changes(&extended);
    if sc % 2 == 1 {
        sc
    } else {
        sc + 1
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillationDiagnostic {
    /// Sign changes of `kappa - phi` on the right half of the grid.
    pub sc: usize,
    /// `(t, V^-)` of `kappa - phi` over the window `[t - c h, t]`.
    pub vminus: Vec<(f64, usize)>,
}

/// `V^-` of `kappa - phi` on windows ending at each `t`.
pub fn vminus_trace(w: &WaveProfile, ts: &[f64], samples_per_window: usize) -> Vec<(f64, usize)> {
    let width = w.c * w.h;
    let k = samples_per_window.max(2);
    let floor = w.noise_floor();
    let gap = |t: f64| quiet(w.kappa - w.value(t), floor);
    ts.iter()
        .map(|&t| {
            let seg: Vec<f64> = if width == 0.0 {
                vec![gap(t)]
            } else {
                (0..k).map(|j| gap(t - width + width * j as f64 / (k - 1) as f64)).collect()
            };
            let g = w.grid();
            let slope = (g.value(t + 0.5 * w.step) - g.value(t - 0.5 * w.step)) / w.step;
            (t, lyapunov_vminus(&seg, -slope))
        })
        .collect()
}

fn quiet(x: f64, floor: f64) -> f64 {
    if x.abs() < floor {
        0.0
    } else {
        x
    }
}

/// Sign structure of `kappa - phi` on the right half, ignoring values under
/// the noise floor.
pub fn oscillation_diagnostic(w: &WaveProfile) -> OscillationDiagnostic {
    let mid = w.len() / 2;
    let floor = w.noise_floor();
    let tail: Vec<f64> = w.phi[mid..].iter().map(|p| quiet(w.kappa - p, floor)).collect();
    let ts: Vec<f64> = (0..=32).map(|j| w.half_width * j as f64 / 32.0).collect();
    OscillationDiagnostic { sc: sign_changes(&tail), vminus: vminus_trace(w, &ts, 64) }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Verdict {
    Monotone,
    EventuallyMonotoneExcluded,
    OscillatoryTail,
    Inconclusive,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Monotone => "monotone",
            Verdict::EventuallyMonotoneExcluded => "eventually-monotone-excluded",
            Verdict::OscillatoryTail => "oscillatory-tail",
            Verdict::Inconclusive => "inconclusive",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OscillationReport {
    pub verdict: Verdict,
    pub c_zero: f64,
    /// `+inf` when the upper curve is infinite.
    pub c_kappa: f64,
    pub profile: Option<WaveProfile>,
    pub diagnostic: Option<OscillationDiagnostic>,
}

/// Classifies the front at `(h, c)`: points outside the closed domain cannot
/// carry an eventually monotone front, inside it the profile solver decides.
pub fn oscillation_verdict(m: &ModelSpec, h: f64, c: f64, opts: &ProfileOptions) -> Result<OscillationReport, ProfileError> {
    let lin = linearization(m);
    let c_zero = critical_speed_zero(h, &lin)?.c_star.as_f64();
    let c_kappa = critical_speed_kappa(h, &lin)?.c_star.as_f64();
    let tol = DEFAULT_CLASSIFY_TOL;
    let mut report = OscillationReport { verdict: Verdict::Inconclusive, c_zero, c_kappa, profile: None, diagnostic: None };
    if c > c_kappa + tol || c < c_zero - tol {
        report.verdict = Verdict::EventuallyMonotoneExcluded;
        return Ok(report);
    }
    let w = solve_profile(m, h, c, &ProfileOptions { force: true, ..*opts })?;
    let diag = oscillation_diagnostic(&w);
    report.verdict = if !w.converged {
        Verdict::Inconclusive
    } else if check_monotone(&w, None).monotone {
        Verdict::Monotone
    } else if diag.sc > 0 {
        Verdict::OscillatoryTail
    } else {
        Verdict::Inconclusive
    };
    report.profile = Some(w);
    report.diagnostic = Some(diag);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_identity() {
        for c in [0.1, 1.0, 2.5, 40.0] {
            let (z1, z2) = kernel_roots(c);
            assert!(z1 < 0.0 && z2 > 0.0);
            for z in [z1, z2] {
                assert!((z * z - c * z - 1.0).abs() < 1e-14 * (1.0 + c * c));
            }
        }
    }

    #[test]
    fn segment_weights_integrate_linear_exactly() {
        // int_0^dt e^{zu} (a + b u) du against a fine midpoint rule
        for z in [-3.0, -0.01, 0.0, 0.02, 2.0] {
            let dt = 0.3;
            let (near, far) = segment_weights(z, dt);
            let (a, b) = (1.3, -0.7);
            let got = near * a + far * (a + b * dt);
            let k = 200_000;
            let oracle: f64 =
                (0..k).map(|i| (i as f64 + 0.5) * dt / k as f64).map(|u| (z * u).exp() * (a + b * u)).sum::<f64>() * dt / k as f64;
            assert!((got - oracle).abs() < 1e-10, "z={z}: {got} vs {oracle}");
        }
    }

    #[test]
    fn sign_change_examples() {
        assert_eq!(sign_changes(&[1.0, 2.0, 0.5]), 0);
        assert_eq!(sign_changes(&[1.0, -1.0, 1.0]), 2);
        assert_eq!(sign_changes(&[1.0, 0.0, -1.0, 0.0, 1.0]), 2);
        assert_eq!(sign_changes(&[0.0, 0.0]), 0);
        assert_eq!(lyapunov_vminus(&[1.0; 8], 0.5), 1);
        let ch = 2.0;
        let seg: Vec<f64> = (0..400).map(|i| (4.0 * std::f64::consts::PI * (i as f64 / 399.0 * ch) / ch).sin() + 1e-3).collect();
        assert!(lyapunov_vminus(&seg, 1.0) >= 3);
    }

    #[test]
    fn constant_profile_residual() {
        let m = ModelSpec::kpp_fisher();
        let w = WaveProfile::from_samples(vec![0.5; 64], 5.0, 2.5, 0.0, 1.0);
        assert!((residual(&w, &m) - 0.25).abs() < 1e-15);
        let mut spiked = w.clone();
        spiked.phi[30] += 1e-3;
        let r = residual(&spiked, &m);
        assert!(r >= 1e-3 / (w.step * w.step), "{r}");
    }

    #[test]
    fn exponent_fit_on_synthetic_tails() {
        let (l, n) = (60.0, 8001);
        let dt = 2.0 * l / (n - 1) as f64;
        let phi: Vec<f64> = (0..n)
            .map(|i| {
                let t = -l + i as f64 * dt;
                if t < 0.0 {
                    0.5 * (0.7 * t).exp()
                } else {
                    1.0 - 0.5 * (-0.3 * t).exp()
                }
            })
            .collect();
        let w = WaveProfile::from_samples(phi, l, 2.0, 0.0, 1.0);
        let e = estimate_exponents(&w).unwrap();
        assert!((e.lambda_minus - 0.7).abs() < 1e-4, "{e:?}");
        assert!((e.lambda_plus + 0.3).abs() < 1e-4, "{e:?}");
    }

    #[test]
    fn monotone_check_finds_dip() {
        let n = 101;
        let mut phi: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
        phi[60] = phi[55];
        let w = WaveProfile::from_samples(phi, 1.0, 2.0, 0.0, 1.0);
        let check = check_monotone(&w, None);
        assert!(!check.monotone);
        assert!((check.first_violation.unwrap() - w.t(59)).abs() < 1e-12);
    }

    #[test]
    fn fisher_front_without_delay() {
        let m = ModelSpec::kpp_fisher();
        let w = solve_profile(&m, 0.0, 2.5, &ProfileOptions::default()).unwrap();
        assert!(w.converged, "change {}", w.last_change);
        assert!(w.residual < 1e-6, "{}", w.residual);
        assert!(check_monotone(&w, None).monotone);
        assert!((w.value(0.0) - 0.5).abs() < 1e-12);
        let e = w.exponents.unwrap();
        assert!((e.lambda_minus / 0.5 - 1.0).abs() < 0.02, "{e:?}");
    }

    #[test]
    fn below_lower_needs_force() {
        let m = ModelSpec::kpp_fisher();
        let err = solve_profile(&m, 0.2, 1.5, &ProfileOptions::default()).unwrap_err();
        assert!(matches!(err, ProfileError::Precondition { class: PointClass::BelowLower, .. }));
    }

    #[test]
    fn one_more_sweep_leaves_a_converged_profile_in_place() {
        let m = ModelSpec::kpp_fisher();
        let opts = ProfileOptions::default();
        let w = solve_profile(&m, 0.15, 3.0, &opts).unwrap();
        assert!(w.converged);
        let image = apply_operator(&w, &m);
        assert!(sup_diff(&image, &w.phi) <= 10.0 * opts.tol, "{}", sup_diff(&image, &w.phi));
    }

    #[test]
    fn minimal_speed_front_converges_with_small_drift() {
        // c = 2 is the double root; the truncated linear tail leaves a drift
        let m = ModelSpec::kpp_fisher();
        let w = solve_profile(&m, 0.0, 2.0, &ProfileOptions::default()).unwrap();
        assert!(w.converged, "change {}", w.last_change);
        assert_eq!(w.tails.left_gap, 0.0);
        assert!(w.drift < 1e-3, "{}", w.drift);
        assert!(check_monotone(&w, None).monotone);
    }

    #[test]
    fn delayed_monotone_front_has_unit_vminus() {
        let m = ModelSpec::kpp_fisher();
        let w = solve_profile(&m, 0.3, 2.2, &ProfileOptions::default()).unwrap();
        assert!(w.converged);
        let d = oscillation_diagnostic(&w);
        assert_eq!(d.sc, 0);
        assert!(d.vminus.iter().all(|&(_, v)| v == 1), "{:?}", d.vminus);
    }

    #[test]
    fn tail_noise_is_not_an_oscillation() {
        // Nicholson p = 6 at (0.5, 2.2) overshoots kappa by about 1e-9 at the far end
        let m = ModelSpec::nicholson(6.0, 1.0).unwrap();
        let w = solve_profile(&m, 0.5, 2.2, &ProfileOptions::default()).unwrap();
        assert!(w.converged);
        let d = oscillation_diagnostic(&w);
        assert_eq!(d.sc, 0);
        assert!(d.vminus.iter().all(|&(_, v)| v == 1), "{:?}", d.vminus);
    }

    #[test]
    fn forced_front_above_the_upper_curve_oscillates() {
        let m = ModelSpec::kpp_fisher();
        let w = solve_profile(&m, 1.0, 3.0, &ProfileOptions { force: true, ..ProfileOptions::default() }).unwrap();
        assert!(w.converged);
        let d = oscillation_diagnostic(&w);
        assert!(d.sc >= 2, "{}", d.sc);
        assert!(d.vminus.iter().any(|&(_, v)| v >= 3));
    }
}
