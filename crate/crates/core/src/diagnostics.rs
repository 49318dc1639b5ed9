//! Energy, Lyapunov and blow-up functionals on discrete states, the decay
//! constants, an exponential decay fit and the interpolation inequality
//! check used by the blow-up argument.

use crate::discretization::{build_grid, discretize_initial, Grid, StateVector};
use crate::model::{PotentialParams, ProblemSpec};
use crate::timestepper::Trajectory;
use crate::Error;

/// Quadrature for integrals over `(0, 1)` from nodal values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Quadrature {
    /// Composite trapezoid rule.
    #[default]
    Trapezoid,
    /// Weight `Δx` on every node. For a field pinned to zero at one end this
    /// is the mass the scheme itself uses, so the discrete energy is exactly
    /// the scheme's Lyapunov function.
    NodeSum,
}

impl Quadrature {
    pub fn integrate(&self, values: impl ExactSizeIterator<Item = f64>) -> f64 {
        let n = values.len();
        assert!(n >= 2, "need at least two nodes");
        let dx = 1.0 / (n - 1) as f64;
        let sum: f64 = match self {
            Quadrature::NodeSum => values.sum(),
            Quadrature::Trapezoid => {
                values.enumerate().map(|(i, v)| if i == 0 || i == n - 1 { 0.5 * v } else { v }).sum()
            }
        };
        sum * dx
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscreteNorms {
    pub l2_sq: f64,
    pub grad_l2_sq: f64,
    /// `∫|u|^α`.
    pub lalpha_pow: f64,
}

/// Norms of a field given on the closed grid `x_0..x_K` (trapezoid rule).
pub fn discrete_norms(values: &[f64], alpha: f64) -> DiscreteNorms {
    discrete_norms_with(values, alpha, Quadrature::Trapezoid)
}

pub fn discrete_norms_with(values: &[f64], alpha: f64, quad: Quadrature) -> DiscreteNorms {
    DiscreteNorms {
        l2_sq: quad.integrate(values.iter().map(|u| u * u)),
        grad_l2_sq: grad_sq(values),
        lalpha_pow: quad.integrate(values.iter().map(|u| u.abs().powf(alpha))),
    }
}

/// `Σ (u_{k+1} − u_k)² / Δx`.
fn grad_sq(values: &[f64]) -> f64 {
    let k = (values.len() - 1) as f64;
    values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() * k
}

/// Parameters of `L = H^{1−ξ} + εψ` and the optional blow-up rate constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlowupParams {
    pub xi: f64,
    pub epsilon: f64,
    pub c_bar: Option<f64>,
}

impl BlowupParams {
    /// Largest admissible `ξ` for a potential.
    pub fn xi_max(p: &PotentialParams) -> f64 {
        ((p.alpha - 2.0) / (2.0 * p.alpha)).min((p.beta - 2.0) / (2.0 * p.beta))
    }

    /// Midpoint `ξ`, `ε = 10⁻³`, no `C̄`.
    pub fn defaults(p: &PotentialParams) -> Self {
        Self { xi: 0.5 * Self::xi_max(p), epsilon: 1e-3, c_bar: None }
    }

    pub fn validate(&self, p: &PotentialParams) -> Result<(), Error> {
        let max = Self::xi_max(p);
        if !(self.xi > 0.0 && self.xi <= max) {
            return Err(Error::Invalid(format!("xi must lie in (0, {max}]")));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::invalid("epsilon must be > 0"));
        }
        if let Some(c) = self.c_bar {
            if !(c > 0.0) {
                return Err(Error::invalid("c_bar must be > 0"));
            }
        }
        Ok(())
    }
}

/// Default `δ` for `ℒ = E + δψ`: half the midpoint of `(0, 1 − 1/p₁ − 1/p₂)`.
pub fn default_delta(spec: &ProblemSpec) -> f64 {
    0.25 * (1.0 - 1.0 / spec.p1 - 1.0 / spec.p2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergySample {
    pub t: f64,
    pub e: f64,
    pub h: f64,
    pub i1: f64,
    pub i2: f64,
    pub j: f64,
    pub psi: f64,
    /// Absent when `H ≤ 0`.
    pub l_blowup: Option<f64>,
    pub lyap: f64,
    pub kinetic: f64,
    pub potential_grad: f64,
    pub boundary_terms: f64,
    pub source_integral: f64,
}

pub fn energy_sample(
    state: &StateVector,
    t: f64,
    spec: &ProblemSpec,
    blowup: &BlowupParams,
    delta: f64,
    quad: Quadrature,
) -> EnergySample {
    let u = state.u_nodes();
    let ud = state.u_dot_nodes();
    let v = state.v_nodes();
    let vd = state.v_dot_nodes();
    let k = state.intervals();
    let int = |f: &dyn Fn(usize) -> f64| quad.integrate((0..k + 1).map(f));

    let grad = grad_sq(&u) + grad_sq(&v);
    let kinetic = 0.5 * int(&|i| ud[i] * ud[i] + vd[i] * vd[i]);
    let potential_grad = 0.5 * grad;
    let (u1, v0) = (u[k], v[0]);
    let bu = spec.k1 * u1.abs().powf(spec.p1);
    let bv = spec.k2 * v0.abs().powf(spec.p2);
    let boundary_terms = bu / spec.p1 + bv / spec.p2;
    let source_integral = int(&|i| spec.potential.value(u[i], v[i]));
    let e = kinetic + potential_grad - boundary_terms - source_integral;

    let i1 = 0.5 * grad - bu - 0.5 * spec.p1 * source_integral;
    let i2 = 0.5 * grad - bv - 0.5 * spec.p2 * source_integral;
    let j = 0.5 * (1.0 - 1.0 / spec.p1 - 1.0 / spec.p2) * grad + i1 / spec.p1 + i2 / spec.p2;

    let psi = int(&|i| u[i] * ud[i] + v[i] * vd[i])
        + 0.5 * spec.lambda1 * int(&|i| u[i] * u[i])
        + 0.5 * spec.lambda2 * int(&|i| v[i] * v[i])
        + 0.5 * spec.mu1 * u1 * u1
        + 0.5 * spec.mu2 * v0 * v0;

    let h = -e;
    let l_blowup = (h > 0.0).then(|| h.powf(1.0 - blowup.xi) + blowup.epsilon * psi);
    EnergySample {
        t,
        e,
        h,
        i1,
        i2,
        j,
        psi,
        l_blowup,
        lyap: e + delta * psi,
        kinetic,
        potential_grad,
        boundary_terms,
        source_integral,
    }
}

/// One sample per stored state.
pub fn energy_series(
    traj: &Trajectory,
    grid: &Grid,
    spec: &ProblemSpec,
    blowup: &BlowupParams,
    delta: f64,
    quad: Quadrature,
) -> Vec<EnergySample> {
    traj.states.iter().enumerate().map(|(n, s)| energy_sample(s, grid.t(n), spec, blowup, delta, quad)).collect()
}

/// Energy of the initial data on a refined grid with the trapezoid rule.
pub fn initial_energy(spec: &ProblemSpec, k_ref: usize) -> Result<f64, Error> {
    let grid = build_grid(k_ref, 1, 1.0)?;
    let s = discretize_initial(spec, &grid);
    let b = BlowupParams::defaults(&spec.potential);
    Ok(energy_sample(&s, 0.0, spec, &b, 0.0, Quadrature::Trapezoid).e)
}

/// Initial energy with the refinement used for hypothesis checks.
pub fn reference_initial_energy(spec: &ProblemSpec) -> Result<f64, Error> {
    initial_energy(spec, 400)
}

/// Equivalence constants `(β₁, β₂)` with `β₁E ≤ ℒ ≤ β₂E`.
pub fn equivalence_bounds(spec: &ProblemSpec, delta: f64) -> (f64, f64) {
    let c = 1.0 - 1.0 / spec.p1 - 1.0 / spec.p2;
    let damping = spec.lambda1 + spec.lambda2 + spec.mu1 + spec.mu2;
    let beta1 = (1.0 - delta).min(1.0 - delta / c);
    let beta2 = (1.0 + delta).max(1.0 + delta * (1.0 + damping) / c);
    (beta1, beta2)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayConstants {
    pub rho: f64,
    pub e_star: f64,
    pub p_star: f64,
    pub eta_star: f64,
    /// `η★ < 1`.
    pub hypothesis_ok: bool,
}

const GAUSS5: [(f64, f64); 5] = [
    (0.0, 0.568_888_888_888_888_9),
    (-0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (0.538_469_310_105_683_1, 0.478_628_670_499_366_5),
    (-0.906_179_845_938_664, 0.236_926_885_056_189_1),
    (0.906_179_845_938_664, 0.236_926_885_056_189_1),
];

/// `½(‖F₁(t)‖ + ‖F₂(t)‖)` in `L²(0, 1)`; exact for forcing cubic in `x`.
fn forcing_half_norm(spec: &ProblemSpec, t: f64) -> f64 {
    let (mut n1, mut n2) = (0.0, 0.0);
    for (z, w) in GAUSS5 {
        let (f1, f2) = spec.forcing.eval(0.5 * (z + 1.0), t);
        n1 += 0.5 * w * f1 * f1;
        n2 += 0.5 * w * f2 * f2;
    }
    0.5 * (n1.sqrt() + n2.sqrt())
}

fn adaptive_trapezoid(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fb: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = 0.5 * (b - a) * (fa + fb);
    let halves = 0.25 * (b - a) * (fa + 2.0 * fm + fb);
    if depth == 0 || (whole - halves).abs() <= 3.0 * tol {
        // Richardson step: the trapezoid error is O(h²).
        return halves + (halves - whole) / 3.0;
    }
    adaptive_trapezoid(f, a, m, fa, fm, 0.5 * tol, depth - 1)
        + adaptive_trapezoid(f, m, b, fm, fb, 0.5 * tol, depth - 1)
}

/// `ρ = ½∫₀^∞ (‖F₁‖ + ‖F₂‖) ds`: quadrature on `[0, 50]` plus the analytic
/// tail of an exponential majorant.
pub fn forcing_integral(spec: &ProblemSpec) -> Result<f64, Error> {
    if !spec.forcing.is_decaying() {
        return Err(Error::invalid("forcing does not decay in time"));
    }
    if spec.forcing.is_zero() {
        return Ok(0.0);
    }
    const T_CUT: f64 = 50.0;
    let f = |s: f64| forcing_half_norm(spec, s);
    let body = adaptive_trapezoid(&f, 0.0, T_CUT, f(0.0), f(T_CUT), 1e-15, 40);
    Ok(body + spec.forcing.tail_integral(T_CUT))
}

pub fn decay_constants(spec: &ProblemSpec, e0: f64) -> Result<DecayConstants, Error> {
    let den = spec.p1 * spec.p2 - spec.p1 - spec.p2;
    if !(den > 0.0) {
        return Err(Error::invalid("p★ undefined: need p1·p2 > p1 + p2"));
    }
    let p_star = 2.0 * spec.p1 * spec.p2 / den;
    let rho = forcing_integral(spec)?;
    let e_star = (e0 + rho) * (2.0 * rho).exp();
    let z = p_star * e_star;
    let pot = &spec.potential;
    let eta_star =
        0.5 * (spec.p1 + spec.p2) * pot.dbar2() * (z.powf(pot.alpha / 2.0 - 1.0) + z.powf(pot.beta / 2.0 - 1.0))
            + spec.k1 * z.powf(spec.p1 / 2.0 - 1.0)
            + spec.k2 * z.powf(spec.p2 / 2.0 - 1.0);
    Ok(DecayConstants { rho, e_star, p_star, eta_star, hypothesis_ok: eta_star < 1.0 })
}

/// `T★ = (1 − ξ)/(C̄ξ) · L₀^{−ξ/(1−ξ)}`, absent without `C̄`.
pub fn blowup_time_bound(l0: f64, params: &BlowupParams) -> Result<Option<f64>, Error> {
    if !(l0 > 0.0) {
        return Err(Error::invalid("L(0) must be > 0"));
    }
    if !(params.xi > 0.0 && params.xi < 1.0) {
        return Err(Error::invalid("xi must lie in (0, 1)"));
    }
    let xi = params.xi;
    Ok(params.c_bar.map(|c| (1.0 - xi) / (c * xi) * l0.powf(-xi / (1.0 - xi))))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayFit {
    pub c: f64,
    pub gamma: f64,
    /// Largest deviation of `ln E` from the fitted line.
    pub residual: f64,
    pub samples: usize,
}

/// Least-squares fit of `ln E = ln C − γt` over samples with `t ∈ [lo, hi]`.
pub fn fit_decay_rate(samples: &[EnergySample], window: (f64, f64)) -> Result<DecayFit, Error> {
    let pts: Vec<(f64, f64)> =
        samples.iter().filter(|s| s.t >= window.0 && s.t <= window.1).map(|s| (s.t, s.e)).collect();
    if pts.len() < 3 {
        return Err(Error::Invalid(format!("decay fit needs ≥ 3 samples in window, got {}", pts.len())));
    }
    if let Some((t, e)) = pts.iter().find(|(_, e)| !(*e > 0.0)) {
        return Err(Error::Invalid(format!("nonpositive energy {e} at t = {t}")));
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1.ln()).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(t, e)| (t - mt) * (e.ln() - my)).sum();
    let sxx: f64 = pts.iter().map(|(t, _)| (t - mt).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let residual = pts.iter().map(|(t, e)| (e.ln() - intercept - slope * t).abs()).fold(0.0, f64::max);
    Ok(DecayFit { c: intercept.exp(), gamma: -slope, residual, samples: pts.len() })
}

/// Which endpoint the field is pinned to zero at; the trace is taken at the
/// other one.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinnedEnd {
    /// `u(0) = 0`, trace at `x = 1`.
    Left,
    /// `v(1) = 0`, trace at `x = 0`.
    Right,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma13Check {
    pub holds: bool,
    /// Right side minus left side.
    pub slack: f64,
}

/// `‖u‖_α^{2/(1−2ξ)} + ‖u‖^{2/(1−ξ)} + |u(b)|^{2/(1−ξ)} ≤ 3(‖∇u‖² + ‖u‖_α^α + |u(b)|^p)`.
pub fn check_lemma13(values: &[f64], xi: f64, alpha: f64, p_bnd: f64, side: PinnedEnd) -> Result<Lemma13Check, Error> {
    let s1 = 2.0 / (1.0 - 2.0 * xi);
    let s2 = 2.0 / (1.0 - xi);
    if !(xi > 0.0 && xi < 0.5 && s1 <= alpha && s2 <= alpha.min(p_bnd)) {
        return Err(Error::Invalid(format!("xi = {xi} outside the admissible range")));
    }
    let (pinned, trace) = match side {
        PinnedEnd::Left => (values[0], values[values.len() - 1]),
        PinnedEnd::Right => (values[values.len() - 1], values[0]),
    };
    if pinned != 0.0 {
        return Err(Error::invalid("field must vanish at its pinned endpoint"));
    }
    let n = discrete_norms(values, alpha);
    let la = n.lalpha_pow.powf(1.0 / alpha);
    let l2 = n.l2_sq.sqrt();
    let b = trace.abs();
    let lhs = la.powf(s1) + l2.powf(s2) + b.powf(s2);
    let rhs = 3.0 * (n.grad_l2_sq + n.lalpha_pow + b.powf(p_bnd));
    Ok(Lemma13Check { holds: lhs <= rhs, slack: rhs - lhs })
}
