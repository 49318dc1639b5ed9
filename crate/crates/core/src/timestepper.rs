//! Implicit Euler in time, wrapped in Picard sweeps over the whole trajectory.
//!
//! Sweep `m` rebuilds every stage at `t_{n+1}` from sweep `m − 1`'s state at
//! `t_{n+1}` and marches `n = 0..N−1`. Sweep 0 is the initial state held
//! constant in time.

use crate::discretization::{assemble_stage, discretize_initial, semi_discrete_rhs, Grid, StageSystem, StateVector};
use crate::linalg::{solve_tridiagonal, DenseMatrix};
use crate::model::ProblemSpec;
use crate::Error;

pub use crate::linalg::solve_linear;

/// How the `2K × 2K` implicit systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SolverPath {
    /// Dense LU with partial pivoting on the full block system.
    #[default]
    Dense,
    /// Eliminates the velocity block and solves the resulting tridiagonal
    /// system in `O(K)`.
    Condensed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOptions {
    pub sweeps: usize,
    /// Stop early once the sweep delta falls below this value.
    pub tolerance: Option<f64>,
    pub solver: SolverPath,
    /// Truncate the run once any state exceeds this sup-norm.
    pub escape_threshold: Option<f64>,
}

impl SimulationOptions {
    pub fn with_sweeps(sweeps: usize) -> Self {
        Self { sweeps, tolerance: None, solver: SolverPath::Dense, escape_threshold: None }
    }
}

impl Default for SimulationOptions {
    fn default() -> Self {
        Self::with_sweeps(5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    /// One state per `t_n`, `n = 0..=N` unless the run escaped.
    pub states: Vec<StateVector>,
    pub iterate_index: usize,
    /// First step whose state exceeded the escape threshold; the trajectory
    /// ends there.
    pub escaped_at: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepDiagnostics {
    /// Sup-norm distance between consecutive iterates, one per sweep.
    pub sweep_deltas: Vec<f64>,
    /// Nonlinear backward-Euler defect of each sweep's trajectory.
    pub sweep_residuals: Vec<f64>,
    pub final_residual: f64,
}

/// `(I − Δt M)⁻¹ (prev + Δt·load)` for a single field block.
pub fn backward_euler_block(
    m: &DenseMatrix,
    load: &[f64],
    prev: &[f64],
    dt: f64,
    solver: SolverPath,
) -> Result<Vec<f64>, Error> {
    let rhs: Vec<f64> = prev.iter().zip(load).map(|(p, f)| p + dt * f).collect();
    match solver {
        SolverPath::Dense => solve_linear(&m.identity_minus_scaled(dt), &rhs),
        SolverPath::Condensed => condensed_solve(m, &rhs, dt),
    }
}

/// Solves `(I − Δt M) [y; w] = [b₁; b₂]` for `M = [[0, I], [T, D]]` with `T`
/// tridiagonal and `D` diagonal, via `(I − ΔtD − Δt²T) w = b₂ + ΔtT b₁`.
fn condensed_solve(m: &DenseMatrix, rhs: &[f64], dt: f64) -> Result<Vec<f64>, Error> {
    let n = m.rows();
    if !n.is_multiple_of(2) {
        return Err(Error::invalid("condensed solve needs an even block size"));
    }
    let k = n / 2;
    let t = |i: usize, j: usize| m[(k + i, j)];
    let (b1, b2) = rhs.split_at(k);
    let mut lower = vec![0.0; k - 1];
    let mut upper = vec![0.0; k - 1];
    let mut diag = vec![0.0; k];
    let mut r = vec![0.0; k];
    for i in 0..k {
        diag[i] = 1.0 - dt * m[(k + i, k + i)] - dt * dt * t(i, i);
        let mut tb = t(i, i) * b1[i];
        if i > 0 {
            lower[i - 1] = -dt * dt * t(i, i - 1);
            tb += t(i, i - 1) * b1[i - 1];
        }
        if i + 1 < k {
            upper[i] = -dt * dt * t(i, i + 1);
            tb += t(i, i + 1) * b1[i + 1];
        }
        r[i] = b2[i] + dt * tb;
    }
    let w = solve_tridiagonal(&lower, &diag, &upper, &r)?;
    let mut out = Vec::with_capacity(n);
    out.extend(b1.iter().zip(&w).map(|(b, w)| b + dt * w));
    out.extend(w);
    Ok(out)
}

/// One implicit Euler step of both fields with a given stage.
pub fn implicit_euler_step(prev: &StateVector, stage: &StageSystem, dt: f64) -> Result<StateVector, Error> {
    implicit_euler_step_with(prev, stage, dt, SolverPath::Dense)
}

pub fn implicit_euler_step_with(
    prev: &StateVector,
    stage: &StageSystem,
    dt: f64,
    solver: SolverPath,
) -> Result<StateVector, Error> {
    Ok(StateVector {
        u_block: backward_euler_block(&stage.a, &stage.f1_vec, &prev.u_block, dt, solver)?,
        v_block: backward_euler_block(&stage.b, &stage.f2_vec, &prev.v_block, dt, solver)?,
    })
}

/// Sup over steps of `‖X_{n+1} − X_n − Δt·rhs(X_{n+1}, t_{n+1})‖_∞`.
pub fn nonlinear_defect(traj: &Trajectory, spec: &ProblemSpec, grid: &Grid) -> f64 {
    let dt = grid.dt();
    traj.states
        .windows(2)
        .enumerate()
        .map(|(n, w)| {
            let f = semi_discrete_rhs(&w[1], grid.t(n + 1), spec, grid);
            let du = w[1].u_block.iter().zip(&w[0].u_block).zip(&f.u_block);
            let dv = w[1].v_block.iter().zip(&w[0].v_block).zip(&f.v_block);
            du.chain(dv).fold(0.0, |m: f64, ((x1, x0), g)| m.max((x1 - x0 - dt * g).abs()))
        })
        .fold(0.0, f64::max)
}

pub fn run_simulation(spec: &ProblemSpec, grid: &Grid, sweeps: usize) -> Result<(Trajectory, SweepDiagnostics), Error> {
    run_simulation_with(spec, grid, &SimulationOptions::with_sweeps(sweeps))
}

pub fn run_simulation_with(
    spec: &ProblemSpec,
    grid: &Grid,
    options: &SimulationOptions,
) -> Result<(Trajectory, SweepDiagnostics), Error> {
    spec.require_scheme_regime()?;
    if options.sweeps < 1 {
        return Err(Error::invalid("sweeps must be ≥ 1"));
    }
    let dt = grid.dt();
    let initial = discretize_initial(spec, grid);
    let mut current = Trajectory { states: vec![initial; grid.steps() + 1], iterate_index: 0, escaped_at: None };
    let mut diag = SweepDiagnostics::default();

    for m in 1..=options.sweeps {
        let last = current.states.len() - 1;
        let mut states = Vec::with_capacity(last + 1);
        states.push(current.states[0].clone());
        let mut escaped_at = None;
        for n in 0..last {
            let stage = assemble_stage(&current.states[n + 1], grid.t(n + 1), spec, grid);
            let next = implicit_euler_step_with(&states[n], &stage, dt, options.solver).map_err(|e| Error::Step {
                sweep: m,
                step: n,
                source: Box::new(e),
            })?;
            let escaped = options.escape_threshold.is_some_and(|th| !(next.max_abs() <= th));
            states.push(next);
            if escaped {
                escaped_at = Some(n + 1);
                break;
            }
        }
        // A run cut short by an earlier sweep stays cut short.
        let escaped_at = escaped_at.or(current.escaped_at.map(|_| last));
        let next = Trajectory { states, iterate_index: m, escaped_at };
        let delta = next.states.iter().zip(&current.states).map(|(a, b)| a.distance(b)).fold(0.0, f64::max);
        diag.sweep_deltas.push(delta);
        diag.sweep_residuals.push(nonlinear_defect(&next, spec, grid));
        current = next;
        if options.tolerance.is_some_and(|tol| delta < tol) {
            break;
        }
    }
    diag.final_residual = *diag.sweep_residuals.last().unwrap_or(&0.0);
    Ok((current, diag))
}
