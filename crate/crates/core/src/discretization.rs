//! Method-of-lines semi-discretization.
//!
//! Unknowns for `u` live at `x_1..x_K` (the Dirichlet node `x_0` is
//! dropped), unknowns for `v` at `x_0..x_{K−1}`. The Robin rows absorb the
//! boundary flux with a factor `1/Δx`. Each field is stacked as values
//! followed by velocities, giving a first-order system
//! `d𝕌/dt = 𝔸𝕌 + 𝔽₁`, `d𝕍/dt = 𝔹𝕍 + 𝔽₂` once the nonlinear terms are
//! frozen at a previous iterate.

use crate::linalg::DenseMatrix;
use crate::model::{psi_r, ProblemSpec};
use crate::Error;

/// Uniform space-time mesh with `K` cells and `N` steps on `[0, T]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    k: usize,
    n: usize,
    horizon: f64,
}

impl Grid {
    pub fn new(k: usize, n: usize, horizon: f64) -> Result<Self, Error> {
        if k < 2 {
            return Err(Error::Invalid(format!("K must be ≥ 2, got {k}")));
        }
        if n < 1 {
            return Err(Error::invalid("N must be ≥ 1"));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::invalid("T must be > 0"));
        }
        Ok(Self { k, n, horizon })
    }

    /// Number of spatial intervals `K`.
    pub fn intervals(&self) -> usize {
        self.k
    }

    /// Number of time steps `N`.
    pub fn steps(&self) -> usize {
        self.n
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn dx(&self) -> f64 {
        1.0 / self.k as f64
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.n as f64
    }

    pub fn x(&self, k: usize) -> f64 {
        k as f64 / self.k as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.horizon / self.n as f64
    }
}

pub fn build_grid(k: usize, n: usize, horizon: f64) -> Result<Grid, Error> {
    Grid::new(k, n, horizon)
}

/// Stacked unknowns `[U₁..U_K, 𝒰₁..𝒰_K]` and `[V₀..V_{K−1}, 𝒱₀..𝒱_{K−1}]`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub u_block: Vec<f64>,
    pub v_block: Vec<f64>,
}

impl StateVector {
    pub fn zeros(k: usize) -> Self {
        Self { u_block: vec![0.0; 2 * k], v_block: vec![0.0; 2 * k] }
    }

    /// Number of spatial intervals this state was laid out for.
    pub fn intervals(&self) -> usize {
        self.u_block.len() / 2
    }

    /// `u` at node `k ∈ 0..=K`, including the implicit zero at `x_0`.
    pub fn u(&self, k: usize) -> f64 {
        if k == 0 {
            0.0
        } else {
            self.u_block[k - 1]
        }
    }

    pub fn u_dot(&self, k: usize) -> f64 {
        let kk = self.intervals();
        if k == 0 {
            0.0
        } else {
            self.u_block[kk + k - 1]
        }
    }

    /// `v` at node `k ∈ 0..=K`, including the implicit zero at `x_K`.
    pub fn v(&self, k: usize) -> f64 {
        let kk = self.intervals();
        if k == kk {
            0.0
        } else {
            self.v_block[k]
        }
    }

    pub fn v_dot(&self, k: usize) -> f64 {
        let kk = self.intervals();
        if k == kk {
            0.0
        } else {
            self.v_block[kk + k]
        }
    }

    /// Values on the closed grid `x_0..x_K`.
    pub fn u_nodes(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|k| self.u(k)).collect()
    }

    pub fn u_dot_nodes(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|k| self.u_dot(k)).collect()
    }

    pub fn v_nodes(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|k| self.v(k)).collect()
    }

    pub fn v_dot_nodes(&self) -> Vec<f64> {
        (0..=self.intervals()).map(|k| self.v_dot(k)).collect()
    }

    /// Sup-norm of all stored entries; infinite if any entry is not finite.
    pub fn max_abs(&self) -> f64 {
        self.u_block.iter().chain(&self.v_block).fold(
            0.0,
            |m: f64, x| {
                if x.is_finite() {
                    m.max(x.abs())
                } else {
                    f64::INFINITY
                }
            },
        )
    }

    /// Sup-norm distance between two states of the same layout.
    pub fn distance(&self, other: &Self) -> f64 {
        self.u_block
            .iter()
            .zip(&other.u_block)
            .chain(self.v_block.iter().zip(&other.v_block))
            .fold(0.0, |m, (a, b)| m.max((a - b).abs()))
    }
}

pub fn discretize_initial(spec: &ProblemSpec, grid: &Grid) -> StateVector {
    let k = grid.intervals();
    let mut s = StateVector::zeros(k);
    for i in 1..=k {
        let iv = spec.initial_data.eval(grid.x(i));
        s.u_block[i - 1] = iv.u0;
        s.u_block[k + i - 1] = iv.u1;
    }
    for i in 0..k {
        let iv = spec.initial_data.eval(grid.x(i));
        s.v_block[i] = iv.v0;
        s.v_block[k + i] = iv.v1;
    }
    s
}

/// Right-hand side of the nonlinear semi-discrete system, evaluated
/// directly from the sources rather than through stage matrices.
pub fn semi_discrete_rhs(state: &StateVector, t: f64, spec: &ProblemSpec, grid: &Grid) -> StateVector {
    let k = grid.intervals();
    let kf = k as f64;
    let k2 = kf * kf;
    let pot = &spec.potential;
    let mut d = StateVector::zeros(k);

    d.u_block[..k].copy_from_slice(&state.u_block[k..]);
    d.v_block[..k].copy_from_slice(&state.v_block[k..]);

    for i in 1..=k {
        let u = state.u(i);
        let ud = state.u_dot(i);
        let v = state.v(i);
        let (f1, _) = spec.forcing.eval(grid.x(i), t);
        let lap = if i < k {
            k2 * (state.u(i - 1) - 2.0 * u + state.u(i + 1))
        } else {
            kf * (spec.k1 * psi_r(u, spec.p1) - spec.mu1 * ud) - k2 * (u - state.u(i - 1))
        };
        d.u_block[k + i - 1] = lap - spec.lambda1 * ud + pot.f1(u, v) + f1;
    }
    for i in 0..k {
        let u = state.u(i);
        let v = state.v(i);
        let vd = state.v_dot(i);
        let (_, f2) = spec.forcing.eval(grid.x(i), t);
        let lap = if i > 0 {
            k2 * (state.v(i - 1) - 2.0 * v + state.v(i + 1))
        } else {
            kf * (spec.k2 * psi_r(v, spec.p2) - spec.mu2 * vd) + k2 * (state.v(1) - v)
        };
        d.v_block[k + i] = lap - spec.lambda2 * vd + pot.f2(u, v) + f2;
    }
    d
}

/// Linearized stage: `𝔸`, `𝔹`, `𝔽₁`, `𝔽₂` frozen at a previous iterate.
#[derive(Debug, Clone, PartialEq)]
pub struct StageSystem {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub f1_vec: Vec<f64>,
    pub f2_vec: Vec<f64>,
    pub stage_time: f64,
}

/// Assembles the stage at time `t` from the previous iterate's state there.
///
/// Same-field nonlinearities (`αγ₁Ψ_α`, the boundary `Ψ_p` term) are frozen
/// into the load vectors; the cross-coupling factor multiplies the current
/// unknown on the matrix diagonal.
pub fn assemble_stage(prev: &StateVector, t: f64, spec: &ProblemSpec, grid: &Grid) -> StageSystem {
    let k = grid.intervals();
    let kf = k as f64;
    let k2 = kf * kf;
    let pot = &spec.potential;
    let n = 2 * k;

    let mut a = DenseMatrix::zeros(n, n);
    let mut f1_vec = vec![0.0; n];
    for i in 0..k {
        a[(i, k + i)] = 1.0;
        let node = i + 1;
        let row = k + i;
        let u = prev.u(node);
        let v = prev.v(node);
        let (f1, _) = spec.forcing.eval(grid.x(node), t);
        if i > 0 {
            a[(row, i - 1)] = k2;
        }
        if node < k {
            a[(row, i + 1)] = k2;
            a[(row, i)] = -2.0 * k2 + pot.f1_cross_coeff(u, v);
            a[(row, row)] = -spec.lambda1;
            f1_vec[row] = pot.f1_self(u) + f1;
        } else {
            a[(row, i)] = -k2 + pot.f1_cross_coeff(u, v);
            a[(row, row)] = -spec.lambda1 - spec.mu1 * kf;
            f1_vec[row] = kf * spec.k1 * psi_r(u, spec.p1) + pot.f1_self(u) + f1;
        }
    }

    let mut b = DenseMatrix::zeros(n, n);
    let mut f2_vec = vec![0.0; n];
    for i in 0..k {
        b[(i, k + i)] = 1.0;
        let row = k + i;
        let u = prev.u(i);
        let v = prev.v(i);
        let (_, f2) = spec.forcing.eval(grid.x(i), t);
        if i + 1 < k {
            b[(row, i + 1)] = k2;
        }
        if i > 0 {
            b[(row, i - 1)] = k2;
            b[(row, i)] = -2.0 * k2 + pot.f2_cross_coeff(u, v);
            b[(row, row)] = -spec.lambda2;
            f2_vec[row] = pot.f2_self(v) + f2;
        } else {
            b[(row, i)] = -k2 + pot.f2_cross_coeff(u, v);
            b[(row, row)] = -spec.lambda2 - spec.mu2 * kf;
            f2_vec[row] = kf * spec.k2 * psi_r(v, spec.p2) + pot.f2_self(v) + f2;
        }
    }

    StageSystem { a, b, f1_vec, f2_vec, stage_time: t }
}
