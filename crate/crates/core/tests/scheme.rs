//! Stage assembly and the implicit step against independent references: an
//! exact rational solve of the linearized step, the direct nonlinear
//! right-hand side, and the closed-form time derivatives of the
//! manufactured solution.

use num::{BigRational, One, Signed, ToPrimitive, Zero};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wave_sim_core::discretization::{
    assemble_stage, build_grid, discretize_initial, semi_discrete_rhs, StageSystem, StateVector,
};
use wave_sim_core::linalg::DenseMatrix;
use wave_sim_core::model::{ForcingKind, ProblemSpec};
use wave_sim_core::timestepper::{implicit_euler_step, implicit_euler_step_with, SolverPath};

type Q = BigRational;

fn q(x: f64) -> Q {
    Q::from_float(x).expect("finite")
}

fn to_f64(x: &Q) -> f64 {
    x.to_f64().expect("representable")
}

fn solve_exact(mut a: Vec<Vec<Q>>, mut b: Vec<Q>) -> Vec<Q> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero()).expect("nonsingular");
        a.swap(c, p);
        b.swap(c, p);
        let (top, rest) = a.split_at_mut(c + 1);
        let pivot = &top[c];
        for (r, row) in rest.iter_mut().enumerate() {
            if row[c].is_zero() {
                continue;
            }
            let f = &row[c] / &pivot[c];
            for (x, p) in row[c..].iter_mut().zip(&pivot[c..]) {
                *x -= &f * p;
            }
            let d = &f * &b[c];
            b[c + 1 + r] -= d;
        }
    }
    let mut x = vec![Q::zero(); n];
    for r in (0..n).rev() {
        let mut s = b[r].clone();
        for j in r + 1..n {
            s -= &a[r][j] * &x[j];
        }
        x[r] = s / &a[r][r];
    }
    x
}

/// One field of a linearized backward-Euler step for the α = β = 4, p = 6
/// model with unit coefficients and no forcing, in exact arithmetic.
/// `prev` and `frozen` are `[y; w]` blocks over the field's `K` unknown
/// nodes, `coupled` the other field's frozen values at the same nodes and
/// `boundary` the index of the Robin row.
fn exact_field(prev: &[f64], frozen: &[f64], coupled: &[f64], boundary: usize, dt: f64, g1: f64, g2: f64) -> Vec<f64> {
    let k = coupled.len();
    let (kq, dtq) = (q(k as f64), q(dt));
    let k2 = &kq * &kq;
    let one = Q::one();
    let n = 2 * k;
    let mut m = vec![vec![Q::zero(); n]; n];
    let mut rhs = vec![Q::zero(); n];
    for i in 0..k {
        // y − Δt·w = y_prev
        m[i][i] = one.clone();
        m[i][k + i] = -dtq.clone();
        rhs[i] = q(prev[i]);

        // w − Δt·(lap y − damping·w + c·y + load) = w_prev
        let row = k + i;
        let y = q(frozen[i]);
        let cross = q(2.0 * g2) * q(coupled[i]).pow(2);
        let mut load = q(4.0 * g1) * y.pow(3);
        let (stiff, damping) = if i == boundary {
            load += &kq * y.pow(5);
            (k2.clone(), &one + &kq)
        } else {
            (q(2.0) * &k2, one.clone())
        };
        m[row][i] = &dtq * (stiff - cross);
        for j in [i.wrapping_sub(1), i + 1] {
            if j < k {
                m[row][j] = -(&dtq * &k2);
            }
        }
        m[row][row] = &one + &dtq * damping;
        rhs[row] = q(prev[k + i]) + &dtq * load;
    }
    solve_exact(m, rhs).iter().map(to_f64).collect()
}

fn exact_step(prev: &StateVector, frozen: &StateVector, dt: f64) -> StateVector {
    let k = prev.intervals();
    let v_at_u_nodes: Vec<f64> = (1..=k).map(|i| frozen.v(i)).collect();
    let u_at_v_nodes: Vec<f64> = (0..k).map(|i| frozen.u(i)).collect();
    StateVector {
        u_block: exact_field(&prev.u_block, &frozen.u_block, &v_at_u_nodes, k - 1, dt, 0.75, 0.5),
        v_block: exact_field(&prev.v_block, &frozen.v_block, &u_at_v_nodes, 0, dt, 0.75, 0.5),
    }
}

fn unforced_example() -> ProblemSpec {
    ProblemSpec { forcing: ForcingKind::Zero, ..ProblemSpec::manufactured_example() }
}

fn random_state(k: usize, scale: f64, rng: &mut ChaCha8Rng) -> StateVector {
    StateVector {
        u_block: (0..2 * k).map(|_| scale * rng.gen_range(-1.0..1.0)).collect(),
        v_block: (0..2 * k).map(|_| scale * rng.gen_range(-1.0..1.0)).collect(),
    }
}

fn assert_close(a: &StateVector, b: &StateVector, rel: f64) {
    let scale = b.max_abs().max(1e-300);
    let d = a.distance(b);
    assert!(d <= rel * scale, "distance {d:e} vs scale {scale:e}");
}

#[test]
fn step_matches_exact_rational_solve() {
    let spec = unforced_example();
    let grid = build_grid(4, 4, 20.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut cases = vec![(discretize_initial(&spec, &grid), discretize_initial(&spec, &grid))];
    for _ in 0..6 {
        cases.push((random_state(4, 0.8, &mut rng), random_state(4, 0.8, &mut rng)));
    }
    for (prev, frozen) in cases {
        let stage = assemble_stage(&frozen, grid.t(1), &spec, &grid);
        let step = implicit_euler_step(&prev, &stage, grid.dt()).unwrap();
        let oracle = exact_step(&prev, &frozen, grid.dt());
        assert_close(&step, &oracle, 1e-12);
    }
}

#[test]
fn rational_oracle_on_small_step() {
    let spec = unforced_example();
    let grid = build_grid(8, 400, 2.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..4 {
        let prev = random_state(8, 1.0, &mut rng);
        let frozen = random_state(8, 1.0, &mut rng);
        let stage = assemble_stage(&frozen, 0.0, &spec, &grid);
        for solver in [SolverPath::Dense, SolverPath::Condensed] {
            let step = implicit_euler_step_with(&prev, &stage, grid.dt(), solver).unwrap();
            assert_close(&step, &exact_step(&prev, &frozen, grid.dt()), 1e-12);
        }
    }
}

fn matrix_rhs(stage: &StageSystem, state: &StateVector) -> StateVector {
    let apply = |m: &DenseMatrix, x: &[f64], f: &[f64]| -> Vec<f64> {
        m.mul_vec(x).iter().zip(f).map(|(a, b)| a + b).collect()
    };
    StateVector {
        u_block: apply(&stage.a, &state.u_block, &stage.f1_vec),
        v_block: apply(&stage.b, &state.v_block, &stage.f2_vec),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn frozen_stage_reproduces_nonlinear_rhs(
        k in prop::sample::select(vec![2usize, 3, 4, 8, 13]),
        seed in any::<u64>(),
        scale in 0.01f64..3.0,
        t in 0.0f64..20.0,
    ) {
        let spec = ProblemSpec::manufactured_example();
        let grid = build_grid(k, 10, 20.0).unwrap();
        let s = random_state(k, scale, &mut ChaCha8Rng::seed_from_u64(seed));
        let direct = semi_discrete_rhs(&s, t, &spec, &grid);
        let via_matrix = matrix_rhs(&assemble_stage(&s, t, &spec, &grid), &s);
        let tol = 1e-12 * (1.0 + direct.max_abs());
        prop_assert!(direct.distance(&via_matrix) <= tol, "{:e}", direct.distance(&via_matrix));
    }
}

/// `s(t) = (e^{9+4t} + 1)^{−1/4}` and its first two derivatives.
fn profile(t: f64) -> (f64, f64, f64) {
    let e = (9.0 + 4.0 * t).exp();
    let s = (e + 1.0).powf(-0.25);
    let ds = -e * (e + 1.0).powf(-1.25);
    let dds = -4.0 * e * (e + 1.0).powf(-1.25) + 5.0 * e * e * (e + 1.0).powf(-2.25);
    (s, ds, dds)
}

#[test]
fn rhs_is_exact_on_the_manufactured_solution() {
    let spec = ProblemSpec::manufactured_example();
    for k in [2, 5, 10, 40] {
        let grid = build_grid(k, 10, 20.0).unwrap();
        for t in [0.0, 0.4, 2.0, 5.0] {
            let (s, ds, dds) = profile(t);
            let mut state = StateVector::zeros(k);
            let mut want = StateVector::zeros(k);
            for i in 1..=k {
                let x = grid.x(i);
                state.u_block[i - 1] = x * s;
                state.u_block[k + i - 1] = x * ds;
                want.u_block[i - 1] = x * ds;
                want.u_block[k + i - 1] = x * dds;
            }
            for i in 0..k {
                let x = 1.0 - grid.x(i);
                state.v_block[i] = x * s;
                state.v_block[k + i] = x * ds;
                want.v_block[i] = x * ds;
                want.v_block[k + i] = x * dds;
            }
            let got = semi_discrete_rhs(&state, t, &spec, &grid);
            let err = got.distance(&want);
            assert!(err <= 1e-9 * want.max_abs(), "K={k} t={t}: {err:e} vs {:e}", want.max_abs());
        }
    }
}

#[test]
fn rhs_truncation_error_shrinks_for_curved_profiles() {
    // x ↦ sin(πx/2)·s(t) has nonzero curvature, so only the interior rows are
    // second-order consistent. Compare interior rows against u_xx.
    let spec = ProblemSpec { forcing: ForcingKind::Zero, ..ProblemSpec::manufactured_example() };
    let pot = spec.potential;
    let mut prev_err = f64::INFINITY;
    for k in [10, 20, 40, 80] {
        let grid = build_grid(k, 10, 1.0).unwrap();
        let f = |x: f64| (std::f64::consts::FRAC_PI_2 * x).sin() * 0.3;
        let fxx = |x: f64| -std::f64::consts::FRAC_PI_2.powi(2) * f(x);
        let mut state = StateVector::zeros(k);
        for i in 1..=k {
            state.u_block[i - 1] = f(grid.x(i));
        }
        let got = semi_discrete_rhs(&state, 0.0, &spec, &grid);
        let err = (1..k)
            .map(|i| {
                let x = grid.x(i);
                let want = fxx(x) + 4.0 * pot.gamma1 * f(x).powi(3);
                (got.u_block[k + i - 1] - want).abs()
            })
            .fold(0.0, f64::max);
        assert!(err < prev_err / 3.5, "K={k}: {err:e} after {prev_err:e}");
        prev_err = err;
    }
    assert!(prev_err.is_finite() && prev_err.abs() < 1e-4);
}

#[test]
fn exact_arithmetic_helpers() {
    assert_eq!(to_f64(&q(0.1)), 0.1);
    let x = solve_exact(vec![vec![q(2.0), q(1.0)], vec![q(1.0), q(3.0)]], vec![q(3.0), q(5.0)]);
    assert_eq!(x, vec![Q::new(4.into(), 5.into()), Q::new(7.into(), 5.into())]);
    assert!(x[0].is_positive());
}
