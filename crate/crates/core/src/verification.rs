//! Comparison against the manufactured closed-form solution: pointwise
//! tables, entry-wise max errors over the space-time grid and surface data.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use crate::discretization::{build_grid, Grid};
use crate::model::{manufactured_profile, ProblemSpec};
use crate::timestepper::{run_simulation_with, SimulationOptions, SolverPath, Trajectory};
use crate::Error;

/// `(x·s(t), (1 − x)·s(t))` with `s(t) = (e^{9+4t} + 1)^{−1/4}`.
pub fn exact_solution(x: f64, t: f64) -> (f64, f64) {
    let s = manufactured_profile(t);
    (x * s, (1.0 - x) * s)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointError {
    pub x: f64,
    pub t: f64,
    pub exact: f64,
    pub computed: f64,
    pub abs_err: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub k: usize,
    pub n: usize,
    pub horizon: f64,
    pub sweeps: usize,
    pub err_u: f64,
    pub err_v: f64,
    /// Grid indices `(k, n)` where each maximum is attained.
    pub argmax_u: (usize, usize),
    pub argmax_v: (usize, usize),
    pub pointwise: Option<Vec<PointError>>,
}

/// Entry-wise max errors. `u` is scanned over `k = 1..K`, `n = 1..N`; `v`
/// over its stored nodes `k = 0..K−1` and `n = 0..N−1`.
pub fn error_norms(traj: &Trajectory, grid: &Grid) -> ErrorReport {
    let k = grid.intervals();
    let mut report = ErrorReport {
        k,
        n: grid.steps(),
        horizon: grid.horizon(),
        sweeps: traj.iterate_index,
        err_u: 0.0,
        err_v: 0.0,
        argmax_u: (0, 0),
        argmax_v: (0, 0),
        pointwise: None,
    };
    let last = traj.states.len() - 1;
    for (n, s) in traj.states.iter().enumerate() {
        let t = grid.t(n);
        for i in 0..=k {
            let (ue, ve) = exact_solution(grid.x(i), t);
            if i >= 1 && n >= 1 {
                let d = (s.u(i) - ue).abs();
                if d > report.err_u {
                    report.err_u = d;
                    report.argmax_u = (i, n);
                }
            }
            if i < k && n < last {
                let d = (s.v(i) - ve).abs();
                if d > report.err_v {
                    report.err_v = d;
                    report.argmax_v = (i, n);
                }
            }
        }
    }
    report
}

/// [`error_norms`] plus the `u` pointwise list over the whole grid.
pub fn error_norms_with_pointwise(traj: &Trajectory, grid: &Grid) -> ErrorReport {
    let mut report = error_norms(traj, grid);
    let mut pts = Vec::new();
    for (n, s) in traj.states.iter().enumerate() {
        for i in 0..=grid.intervals() {
            let (x, t) = (grid.x(i), grid.t(n));
            let exact = exact_solution(x, t).0;
            let computed = s.u(i);
            pts.push(PointError { x, t, exact, computed, abs_err: (computed - exact).abs() });
        }
    }
    report.pointwise = Some(pts);
    report
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Table1Row {
    pub n: usize,
    pub t: f64,
    pub u_exact: f64,
    pub u_computed: f64,
    pub u_abs_diff: f64,
    pub v_exact: f64,
    pub v_computed: f64,
    pub v_abs_diff: f64,
}

/// Steps reported in the node table.
pub const TABLE1_STEPS: [usize; 3] = [10, 20, 30];

/// Values at `x = 4/5` for the given steps of a finished run.
pub fn table1_rows(traj: &Trajectory, grid: &Grid, steps: &[usize]) -> Result<Vec<Table1Row>, Error> {
    let k = grid.intervals();
    if !k.is_multiple_of(5) {
        return Err(Error::Invalid(format!("K = {k} has no node at x = 4/5 (K must be divisible by 5)")));
    }
    let node = 4 * k / 5;
    steps
        .iter()
        .map(|&n| {
            let s = traj.states.get(n).ok_or_else(|| Error::Invalid(format!("step {n} is beyond the trajectory")))?;
            let t = grid.t(n);
            let (u_exact, v_exact) = exact_solution(0.8, t);
            let (u_computed, v_computed) = (s.u(node), s.v(node));
            Ok(Table1Row {
                n,
                t,
                u_exact,
                u_computed,
                u_abs_diff: (u_computed - u_exact).abs(),
                v_exact,
                v_computed,
                v_abs_diff: (v_computed - v_exact).abs(),
            })
        })
        .collect()
}

pub fn reproduce_table1(k: usize, n: usize, horizon: f64, sweeps: usize) -> Result<Vec<Table1Row>, Error> {
    if !k.is_multiple_of(5) {
        return Err(Error::Invalid(format!("K = {k} has no node at x = 4/5 (K must be divisible by 5)")));
    }
    let grid = build_grid(k, n, horizon)?;
    let spec = ProblemSpec { horizon, ..ProblemSpec::manufactured_example() };
    let (traj, _) = run_simulation_with(&spec, &grid, &SimulationOptions::with_sweeps(sweeps))?;
    table1_rows(&traj, &grid, &TABLE1_STEPS)
}

/// Mesh sizes of the refinement table.
pub const TABLE2_SIZES: [(usize, usize); 4] = [(50, 50), (100, 100), (150, 150), (200, 200)];

#[derive(Debug, Clone, PartialEq)]
pub struct Table2Options {
    pub horizon: f64,
    pub sweeps: usize,
    /// Upper bound on concurrently running sizes.
    pub threads: usize,
    pub solver: SolverPath,
}

impl Default for Table2Options {
    fn default() -> Self {
        Self { horizon: 20.0, sweeps: 5, threads: 1, solver: SolverPath::Dense }
    }
}

/// Runs one manufactured simulation per size, using up to
/// `options.threads` workers. Reports come back in input order.
pub fn reproduce_table2(sizes: &[(usize, usize)], options: &Table2Options) -> Result<Vec<ErrorReport>, Error> {
    let run_one = |(k, n): (usize, usize)| -> Result<ErrorReport, Error> {
        let grid = build_grid(k, n, options.horizon)?;
        let spec = ProblemSpec { horizon: options.horizon, ..ProblemSpec::manufactured_example() };
        let opts = SimulationOptions { solver: options.solver, ..SimulationOptions::with_sweeps(options.sweeps) };
        let (traj, _) = run_simulation_with(&spec, &grid, &opts)?;
        Ok(error_norms(&traj, &grid))
    };
    let workers = options.threads.clamp(1, sizes.len().max(1));
    if workers == 1 {
        return sizes.iter().map(|&s| run_one(s)).collect();
    }
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<ErrorReport, Error>>>> = Mutex::new(vec![None; sizes.len()]);
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(&size) = sizes.get(i) else { break };
                let r = run_one(size);
                results.lock().expect("worker panicked")[i] = Some(r);
            });
        }
    });
    results.into_inner().expect("worker panicked").into_iter().map(|r| r.expect("every size is processed")).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfaceRow {
    pub x: f64,
    pub t: f64,
    pub u: f64,
    pub v: f64,
    pub u_ex: f64,
    pub v_ex: f64,
}

/// Computed and exact fields on the full space-time grid, time-major.
pub fn surface_data(traj: &Trajectory, grid: &Grid) -> Vec<SurfaceRow> {
    let mut rows = Vec::with_capacity(traj.states.len() * (grid.intervals() + 1));
    for (n, s) in traj.states.iter().enumerate() {
        let t = grid.t(n);
        for i in 0..=grid.intervals() {
            let x = grid.x(i);
            let (u_ex, v_ex) = exact_solution(x, t);
            rows.push(SurfaceRow { x, t, u: s.u(i), v: s.v(i), u_ex, v_ex });
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::StateVector;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn exact_solution_table_values() {
        assert!(rel(exact_solution(0.8, 4.0).0, 1.54436330e-3) < 1e-8);
        assert!(rel(exact_solution(0.8, 8.0).0, 2.82860006e-5) < 1e-8);
        assert_eq!(exact_solution(0.0, 3.0).0, 0.0);
        assert_eq!(exact_solution(1.0, 3.0).1, 0.0);
    }

    fn exact_trajectory(grid: &Grid) -> Trajectory {
        let k = grid.intervals();
        let states = (0..=grid.steps())
            .map(|n| {
                let mut s = StateVector::zeros(k);
                for i in 0..=k {
                    let (u, v) = exact_solution(grid.x(i), grid.t(n));
                    if i >= 1 {
                        s.u_block[i - 1] = u;
                    }
                    if i < k {
                        s.v_block[i] = v;
                    }
                }
                s
            })
            .collect();
        Trajectory { states, iterate_index: 0, escaped_at: None }
    }

    #[test]
    fn exact_trajectory_has_zero_error() {
        let g = build_grid(10, 12, 3.0).unwrap();
        let r = error_norms(&exact_trajectory(&g), &g);
        assert_eq!((r.err_u, r.err_v), (0.0, 0.0));
    }

    #[test]
    fn index_ranges() {
        let g = build_grid(4, 3, 1.0).unwrap();
        let mut traj = exact_trajectory(&g);
        // Perturbations outside the scanned ranges must be ignored.
        traj.states[0].u_block[2] += 1.0;
        traj.states[3].v_block[1] += 1.0;
        let r = error_norms(&traj, &g);
        assert_eq!((r.err_u, r.err_v), (0.0, 0.0));
        traj.states[3].u_block[3] += 0.5;
        traj.states[2].v_block[0] += 0.25;
        let r = error_norms(&traj, &g);
        assert_eq!(r.argmax_u, (4, 3));
        assert_eq!(r.argmax_v, (0, 2));
        assert!((r.err_u - 0.5).abs() < 1e-12 && (r.err_v - 0.25).abs() < 1e-12);
    }

    #[test]
    fn table1_requires_node_at_four_fifths() {
        assert!(reproduce_table1(48, 50, 20.0, 1).is_err());
    }

    #[test]
    fn surface_size_and_zero_run() {
        let g = build_grid(6, 4, 1.0).unwrap();
        let traj = Trajectory { states: vec![StateVector::zeros(6); 5], iterate_index: 1, escaped_at: None };
        let rows = surface_data(&traj, &g);
        assert_eq!(rows.len(), 7 * 5);
        assert!(rows.iter().all(|r| r.u == 0.0 && r.v == 0.0));
    }

    #[test]
    fn threaded_table_matches_serial() {
        let sizes = [(10, 10), (15, 15), (20, 20)];
        let serial = reproduce_table2(&sizes, &Table2Options { horizon: 4.0, ..Default::default() }).unwrap();
        let par = reproduce_table2(&sizes, &Table2Options { horizon: 4.0, threads: 3, ..Default::default() }).unwrap();
        assert_eq!(serial, par);
    }
}
