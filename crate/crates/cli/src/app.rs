//! Mode dispatch. Every output is rendered in memory first and written only
//! once the whole computation has succeeded.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use wave_sim_core::diagnostics::{
    blowup_time_bound, decay_constants, energy_series, fit_decay_rate, reference_initial_energy, EnergySample,
    Quadrature,
};
use wave_sim_core::discretization::{build_grid, Grid};
use wave_sim_core::model::check_hypotheses;
use wave_sim_core::timestepper::{run_simulation_with, SimulationOptions, SweepDiagnostics, Trajectory};
use wave_sim_core::verification::{
    error_norms, reproduce_table2, surface_data, table1_rows, Table2Options, TABLE1_STEPS,
};

use crate::config::{Mode, RunConfig};

/// Exit status for a completed run whose hypothesis checks failed.
pub const EXIT_HYPOTHESIS: i32 = 2;

#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub exit_code: i32,
    pub files: Vec<OutputFile>,
}

/// Round-trip representation with 17 significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Default)]
struct Summary(String);

impl Summary {
    fn line(&mut self, name: &str, value: impl std::fmt::Display) {
        let _ = writeln!(self.0, "{name}: {value}");
    }

    fn real(&mut self, name: &str, value: f64) {
        self.line(name, num(value));
    }

    fn file(self) -> OutputFile {
        OutputFile { name: "summary.txt".into(), contents: self.0 }
    }
}

fn csv(name: &str, header: &str, rows: impl Iterator<Item = Vec<String>>) -> OutputFile {
    let mut s = String::from(header);
    s.push('\n');
    for row in rows {
        s.push_str(&row.join(","));
        s.push('\n');
    }
    OutputFile { name: name.into(), contents: s }
}

fn energy_csv(samples: &[EnergySample]) -> OutputFile {
    csv(
        "energy.csv",
        "t,E,H,I1,I2,J,psi,L,Lyap",
        samples.iter().map(|s| {
            vec![
                num(s.t),
                num(s.e),
                num(s.h),
                num(s.i1),
                num(s.i2),
                num(s.j),
                num(s.psi),
                s.l_blowup.map(num).unwrap_or_default(),
                num(s.lyap),
            ]
        }),
    )
}

fn trajectory_csv(traj: &Trajectory, grid: &Grid) -> OutputFile {
    let rows = traj.states.iter().enumerate().flat_map(move |(n, s)| {
        (0..=grid.intervals()).map(move |k| {
            vec![num(grid.x(k)), num(grid.t(n)), num(s.u(k)), num(s.v(k)), num(s.u_dot(k)), num(s.v_dot(k))]
        })
    });
    csv("trajectory.csv", "x,t,u,v,u_t,v_t", rows)
}

fn surface_csv(traj: &Trajectory, grid: &Grid) -> OutputFile {
    csv(
        "surface.csv",
        "x,t,u,v,u_ex,v_ex",
        surface_data(traj, grid)
            .into_iter()
            .map(|r| vec![num(r.x), num(r.t), num(r.u), num(r.v), num(r.u_ex), num(r.v_ex)]),
    )
}

fn simulate(cfg: &RunConfig, grid: &Grid) -> Result<(Trajectory, SweepDiagnostics)> {
    let opts = SimulationOptions {
        sweeps: cfg.sweeps,
        tolerance: cfg.sweep_tol,
        solver: cfg.solver,
        escape_threshold: Some(cfg.escape_threshold),
    };
    run_simulation_with(&cfg.spec, grid, &opts).context("simulation failed")
}

fn run_header(s: &mut Summary, cfg: &RunConfig) {
    s.line("mode", cfg.mode);
    s.line("K", cfg.k);
    s.line("N", cfg.n);
    s.real("T", cfg.spec.horizon);
    s.line("sweeps", cfg.sweeps);
}

fn sweep_summary(s: &mut Summary, traj: &Trajectory, diag: &SweepDiagnostics) {
    s.line("sweeps_performed", diag.sweep_deltas.len());
    s.real("last_sweep_delta", *diag.sweep_deltas.last().unwrap_or(&0.0));
    s.real("final_residual", diag.final_residual);
    match traj.escaped_at {
        Some(n) => s.line("escaped_at_step", n),
        None => s.line("escaped_at_step", "none"),
    }
}

/// Runs a configuration without touching the filesystem.
pub fn execute(cfg: &RunConfig, threads: usize) -> Result<Outcome> {
    let grid = build_grid(cfg.k, cfg.n, cfg.spec.horizon)?;
    let mut summary = Summary::default();
    run_header(&mut summary, cfg);
    let mut files = Vec::new();
    let mut exit_code = 0;

    match cfg.mode {
        Mode::Simulate => {
            let (traj, diag) = simulate(cfg, &grid)?;
            let series = energy_series(&traj, &grid, &cfg.spec, &cfg.blowup, cfg.delta, Quadrature::NodeSum);
            sweep_summary(&mut summary, &traj, &diag);
            summary.real("E_initial", series[0].e);
            summary.real("E_final", series[series.len() - 1].e);
            files.push(energy_csv(&series));
            files.push(trajectory_csv(&traj, &grid));
            if cfg.emit_surfaces {
                files.push(surface_csv(&traj, &grid));
            }
        }
        Mode::Verify => {
            let (traj, diag) = simulate(cfg, &grid)?;
            sweep_summary(&mut summary, &traj, &diag);
            let rows = table1_rows(&traj, &grid, &TABLE1_STEPS)?;
            let report = error_norms(&traj, &grid);
            summary.real("err_u", report.err_u);
            summary.real("err_v", report.err_v);
            let t2 = reproduce_table2(
                &cfg.table2_sizes,
                &Table2Options { horizon: cfg.spec.horizon, sweeps: cfg.sweeps, threads, solver: cfg.solver },
            )
            .context("refinement table failed")?;
            summary.line("table2_threads", threads);
            let decreasing = t2.windows(2).all(|w| w[1].err_u < w[0].err_u && w[1].err_v < w[0].err_v);
            summary.line("table2_strictly_decreasing", decreasing);
            for r in &rows {
                summary.real(&format!("u_computed_n{}", r.n), r.u_computed);
                summary.real(&format!("v_computed_n{}", r.n), r.v_computed);
            }
            files.push(csv(
                "table1.csv",
                "n,t,u_exact,u_computed,u_abs_diff,v_exact,v_computed,v_abs_diff",
                rows.iter().map(|r| {
                    vec![
                        r.n.to_string(),
                        num(r.t),
                        num(r.u_exact),
                        num(r.u_computed),
                        num(r.u_abs_diff),
                        num(r.v_exact),
                        num(r.v_computed),
                        num(r.v_abs_diff),
                    ]
                }),
            ));
            files.push(csv(
                "table2.csv",
                "K,N,err_u,err_v",
                t2.iter().map(|r| vec![r.k.to_string(), r.n.to_string(), num(r.err_u), num(r.err_v)]),
            ));
            files.push(csv(
                "errors.csv",
                "x,t,u_err,v_err",
                surface_data(&traj, &grid)
                    .into_iter()
                    .map(|r| vec![num(r.x), num(r.t), num((r.u - r.u_ex).abs()), num((r.v - r.v_ex).abs())]),
            ));
            if cfg.emit_surfaces {
                files.push(surface_csv(&traj, &grid));
            }
        }
        Mode::AnalyzeDecay => {
            let report = check_hypotheses(&cfg.spec);
            let e0 = reference_initial_energy(&cfg.spec)?;
            let (traj, diag) = simulate(cfg, &grid)?;
            let series = energy_series(&traj, &grid, &cfg.spec, &cfg.blowup, cfg.delta, Quadrature::NodeSum);
            sweep_summary(&mut summary, &traj, &diag);
            summary.real("E0_reference", e0);
            let mut ok = report.d2_lt_min_p && report.a3bis_ok;
            summary.line("d2_lt_min_p", report.d2_lt_min_p);
            summary.line("a3bis_ok", report.a3bis_ok);
            let i_pos = series[0].i1 > 0.0 && series[0].i2 > 0.0;
            summary.line("I1_I2_initially_positive", i_pos);
            ok &= i_pos;
            match decay_constants(&cfg.spec, e0) {
                Ok(c) => {
                    summary.real("rho", c.rho);
                    summary.real("p_star", c.p_star);
                    summary.real("E_star", c.e_star);
                    summary.real("eta_star", c.eta_star);
                    summary.line("eta_star_lt_1", c.hypothesis_ok);
                    ok &= c.hypothesis_ok;
                }
                Err(e) => {
                    summary.line("decay_constants", format!("undefined ({e})"));
                    ok = false;
                }
            }
            match fit_decay_rate(&series, cfg.fit_window) {
                Ok(f) => {
                    summary.real("fit_C", f.c);
                    summary.real("fit_gamma", f.gamma);
                    summary.real("fit_residual", f.residual);
                }
                Err(e) => summary.line("fit", format!("unavailable ({e})")),
            }
            summary.line("hypotheses_ok", ok);
            if !ok {
                exit_code = EXIT_HYPOTHESIS;
            }
            files.push(energy_csv(&series));
        }
        Mode::AnalyzeBlowup => {
            let report = check_hypotheses(&cfg.spec);
            let e0 = reference_initial_energy(&cfg.spec)?;
            let forcing_zero = cfg.spec.forcing.is_zero();
            let h0_positive = -e0 > 0.0;
            summary.real("H0_reference", -e0);
            summary.line("forcing_zero", forcing_zero);
            summary.line("H0_positive", h0_positive);
            summary.line("blowup_condition", report.blowup_condition);
            summary.line("a3bis_ok", report.a3bis_ok);
            let ok = forcing_zero && h0_positive && report.blowup_condition && report.a3bis_ok;
            summary.line("hypotheses_ok", ok);

            let (traj, diag) = simulate(cfg, &grid)?;
            let series = energy_series(&traj, &grid, &cfg.spec, &cfg.blowup, cfg.delta, Quadrature::NodeSum);
            sweep_summary(&mut summary, &traj, &diag);
            let (dh, dl) = monotonicity_defects(&traj, &series, cfg.escape_threshold);
            summary.real("max_H_drop", dh);
            summary.real("max_L_drop", dl);
            match series[0].l_blowup {
                Some(l0) => {
                    summary.real("L0", l0);
                    match blowup_time_bound(l0, &cfg.blowup)? {
                        Some(t) => summary.real("T_star", t),
                        None => summary.line("T_star", "absent (c_bar not given)"),
                    }
                }
                None => summary.line("L0", "absent (H(0) ≤ 0 on the simulation grid)"),
            }
            if !ok {
                exit_code = EXIT_HYPOTHESIS;
            }
            files.push(energy_csv(&series));
        }
        Mode::CheckHypotheses => {
            let report = check_hypotheses(&cfg.spec);
            summary.real("d1", report.d1);
            summary.real("d2", report.d2);
            summary.real("dbar1", report.dbar1);
            summary.real("dbar2", report.dbar2);
            summary.real("compat_residual_u", report.compat_residual_u);
            summary.real("compat_residual_v", report.compat_residual_v);
            summary.line("a3bis_ok", report.a3bis_ok);
            summary.line("d2_lt_min_p", report.d2_lt_min_p);
            summary.line("blowup_condition", report.blowup_condition);
            let e0 = reference_initial_energy(&cfg.spec)?;
            summary.real("E0", e0);
            match decay_constants(&cfg.spec, e0) {
                Ok(c) => {
                    summary.real("rho", c.rho);
                    summary.real("p_star", c.p_star);
                    summary.real("E_star", c.e_star);
                    summary.real("eta_star", c.eta_star);
                    summary.line("eta_star_lt_1", c.hypothesis_ok);
                    if cfg.is_manufactured() {
                        summary.line("rho_le_1.563e-3", c.rho <= 1.563e-3);
                        summary.line("E0_lt_0.015", e0 < 0.015);
                        summary.line("E_star_lt_0.017", c.e_star < 0.017);
                    }
                }
                Err(e) => summary.line("decay_constants", format!("undefined ({e})")),
            }
            for note in &report.notes {
                summary.line("note", note);
            }
        }
    }
    summary.line("exit_code", exit_code);
    files.push(summary.file());
    Ok(Outcome { exit_code, files })
}

/// Largest relative per-step decrease of `H` and `L` over the part of the
/// run whose states stay within `threshold`.
pub fn monotonicity_defects(traj: &Trajectory, series: &[EnergySample], threshold: f64) -> (f64, f64) {
    let mut dh: f64 = 0.0;
    let mut dl: f64 = 0.0;
    for (n, w) in series.windows(2).enumerate() {
        if !(traj.states[n + 1].max_abs() <= threshold) {
            break;
        }
        dh = dh.max((w[0].h - w[1].h) / (1.0 + w[0].h.abs()));
        if let (Some(a), Some(b)) = (w[0].l_blowup, w[1].l_blowup) {
            dl = dl.max((a - b) / (1.0 + a.abs()));
        }
    }
    (dh, dl)
}

/// Writes every file via a temporary name and rename.
pub fn write_outputs(dir: &Path, files: &[OutputFile]) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    for f in files {
        let tmp = dir.join(format!(".{}.tmp", f.name));
        let dst = dir.join(&f.name);
        fs::write(&tmp, &f.contents).with_context(|| format!("cannot write {}", tmp.display()))?;
        fs::rename(&tmp, &dst).with_context(|| format!("cannot write {}", dst.display()))?;
    }
    Ok(())
}

/// Worker cap from `WAVE_SIM_THREADS`, default 1.
pub fn thread_limit() -> Result<usize> {
    match std::env::var("WAVE_SIM_THREADS") {
        Err(_) => Ok(1),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(n),
            _ => anyhow::bail!("WAVE_SIM_THREADS must be a positive integer, got '{v}'"),
        },
    }
}

/// Executes a configuration and writes its outputs; returns the exit code.
pub fn run(cfg: &RunConfig) -> Result<i32> {
    let outcome = execute(cfg, thread_limit()?)?;
    write_outputs(&cfg.out_dir, &outcome.files)?;
    Ok(outcome.exit_code)
}
