use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;
use wave_sim::{parse_config, run, Mode, Overrides};

/// Simulate and analyze the coupled damped nonlinear wave system.
#[derive(Parser, Debug)]
#[command(name = "wave-sim", version)]
struct Cli {
    /// simulate | verify | analyze-decay | analyze-blowup | check-hypotheses
    mode: Mode,
    #[arg(long)]
    config: PathBuf,
    #[arg(long = "K")]
    k: Option<usize>,
    #[arg(long = "N")]
    n: Option<usize>,
    #[arg(long = "T")]
    t: Option<f64>,
    #[arg(long)]
    sweeps: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    emit_surfaces: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = std::fs::read_to_string(&cli.config)
        .with_context(|| format!("cannot read {}", cli.config.display()))
        .and_then(|text| {
            let overrides = Overrides {
                mode: Some(cli.mode),
                k: cli.k,
                n: cli.n,
                horizon: cli.t,
                sweeps: cli.sweeps,
                out_dir: cli.out,
                emit_surfaces: cli.emit_surfaces,
            };
            Ok(parse_config(&text, &overrides)?)
        })
        .and_then(|cfg| run(&cfg));
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
