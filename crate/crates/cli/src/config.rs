//! Line-based `key = value` run configuration.

use std::collections::HashMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use thiserror::Error;
use wave_sim_core::diagnostics::{default_delta, BlowupParams};
use wave_sim_core::model::{ForcingKind, InitialDataKind, PotentialParams, ProblemSpec};
use wave_sim_core::timestepper::SolverPath;
use wave_sim_core::verification::TABLE2_SIZES;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("{0}")]
    Invalid(String),
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid(msg.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Verify,
    AnalyzeDecay,
    AnalyzeBlowup,
    CheckHypotheses,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "verify" => Ok(Mode::Verify),
            "analyze-decay" => Ok(Mode::AnalyzeDecay),
            "analyze-blowup" => Ok(Mode::AnalyzeBlowup),
            "check-hypotheses" => Ok(Mode::CheckHypotheses),
            other => Err(format!("unknown mode '{other}'")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Verify => "verify",
            Mode::AnalyzeDecay => "analyze-decay",
            Mode::AnalyzeBlowup => "analyze-blowup",
            Mode::CheckHypotheses => "check-hypotheses",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub spec: ProblemSpec,
    pub k: usize,
    pub n: usize,
    pub sweeps: usize,
    pub sweep_tol: Option<f64>,
    pub solver: SolverPath,
    pub blowup: BlowupParams,
    pub delta: f64,
    pub out_dir: PathBuf,
    pub emit_surfaces: bool,
    pub escape_threshold: f64,
    pub fit_window: (f64, f64),
    pub table2_sizes: Vec<(usize, usize)>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub mode: Option<Mode>,
    pub k: Option<usize>,
    pub n: Option<usize>,
    pub horizon: Option<f64>,
    pub sweeps: Option<usize>,
    pub out_dir: Option<PathBuf>,
    pub emit_surfaces: bool,
}

const KEYS: &[&str] = &[
    "mode",
    "K",
    "N",
    "T",
    "sweeps",
    "sweep_tol",
    "solver",
    "lambda1",
    "lambda2",
    "mu1",
    "mu2",
    "K1",
    "K2",
    "p1",
    "p2",
    "q1",
    "q2",
    "r1",
    "r2",
    "alpha",
    "beta",
    "gamma1",
    "gamma2",
    "forcing",
    "forcing_scale",
    "initial_data",
    "initial_scale",
    "xi",
    "epsilon",
    "delta",
    "c_bar",
    "out_dir",
    "emit_surfaces",
    "escape_threshold",
    "fit_t_lo",
    "fit_t_hi",
    "table2_sizes",
];

/// Raw key/value pairs with their line numbers.
struct Entries(HashMap<String, (usize, String)>);

impl Entries {
    fn parse<T: FromStr>(&self, key: &str) -> Result<Option<T>, ConfigError> {
        match self.0.get(key) {
            None => Ok(None),
            Some((line, raw)) => raw
                .parse()
                .map(Some)
                .map_err(|_| ConfigError::Parse { line: *line, msg: format!("invalid value '{raw}' for {key}") }),
        }
    }

    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.0.get(key)
    }
}

fn tokenize(text: &str) -> Result<Entries, ConfigError> {
    let mut map = HashMap::new();
    for (i, raw_line) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Parse { line, msg: format!("expected 'key = value', got '{content}'") });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(ConfigError::Parse { line, msg: format!("unknown key '{key}'") });
        }
        if value.is_empty() {
            return Err(ConfigError::Parse { line, msg: format!("missing value for {key}") });
        }
        if let Some((first, _)) = map.insert(key.to_string(), (line, value.to_string())) {
            return Err(ConfigError::Parse { line, msg: format!("duplicate key '{key}' (first set on line {first})") });
        }
    }
    Ok(Entries(map))
}

fn parse_sizes(raw: &(usize, String)) -> Result<Vec<(usize, usize)>, ConfigError> {
    raw.1
        .split(',')
        .map(|s| {
            let k: usize = s.trim().parse().map_err(|_| ConfigError::Parse {
                line: raw.0,
                msg: format!("invalid size '{}' in table2_sizes", s.trim()),
            })?;
            Ok((k, k))
        })
        .collect()
}

enum Family {
    Zero,
    Manufactured,
    Scaled(f64),
}

fn parse_family(entries: &Entries, kind_key: &str, scale_key: &str) -> Result<Family, ConfigError> {
    let scale: Option<f64> = entries.parse(scale_key)?;
    let kind = entries.raw(kind_key).map_or("manufactured", |(_, v)| v.as_str());
    let family = match kind {
        "zero" => Family::Zero,
        "manufactured" => Family::Manufactured,
        "scaled" => Family::Scaled(1.0),
        other => {
            let line = entries.raw(kind_key).map_or(0, |(l, _)| *l);
            return Err(ConfigError::Parse {
                line,
                msg: format!("{kind_key} must be zero, manufactured or scaled, got '{other}'"),
            });
        }
    };
    match (family, scale) {
        (Family::Scaled(_), None) => Err(invalid(format!("{kind_key} = scaled requires {scale_key}"))),
        (Family::Scaled(_), Some(s)) if !s.is_finite() => Err(invalid(format!("{scale_key} must be finite"))),
        (Family::Scaled(_), Some(s)) => Ok(Family::Scaled(s)),
        (_, Some(_)) => Err(invalid(format!("{scale_key} requires {kind_key} = scaled"))),
        (f, None) => Ok(f),
    }
}

/// Parses and validates a configuration, applying command-line overrides.
pub fn parse_config(text: &str, overrides: &Overrides) -> Result<RunConfig, ConfigError> {
    let e = tokenize(text)?;
    let file_mode: Option<Mode> = match e.raw("mode") {
        Some((line, v)) => Some(v.parse().map_err(|msg| ConfigError::Parse { line: *line, msg })?),
        None => None,
    };
    let mode = overrides.mode.or(file_mode).ok_or_else(|| invalid("mode is required"))?;

    let base = ProblemSpec::manufactured_example();
    let horizon = overrides.horizon.or(e.parse("T")?).unwrap_or(base.horizon);
    let potential = PotentialParams {
        alpha: e.parse("alpha")?.unwrap_or(base.potential.alpha),
        beta: e.parse("beta")?.unwrap_or(base.potential.beta),
        gamma1: e.parse("gamma1")?.unwrap_or(base.potential.gamma1),
        gamma2: e.parse("gamma2")?.unwrap_or(base.potential.gamma2),
    };
    let forcing = match parse_family(&e, "forcing", "forcing_scale")? {
        Family::Zero => ForcingKind::Zero,
        Family::Manufactured => ForcingKind::ManufacturedExample,
        Family::Scaled(s) => ForcingKind::ScaledManufactured(s),
    };
    let initial_data = match parse_family(&e, "initial_data", "initial_scale")? {
        Family::Zero => InitialDataKind::Zero,
        Family::Manufactured => InitialDataKind::ManufacturedExample,
        Family::Scaled(s) => InitialDataKind::ScaledManufactured(s),
    };
    let spec = ProblemSpec {
        lambda1: e.parse("lambda1")?.unwrap_or(base.lambda1),
        lambda2: e.parse("lambda2")?.unwrap_or(base.lambda2),
        mu1: e.parse("mu1")?.unwrap_or(base.mu1),
        mu2: e.parse("mu2")?.unwrap_or(base.mu2),
        k1: e.parse("K1")?.unwrap_or(base.k1),
        k2: e.parse("K2")?.unwrap_or(base.k2),
        p1: e.parse("p1")?.unwrap_or(base.p1),
        p2: e.parse("p2")?.unwrap_or(base.p2),
        q1: e.parse("q1")?.unwrap_or(base.q1),
        q2: e.parse("q2")?.unwrap_or(base.q2),
        r1: e.parse("r1")?.unwrap_or(base.r1),
        r2: e.parse("r2")?.unwrap_or(base.r2),
        potential,
        forcing,
        initial_data,
        horizon,
    };
    spec.validate().map_err(|err| invalid(err.to_string()))?;

    let blowup_defaults = BlowupParams::defaults(&spec.potential);
    let blowup = BlowupParams {
        xi: e.parse("xi")?.unwrap_or(blowup_defaults.xi),
        epsilon: e.parse("epsilon")?.unwrap_or(blowup_defaults.epsilon),
        c_bar: e.parse("c_bar")?,
    };
    blowup.validate(&spec.potential).map_err(|err| invalid(err.to_string()))?;

    let solver = match e.raw("solver").map(|(l, v)| (*l, v.as_str())) {
        None | Some((_, "dense")) => SolverPath::Dense,
        Some((_, "condensed")) => SolverPath::Condensed,
        Some((line, other)) => {
            return Err(ConfigError::Parse { line, msg: format!("solver must be dense or condensed, got '{other}'") })
        }
    };

    let cfg = RunConfig {
        mode,
        k: overrides.k.or(e.parse("K")?).unwrap_or(50),
        n: overrides.n.or(e.parse("N")?).unwrap_or(50),
        sweeps: overrides.sweeps.or(e.parse("sweeps")?).unwrap_or(5),
        sweep_tol: e.parse("sweep_tol")?,
        solver,
        delta: e.parse("delta")?.unwrap_or_else(|| default_delta(&spec)),
        blowup,
        out_dir: overrides.out_dir.clone().or(e.parse("out_dir")?).unwrap_or_else(|| PathBuf::from("out")),
        emit_surfaces: overrides.emit_surfaces || e.parse("emit_surfaces")?.unwrap_or(false),
        escape_threshold: e.parse("escape_threshold")?.unwrap_or(1e6),
        fit_window: (e.parse("fit_t_lo")?.unwrap_or(0.1 * horizon), e.parse("fit_t_hi")?.unwrap_or(0.9 * horizon)),
        table2_sizes: match e.raw("table2_sizes") {
            Some(raw) => parse_sizes(raw)?,
            None => TABLE2_SIZES.to_vec(),
        },
        spec,
    };
    cfg.validate()?;
    Ok(cfg)
}

impl RunConfig {
    /// Whether the problem is the manufactured benchmark (any horizon).
    pub fn is_manufactured(&self) -> bool {
        self.spec == ProblemSpec { horizon: self.spec.horizon, ..ProblemSpec::manufactured_example() }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.k < 2 {
            return Err(invalid("K must be ≥ 2"));
        }
        if self.n < 1 {
            return Err(invalid("N must be ≥ 1"));
        }
        if self.sweeps < 1 {
            return Err(invalid("sweeps must be ≥ 1"));
        }
        if let Some(tol) = self.sweep_tol {
            if !(tol > 0.0) {
                return Err(invalid("sweep_tol must be > 0"));
            }
        }
        let c = 1.0 - 1.0 / self.spec.p1 - 1.0 / self.spec.p2;
        if !(self.delta > 0.0) {
            return Err(invalid("delta must be > 0"));
        }
        if c > 0.0 && !(self.delta < c) {
            return Err(invalid(format!("delta must be < 1 − 1/p1 − 1/p2 = {c}")));
        }
        if !(self.escape_threshold > 0.0) {
            return Err(invalid("escape_threshold must be > 0"));
        }
        if !(self.fit_window.0 < self.fit_window.1) {
            return Err(invalid("fit_t_lo must be < fit_t_hi"));
        }
        if self.mode != Mode::CheckHypotheses {
            self.spec.require_scheme_regime().map_err(|err| invalid(err.to_string()))?;
        }
        if self.mode == Mode::Verify {
            if !self.is_manufactured() {
                return Err(invalid("verify requires the manufactured configuration"));
            }
            if !self.k.is_multiple_of(5) {
                return Err(invalid("verify requires K divisible by 5 (x = 4/5 must be a node)"));
            }
            if self.n < 30 {
                return Err(invalid("verify requires N ≥ 30 for the node table"));
            }
            if self.table2_sizes.iter().any(|&(k, _)| k < 2) {
                return Err(invalid("table2_sizes entries must be ≥ 2"));
            }
        }
        if self.emit_surfaces && !self.is_manufactured() {
            return Err(invalid("emit_surfaces requires the manufactured configuration"));
        }
        Ok(())
    }
}
