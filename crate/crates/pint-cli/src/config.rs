//! Flat key-value experiment configuration.
//!
//! The on-disk format is one `key = value` pair per line, UTF-8, with `#`
//! comments and blank lines ignored. Parsing is strict: unknown or duplicate
//! keys fail with the offending key named, and keys that don't belong to the
//! selected problem/method variant are rejected the same way. Serializing a
//! parsed config and parsing it again is idempotent, which the tests pin.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use pint_core::integrators::{sdirk2, ButcherTableau, MultistepMethod};
use pint_core::problems::{advection_diffusion, scalar_problem, wave_first_order, SpatialProblem};
use pint_core::solver::{InitialGuess, ShiftedSolver};
use pint_core::Complex64;
use thiserror::Error;

/// Everything that can go wrong in the CLI, with the failing stage baked
/// into the message. `exit_code` maps config/IO trouble to 1 and numerical
/// failure to 2.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("config: unknown key `{0}`")]
    UnknownKey(String),
    #[error("config: duplicate key `{0}`")]
    DuplicateKey(String),
    #[error("config: missing key `{0}`")]
    MissingKey(String),
    #[error("config: invalid value for `{key}`: {message}")]
    InvalidValue { key: String, message: String },
    #[error("config: line {0}: expected `key = value`")]
    MalformedLine(usize),
    #[error("config: unknown preset `{0}` (see `pint list-presets`)")]
    UnknownPreset(String),
    #[error("config: {0}")]
    Usage(String),
    #[error("{stage}: {source}")]
    Io {
        stage: &'static str,
        #[source]
        source: std::io::Error,
    },
    #[error("{stage}: {message}")]
    Numerical { stage: &'static str, message: String },
}

impl CliError {
    /// Process exit code for this error: 2 for numerical failure, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical { .. } => 2,
            _ => 1,
        }
    }

    /// Shorthand for an [`CliError::InvalidValue`].
    pub fn invalid(key: &str, message: impl Into<String>) -> Self {
        CliError::InvalidValue { key: key.into(), message: message.into() }
    }
}

/// Spatial problem selection.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    AdvectionDiffusion { nu: f64, nx: usize },
    Wave { nx: usize },
    Scalar { lambda_re: f64, lambda_im: f64 },
}

impl ProblemSpec {
    /// Instantiate the semi-discrete problem.
    pub fn build(&self) -> SpatialProblem {
        match *self {
            ProblemSpec::AdvectionDiffusion { nu, nx } => advection_diffusion(nu, nx),
            ProblemSpec::Wave { nx } => wave_first_order(nx),
            ProblemSpec::Scalar { lambda_re, lambda_im } => {
                scalar_problem(Complex64::new(lambda_re, lambda_im))
            }
        }
    }

    fn keyword(&self) -> &'static str {
        match self {
            ProblemSpec::AdvectionDiffusion { .. } => "advection_diffusion",
            ProblemSpec::Wave { .. } => "wave",
            ProblemSpec::Scalar { .. } => "scalar",
        }
    }
}

/// Time integrator selection.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodSpec {
    Sdirk2 { gamma: f64, b: f64 },
    Bdf { r: usize },
    AdamsMoulton4,
}

impl MethodSpec {
    /// The one-step tableau, when this is a one-step method.
    pub fn one_step(&self) -> Option<ButcherTableau> {
        match *self {
            MethodSpec::Sdirk2 { gamma, b } => Some(sdirk2(gamma, b)),
            _ => None,
        }
    }

    /// The multistep coefficients, when this is a multistep method.
    pub fn multistep(&self) -> Option<MultistepMethod> {
        match *self {
            MethodSpec::Bdf { r } => Some(MultistepMethod::bdf(r)),
            MethodSpec::AdamsMoulton4 => Some(MultistepMethod::adams_moulton4()),
            MethodSpec::Sdirk2 { .. } => None,
        }
    }

    fn keyword(&self) -> &'static str {
        match self {
            MethodSpec::Sdirk2 { .. } => "sdirk2",
            MethodSpec::Bdf { .. } => "bdf",
            MethodSpec::AdamsMoulton4 => "adams_moulton4",
        }
    }
}

/// Rectangular scan window in the complex plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl Window {
    /// Reject empty or inverted windows.
    pub fn validate(&self) -> Result<(), CliError> {
        if self.re_max <= self.re_min || self.im_max <= self.im_min {
            return Err(CliError::Usage(format!(
                "empty scan window [{}, {}] x [{}, {}]",
                self.re_min, self.re_max, self.im_min, self.im_max
            )));
        }
        Ok(())
    }
}

/// A full convergence-experiment description: problem, method, time grid,
/// alpha list, solver knobs, output destination.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub method: MethodSpec,
    pub t_final: f64,
    pub dt: f64,
    pub alphas: Vec<f64>,
    /// Absolute residual tolerance; `None` = solver default (relative).
    pub tol: Option<f64>,
    pub max_iterations: usize,
    pub outputs: PathBuf,
    pub emit_plots: bool,
    pub initial_guess: InitialGuess,
    pub shifted_solver: ShiftedSolver,
    /// Frequency-solve parallelism; 0 = one thread per available core.
    pub workers: usize,
}

impl ExperimentConfig {
    /// Number of time steps `T/dt`, validated as a positive integer.
    pub fn n_time(&self) -> Result<usize, CliError> {
        let ratio = self.t_final / self.dt;
        let rounded = ratio.round();
        if rounded < 1.0 || (ratio - rounded).abs() > 1e-9 * ratio.max(1.0) {
            return Err(CliError::invalid(
                "dt",
                format!("T/dt = {ratio} is not a positive integer"),
            ));
        }
        Ok(rounded as usize)
    }

    /// Parse the key-value text format.
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut pairs = split_pairs(text)?;
        let config = Self::from_pairs(&mut pairs)?;
        if let Some(key) = pairs.keys().next() {
            return Err(CliError::UnknownKey(key.clone()));
        }
        Ok(config)
    }

    fn from_pairs(pairs: &mut BTreeMap<String, String>) -> Result<Self, CliError> {
        let problem = match require(pairs, "problem")?.as_str() {
            "advection_diffusion" => ProblemSpec::AdvectionDiffusion {
                nu: parse_f64(pairs, "nu")?,
                nx: parse_usize(pairs, "nx")?,
            },
            "wave" => ProblemSpec::Wave { nx: parse_usize(pairs, "nx")? },
            "scalar" => ProblemSpec::Scalar {
                lambda_re: parse_f64(pairs, "lambda_re")?,
                lambda_im: take(pairs, "lambda_im")
                    .map(|v| parse_f64_value("lambda_im", &v))
                    .transpose()?
                    .unwrap_or(0.0),
            },
            other => {
                return Err(CliError::invalid(
                    "problem",
                    format!("`{other}` is not advection_diffusion, wave, or scalar"),
                ))
            }
        };
        validate_problem(&problem)?;

        let method = match require(pairs, "method")?.as_str() {
            "sdirk2" => {
                MethodSpec::Sdirk2 { gamma: parse_f64(pairs, "gamma")?, b: parse_f64(pairs, "b")? }
            }
            "bdf" => MethodSpec::Bdf { r: parse_usize(pairs, "r")? },
            "adams_moulton4" => MethodSpec::AdamsMoulton4,
            other => {
                return Err(CliError::invalid(
                    "method",
                    format!("`{other}` is not sdirk2, bdf, or adams_moulton4"),
                ))
            }
        };
        validate_method(&method)?;

        let t_final = parse_f64(pairs, "T")?;
        let dt = parse_f64(pairs, "dt")?;
        if !(t_final > 0.0) || !(dt > 0.0) {
            return Err(CliError::invalid("T", "T and dt must be positive"));
        }
        let alphas = parse_alphas(&require(pairs, "alpha")?)?;

        let tol = take(pairs, "tol").map(|v| parse_f64_value("tol", &v)).transpose()?;
        if let Some(t) = tol {
            if t < 0.0 {
                return Err(CliError::invalid("tol", "must be nonnegative"));
            }
        }
        let max_iterations = match take(pairs, "max_iterations") {
            Some(v) => parse_usize_value("max_iterations", &v)?,
            None => 30,
        };
        if max_iterations == 0 {
            return Err(CliError::invalid("max_iterations", "must be at least 1"));
        }

        let outputs =
            PathBuf::from(take(pairs, "outputs").unwrap_or_else(|| "pint-output".into()));
        let emit_plots = match take(pairs, "emit_plots") {
            Some(v) => parse_bool("emit_plots", &v)?,
            None => false,
        };
        let initial_guess = match take(pairs, "initial_guess") {
            Some(v) => parse_initial_guess(&v)?,
            None => InitialGuess::Zero,
        };
        let shifted_solver = match take(pairs, "shifted_solver").as_deref() {
            None | Some("dense") => ShiftedSolver::Dense,
            Some("stage_reduced") => ShiftedSolver::StageReduced,
            Some(other) => {
                return Err(CliError::invalid(
                    "shifted_solver",
                    format!("`{other}` is not dense or stage_reduced"),
                ))
            }
        };
        let workers = match take(pairs, "workers") {
            Some(v) => parse_usize_value("workers", &v)?,
            None => 1,
        };

        let config = ExperimentConfig {
            problem,
            method,
            t_final,
            dt,
            alphas,
            tol,
            max_iterations,
            outputs,
            emit_plots,
            initial_guess,
            shifted_solver,
            workers,
        };
        config.n_time()?; // T/dt must be a positive integer
        Ok(config)
    }

    /// Serialize back to the key-value format (fixed key order, shortest
    /// round-trip float formatting).
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        for (key, value) in self.to_pairs() {
            let _ = writeln!(out, "{key} = {value}");
        }
        out
    }

    /// The config as ordered pairs; also used for CSV metadata headers.
    /// `outputs`, `emit_plots`, and `workers` describe the environment, not
    /// the experiment, so [`Self::metadata_pairs`] drops them.
    pub fn to_pairs(&self) -> Vec<(String, String)> {
        let mut pairs: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| pairs.push((k.into(), v));
        push("problem", self.problem.keyword().into());
        match self.problem {
            ProblemSpec::AdvectionDiffusion { nu, nx } => {
                push("nu", format!("{nu}"));
                push("nx", format!("{nx}"));
            }
            ProblemSpec::Wave { nx } => push("nx", format!("{nx}")),
            ProblemSpec::Scalar { lambda_re, lambda_im } => {
                push("lambda_re", format!("{lambda_re}"));
                push("lambda_im", format!("{lambda_im}"));
            }
        }
        push("method", self.method.keyword().into());
        match self.method {
            MethodSpec::Sdirk2 { gamma, b } => {
                push("gamma", format!("{gamma}"));
                push("b", format!("{b}"));
            }
            MethodSpec::Bdf { r } => push("r", format!("{r}")),
            MethodSpec::AdamsMoulton4 => {}
        }
        push("T", format!("{}", self.t_final));
        push("dt", format!("{}", self.dt));
        let alphas: Vec<String> = self.alphas.iter().map(|a| format!("{a}")).collect();
        push("alpha", alphas.join(","));
        if let Some(tol) = self.tol {
            push("tol", format!("{tol}"));
        }
        push("max_iterations", format!("{}", self.max_iterations));
        push("outputs", self.outputs.display().to_string());
        push("emit_plots", format!("{}", self.emit_plots));
        let guess = match self.initial_guess {
            InitialGuess::Zero => "zero".to_string(),
            InitialGuess::Random { seed } => format!("random:{seed}"),
        };
        push("initial_guess", guess);
        let solver = match self.shifted_solver {
            ShiftedSolver::Dense => "dense",
            ShiftedSolver::StageReduced => "stage_reduced",
        };
        push("shifted_solver", solver.into());
        push("workers", format!("{}", self.workers));
        pairs
    }

    /// Pairs describing the experiment itself (environment keys dropped),
    /// written as `# key = value` lines at the top of every CSV.
    pub fn metadata_pairs(&self) -> Vec<(String, String)> {
        self.to_pairs()
            .into_iter()
            .filter(|(k, _)| k != "outputs" && k != "emit_plots" && k != "workers")
            .collect()
    }
}

fn validate_problem(problem: &ProblemSpec) -> Result<(), CliError> {
    match *problem {
        ProblemSpec::AdvectionDiffusion { nu, nx } => {
            if !(nu > 0.0) {
                return Err(CliError::invalid("nu", "must be positive"));
            }
            if nx < 3 {
                return Err(CliError::invalid("nx", "need at least 3 grid points"));
            }
        }
        ProblemSpec::Wave { nx } => {
            if nx < 3 {
                return Err(CliError::invalid("nx", "need at least 3 grid points"));
            }
        }
        ProblemSpec::Scalar { .. } => {}
    }
    Ok(())
}

fn validate_method(method: &MethodSpec) -> Result<(), CliError> {
    match *method {
        MethodSpec::Sdirk2 { gamma, b } => {
            if !(gamma > 0.0) {
                return Err(CliError::invalid("gamma", "must be positive"));
            }
            if b == 1.0 {
                return Err(CliError::invalid("b", "b = 1 leaves the second stage undetermined"));
            }
        }
        MethodSpec::Bdf { r } => {
            if !(1..=4).contains(&r) {
                return Err(CliError::invalid("r", "BDF order must be 1..=4"));
            }
        }
        MethodSpec::AdamsMoulton4 => {}
    }
    Ok(())
}

/// Split the text into a key → value map, rejecting duplicates and
/// malformed lines.
fn split_pairs(text: &str) -> Result<BTreeMap<String, String>, CliError> {
    let mut pairs = BTreeMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or(CliError::MalformedLine(idx + 1))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(CliError::MalformedLine(idx + 1));
        }
        if pairs.insert(key.clone(), value).is_some() {
            return Err(CliError::DuplicateKey(key));
        }
    }
    Ok(pairs)
}

fn take(pairs: &mut BTreeMap<String, String>, key: &str) -> Option<String> {
    pairs.remove(key)
}

fn require(pairs: &mut BTreeMap<String, String>, key: &str) -> Result<String, CliError> {
    take(pairs, key).ok_or_else(|| CliError::MissingKey(key.into()))
}

fn parse_f64_value(key: &str, value: &str) -> Result<f64, CliError> {
    value.parse::<f64>().map_err(|_| CliError::invalid(key, format!("`{value}` is not a number")))
}

fn parse_f64(pairs: &mut BTreeMap<String, String>, key: &str) -> Result<f64, CliError> {
    parse_f64_value(key, &require(pairs, key)?)
}

fn parse_usize_value(key: &str, value: &str) -> Result<usize, CliError> {
    value
        .parse::<usize>()
        .map_err(|_| CliError::invalid(key, format!("`{value}` is not a nonnegative integer")))
}

fn parse_usize(pairs: &mut BTreeMap<String, String>, key: &str) -> Result<usize, CliError> {
    parse_usize_value(key, &require(pairs, key)?)
}

fn parse_bool(key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(CliError::invalid(key, format!("`{value}` is not true or false"))),
    }
}

/// Comma-separated alpha list; every value must lie in (0, 1).
pub fn parse_alphas(value: &str) -> Result<Vec<f64>, CliError> {
    let mut alphas = Vec::new();
    for part in value.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let alpha = parse_f64_value("alpha", part)?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(CliError::invalid("alpha", format!("{alpha} is outside (0, 1)")));
        }
        alphas.push(alpha);
    }
    if alphas.is_empty() {
        return Err(CliError::invalid("alpha", "need at least one value"));
    }
    Ok(alphas)
}

fn parse_initial_guess(value: &str) -> Result<InitialGuess, CliError> {
    if value == "zero" {
        return Ok(InitialGuess::Zero);
    }
    if let Some(seed) = value.strip_prefix("random:") {
        let seed = seed
            .parse::<u64>()
            .map_err(|_| CliError::invalid("initial_guess", format!("bad seed `{seed}`")))?;
        return Ok(InitialGuess::Random { seed });
    }
    Err(CliError::invalid("initial_guess", format!("`{value}` is not zero or random:SEED")))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "\
# fig 2.2 left-style run
problem = advection_diffusion
nu = 0.001
nx = 100
method = sdirk2
gamma = 0.2
b = 0.5
T = 10
dt = 0.02
alpha = 0.1,0.01
tol = 0
max_iterations = 30
outputs = out
emit_plots = false
initial_guess = zero
shifted_solver = dense
workers = 1
";

    #[test]
    fn parse_then_serialize_is_idempotent() {
        let config = ExperimentConfig::parse(SAMPLE).unwrap();
        let once = config.serialize();
        let reparsed = ExperimentConfig::parse(&once).unwrap();
        assert_eq!(config, reparsed);
        assert_eq!(once, reparsed.serialize());
    }

    #[test]
    fn parsed_fields_match_the_text() {
        let config = ExperimentConfig::parse(SAMPLE).unwrap();
        assert_eq!(config.problem, ProblemSpec::AdvectionDiffusion { nu: 1e-3, nx: 100 });
        assert_eq!(config.method, MethodSpec::Sdirk2 { gamma: 0.2, b: 0.5 });
        assert_eq!(config.alphas, vec![0.1, 0.01]);
        assert_eq!(config.tol, Some(0.0));
        assert_eq!(config.n_time().unwrap(), 500);
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("{SAMPLE}colour = blue\n");
        match ExperimentConfig::parse(&text) {
            Err(CliError::UnknownKey(key)) => assert_eq!(key, "colour"),
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn variant_foreign_key_is_rejected() {
        // `r` belongs to bdf, not sdirk2.
        let text = format!("{SAMPLE}r = 4\n");
        match ExperimentConfig::parse(&text) {
            Err(CliError::UnknownKey(key)) => assert_eq!(key, "r"),
            other => panic!("expected UnknownKey, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_and_malformed_lines_fail() {
        let dup = format!("{SAMPLE}nx = 50\n");
        assert!(matches!(ExperimentConfig::parse(&dup), Err(CliError::DuplicateKey(k)) if k == "nx"));
        assert!(matches!(
            ExperimentConfig::parse("problem advection_diffusion\n"),
            Err(CliError::MalformedLine(1))
        ));
    }

    #[test]
    fn alpha_must_lie_strictly_inside_the_unit_interval() {
        for bad in ["1.0", "0", "-0.1"] {
            let text = SAMPLE.replace("alpha = 0.1,0.01", &format!("alpha = {bad}"));
            assert!(
                matches!(ExperimentConfig::parse(&text), Err(CliError::InvalidValue { key, .. }) if key == "alpha"),
                "alpha = {bad} should fail"
            );
        }
    }

    #[test]
    fn time_grid_must_divide_evenly() {
        let text = SAMPLE.replace("dt = 0.02", "dt = 0.03");
        assert!(matches!(
            ExperimentConfig::parse(&text),
            Err(CliError::InvalidValue { key, .. }) if key == "dt"
        ));
    }

    #[test]
    fn scalar_and_multistep_variants_round_trip() {
        let text = "\
problem = scalar
lambda_re = 0.5
lambda_im = -2
method = bdf
r = 4
T = 8
dt = 0.5
alpha = 0.1
initial_guess = random:7
";
        let config = ExperimentConfig::parse(text).unwrap();
        assert_eq!(config.problem, ProblemSpec::Scalar { lambda_re: 0.5, lambda_im: -2.0 });
        assert_eq!(config.method, MethodSpec::Bdf { r: 4 });
        assert_eq!(config.initial_guess, InitialGuess::Random { seed: 7 });
        assert_eq!(config.workers, 1);
        let reparsed = ExperimentConfig::parse(&config.serialize()).unwrap();
        assert_eq!(config, reparsed);
    }

    #[test]
    fn metadata_pairs_drop_environment_keys() {
        let config = ExperimentConfig::parse(SAMPLE).unwrap();
        let keys: Vec<String> = config.metadata_pairs().into_iter().map(|(k, _)| k).collect();
        assert!(!keys.contains(&"workers".to_string()));
        assert!(!keys.contains(&"outputs".to_string()));
        assert!(!keys.contains(&"emit_plots".to_string()));
        assert!(keys.contains(&"alpha".to_string()));
    }
}
