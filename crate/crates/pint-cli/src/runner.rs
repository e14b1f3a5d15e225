//! Experiment orchestration and CSV artifact writing.
//!
//! Three entry points mirror the subcommands: [`execute_run`] (convergence
//! history → `convergence.csv`), [`execute_region`] (stability scan →
//! `region.csv` + `spectrum.csv`), [`execute_sweep`] (per-alpha roundoff
//! floors → `floors.csv`). Every CSV starts with `# key = value` metadata
//! describing the experiment — never the environment (no worker counts, no
//! timestamps), so repeated runs emit identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use pint_core::all_at_once::{AllAtOnceSystem, MultistepSystem, OneStepSystem, StartupSource};
use pint_core::integrators::{
    root_condition_on_spectrum, sdirk2, stability_on_spectrum, StabilityReport,
};
use pint_core::solver::{iterate, IterationHistory, SolverConfig, SolverError, StopReason};
use pint_core::Complex64;

use crate::config::{CliError, ExperimentConfig, MethodSpec, Window};
use crate::exec::ThreadPoolExecutor;
use crate::presets::RegionConfig;
use crate::svg;

/// Unit-modulus tolerance for the stability verdicts printed alongside
/// region scans.
const STABILITY_TOL: f64 = 1e-9;

/// One alpha's convergence history.
#[derive(Debug, Clone)]
pub struct ConvergenceRun {
    pub alpha: f64,
    pub history: IterationHistory,
}

impl ConvergenceRun {
    /// The roundoff floor: the smallest error seen over the whole run.
    pub fn floor(&self) -> f64 {
        self.records_err().fold(f64::INFINITY, f64::min)
    }

    fn records_err(&self) -> impl Iterator<Item = f64> + '_ {
        self.history.records.iter().filter_map(|r| r.error_inf)
    }
}

/// Artifacts of a convergence run.
#[derive(Debug)]
pub struct RunOutcome {
    pub csv_path: PathBuf,
    pub svg_path: Option<PathBuf>,
    pub runs: Vec<ConvergenceRun>,
}

/// Assemble the all-at-once system a config describes.
pub fn build_system(config: &ExperimentConfig) -> Result<Box<dyn AllAtOnceSystem>, CliError> {
    let n_time = config.n_time()?;
    let problem = Arc::new(config.problem.build());
    let numerical = |e: pint_core::linalg::SingularMatrix| CliError::Numerical {
        stage: "assemble",
        message: format!("{e}"),
    };
    match (&config.method.one_step(), &config.method.multistep()) {
        (Some(tableau), _) => {
            let system = OneStepSystem::new(problem, tableau.clone(), config.dt, n_time, None)
                .map_err(numerical)?;
            Ok(Box::new(system))
        }
        (_, Some(method)) => {
            // r − 1 startup states come from an unconditionally stable
            // one-step integrator on the same grid.
            let startup = startup_tableau();
            let system = MultistepSystem::new(
                problem,
                method.clone(),
                config.dt,
                n_time,
                StartupSource::OneStep(&startup),
                None,
            )
            .map_err(numerical)?;
            Ok(Box::new(system))
        }
        _ => unreachable!("every MethodSpec is one-step or multistep"),
    }
}

/// The A-stable second-order tableau used to generate multistep seeds.
pub fn startup_tableau() -> pint_core::integrators::ButcherTableau {
    sdirk2((3.0 + 3f64.sqrt()) / 6.0, 0.5)
}

/// Run every alpha of the config and write `convergence.csv` (and the
/// optional SVG) into `out_dir`. A diverged run still writes its history,
/// then surfaces as a numerical error.
pub fn execute_run(config: &ExperimentConfig, out_dir: &Path) -> Result<RunOutcome, CliError> {
    let system = build_system(config)?;
    let reference = system.sequential_solve();
    let executor = ThreadPoolExecutor::new(config.workers);

    let mut runs = Vec::with_capacity(config.alphas.len());
    for &alpha in &config.alphas {
        let solver_config = solver_config_for(config, alpha);
        let (_, history) =
            iterate(system.as_ref(), &solver_config, Some(&reference), &executor)
                .map_err(map_solver_error)?;
        runs.push(ConvergenceRun { alpha, history });
    }

    fs::create_dir_all(out_dir).map_err(io_stage("create output directory"))?;
    let csv_path = out_dir.join("convergence.csv");
    fs::write(&csv_path, convergence_csv(config, &runs)).map_err(io_stage("write convergence.csv"))?;

    let svg_path = if config.emit_plots {
        let path = out_dir.join("convergence.svg");
        fs::write(&path, svg::convergence_chart(&runs)).map_err(io_stage("write convergence.svg"))?;
        Some(path)
    } else {
        None
    };

    if let Some(run) = runs.iter().find(|r| r.history.stop == StopReason::Divergence) {
        return Err(CliError::Numerical {
            stage: "iterate",
            message: format!(
                "alpha = {} diverged after {} sweeps (history written to {})",
                run.alpha,
                run.history.records.len() - 1,
                csv_path.display()
            ),
        });
    }
    Ok(RunOutcome { csv_path, svg_path, runs })
}

/// Human-readable stop reason for CLI summaries.
pub fn stop_label(stop: StopReason) -> &'static str {
    match stop {
        StopReason::ResidualTolerance => "residual tolerance",
        StopReason::MaxIterations => "max iterations",
        StopReason::Stagnation => "stagnation",
        StopReason::Divergence => "divergence",
    }
}

fn solver_config_for(config: &ExperimentConfig, alpha: f64) -> SolverConfig {
    SolverConfig {
        alpha,
        tol: config.tol,
        max_iterations: config.max_iterations,
        shifted_solver: config.shifted_solver,
        initial_guess: config.initial_guess,
        workers: config.workers,
    }
}

fn map_solver_error(e: SolverError) -> CliError {
    match e {
        SolverError::Singular(inner) => {
            CliError::Numerical { stage: "preconditioner", message: format!("{inner}") }
        }
        // A config asked for stage reduction on a system that has none.
        SolverError::StageReductionUnsupported => CliError::invalid(
            "shifted_solver",
            "stage_reduced needs a two-stage SDIRK one-step method",
        ),
    }
}

fn io_stage(stage: &'static str) -> impl Fn(std::io::Error) -> CliError {
    move |source| CliError::Io { stage, source }
}

/// 17-significant-digit decimal, the CSV number format.
fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}

fn metadata_block(config: &ExperimentConfig) -> String {
    let mut out = String::new();
    for (key, value) in config.metadata_pairs() {
        let _ = writeln!(out, "# {key} = {value}");
    }
    out
}

/// The convergence table: one row per (alpha, iteration), transformed error
/// blank when the problem has no eigentransform, bound = α/(1−α) throughout.
pub fn convergence_csv(config: &ExperimentConfig, runs: &[ConvergenceRun]) -> String {
    let mut out = metadata_block(config);
    out.push_str("alpha,iter,err_inf,transformed_err_inf,bound\n");
    for run in runs {
        let bound = run.alpha / (1.0 - run.alpha);
        for record in &run.history.records {
            let transformed = record.transformed_error_inf.map(sig17).unwrap_or_default();
            let err = record.error_inf.map(sig17).unwrap_or_default();
            let _ = writeln!(
                out,
                "{},{},{},{},{}",
                sig17(run.alpha),
                record.iteration,
                err,
                transformed,
                sig17(bound)
            );
        }
    }
    out
}

/// Artifacts and verdict of a stability-region scan.
#[derive(Debug)]
pub struct RegionOutcome {
    pub region_csv: PathBuf,
    pub spectrum_csv: Option<PathBuf>,
    /// Stability of the overlay spectrum, when an overlay was requested.
    pub overlay: Option<StabilityReport>,
}

/// `|R(z)|` for one-step methods, the maximal characteristic-root modulus
/// for multistep methods; `inf` at poles.
fn amplification_at(method: &MethodSpec, z: Complex64) -> Result<f64, CliError> {
    match (method.one_step(), method.multistep()) {
        (Some(tableau), _) => {
            Ok(tableau.stability_function(z).map(|r| r.norm()).unwrap_or(f64::INFINITY))
        }
        (_, Some(multistep)) => {
            let roots = multistep.characteristic_roots(z).map_err(|e| CliError::Numerical {
                stage: "stability-region",
                message: format!("characteristic roots at z = {z}: {e}"),
            })?;
            Ok(roots.iter().map(|s| s.norm()).fold(0.0, f64::max))
        }
        _ => unreachable!(),
    }
}

/// Scan the window and write `region.csv`; with an overlay, also write
/// `spectrum.csv` and judge stability on the problem's spectrum.
pub fn execute_region(region: &RegionConfig, out_dir: &Path) -> Result<RegionOutcome, CliError> {
    region.window.validate()?;
    if region.resolution < 2 {
        return Err(CliError::Usage("resolution must be at least 2 per axis".into()));
    }
    let Window { re_min, re_max, im_min, im_max } = region.window;
    let n = region.resolution;
    let step = |lo: f64, hi: f64, i: usize| lo + (hi - lo) * i as f64 / (n - 1) as f64;

    let mut csv = String::new();
    let _ = writeln!(csv, "# method = {}", method_label(&region.method));
    let _ = writeln!(csv, "# window = [{re_min}, {re_max}] x [{im_min}, {im_max}]");
    let _ = writeln!(csv, "# resolution = {n}");
    csv.push_str("re_z,im_z,magnitude\n");
    for j in 0..n {
        let im = step(im_min, im_max, j);
        for i in 0..n {
            let re = step(re_min, re_max, i);
            let mag = amplification_at(&region.method, Complex64::new(re, im))?;
            let _ = writeln!(csv, "{},{},{}", sig17(re), sig17(im), sig17(mag));
        }
    }
    fs::create_dir_all(out_dir).map_err(io_stage("create output directory"))?;
    let region_csv = out_dir.join("region.csv");
    fs::write(&region_csv, csv).map_err(io_stage("write region.csv"))?;

    let (spectrum_csv, overlay) = match &region.overlay {
        Some((problem_spec, dt)) => {
            let problem = problem_spec.build();
            let spectrum = problem.spectrum();
            let mut csv = String::from("re_z,im_z,magnitude\n");
            for lambda in spectrum {
                let z = Complex64::new(dt * lambda.re, dt * lambda.im);
                let mag = amplification_at(&region.method, z)?;
                let _ = writeln!(csv, "{},{},{}", sig17(z.re), sig17(z.im), sig17(mag));
            }
            let path = out_dir.join("spectrum.csv");
            fs::write(&path, csv).map_err(io_stage("write spectrum.csv"))?;

            let report = stability_verdict(&region.method, *dt, spectrum)?;
            (Some(path), Some(report))
        }
        None => (None, None),
    };
    Ok(RegionOutcome { region_csv, spectrum_csv, overlay })
}

/// Judge the method on a problem spectrum: `|R| ≤ 1` pointwise for one-step
/// methods, the characteristic root condition for multistep methods.
pub fn stability_verdict(
    method: &MethodSpec,
    dt: f64,
    spectrum: &[Complex64],
) -> Result<StabilityReport, CliError> {
    match (method.one_step(), method.multistep()) {
        (Some(tableau), _) => Ok(stability_on_spectrum(&tableau, dt, spectrum, STABILITY_TOL)),
        (_, Some(multistep)) => root_condition_on_spectrum(&multistep, dt, spectrum, STABILITY_TOL)
            .map_err(|e| CliError::Numerical {
                stage: "stability-check",
                message: format!("{e}"),
            }),
        _ => unreachable!(),
    }
}

fn method_label(method: &MethodSpec) -> String {
    match method {
        MethodSpec::Sdirk2 { gamma, b } => format!("sdirk2(gamma={gamma}, b={b})"),
        MethodSpec::Bdf { r } => format!("bdf{r}"),
        MethodSpec::AdamsMoulton4 => "adams_moulton4".into(),
    }
}

/// Floors and the fitted roundoff exponent of a sweep.
#[derive(Debug)]
pub struct SweepOutcome {
    pub floors_csv: PathBuf,
    /// `(alpha, floor)` in run order.
    pub floors: Vec<(f64, f64)>,
    /// Slope of ln(floor) against ln(1/alpha); `None` for a single alpha.
    pub exponent: Option<f64>,
}

/// Run every alpha to its floor (tolerance forced to zero) and write
/// `floors.csv`.
pub fn execute_sweep(config: &ExperimentConfig, out_dir: &Path) -> Result<SweepOutcome, CliError> {
    let mut floored = config.clone();
    floored.tol = Some(0.0);
    let outcome = execute_run(&floored, out_dir)?;

    let floors: Vec<(f64, f64)> = outcome.runs.iter().map(|r| (r.alpha, r.floor())).collect();
    let exponent = fit_floor_exponent(&floors);

    let mut csv = metadata_block(&floored);
    csv.push_str("alpha,floor,fitted_exponent\n");
    for &(alpha, floor) in &floors {
        let fitted = exponent.map(sig17).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{}", sig17(alpha), sig17(floor), fitted);
    }
    let floors_csv = out_dir.join("floors.csv");
    fs::write(&floors_csv, csv).map_err(io_stage("write floors.csv"))?;
    Ok(SweepOutcome { floors_csv, floors, exponent })
}

/// Least-squares slope of ln(floor) vs ln(1/alpha), i.e. the `p` in
/// `floor ≈ C·α^{−p}`. Needs two distinct alphas and positive floors.
fn fit_floor_exponent(floors: &[(f64, f64)]) -> Option<f64> {
    if floors.len() < 2 || floors.iter().any(|&(_, f)| !(f > 0.0)) {
        return None;
    }
    let points: Vec<(f64, f64)> =
        floors.iter().map(|&(alpha, floor)| ((1.0 / alpha).ln(), floor.ln())).collect();
    let n = points.len() as f64;
    let (sx, sy): (f64, f64) =
        points.iter().fold((0.0, 0.0), |(sx, sy), &(x, y)| (sx + x, sy + y));
    let (mx, my) = (sx / n, sy / n);
    let sxx: f64 = points.iter().map(|&(x, _)| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = points.iter().map(|&(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ProblemSpec;
    use pint_core::solver::InitialGuess;
    use pint_core::solver::ShiftedSolver;

    fn small_config() -> ExperimentConfig {
        ExperimentConfig {
            problem: ProblemSpec::AdvectionDiffusion { nu: 1e-2, nx: 8 },
            method: MethodSpec::Sdirk2 { gamma: 0.2, b: 0.5 },
            t_final: 1.0,
            dt: 0.1,
            alphas: vec![0.1],
            tol: None,
            max_iterations: 30,
            outputs: PathBuf::from("unused"),
            emit_plots: false,
            initial_guess: InitialGuess::Zero,
            shifted_solver: ShiftedSolver::Dense,
            workers: 1,
        }
    }

    #[test]
    fn run_writes_a_parsable_convergence_table() {
        let dir = tempfile::tempdir().unwrap();
        let outcome = execute_run(&small_config(), dir.path()).unwrap();
        let text = fs::read_to_string(&outcome.csv_path).unwrap();
        let mut lines = text.lines().skip_while(|l| l.starts_with('#'));
        assert_eq!(lines.next(), Some("alpha,iter,err_inf,transformed_err_inf,bound"));
        let first = lines.next().unwrap();
        let fields: Vec<&str> = first.split(',').collect();
        assert_eq!(fields.len(), 5);
        assert_eq!(fields[1], "0");
        let bound: f64 = fields[4].parse().unwrap();
        assert!((bound - 0.1 / 0.9).abs() < 1e-15);
        // Metadata describes the experiment, not the environment.
        assert!(text.contains("# nu = 0.01"));
        assert!(!text.contains("workers"));
    }

    #[test]
    fn rerunning_emits_identical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let first = execute_run(&small_config(), dir.path()).unwrap();
        let bytes_one = fs::read(&first.csv_path).unwrap();
        let second = execute_run(&small_config(), dir.path()).unwrap();
        let bytes_two = fs::read(&second.csv_path).unwrap();
        assert_eq!(bytes_one, bytes_two);
    }

    #[test]
    fn sweep_fits_the_floor_exponent() {
        // Synthetic floors C·α^{-2} must fit p = 2 exactly.
        let floors: Vec<(f64, f64)> =
            [0.2, 0.1, 0.05].iter().map(|&a| (a, 1e-15 / (a * a))).collect();
        let p = fit_floor_exponent(&floors).unwrap();
        assert!((p - 2.0).abs() < 1e-12, "{p}");
        assert_eq!(fit_floor_exponent(&floors[..1]), None);
    }

    #[test]
    fn region_scan_marks_the_origin_on_the_boundary() {
        let dir = tempfile::tempdir().unwrap();
        let region = RegionConfig {
            method: MethodSpec::Sdirk2 { gamma: 0.2, b: 0.5 },
            window: Window { re_min: -1.0, re_max: 1.0, im_min: -1.0, im_max: 1.0 },
            resolution: 3,
            overlay: Some((ProblemSpec::AdvectionDiffusion { nu: 1e-2, nx: 8 }, 0.1)),
            outputs: PathBuf::from("unused"),
        };
        let outcome = execute_region(&region, dir.path()).unwrap();
        let text = fs::read_to_string(&outcome.region_csv).unwrap();
        // R(0) = 1: the origin sits exactly on the stability boundary.
        let origin = text
            .lines()
            .find(|l| l.starts_with("0.0000000000000000e0,0.0000000000000000e0,"))
            .expect("origin row");
        assert!(origin.ends_with("1.0000000000000000e0"), "{origin}");
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 9);
        assert!(outcome.spectrum_csv.is_some());
        assert!(outcome.overlay.unwrap().stable);
    }

    #[test]
    fn divergence_reports_a_numerical_error_with_history_on_disk() {
        // BDF1 on a scalar with M = 1.2 and α·M^8 barely above 1: the sweep
        // grows ~9.5× per iteration.
        let config = ExperimentConfig {
            problem: ProblemSpec::Scalar { lambda_re: -1.0 / 6.0, lambda_im: 0.0 },
            method: MethodSpec::Bdf { r: 1 },
            t_final: 8.0,
            dt: 1.0,
            alphas: vec![0.26],
            tol: None,
            max_iterations: 20,
            outputs: PathBuf::from("unused"),
            emit_plots: false,
            initial_guess: InitialGuess::Zero,
            shifted_solver: ShiftedSolver::Dense,
            workers: 1,
        };
        let dir = tempfile::tempdir().unwrap();
        match execute_run(&config, dir.path()) {
            Err(CliError::Numerical { stage, message }) => {
                assert_eq!(stage, "iterate");
                assert!(message.contains("diverged"), "{message}");
            }
            other => panic!("expected divergence, got {other:?}"),
        }
        // The history was still written before the error surfaced.
        assert!(dir.path().join("convergence.csv").exists());
    }
}
