//! `pint` — run the parallel-in-time experiments from the command line.

use std::env;
use std::fs;
use std::path::{Path, PathBuf};
use std::process;

use clap::{Args, Parser, Subcommand};

use pint_cli::config::parse_alphas;
use pint_cli::runner::{self, stop_label, ConvergenceRun};
use pint_cli::{preset, preset_names, CliError, ExperimentConfig, MethodSpec, Preset, RegionConfig, Window};

#[derive(Parser)]
#[command(
    name = "pint",
    version,
    about = "Block alpha-circulant preconditioned all-at-once time stepping"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a convergence experiment and write convergence.csv.
    Run(RunArgs),
    /// Scan |R(z)| (or the worst characteristic root) over a window and
    /// write region.csv, plus spectrum.csv when an overlay is requested.
    StabilityRegion(RegionArgs),
    /// Iterate every alpha down to its roundoff floor and write floors.csv.
    /// Defaults to the `roundoff_sweep` preset.
    RoundoffSweep(RunArgs),
    /// List the built-in experiment presets.
    ListPresets,
}

#[derive(Args)]
struct RunArgs {
    /// Built-in experiment name (see `pint list-presets`).
    #[arg(long, conflicts_with = "config")]
    preset: Option<String>,
    /// Path to a `key = value` experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override the alpha list (comma-separated, each in (0, 1)).
    #[arg(long)]
    alpha: Option<String>,
    /// Override the absolute residual tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Override the sweep cap.
    #[arg(long)]
    max_iterations: Option<usize>,
    /// Threads for the frequency solves (0 = one per core). Changes wall
    /// time only, never the numbers.
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory (wins over PINT_OUTPUT_DIR and the config).
    #[arg(long)]
    output: Option<PathBuf>,
    /// Also write an SVG convergence chart.
    #[arg(long)]
    emit_plots: bool,
}

#[derive(Args)]
struct RegionArgs {
    /// Built-in region name (see `pint list-presets`).
    #[arg(long)]
    preset: Option<String>,
    /// sdirk2 | bdf | adams_moulton4 (manual scan, instead of --preset).
    #[arg(long, conflicts_with = "preset")]
    method: Option<String>,
    /// Diagonal stage coefficient for sdirk2.
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Second weight for sdirk2.
    #[arg(long, allow_negative_numbers = true)]
    b: Option<f64>,
    /// Step count for bdf.
    #[arg(long)]
    r: Option<usize>,
    #[arg(long, default_value_t = -1.0, allow_negative_numbers = true)]
    re_min: f64,
    #[arg(long, default_value_t = 2.0, allow_negative_numbers = true)]
    re_max: f64,
    #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
    im_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    im_max: f64,
    /// Grid points per axis.
    #[arg(long, default_value_t = 121)]
    resolution: usize,
    /// Overlay: diffusion coefficient of the advection–diffusion spectrum.
    #[arg(long)]
    nu: Option<f64>,
    /// Overlay: spatial grid size.
    #[arg(long)]
    nx: Option<usize>,
    /// Overlay: time step scaling the spectrum.
    #[arg(long)]
    dt: Option<f64>,
    /// Output directory (wins over PINT_OUTPUT_DIR).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = dispatch(cli) {
        eprintln!("pint: {error}");
        process::exit(error.exit_code());
    }
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            let config = load_run_config(&args, None)?;
            let out_dir = output_dir(args.output.as_deref(), &config.outputs);
            let outcome = runner::execute_run(&config, &out_dir)?;
            for run in &outcome.runs {
                println!("{}", run_summary(run));
            }
            println!("wrote {}", outcome.csv_path.display());
            if let Some(svg) = &outcome.svg_path {
                println!("wrote {}", svg.display());
            }
            Ok(())
        }
        Command::RoundoffSweep(args) => {
            let config = load_run_config(&args, Some("roundoff_sweep"))?;
            let out_dir = output_dir(args.output.as_deref(), &config.outputs);
            let outcome = runner::execute_sweep(&config, &out_dir)?;
            for &(alpha, floor) in &outcome.floors {
                println!("alpha = {alpha}: floor = {floor:.3e}");
            }
            if let Some(p) = outcome.exponent {
                println!("fitted exponent: floor ~ alpha^-{p:.3}");
            }
            println!("wrote {}", outcome.floors_csv.display());
            Ok(())
        }
        Command::StabilityRegion(args) => {
            let region = load_region_config(&args)?;
            let out_dir = output_dir(args.output.as_deref(), &region.outputs);
            let outcome = runner::execute_region(&region, &out_dir)?;
            println!("wrote {}", outcome.region_csv.display());
            if let Some(path) = &outcome.spectrum_csv {
                println!("wrote {}", path.display());
            }
            if let Some(report) = &outcome.overlay {
                let verdict = if report.stable { "stable" } else { "UNSTABLE" };
                match &report.worst {
                    Some(worst) => println!(
                        "spectrum: {verdict} (worst amplification {:.6} at z = {:.6} + {:.6}i)",
                        worst.amplification, worst.z.re, worst.z.im
                    ),
                    None => println!("spectrum: {verdict} (empty spectrum)"),
                }
                if report.multiple_boundary_root {
                    println!("spectrum: repeated characteristic root on the unit circle");
                }
            }
            Ok(())
        }
        Command::ListPresets => {
            for (name, description) in preset_names() {
                println!("{name:<16} {description}");
            }
            Ok(())
        }
    }
}

fn run_summary(run: &ConvergenceRun) -> String {
    let last = run.history.records.last().expect("history has the initial record");
    let sweeps = run.history.records.len() - 1;
    let err = match last.error_inf {
        Some(e) => format!("err {e:.3e}"),
        None => format!("residual {:.3e}", last.residual_inf),
    };
    format!(
        "alpha = {}: {sweeps} sweeps, final {err}, stopped on {}",
        run.alpha,
        stop_label(run.history.stop)
    )
}

/// Resolve a convergence config from --preset, --config, or the
/// subcommand's default preset, then apply the flag overrides.
fn load_run_config(
    args: &RunArgs,
    default_preset: Option<&str>,
) -> Result<ExperimentConfig, CliError> {
    let mut config = match (&args.preset, &args.config) {
        (Some(name), _) => convergence_preset(name)?,
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|source| CliError::Io { stage: "read config", source })?;
            ExperimentConfig::parse(&text)?
        }
        (None, None) => match default_preset {
            Some(name) => convergence_preset(name)?,
            None => return Err(CliError::Usage("pass --preset NAME or --config FILE".into())),
        },
    };
    if let Some(alpha) = &args.alpha {
        config.alphas = parse_alphas(alpha)?;
    }
    if let Some(tol) = args.tol {
        if tol < 0.0 {
            return Err(CliError::invalid("tol", "must be nonnegative"));
        }
        config.tol = Some(tol);
    }
    if let Some(max_iterations) = args.max_iterations {
        if max_iterations == 0 {
            return Err(CliError::invalid("max_iterations", "must be at least 1"));
        }
        config.max_iterations = max_iterations;
    }
    if let Some(workers) = args.workers {
        config.workers = workers;
    }
    if args.emit_plots {
        config.emit_plots = true;
    }
    Ok(config)
}

fn convergence_preset(name: &str) -> Result<ExperimentConfig, CliError> {
    match preset(name) {
        Some(Preset::Convergence(config)) => Ok(config),
        Some(Preset::Region(_)) => Err(CliError::Usage(format!(
            "preset `{name}` is a stability-region scan; use `pint stability-region --preset {name}`"
        ))),
        None => Err(CliError::UnknownPreset(name.into())),
    }
}

fn load_region_config(args: &RegionArgs) -> Result<RegionConfig, CliError> {
    if let Some(name) = &args.preset {
        return match preset(name) {
            Some(Preset::Region(region)) => Ok(region),
            Some(Preset::Convergence(_)) => Err(CliError::Usage(format!(
                "preset `{name}` is a convergence run; use `pint run --preset {name}`"
            ))),
            None => Err(CliError::UnknownPreset(name.into())),
        };
    }
    let method = match args.method.as_deref() {
        Some("sdirk2") => MethodSpec::Sdirk2 {
            gamma: args.gamma.ok_or_else(|| CliError::MissingKey("gamma".into()))?,
            b: args.b.ok_or_else(|| CliError::MissingKey("b".into()))?,
        },
        Some("bdf") => {
            MethodSpec::Bdf { r: args.r.ok_or_else(|| CliError::MissingKey("r".into()))? }
        }
        Some("adams_moulton4") => MethodSpec::AdamsMoulton4,
        Some(other) => {
            return Err(CliError::invalid(
                "method",
                format!("`{other}` is not sdirk2, bdf, or adams_moulton4"),
            ))
        }
        None => return Err(CliError::Usage("pass --preset NAME or --method NAME".into())),
    };
    let overlay = match (args.nu, args.nx, args.dt) {
        (Some(nu), Some(nx), Some(dt)) => {
            Some((pint_cli::config::ProblemSpec::AdvectionDiffusion { nu, nx }, dt))
        }
        (None, None, None) => None,
        _ => {
            return Err(CliError::Usage(
                "an overlay needs all of --nu, --nx, and --dt".into(),
            ))
        }
    };
    Ok(RegionConfig {
        method,
        window: Window {
            re_min: args.re_min,
            re_max: args.re_max,
            im_min: args.im_min,
            im_max: args.im_max,
        },
        resolution: args.resolution,
        overlay,
        outputs: PathBuf::from("pint-output"),
    })
}

/// Output directory precedence: `--output` flag, then `PINT_OUTPUT_DIR`,
/// then the config's `outputs`.
fn output_dir(flag: Option<&Path>, config_outputs: &Path) -> PathBuf {
    if let Some(path) = flag {
        return path.to_path_buf();
    }
    if let Some(path) = env::var_os("PINT_OUTPUT_DIR") {
        return PathBuf::from(path);
    }
    config_outputs.to_path_buf()
}
