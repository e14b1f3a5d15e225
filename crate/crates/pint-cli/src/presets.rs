//! Shipped experiment presets.
//!
//! One preset per figure panel of the study this tool reproduces, plus a
//! roundoff sweep. Convergence presets run the preconditioned iteration to
//! its floor (`tol = 0`); region presets scan the stability function over a
//! window that contains both the method's stability boundary and the
//! spectrum overlay of the discretized problem.

use std::path::PathBuf;

use pint_core::solver::InitialGuess;

use crate::config::{ExperimentConfig, MethodSpec, ProblemSpec, Window};

/// A named, ready-to-run experiment.
#[derive(Debug, Clone, PartialEq)]
pub enum Preset {
    Convergence(ExperimentConfig),
    Region(RegionConfig),
}

/// Stability-region scan description.
#[derive(Debug, Clone, PartialEq)]
pub struct RegionConfig {
    pub method: MethodSpec,
    pub window: Window,
    /// Grid points per axis.
    pub resolution: usize,
    /// Problem and Δt whose spectrum `σ(ΔtA)` is emitted as overlay points.
    pub overlay: Option<(ProblemSpec, f64)>,
    pub outputs: PathBuf,
}

const GAMMA_THIRD_ORDER: f64 = 0.788_675_134_594_812_8; // (3 + √3)/6

fn sdirk_gamma02() -> MethodSpec {
    MethodSpec::Sdirk2 { gamma: 0.2, b: 0.5 }
}

fn sdirk_third_order() -> MethodSpec {
    MethodSpec::Sdirk2 { gamma: GAMMA_THIRD_ORDER, b: 0.5 }
}

/// The diffusive (ν = 1e-3) and advection-dominated (ν = 2e-4) panels share
/// everything but ν and the tableau.
fn one_step_run(name: &str, nu: f64, method: MethodSpec) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::AdvectionDiffusion { nu, nx: 100 },
        method,
        t_final: 10.0,
        dt: 0.02,
        alphas: vec![0.1, 0.01],
        tol: Some(0.0), // run past the tolerance regime, down to the floor
        max_iterations: 30,
        outputs: PathBuf::from(format!("pint-output/{name}")),
        emit_plots: false,
        initial_guess: InitialGuess::Zero,
        shifted_solver: pint_core::solver::ShiftedSolver::Dense,
        workers: 1,
    }
}

/// The multistep panels: T = 8, Δt = Δx = 1/128, ν = 1e-3, started from a
/// seeded random iterate so the error has energy in every Fourier mode.
fn multistep_run(name: &str, method: MethodSpec, max_iterations: usize) -> ExperimentConfig {
    ExperimentConfig {
        problem: ProblemSpec::AdvectionDiffusion { nu: 1e-3, nx: 128 },
        method,
        t_final: 8.0,
        dt: 1.0 / 128.0,
        alphas: vec![0.1, 0.01],
        tol: Some(0.0),
        max_iterations,
        outputs: PathBuf::from(format!("pint-output/{name}")),
        emit_plots: false,
        initial_guess: InitialGuess::Random { seed: 0 },
        shifted_solver: pint_core::solver::ShiftedSolver::Dense,
        workers: 1,
    }
}

fn one_step_region(name: &str, nu: f64) -> RegionConfig {
    RegionConfig {
        method: sdirk_gamma02(),
        window: Window { re_min: -1.0, re_max: 2.0, im_min: -3.0, im_max: 3.0 },
        resolution: 121,
        overlay: Some((ProblemSpec::AdvectionDiffusion { nu, nx: 100 }, 0.02)),
        outputs: PathBuf::from(format!("pint-output/{name}")),
    }
}

fn multistep_region(name: &str, method: MethodSpec) -> RegionConfig {
    RegionConfig {
        method,
        window: Window { re_min: -1.0, re_max: 2.0, im_min: -2.0, im_max: 2.0 },
        resolution: 121,
        overlay: Some((ProblemSpec::AdvectionDiffusion { nu: 1e-3, nx: 128 }, 1.0 / 128.0)),
        outputs: PathBuf::from(format!("pint-output/{name}")),
    }
}

/// Look a preset up by name.
pub fn preset(name: &str) -> Option<Preset> {
    let preset = match name {
        "fig2_1_left" => Preset::Region(one_step_region(name, 1e-3)),
        "fig2_1_right" => Preset::Region(one_step_region(name, 2e-4)),
        "fig2_2_left" => Preset::Convergence(one_step_run(name, 1e-3, sdirk_gamma02())),
        "fig2_2_right" => Preset::Convergence(one_step_run(name, 2e-4, sdirk_third_order())),
        "fig3_1_left" => Preset::Region(multistep_region(name, MethodSpec::Bdf { r: 4 })),
        "fig3_1_right" => Preset::Region(multistep_region(name, MethodSpec::AdamsMoulton4)),
        "fig3_2_left" => Preset::Convergence(multistep_run(name, MethodSpec::AdamsMoulton4, 30)),
        "fig3_2_right" => Preset::Convergence(multistep_run(name, MethodSpec::Bdf { r: 4 }, 30)),
        "fig3_3" => Preset::Convergence(multistep_run(name, MethodSpec::Bdf { r: 4 }, 6)),
        "roundoff_sweep" => {
            let mut config = one_step_run(name, 1e-3, sdirk_gamma02());
            config.alphas = vec![0.2, 0.1, 0.05, 0.01];
            Preset::Convergence(config)
        }
        _ => return None,
    };
    Some(preset)
}

/// All preset names with a one-line description, in listing order.
pub fn preset_names() -> Vec<(&'static str, &'static str)> {
    vec![
        ("fig2_1_left", "stability region of sdirk2(0.2, 1/2) with the nu=1e-3 spectrum overlay"),
        ("fig2_1_right", "same region with the nu=2e-4 spectrum overlay (unstable points)"),
        ("fig2_2_left", "one-step convergence, nu=1e-3, sdirk2(0.2, 1/2), alpha in {0.1, 0.01}"),
        ("fig2_2_right", "one-step convergence, nu=2e-4, sdirk2((3+sqrt(3))/6, 1/2)"),
        ("fig3_1_left", "stability region of BDF4 with the multistep-grid spectrum overlay"),
        ("fig3_1_right", "stability region of the modified Adams-Moulton method"),
        ("fig3_2_left", "multistep convergence, Adams-Moulton, alpha in {0.1, 0.01}"),
        ("fig3_2_right", "multistep convergence, BDF4, alpha in {0.1, 0.01}"),
        ("fig3_3", "first six BDF4 iterations in detail"),
        ("roundoff_sweep", "one-step floors for alpha in {0.2, 0.1, 0.05, 0.01}"),
    ]
}
