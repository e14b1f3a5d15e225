//! The preconditioned stationary iteration and its instrumentation.
//!
//! Given an all-at-once system `K u = b` and its α-circulant lift `P_α`
//! (see [`crate::all_at_once`]), the solver runs
//!
//! ```text
//!   u^{k+1} = u^k + P_α⁻¹ (b − K u^k),
//! ```
//!
//! where each `P_α⁻¹` application factors into three steps:
//!
//! 1. **analyze** — scale time block `t` by `α^{t/N}` and take a forward FFT
//!    along the time axis ([`crate::spectral::SpectralTransform`]);
//! 2. **frequency solves** — `N` independent `m×m` complex systems, one per
//!    frequency, dispatched through a [`FrequencyExecutor`] (this is the
//!    parallel-in-time step);
//! 3. **synthesize** — inverse FFT and unscale.
//!
//! The error contracts at worst like `α/(1−α)` per sweep (a small constant
//! factor above it for multistep lifts) until the roundoff of the scaled
//! transforms saturates; [`iterate`] records the residual and — when the
//! sequential solution is supplied — the error and its image in the spatial
//! operator's eigenbasis after every sweep, so that measured ratios can be
//! compared against that envelope, and stops on tolerance, stagnation,
//! divergence, or an iteration cap, whichever comes first.
//!
//! Frequency blocks are solved either from cached dense LU factors (the
//! default) or, for two-stage SDIRK one-step systems, by the stage-reduced
//! scheme ([`StageReduction`]) that never forms `R(ΔtA)`: it rewrites
//! `(I − λM)q = p` as a quadratic matrix polynomial in `X = ΔtA` and splits
//! that into two shifted solves `(a₀I + d_k X) w = r` through a 2×2
//! companion diagonalization with a free parameter `μ`.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;
// Float supplies the f64 math methods (sqrt, powf, …) that live in std but
// not in core; under `cfg(test)` the crate links std and the inherent
// methods shadow the trait's, leaving the import formally unused.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::all_at_once::{AllAtOnceSystem, StageReductionInputs};
use crate::linalg::{inf_norm, CMatrix, LuFactors, SingularMatrix};
use crate::problems::SpatialProblem;
use crate::spectral::{AlphaCirculant, SpectralTransform};
use crate::CVec;

/// How the per-frequency spatial systems are solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ShiftedSolver {
    /// Cache one dense LU per frequency block.
    #[default]
    Dense,
    /// Stage-reduced shifted solves (two-stage SDIRK one-step systems only).
    StageReduced,
}

/// The iterate the stationary iteration starts from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum InitialGuess {
    /// `u⁰ = 0`.
    #[default]
    Zero,
    /// Deterministic pseudo-random `u⁰` with entries uniform in `[0, 1)`
    /// (real parts; imaginary parts zero). Same seed, same iterate, on
    /// every platform.
    Random {
        /// Seed of the generator.
        seed: u64,
    },
}

/// Iteration parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Circulant weight `α ∈ (0, 1]`.
    pub alpha: f64,
    /// Absolute residual tolerance; `None` uses `1e-12 · ‖b‖∞`.
    pub tol: Option<f64>,
    /// Hard cap on the number of sweeps.
    pub max_iterations: usize,
    /// Frequency-block solver.
    pub shifted_solver: ShiftedSolver,
    /// Starting iterate.
    pub initial_guess: InitialGuess,
    /// Advisory worker count for executors (0 = let the executor choose);
    /// [`iterate`] itself does not spawn anything.
    pub workers: usize,
}

impl SolverConfig {
    /// Defaults for a given `α`: relative tolerance, 30 sweeps, dense
    /// frequency solves, zero initial iterate.
    pub fn new(alpha: f64) -> Self {
        Self {
            alpha,
            tol: None,
            max_iterations: 30,
            shifted_solver: ShiftedSolver::Dense,
            initial_guess: InitialGuess::Zero,
            workers: 0,
        }
    }
}

/// Why the iteration stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// Residual dropped below the tolerance.
    ResidualTolerance,
    /// The sweep cap was reached.
    MaxIterations,
    /// Three consecutive sweeps changed the error by less than 1% each —
    /// the roundoff floor of the diagonalization.
    Stagnation,
    /// The error grew more than tenfold across three consecutive sweeps.
    Divergence,
}

/// One row of the convergence history.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// Sweep index; `0` describes the initial iterate before any sweep.
    pub iteration: usize,
    /// `‖b − K u^k‖∞`.
    pub residual_inf: f64,
    /// `‖u^k − u*‖∞` against the supplied reference, when given.
    pub error_inf: Option<f64>,
    /// The same error measured in the spatial eigenbasis, when the problem
    /// carries an eigentransform.
    pub transformed_error_inf: Option<f64>,
}

/// Convergence history of one [`iterate`] run.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationHistory {
    /// Per-sweep records, starting with the initial iterate at index 0.
    pub records: Vec<IterationRecord>,
    /// Why the run ended.
    pub stop: StopReason,
}

/// Solver failure.
#[derive(Debug, Clone, PartialEq)]
pub enum SolverError {
    /// A frequency block could not be factored.
    Singular(SingularMatrix),
    /// The stage-reduced solver was requested for a system that does not
    /// expose a two-stage SDIRK structure.
    StageReductionUnsupported,
}

impl fmt::Display for SolverError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SolverError::Singular(e) => write!(f, "frequency block is singular: {e}"),
            SolverError::StageReductionUnsupported => {
                write!(f, "stage reduction needs a two-stage SDIRK one-step system")
            }
        }
    }
}

impl core::error::Error for SolverError {}

impl From<SingularMatrix> for SolverError {
    fn from(e: SingularMatrix) -> Self {
        SolverError::Singular(e)
    }
}

/// Runs the independent frequency solves of one preconditioner application.
///
/// `data` consists of `data.len() / chunk_len` consecutive chunks; the
/// implementation must call `job(index, chunk)` exactly once per chunk, in
/// any order and on any thread. The chunks are disjoint, so implementations
/// can hand them to worker threads without synchronization.
pub trait FrequencyExecutor: Sync {
    /// Dispatch `job` over all chunks.
    fn run_chunks(
        &self,
        data: &mut [Complex64],
        chunk_len: usize,
        job: &(dyn Fn(usize, &mut [Complex64]) + Sync),
    );
}

/// In-order, single-threaded executor; always available, `no_std`-safe.
#[derive(Debug, Clone, Copy, Default)]
pub struct SerialExecutor;

impl FrequencyExecutor for SerialExecutor {
    fn run_chunks(
        &self,
        data: &mut [Complex64],
        chunk_len: usize,
        job: &(dyn Fn(usize, &mut [Complex64]) + Sync),
    ) {
        for (k, chunk) in data.chunks_mut(chunk_len).enumerate() {
            job(k, chunk);
        }
    }
}

enum FrequencyBlocks {
    Dense(Vec<LuFactors>),
    StageReduced(StageReduction),
}

/// The block α-circulant preconditioner `P_α`, held in factored form:
/// the scaled-Fourier transform pair plus one solver per frequency.
pub struct Preconditioner {
    transform: SpectralTransform,
    block_len: usize,
    blocks: FrequencyBlocks,
}

impl Preconditioner {
    /// Factor `P_α` for a system. Dense mode LU-factors
    /// `Σ_i λ_i(k) T_i` for every frequency `k`; stage-reduced mode
    /// delegates to [`StageReduction`].
    pub fn new<S: AllAtOnceSystem + ?Sized>(
        system: &S,
        config: &SolverConfig,
    ) -> Result<Self, SolverError> {
        assert!(config.alpha > 0.0 && config.alpha <= 1.0, "alpha must lie in (0, 1]");
        let n = system.n_blocks();
        let m = system.block_len();
        let transform = SpectralTransform::new(config.alpha, n);

        let blocks = match config.shifted_solver {
            ShiftedSolver::Dense => {
                let terms = system.preconditioner_terms();
                let eigs: Vec<CVec> = terms
                    .iter()
                    .map(|(band, _)| {
                        AlphaCirculant::from_coefficients(config.alpha, band, n).eigenvalues()
                    })
                    .collect();
                let mut lus = Vec::with_capacity(n);
                for k in 0..n {
                    let mut block = CMatrix::zeros(m, m);
                    for (i, (_, t)) in terms.iter().enumerate() {
                        block.scaled_add(eigs[i][k], t);
                    }
                    lus.push(block.lu()?);
                }
                FrequencyBlocks::Dense(lus)
            }
            ShiftedSolver::StageReduced => {
                let inputs = system
                    .stage_reduction_inputs()
                    .ok_or(SolverError::StageReductionUnsupported)?;
                let lambdas = AlphaCirculant::shift(config.alpha, n).eigenvalues();
                FrequencyBlocks::StageReduced(StageReduction::new(&inputs, &lambdas)?)
            }
        };
        Ok(Self { transform, block_len: m, blocks })
    }

    /// Number of time blocks `N`.
    pub fn n_blocks(&self) -> usize {
        self.transform.n_time()
    }

    /// Spatial block length `m`.
    pub fn block_len(&self) -> usize {
        self.block_len
    }

    /// `v ← P_α⁻¹ v`: analyze, solve every frequency block through the
    /// executor, synthesize.
    pub fn apply_inverse(&self, v: &mut [Complex64], executor: &dyn FrequencyExecutor) {
        self.transform.analyze(v, self.block_len);
        match &self.blocks {
            FrequencyBlocks::Dense(lus) => {
                executor.run_chunks(v, self.block_len, &|k, chunk| {
                    lus[k].solve_in_place(chunk);
                });
            }
            FrequencyBlocks::StageReduced(red) => {
                executor.run_chunks(v, self.block_len, &|k, chunk| {
                    red.solve_in_place(k, chunk);
                });
            }
        }
        self.transform.synthesize(v, self.block_len);
    }
}

/// Per-frequency solver state of the stage-reduced scheme.
enum ReducedBlock {
    /// Generic case: two shifted solves joined by the 2×2 companion form.
    Quadratic {
        a: [Complex64; 3],
        mu: Complex64,
        /// Eigenvalues of the companion matrix: roots of `d² − a₁d + a₀a₂`.
        d: [Complex64; 2],
        /// LU factors of `a₀I + d_k X`.
        lus: [LuFactors; 2],
    },
    /// `a₂ ≈ 0`: one shifted solve `(a₀I + a₁X) p̃ = q̃`.
    Linear { lu: LuFactors },
    /// `a₂ ≈ a₁ ≈ 0`: scalar scaling by `1/a₀`.
    Scalar { a0: Complex64 },
    /// Companion eigenvectors too ill-conditioned for every trial `μ`:
    /// fall back to a dense LU of the assembled quadratic.
    DenseQuadratic { lu: LuFactors },
}

/// Result of a detailed stage-reduced solve, for verifying the reduction's
/// internal identities.
pub struct ReducedSolve {
    /// The solution `q` of `(I − λₖ M) q = p` (the reduction's `p̃`).
    pub q: CVec,
    /// The auxiliary variable `p†` of the 2×2 block form; `None` when a
    /// degenerate path (linear, scalar, dense fallback) was taken.
    pub p_dagger: Option<CVec>,
}

/// Stage-reduced frequency solver for two-stage SDIRK one-step systems.
///
/// Writing the stability function as `R = N/D` (see
/// [`crate::integrators::SdirkShape`]), the frequency block
/// `(I − λₖ R(X))`, `X = ΔtA`, inverts as `D(X) · Q_k(X)⁻¹` with the
/// quadratic `Q_k(X) = a₀I + a₁X + a₂X²`, `a_i = d_i − λₖ n_i`. The
/// quadratic solve is carried out through the block form
///
/// ```text
///   ( a₀ I₂ ⊗ I + W ⊗ X ) [p̃; p†] = [q̃; q̃],
///   W = [ a₁−μ            μ ]
///       [ a₁−μ−a₀a₂/μ     μ ],          μ ≠ 0 free,
/// ```
///
/// whose eigendecomposition splits it into the two shifted solves
/// `(a₀I + d_k X) w_k = r_k` — giving back `p̃ = μ(w₁ + w₂)` and the
/// auxiliary `p† = p̃ + (a₂/μ) X p̃`. `μ` is chosen per frequency to keep
/// the 2×2 eigenvector matrix well conditioned.
pub struct StageReduction {
    x: CMatrix,
    gamma: f64,
    blocks: Vec<ReducedBlock>,
}

/// Relative size below which a polynomial coefficient is treated as zero
/// when classifying a frequency block.
const DEGENERATE_COEFF_TOL: f64 = 1e-13;
/// Companion eigenvector condition number above which the dense quadratic
/// fallback is used.
const COMPANION_COND_LIMIT: f64 = 1e8;

impl StageReduction {
    /// Build the per-frequency solvers for the given SDIRK system and shift
    /// eigenvalues `λₖ`.
    pub fn new(
        inputs: &StageReductionInputs<'_>,
        lambdas: &[Complex64],
    ) -> Result<Self, SolverError> {
        let mut x = inputs.matrix.clone();
        x.scale(Complex64::new(inputs.dt, 0.0));
        let dcoef = inputs.shape.denominator();
        let ncoef = inputs.shape.numerator();
        let m = x.n_rows();

        let mut blocks = Vec::with_capacity(lambdas.len());
        for &lambda in lambdas {
            let a = [
                Complex64::new(dcoef[0], 0.0) - lambda * Complex64::new(ncoef[0], 0.0),
                Complex64::new(dcoef[1], 0.0) - lambda * Complex64::new(ncoef[1], 0.0),
                Complex64::new(dcoef[2], 0.0) - lambda * Complex64::new(ncoef[2], 0.0),
            ];
            let scale = a[0].norm().max(a[1].norm()).max(a[2].norm());
            let block = if a[2].norm() <= DEGENERATE_COEFF_TOL * scale {
                if a[1].norm() <= DEGENERATE_COEFF_TOL * scale {
                    ReducedBlock::Scalar { a0: a[0] }
                } else {
                    let mut mat = CMatrix::identity(m);
                    mat.scale(a[0]);
                    mat.scaled_add(a[1], &x);
                    ReducedBlock::Linear { lu: mat.lu()? }
                }
            } else {
                match Self::plan_quadratic(&a, &x)? {
                    Some(q) => q,
                    None => {
                        // Assemble a₀I + a₁X + a₂X² once and factor it.
                        let mut mat = x.matmul(&x);
                        mat.scale(a[2]);
                        mat.scaled_add(a[1], &x);
                        for i in 0..m {
                            *mat.at_mut(i, i) += a[0];
                        }
                        ReducedBlock::DenseQuadratic { lu: mat.lu()? }
                    }
                }
            };
            blocks.push(block);
        }
        Ok(Self { x, gamma: inputs.shape.gamma, blocks })
    }

    /// Try the companion split for one frequency; `None` if no trial `μ`
    /// gives an acceptably conditioned eigenvector matrix.
    fn plan_quadratic(a: &[Complex64; 3], x: &CMatrix) -> Result<Option<ReducedBlock>, SolverError> {
        // d² − a₁ d + a₀a₂ = 0.
        let half_a1 = a[1] * 0.5;
        let sq = (half_a1 * half_a1 - a[0] * a[2]).sqrt();
        let d = [half_a1 + sq, half_a1 - sq];

        let base = (a[0] * a[2]).norm().sqrt();
        if base == 0.0 {
            return Ok(None);
        }
        // Pick μ from a small grid around √|a₀a₂| by eigenvector condition.
        let mut best: Option<(f64, f64)> = None; // (cond, mu)
        for factor in [1.0, 0.25, 0.5, 2.0, 4.0] {
            let mu = factor * base;
            let cond = companion_cond(a, &d, mu);
            if best.is_none_or(|(c, _)| cond < c) {
                best = Some((cond, mu));
            }
        }
        let (cond, mu) = best.unwrap();
        if !cond.is_finite() || cond > COMPANION_COND_LIMIT {
            return Ok(None);
        }
        let mu = Complex64::new(mu, 0.0);
        let m = x.n_rows();
        let mut lus = Vec::with_capacity(2);
        for &dk in &d {
            let mut mat = x.clone();
            mat.scale(dk);
            for i in 0..m {
                *mat.at_mut(i, i) += a[0];
            }
            lus.push(mat.lu()?);
        }
        let lus: [LuFactors; 2] = match lus.try_into() {
            Ok(arr) => arr,
            Err(_) => unreachable!(),
        };
        Ok(Some(ReducedBlock::Quadratic { a: *a, mu, d, lus }))
    }

    /// The operator `X = ΔtA` the reduction works with.
    pub fn x(&self) -> &CMatrix {
        &self.x
    }

    /// Solve `(I − λₖ M) q = p` in place.
    pub fn solve_in_place(&self, k: usize, p: &mut [Complex64]) {
        let out = self.solve_detailed(k, p).q;
        p.copy_from_slice(&out);
    }

    /// Solve, also exposing the auxiliary variable of the 2×2 block form.
    pub fn solve_detailed(&self, k: usize, p: &[Complex64]) -> ReducedSolve {
        let m = self.x.n_rows();
        assert_eq!(p.len(), m);
        // q̃ = D(X) p = (I + γX)² p.
        let gamma = Complex64::new(self.gamma, 0.0);
        let mut tmp = vec![Complex64::ZERO; m];
        let mut q_tilde = p.to_vec();
        self.x.matvec(p, &mut tmp);
        for (q, t) in q_tilde.iter_mut().zip(&tmp) {
            *q += gamma * t;
        }
        let snapshot = q_tilde.clone();
        self.x.matvec(&snapshot, &mut tmp);
        for (q, t) in q_tilde.iter_mut().zip(&tmp) {
            *q += gamma * t;
        }

        match &self.blocks[k] {
            ReducedBlock::Scalar { a0 } => {
                for q in q_tilde.iter_mut() {
                    *q /= a0;
                }
                ReducedSolve { q: q_tilde, p_dagger: None }
            }
            ReducedBlock::Linear { lu } => {
                lu.solve_in_place(&mut q_tilde);
                ReducedSolve { q: q_tilde, p_dagger: None }
            }
            ReducedBlock::DenseQuadratic { lu } => {
                lu.solve_in_place(&mut q_tilde);
                ReducedSolve { q: q_tilde, p_dagger: None }
            }
            ReducedBlock::Quadratic { a, mu, d, lus } => {
                // V = [[μ, μ], [v₁, v₂]], vₖ = dₖ − a₁ + μ;
                // (V⁻¹ ⊗ I)[q̃; q̃] are scalar multiples of q̃.
                let v1 = d[0] - a[1] + mu;
                let v2 = d[1] - a[1] + mu;
                let det = mu * (v2 - v1);
                let c1 = (v2 - mu) / det;
                let c2 = (mu - v1) / det;

                let mut w1: CVec = q_tilde.iter().map(|q| c1 * q).collect();
                let mut w2: CVec = q_tilde.iter().map(|q| c2 * q).collect();
                lus[0].solve_in_place(&mut w1);
                lus[1].solve_in_place(&mut w2);

                let q: CVec = w1.iter().zip(&w2).map(|(x1, x2)| mu * (x1 + x2)).collect();
                let p_dagger: CVec =
                    w1.iter().zip(&w2).map(|(x1, x2)| v1 * x1 + v2 * x2).collect();
                ReducedSolve { q, p_dagger: Some(p_dagger) }
            }
        }
    }

    /// Quadratic coefficients `(a₀, a₁, a₂)` of frequency `k`, and the `μ`
    /// in use there (`None` when a degenerate path is planned).
    pub fn block_parameters(&self, k: usize) -> (Option<[Complex64; 3]>, Option<Complex64>) {
        match &self.blocks[k] {
            ReducedBlock::Quadratic { a, mu, .. } => (Some(*a), Some(*mu)),
            _ => (None, None),
        }
    }
}

/// 1-norm condition estimate of the 2×2 companion eigenvector matrix
/// `V = [[μ, μ], [d₁−a₁+μ, d₂−a₁+μ]]`.
fn companion_cond(a: &[Complex64; 3], d: &[Complex64; 2], mu: f64) -> f64 {
    let mu = Complex64::new(mu, 0.0);
    let v1 = d[0] - a[1] + mu;
    let v2 = d[1] - a[1] + mu;
    let det = (mu * (v2 - v1)).norm();
    if det == 0.0 {
        return f64::INFINITY;
    }
    let norm = (mu.norm() + v1.norm()).max(mu.norm() + v2.norm());
    let inv_norm = ((v2.norm() + mu.norm()).max(v1.norm() + mu.norm())) / det;
    norm * inv_norm
}

/// Measure a block error vector in the spatial operator's eigenbasis:
/// `‖(I_t ⊗ Q) err‖∞`, where `Q` is the problem's eigentransform. Returns
/// `None` when the problem has no transform.
pub fn error_in_eigencoords(
    err: &[Complex64],
    problem: &SpatialProblem,
    n_blocks: usize,
) -> Option<f64> {
    let transform = problem.eigentransform()?;
    let m = problem.dim();
    assert_eq!(err.len(), n_blocks * m, "error vector must hold n_blocks × m entries");
    let mut buf = vec![Complex64::ZERO; m];
    let mut worst = 0.0f64;
    for chunk in err.chunks(m) {
        buf.copy_from_slice(chunk);
        transform.apply(&mut buf);
        worst = worst.max(inf_norm(&buf));
    }
    Some(worst)
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn uniform_unit(state: &mut u64) -> f64 {
    // 53 high bits → uniform double in [0, 1).
    (splitmix64(state) >> 11) as f64 * (1.0 / 9_007_199_254_740_992.0)
}

/// Run the preconditioned stationary iteration on a system.
///
/// When `u_exact` is supplied (typically [`AllAtOnceSystem::sequential_solve`]),
/// every record carries the true error and — if the problem has an
/// eigentransform — the transformed error used by the convergence studies.
/// Stagnation and divergence are judged on the error when available, on the
/// residual otherwise.
///
/// For systems with purely real data the imaginary part every sweep picks up
/// is diagonalization roundoff; it is asserted small (≤ 1e-10 of the sweep's
/// correction) and truncated, so real problems stay exactly real.
pub fn iterate<S: AllAtOnceSystem + ?Sized>(
    system: &S,
    config: &SolverConfig,
    u_exact: Option<&[Complex64]>,
    executor: &dyn FrequencyExecutor,
) -> Result<(CVec, IterationHistory), SolverError> {
    let n = system.n_blocks();
    let m = system.block_len();
    let dim = n * m;
    let b = system.rhs();
    if let Some(ex) = u_exact {
        assert_eq!(ex.len(), dim, "reference solution has the wrong length");
    }
    let tol = config.tol.unwrap_or_else(|| 1e-12 * inf_norm(b));
    let preconditioner = Preconditioner::new(system, config)?;
    let real_data = data_is_real(system);

    let mut u = match config.initial_guess {
        InitialGuess::Zero => vec![Complex64::ZERO; dim],
        InitialGuess::Random { seed } => {
            let mut state = seed;
            (0..dim).map(|_| Complex64::new(uniform_unit(&mut state), 0.0)).collect()
        }
    };
    let mut ku = vec![Complex64::ZERO; dim];
    let mut r = vec![Complex64::ZERO; dim];
    let mut records: Vec<IterationRecord> = Vec::with_capacity(config.max_iterations + 1);

    let stop = loop {
        let k = records.len();
        system.apply(&u, &mut ku);
        for (ri, (bi, kui)) in r.iter_mut().zip(b.iter().zip(&ku)) {
            *ri = bi - kui;
        }
        let residual_inf = inf_norm(&r);

        let (error_inf, transformed_error_inf) = match u_exact {
            Some(ex) => {
                let diff: CVec = u.iter().zip(ex).map(|(ui, ei)| ui - ei).collect();
                let e = inf_norm(&diff);
                let te = error_in_eigencoords(&diff, system.problem(), n);
                (Some(e), te)
            }
            None => (None, None),
        };
        records.push(IterationRecord { iteration: k, residual_inf, error_inf, transformed_error_inf });

        if residual_inf <= tol {
            break StopReason::ResidualTolerance;
        }
        let metric =
            |rec: &IterationRecord| rec.error_inf.unwrap_or(rec.residual_inf);
        if records.len() >= 4 {
            let tail = &records[records.len() - 4..];
            if metric(&tail[3]) > 10.0 * metric(&tail[0]) {
                break StopReason::Divergence;
            }
            let flat = (1..4).all(|i| {
                let prev = metric(&tail[i - 1]);
                (metric(&tail[i]) - prev).abs() < 0.01 * prev
            });
            if flat {
                break StopReason::Stagnation;
            }
        }
        if k == config.max_iterations {
            break StopReason::MaxIterations;
        }

        preconditioner.apply_inverse(&mut r, executor);
        if real_data {
            let correction = inf_norm(&r);
            let imag = r.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            assert!(
                imag <= 1e-10 * correction.max(f64::MIN_POSITIVE),
                "imaginary leakage {imag:.3e} exceeds 1e-10 of the correction {correction:.3e}"
            );
            for z in r.iter_mut() {
                z.im = 0.0;
            }
        }
        for (ui, ri) in u.iter_mut().zip(&r) {
            *ui += ri;
        }
    };

    Ok((u, IterationHistory { records, stop }))
}

/// True when the right-hand side and the spatial operator carry no imaginary
/// parts, so exact iterates would stay real.
fn data_is_real<S: AllAtOnceSystem + ?Sized>(system: &S) -> bool {
    let matrix = system.problem().matrix();
    system.rhs().iter().all(|z| z.im == 0.0)
        && (0..matrix.n_rows()).all(|i| matrix.row(i).iter().all(|z| z.im == 0.0))
}
