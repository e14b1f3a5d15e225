//! Assembly of the all-at-once systems `K u = b` that couple every time step
//! of a discretization into one linear solve.
//!
//! For a one-step method with amplification `M = R(ΔtA)` and unknowns
//! `u = (y_1, …, y_{N_t})`, the system is block lower bidiagonal:
//!
//! ```text
//!   K = I ⊗ I − B ⊗ M,    B = subdiagonal-ones shift,
//!   row n:  y_n − M y_{n−1} = η_{n−1}        (y_0 folded into b).
//! ```
//!
//! For an `r`-step multistep method with rows
//! `Σ_j a_j y_{n+r−j} + Δt Σ_j b_j A y_{n+r−j} = Δt Σ_j b_j g_{n+r−j}` and
//! unknowns `u = (y_r, …, y_{N_t})` (`N = N_t − r + 1` blocks), it is block
//! lower banded:
//!
//! ```text
//!   K = B₁ ⊗ I + Δt·B₂ ⊗ A,
//! ```
//!
//! with `B₁, B₂` the lower-triangular Toeplitz matrices generated by the
//! bands `(a_0, …, a_r)` and `(b_0, …, b_r)`; seed values `y_0, …, y_{r−1}`
//! move to the right-hand side.
//!
//! Both systems implement [`AllAtOnceSystem`], which besides `apply`/`rhs`
//! exposes the *α-circulant lift* of the time coupling: the pairs
//! `(band, spatial factor)` such that replacing each Toeplitz factor with the
//! corresponding α-circulant yields the preconditioner `P_α`. `apply` costs
//! one spatial matvec per time block; nothing here is ever materialized as a
//! dense `Nm × Nm` matrix.

use alloc::sync::Arc;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::integrators::{ButcherTableau, MultistepMethod, SdirkShape, StageOperator};
use crate::linalg::{CMatrix, LuFactors, SingularMatrix};
use crate::problems::SpatialProblem;
use crate::CVec;

/// Everything the stage-reduced frequency solver needs from a system:
/// the SDIRK scalars, the step size, and the spatial operator itself
/// (the reduction works with `X = ΔtA` and never forms `R(ΔtA)`).
pub struct StageReductionInputs<'a> {
    /// Tableau scalars of the two-stage SDIRK method.
    pub shape: SdirkShape,
    /// Step size `Δt`.
    pub dt: f64,
    /// The spatial operator `A`.
    pub matrix: &'a CMatrix,
}

/// Source term `g(t)` of `y' + Ay = g`, sampled into a spatial buffer.
/// `None` means `g ≡ 0` (all the built-in experiments).
pub type Forcing<'a> = Option<&'a dyn Fn(f64, &mut [Complex64])>;

/// Where a multistep discretization gets its seed values `y_1, …, y_{r−1}`
/// (`y_0` always comes from the problem's initial state).
pub enum StartupSource<'a> {
    /// Caller-supplied states, e.g. sampled from a known exact solution.
    /// Must contain exactly `r − 1` vectors of the spatial dimension.
    Exact(Vec<CVec>),
    /// Integrate the first `r − 1` steps with a one-step method at the same
    /// step size.
    OneStep(&'a ButcherTableau),
}

/// Common face of the two assemblies, as consumed by the iteration.
pub trait AllAtOnceSystem {
    /// Number of time blocks `N` (the order of the circulant lift).
    fn n_blocks(&self) -> usize;
    /// Spatial block length `m`.
    fn block_len(&self) -> usize;
    /// Right-hand side `b`, length `N·m`.
    fn rhs(&self) -> &[Complex64];
    /// `out = K u`.
    fn apply(&self, u: &[Complex64], out: &mut [Complex64]);
    /// Solve `K u = b` by forward substitution in time (the sequential
    /// reference the iteration is measured against).
    fn sequential_solve(&self) -> CVec;
    /// The α-circulant lift of the preconditioner: pairs `(band, T)` such
    /// that `P_α = Σ_i C(α; band_i) ⊗ T_i`.
    fn preconditioner_terms(&self) -> Vec<(Vec<f64>, CMatrix)>;
    /// The spatial problem this system discretizes.
    fn problem(&self) -> &SpatialProblem;
    /// Inputs for the stage-reduced frequency solver, when this
    /// discretization supports it (two-stage SDIRK one-step systems).
    fn stage_reduction_inputs(&self) -> Option<StageReductionInputs<'_>> {
        None
    }
}

/// All-at-once system of a one-step method.
pub struct OneStepSystem {
    problem: Arc<SpatialProblem>,
    tableau: ButcherTableau,
    dt: f64,
    n_time: usize,
    amplification: CMatrix,
    rhs: CVec,
}

impl OneStepSystem {
    /// Assemble `K u = b` for `n_time ≥ 2` steps of size `dt`, starting from
    /// the problem's initial state.
    pub fn new(
        problem: Arc<SpatialProblem>,
        tableau: ButcherTableau,
        dt: f64,
        n_time: usize,
        forcing: Forcing<'_>,
    ) -> Result<Self, SingularMatrix> {
        assert!(n_time >= 2, "need at least two time steps");
        let m = problem.dim();
        let stage = StageOperator::new(&tableau, dt, problem.matrix())?;
        let amplification = stage.amplification_matrix(problem.matrix());

        // b_1 = M y_0 + η_0, b_n = η_{n−1}; η ≡ 0 without forcing.
        let mut rhs = vec![Complex64::ZERO; n_time * m];
        amplification.matvec(problem.initial_state(), &mut rhs[..m]);
        if let Some(g) = forcing {
            let s = tableau.stages();
            // Stage abscissae c_k = Σ_j Θ_{kj}.
            let c: Vec<f64> = (0..s).map(|k| (0..s).map(|j| tableau.theta(k, j)).sum()).collect();
            let mut g_stack = vec![Complex64::ZERO; s * m];
            for n in 0..n_time {
                let t_base = n as f64 * dt;
                for k in 0..s {
                    g(t_base + c[k] * dt, &mut g_stack[k * m..(k + 1) * m]);
                }
                let eta = stage.forcing_response(&g_stack);
                for (slot, e) in rhs[n * m..(n + 1) * m].iter_mut().zip(&eta) {
                    *slot += e;
                }
            }
        }
        Ok(Self { problem, tableau, dt, n_time, amplification, rhs })
    }

    /// The dense one-step amplification matrix `M = R(ΔtA)`.
    pub fn amplification(&self) -> &CMatrix {
        &self.amplification
    }

    /// The tableau this system was assembled from.
    pub fn tableau(&self) -> &ButcherTableau {
        &self.tableau
    }

    /// Step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }
}

impl AllAtOnceSystem for OneStepSystem {
    fn n_blocks(&self) -> usize {
        self.n_time
    }

    fn block_len(&self) -> usize {
        self.problem.dim()
    }

    fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let m = self.block_len();
        assert_eq!(u.len(), self.n_time * m);
        assert_eq!(out.len(), u.len());
        out[..m].copy_from_slice(&u[..m]);
        for n in 1..self.n_time {
            let (prev, cur) = (&u[(n - 1) * m..n * m], &mut out[n * m..(n + 1) * m]);
            self.amplification.matvec(prev, cur);
            for (o, ui) in cur.iter_mut().zip(&u[n * m..(n + 1) * m]) {
                *o = ui - *o;
            }
        }
    }

    fn sequential_solve(&self) -> CVec {
        let m = self.block_len();
        let mut u = self.rhs.clone();
        let mut prev = vec![Complex64::ZERO; m];
        for n in 1..self.n_time {
            self.amplification.matvec(&u[(n - 1) * m..n * m], &mut prev);
            for (slot, p) in u[n * m..(n + 1) * m].iter_mut().zip(&prev) {
                *slot += p;
            }
        }
        u
    }

    fn preconditioner_terms(&self) -> Vec<(Vec<f64>, CMatrix)> {
        // P_α = C(α; e₀) ⊗ I − C(α; e₁) ⊗ M: the identity lifts to itself,
        // the shift picks up the α-corner.
        let m = self.block_len();
        let mut minus_m = self.amplification.clone();
        minus_m.scale(Complex64::new(-1.0, 0.0));
        vec![(vec![1.0], CMatrix::identity(m)), (vec![0.0, 1.0], minus_m)]
    }

    fn problem(&self) -> &SpatialProblem {
        &self.problem
    }

    fn stage_reduction_inputs(&self) -> Option<StageReductionInputs<'_>> {
        Some(StageReductionInputs {
            shape: self.tableau.sdirk2_shape()?,
            dt: self.dt,
            matrix: self.problem.matrix(),
        })
    }
}

/// All-at-once system of a linear multistep method.
pub struct MultistepSystem {
    problem: Arc<SpatialProblem>,
    method: MultistepMethod,
    dt: f64,
    n_blocks: usize,
    rhs: CVec,
    seeds: Vec<CVec>,
}

impl MultistepSystem {
    /// Assemble `K u = b` for an `r`-step method with unknowns
    /// `y_r, …, y_{n_time}`; requires `n_time ≥ 2r` so the circulant lift
    /// has at least `r + 1` blocks.
    pub fn new(
        problem: Arc<SpatialProblem>,
        method: MultistepMethod,
        dt: f64,
        n_time: usize,
        startup: StartupSource<'_>,
        forcing: Forcing<'_>,
    ) -> Result<Self, SingularMatrix> {
        let r = method.steps();
        let m = problem.dim();
        assert!(n_time + 1 >= 2 * r + 1, "need at least r + 1 unknown blocks");
        let n_blocks = n_time - r + 1;

        // Seed states y_0, …, y_{r−1}.
        let mut seeds: Vec<CVec> = Vec::with_capacity(r);
        seeds.push(problem.initial_state().to_vec());
        match startup {
            StartupSource::Exact(states) => {
                assert_eq!(states.len(), r - 1, "need exactly r − 1 startup states");
                for s in &states {
                    assert_eq!(s.len(), m);
                }
                seeds.extend(states);
            }
            StartupSource::OneStep(tableau) => {
                let stage = StageOperator::new(tableau, dt, problem.matrix())?;
                let amp = stage.amplification_matrix(problem.matrix());
                let s = tableau.stages();
                let c: Vec<f64> =
                    (0..s).map(|k| (0..s).map(|j| tableau.theta(k, j)).sum()).collect();
                let mut g_stack = vec![Complex64::ZERO; s * m];
                for n in 0..r.saturating_sub(1) {
                    let mut next = vec![Complex64::ZERO; m];
                    amp.matvec(&seeds[n], &mut next);
                    if let Some(g) = forcing {
                        let t_base = n as f64 * dt;
                        for k in 0..s {
                            g(t_base + c[k] * dt, &mut g_stack[k * m..(k + 1) * m]);
                        }
                        for (slot, e) in next.iter_mut().zip(stage.forcing_response(&g_stack)) {
                            *slot += e;
                        }
                    }
                    seeds.push(next);
                }
            }
        }

        // b_n = Δt Σ_j b_j g(t_{n+r−j}) − Σ_{j>n} (a_j I + Δt b_j A) y_{n+r−j}.
        let mut rhs = vec![Complex64::ZERO; n_blocks * m];
        let mut a_seed = vec![Complex64::ZERO; m];
        for n in 0..n_blocks {
            let block = &mut rhs[n * m..(n + 1) * m];
            for j in (n + 1)..=r {
                let seed = &seeds[n + r - j];
                problem.matrix().matvec(seed, &mut a_seed);
                let (aj, bj) = (method.a()[j], method.b()[j]);
                for (slot, (y, ay)) in block.iter_mut().zip(seed.iter().zip(&a_seed)) {
                    *slot -= Complex64::new(aj, 0.0) * y + Complex64::new(dt * bj, 0.0) * ay;
                }
            }
            if let Some(g) = forcing {
                let mut g_sample = vec![Complex64::ZERO; m];
                for j in 0..=r {
                    let bj = method.b()[j];
                    if bj != 0.0 {
                        g((n + r - j) as f64 * dt, &mut g_sample);
                        for (slot, gs) in block.iter_mut().zip(&g_sample) {
                            *slot += Complex64::new(dt * bj, 0.0) * gs;
                        }
                    }
                }
            }
        }

        Ok(Self { problem, method, dt, n_blocks, rhs, seeds })
    }

    /// The multistep method in use.
    pub fn method(&self) -> &MultistepMethod {
        &self.method
    }

    /// Step size.
    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Seed states `y_0, …, y_{r−1}` actually used by the assembly.
    pub fn seeds(&self) -> &[CVec] {
        &self.seeds
    }

    /// LU factors of the head operator `a₀I + Δt b₀ A` (the matrix every
    /// sequential step solves against).
    fn head_factors(&self) -> Result<LuFactors, SingularMatrix> {
        let m = self.problem.dim();
        let (a0, b0) = (self.method.a()[0], self.method.b()[0]);
        let mut head = CMatrix::identity(m);
        head.scale(Complex64::new(a0, 0.0));
        head.scaled_add(Complex64::new(self.dt * b0, 0.0), self.problem.matrix());
        head.lu()
    }
}

impl AllAtOnceSystem for MultistepSystem {
    fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    fn block_len(&self) -> usize {
        self.problem.dim()
    }

    fn rhs(&self) -> &[Complex64] {
        &self.rhs
    }

    fn apply(&self, u: &[Complex64], out: &mut [Complex64]) {
        let m = self.block_len();
        let n = self.n_blocks;
        let r = self.method.steps();
        assert_eq!(u.len(), n * m);
        assert_eq!(out.len(), u.len());
        // One spatial matvec per block, then banded accumulation.
        let mut au = vec![Complex64::ZERO; n * m];
        for k in 0..n {
            let (src, dst) = (&u[k * m..(k + 1) * m], &mut au[k * m..(k + 1) * m]);
            self.problem.matrix().matvec(src, dst);
        }
        for x in out.iter_mut() {
            *x = Complex64::ZERO;
        }
        for nn in 0..n {
            let block = &mut out[nn * m..(nn + 1) * m];
            for j in 0..=r.min(nn) {
                let k = nn - j;
                let (aj, bj) = (self.method.a()[j], self.method.b()[j]);
                let (caj, cbj) = (Complex64::new(aj, 0.0), Complex64::new(self.dt * bj, 0.0));
                for (slot, (y, ay)) in block
                    .iter_mut()
                    .zip(u[k * m..(k + 1) * m].iter().zip(&au[k * m..(k + 1) * m]))
                {
                    *slot += caj * y + cbj * ay;
                }
            }
        }
    }

    fn sequential_solve(&self) -> CVec {
        let m = self.block_len();
        let n = self.n_blocks;
        let r = self.method.steps();
        let head = self.head_factors().expect("head operator a₀I + Δt b₀A is singular");
        let mut u = vec![Complex64::ZERO; n * m];
        let mut au = vec![Complex64::ZERO; n * m];
        let mut block = vec![Complex64::ZERO; m];
        for nn in 0..n {
            block.copy_from_slice(&self.rhs[nn * m..(nn + 1) * m]);
            for j in 1..=r.min(nn) {
                let k = nn - j;
                let (aj, bj) = (self.method.a()[j], self.method.b()[j]);
                let (caj, cbj) = (Complex64::new(aj, 0.0), Complex64::new(self.dt * bj, 0.0));
                for (slot, (y, ay)) in block
                    .iter_mut()
                    .zip(u[k * m..(k + 1) * m].iter().zip(&au[k * m..(k + 1) * m]))
                {
                    *slot -= caj * y + cbj * ay;
                }
            }
            head.solve_in_place(&mut block);
            u[nn * m..(nn + 1) * m].copy_from_slice(&block);
            let (src, dst) = (&u[nn * m..(nn + 1) * m], &mut au[nn * m..(nn + 1) * m]);
            self.problem.matrix().matvec(src, dst);
        }
        u
    }

    fn preconditioner_terms(&self) -> Vec<(Vec<f64>, CMatrix)> {
        // P_α = C₁(α) ⊗ I + C₂(α) ⊗ ΔtA.
        let m = self.block_len();
        let mut dt_a = self.problem.matrix().clone();
        dt_a.scale(Complex64::new(self.dt, 0.0));
        vec![
            (self.method.a().to_vec(), CMatrix::identity(m)),
            (self.method.b().to_vec(), dt_a),
        ]
    }

    fn problem(&self) -> &SpatialProblem {
        &self.problem
    }
}
