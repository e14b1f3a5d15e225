//! Time integrators for `y' + A y = g` and their stability diagnostics.
//!
//! Two families are supported, matching the two all-at-once assemblies:
//!
//! * **Diagonally implicit Runge–Kutta** one-step methods, described by a
//!   [`ButcherTableau`]. A step is `y_{n+1} = R(ΔtA) y_n + η_n` where the
//!   stability function `R(z) = 1 − z bᵀ(I + zΘ)⁻¹𝟙` is the rational
//!   amplification of the method applied to `y' + λy = 0` at `z = Δtλ`.
//! * **Linear multistep** methods, described by coefficient rows
//!   `Σ_j a_j y_{n+r−j} + Δt Σ_j b_j A y_{n+r−j} = Δt Σ_j b_j g_{n+r−j}`
//!   ([`MultistepMethod`]), with stability judged through the generalized
//!   characteristic polynomial `Σ_j (a_j + z b_j) s^{r−j}`.
//!
//! Both judgments are *spectrum-based*: rather than assuming normality or
//! quoting stability-region folklore, [`stability_on_spectrum`] and
//! [`root_condition_on_spectrum`] evaluate the amplification at every scaled
//! eigenvalue `z = Δtλ` of the actual spatial operator and report the worst
//! offender. For the convection-dominated problems in this crate that
//! distinction is the whole story: the same tableau can pass on one spectrum
//! and fail on another.

use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;

use crate::linalg::{CMatrix, LuFactors, SingularMatrix};
use crate::roots::{polynomial_roots, RootsError};
use crate::CVec;

/// Pairwise separation below which two near-unit-modulus characteristic
/// roots are treated as a multiple boundary root (a root-condition failure,
/// since such roots admit polynomial error growth).
pub const BOUNDARY_SEPARATION_TOL: f64 = 1e-7;

/// Butcher tableau of a diagonally implicit Runge–Kutta method: stage matrix
/// `Θ` (lower triangular, row-major) and weight row `bᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct ButcherTableau {
    stages: usize,
    theta: Vec<f64>,
    weights: Vec<f64>,
}

impl ButcherTableau {
    /// Build from a row-major `s×s` stage matrix and `s` weights.
    pub fn new(theta: Vec<f64>, weights: Vec<f64>) -> Self {
        let stages = weights.len();
        assert!(stages > 0, "tableau needs at least one stage");
        assert_eq!(theta.len(), stages * stages, "stage matrix must be s×s");
        Self { stages, theta, weights }
    }

    /// Number of stages `s`.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Stage coefficient `Θ[i][j]`.
    pub fn theta(&self, i: usize, j: usize) -> f64 {
        self.theta[i * self.stages + j]
    }

    /// Weight row `bᵀ`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Stability function `R(z) = 1 − z bᵀ (I + zΘ)⁻¹ 𝟙`: the factor by
    /// which one step multiplies a mode `y' + λy = 0` with `z = Δtλ`.
    ///
    /// Returns `None` where `I + zΘ` is singular (a pole of `R`).
    pub fn stability_function(&self, z: Complex64) -> Option<Complex64> {
        let s = self.stages;
        let m = CMatrix::from_fn(s, s, |i, j| {
            let e = if i == j { Complex64::ONE } else { Complex64::ZERO };
            e + z * Complex64::new(self.theta(i, j), 0.0)
        });
        let lu = m.lu().ok()?;
        let mut x = vec![Complex64::ONE; s];
        lu.solve_in_place(&mut x);
        let dot: Complex64 = self
            .weights
            .iter()
            .zip(&x)
            .map(|(&b, &xi)| Complex64::new(b, 0.0) * xi)
            .sum();
        Some(Complex64::ONE - z * dot)
    }

    /// Recognize a two-stage SDIRK tableau (`Θ = [[γ, 0], [γ̃, γ]]`) and
    /// return its defining scalars; `None` for any other shape.
    pub fn sdirk2_shape(&self) -> Option<SdirkShape> {
        if self.stages != 2 || self.theta(0, 1) != 0.0 || self.theta(0, 0) != self.theta(1, 1) {
            return None;
        }
        Some(SdirkShape {
            gamma: self.theta(0, 0),
            gamma_tilde: self.theta(1, 0),
            b1: self.weights[0],
            b2: self.weights[1],
        })
    }
}

/// The defining parameters of a two-stage SDIRK tableau
/// `Θ = [[γ, 0], [γ̃, γ]]`, `bᵀ = (b₁, b₂)`, as recovered by
/// [`ButcherTableau::sdirk2_shape`]. The stage-reduced frequency solver
/// needs these scalars rather than the matrix form: the stability function
/// is the rational `R(z) = N(z)/D(z)` with
///
/// ```text
///   D(z) = γ²z² + 2γz + 1,
///   N(z) = (γ² − (b₁+b₂)γ + b₂γ̃)z² + (2γ − (b₁+b₂))z + 1.
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SdirkShape {
    /// Diagonal stage coefficient `γ`.
    pub gamma: f64,
    /// Subdiagonal stage coefficient `γ̃`.
    pub gamma_tilde: f64,
    /// First weight `b₁`.
    pub b1: f64,
    /// Second weight `b₂`.
    pub b2: f64,
}

impl SdirkShape {
    /// Coefficients `(d₀, d₁, d₂)` of the stability denominator `D`.
    pub fn denominator(&self) -> [f64; 3] {
        [1.0, 2.0 * self.gamma, self.gamma * self.gamma]
    }

    /// Coefficients `(n₀, n₁, n₂)` of the stability numerator `N`.
    pub fn numerator(&self) -> [f64; 3] {
        let bs = self.b1 + self.b2;
        [
            1.0,
            2.0 * self.gamma - bs,
            self.gamma * self.gamma - bs * self.gamma + self.b2 * self.gamma_tilde,
        ]
    }
}

/// Two-stage singly diagonally implicit Runge–Kutta family, parameterized by
/// the diagonal entry `γ` and the first weight `b₁`:
///
/// ```text
///   Θ = [ γ   0 ]      bᵀ = (b₁, 1 − b₁),      γ̃ = (1/2 − γ) / (1 − b₁),
///       [ γ̃   γ ]
/// ```
///
/// second-order for every admissible `(γ, b₁)` and A-stable iff `γ ≥ 1/4`.
pub fn sdirk2(gamma: f64, b1: f64) -> ButcherTableau {
    assert!(b1 != 1.0, "b₁ = 1 leaves the second stage weightless");
    let gamma_tilde = (0.5 - gamma) / (1.0 - b1);
    ButcherTableau::new(vec![gamma, 0.0, gamma_tilde, gamma], vec![b1, 1.0 - b1])
}

/// Linear multistep method with rows
/// `Σ_{j=0}^r a_j y_{n+r−j} + Δt Σ_j b_j A y_{n+r−j} = Δt Σ_j b_j g_{n+r−j}`
/// (`a_0` multiplies the newest value; normalization `a_0 = 1`).
#[derive(Debug, Clone, PartialEq)]
pub struct MultistepMethod {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl MultistepMethod {
    /// Build from coefficient rows `(a_0, …, a_r)`, `(b_0, …, b_r)`.
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Self {
        assert_eq!(a.len(), b.len(), "coefficient rows must have equal length");
        assert!(a.len() >= 2, "a multistep method needs r ≥ 1");
        assert!(a[0] != 0.0, "leading coefficient a₀ must be nonzero");
        Self { a, b }
    }

    /// Backward differentiation formula of order `r ∈ 1..=4` (the
    /// zero-stable range used by the experiments).
    pub fn bdf(r: usize) -> Self {
        match r {
            1 => Self::new(vec![1.0, -1.0], vec![1.0, 0.0]),
            2 => Self::new(vec![1.0, -4.0 / 3.0, 1.0 / 3.0], vec![2.0 / 3.0, 0.0, 0.0]),
            3 => Self::new(
                vec![1.0, -18.0 / 11.0, 9.0 / 11.0, -2.0 / 11.0],
                vec![6.0 / 11.0, 0.0, 0.0, 0.0],
            ),
            4 => Self::new(
                vec![1.0, -48.0 / 25.0, 36.0 / 25.0, -16.0 / 25.0, 3.0 / 25.0],
                vec![12.0 / 25.0, 0.0, 0.0, 0.0, 0.0],
            ),
            _ => panic!("BDF{r} is not in the supported range 1..=4"),
        }
    }

    /// The four-step implicit method with
    /// `y_{n+1} − y_n + ΔtA(2/3·y_{n+1} + 5/12·y_{n−1} − 1/12·y_{n−3}) = 0`,
    /// an Adams–Moulton-type scheme whose generating polynomial has three
    /// zero roots alongside the principal root.
    pub fn adams_moulton4() -> Self {
        Self::new(
            vec![1.0, -1.0, 0.0, 0.0, 0.0],
            vec![2.0 / 3.0, 0.0, 5.0 / 12.0, 0.0, -1.0 / 12.0],
        )
    }

    /// Number of steps `r`.
    pub fn steps(&self) -> usize {
        self.a.len() - 1
    }

    /// Coefficients `(a_0, …, a_r)` of the generating polynomial `ρ`.
    pub fn a(&self) -> &[f64] {
        &self.a
    }

    /// Coefficients `(b_0, …, b_r)` of the generating polynomial `σ`.
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Roots of the generalized characteristic polynomial
    /// `p(s; z) = Σ_j (a_j + z b_j) s^{r−j}` at a given `z = Δtλ`.
    pub fn characteristic_roots(&self, z: Complex64) -> Result<CVec, RootsError> {
        let r = self.steps();
        // Ascending powers: coefficient of s^k is a_{r−k} + z·b_{r−k}.
        let coeffs: CVec = (0..=r)
            .map(|k| Complex64::new(self.a[r - k], 0.0) + z * Complex64::new(self.b[r - k], 0.0))
            .collect();
        polynomial_roots(&coeffs)
    }
}

/// Worst amplification over a scaled spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorstPoint {
    /// The scaled eigenvalue `z = Δtλ` where it occurred.
    pub z: Complex64,
    /// `|R(z)|` for one-step methods, the maximal characteristic root
    /// modulus for multistep methods.
    pub amplification: f64,
}

/// Verdict of a spectrum-based stability check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityReport {
    /// Whether every point of the spectrum passed.
    pub stable: bool,
    /// The worst point encountered (`None` only for an empty spectrum).
    pub worst: Option<WorstPoint>,
    /// Set when a multistep method has a (near-)unit-modulus characteristic
    /// root of multiplicity ≥ 2 somewhere on the spectrum — a root-condition
    /// failure even though no modulus exceeds one.
    pub multiple_boundary_root: bool,
}

/// Check `|R(Δtλ)| ≤ 1 + tol` for every eigenvalue `λ` of the spatial
/// operator. A pole of `R` on the spectrum counts as unstable (amplification
/// reported as infinite).
pub fn stability_on_spectrum(
    tableau: &ButcherTableau,
    dt: f64,
    spectrum: &[Complex64],
    tol: f64,
) -> StabilityReport {
    let mut worst: Option<WorstPoint> = None;
    for &lambda in spectrum {
        let z = lambda * dt;
        let amp = tableau.stability_function(z).map_or(f64::INFINITY, |r| r.norm());
        if worst.is_none_or(|w| amp > w.amplification) {
            worst = Some(WorstPoint { z, amplification: amp });
        }
    }
    StabilityReport {
        stable: worst.is_none_or(|w| w.amplification <= 1.0 + tol),
        worst,
        multiple_boundary_root: false,
    }
}

/// Check the root condition of a multistep method over a scaled spectrum:
/// at every `z = Δtλ`, all characteristic roots satisfy `|s| ≤ 1 + tol` and
/// any root with `|s| ≥ 1 − tol` is simple (separated from every other root
/// by more than [`BOUNDARY_SEPARATION_TOL`]).
pub fn root_condition_on_spectrum(
    method: &MultistepMethod,
    dt: f64,
    spectrum: &[Complex64],
    tol: f64,
) -> Result<StabilityReport, RootsError> {
    let mut worst: Option<WorstPoint> = None;
    let mut multiple_boundary_root = false;
    for &lambda in spectrum {
        let z = lambda * dt;
        let roots = method.characteristic_roots(z)?;
        let amp = roots.iter().map(|s| s.norm()).fold(0.0, f64::max);
        if worst.is_none_or(|w| amp > w.amplification) {
            worst = Some(WorstPoint { z, amplification: amp });
        }
        for (i, si) in roots.iter().enumerate() {
            if si.norm() >= 1.0 - tol {
                let min_sep = roots
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, sj)| (si - sj).norm())
                    .fold(f64::INFINITY, f64::min);
                if min_sep <= BOUNDARY_SEPARATION_TOL {
                    multiple_boundary_root = true;
                }
            }
        }
    }
    let moduli_ok = worst.is_none_or(|w| w.amplification <= 1.0 + tol);
    Ok(StabilityReport {
        stable: moduli_ok && !multiple_boundary_root,
        worst,
        multiple_boundary_root,
    })
}

/// The factored Runge–Kutta stage operator `S = I_{sm} + Θ ⊗ (ΔtA)` for one
/// time step of size `Δt` on an `m×m` spatial operator `A`.
///
/// Holding the LU factors makes repeated stepping cheap: the amplification
/// matrix costs `m` solves once, and each forcing response costs one solve.
pub struct StageOperator {
    stages: usize,
    m: usize,
    dt: f64,
    weights: Vec<f64>,
    lu: LuFactors,
}

impl StageOperator {
    /// Factor `S` for the given tableau, step size and spatial operator.
    pub fn new(tableau: &ButcherTableau, dt: f64, a: &CMatrix) -> Result<Self, SingularMatrix> {
        assert_eq!(a.n_rows(), a.n_cols());
        let s = tableau.stages();
        let m = a.n_rows();
        let big = CMatrix::from_fn(s * m, s * m, |row, col| {
            let (si, xi) = (row / m, row % m);
            let (sj, xj) = (col / m, col % m);
            let e = if row == col { Complex64::ONE } else { Complex64::ZERO };
            e + Complex64::new(dt * tableau.theta(si, sj), 0.0) * a.at(xi, xj)
        });
        Ok(Self { stages: s, m, dt, weights: tableau.weights().to_vec(), lu: big.lu()? })
    }

    /// Spatial dimension `m`.
    pub fn spatial_dim(&self) -> usize {
        self.m
    }

    /// Number of stages.
    pub fn stages(&self) -> usize {
        self.stages
    }

    /// Dense one-step amplification matrix `M = R(ΔtA)`, computed column by
    /// column as `M e_i = e_i − Δt (bᵀ ⊗ I) S⁻¹ (𝟙 ⊗ A e_i)`.
    pub fn amplification_matrix(&self, a: &CMatrix) -> CMatrix {
        assert_eq!(a.n_rows(), self.m);
        let (s, m) = (self.stages, self.m);
        let mut out = CMatrix::identity(m);
        let mut rhs = vec![Complex64::ZERO; s * m];
        for i in 0..m {
            // Column i of A, replicated across all stages.
            for xi in 0..m {
                let v = a.at(xi, i);
                for si in 0..s {
                    rhs[si * m + xi] = v;
                }
            }
            self.lu.solve_in_place(&mut rhs);
            for xi in 0..m {
                let mut acc = Complex64::ZERO;
                for (si, &w) in self.weights.iter().enumerate() {
                    acc += Complex64::new(w, 0.0) * rhs[si * m + xi];
                }
                *out.at_mut(xi, i) -= Complex64::new(self.dt, 0.0) * acc;
            }
        }
        out
    }

    /// Forcing response `η = Δt (bᵀ ⊗ I) S⁻¹ g`, where `g` stacks the `s`
    /// stage samples of the source term (each of length `m`). One step of
    /// the method is then `y_{n+1} = M y_n + η_n`.
    pub fn forcing_response(&self, g_stack: &[Complex64]) -> CVec {
        let (s, m) = (self.stages, self.m);
        assert_eq!(g_stack.len(), s * m);
        let mut work = g_stack.to_vec();
        self.lu.solve_in_place(&mut work);
        (0..m)
            .map(|xi| {
                let mut acc = Complex64::ZERO;
                for (si, &w) in self.weights.iter().enumerate() {
                    acc += Complex64::new(w, 0.0) * work[si * m + xi];
                }
                acc * self.dt
            })
            .collect()
    }
}
