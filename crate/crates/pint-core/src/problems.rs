//! Spatial operators for the experiments: periodic advection–diffusion, the
//! first-order wave system, and a scalar model problem.
//!
//! Each problem packages the matrix `A` of `y' + Ay = g` together with its
//! exact spectrum (for stability checks against the *actual* eigenvalues
//! rather than a stability-region sketch) and, when `A` is diagonalizable by
//! a unitary map, the transform into eigencoordinates used to report
//! iteration errors mode by mode.

use alloc::vec;

use num_complex::Complex64;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::linalg::CMatrix;
use crate::spectral::FftPlan;
use crate::CVec;

/// Unitary change of basis to the eigenvectors of the spatial operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Eigentransform {
    /// The operator is already diagonal; the transform is the identity.
    Identity,
    /// The operator is circulant: eigencoordinates are Fourier modes. The
    /// map is the unitary positive-exponent DFT `(Qv)_j = m^{-1/2} Σ_k
    /// e^{+2πijk/m} v_k`, whose rows pair with the spectrum returned by the
    /// problem constructors index by index.
    FourierModes,
}

impl Eigentransform {
    /// Apply the transform in place to a spatial vector.
    pub fn apply(&self, v: &mut [Complex64]) {
        match self {
            Eigentransform::Identity => {}
            Eigentransform::FourierModes => {
                let m = v.len();
                // Positive-exponent unnormalized DFT scaled by 1/√m equals
                // the (1/m)-normalized inverse DFT scaled by √m.
                FftPlan::new(m).inverse(v);
                let s = (m as f64).sqrt();
                for x in v.iter_mut() {
                    *x *= s;
                }
            }
        }
    }
}

/// A spatial operator with its exact spectrum, optional eigentransform, and
/// the initial state of the evolution problem.
#[derive(Debug, Clone)]
pub struct SpatialProblem {
    matrix: CMatrix,
    spectrum: CVec,
    eigentransform: Option<Eigentransform>,
    initial_state: CVec,
}

impl SpatialProblem {
    /// Assemble a custom problem. `spectrum` must list the eigenvalues of
    /// `matrix`; pass `eigentransform = None` when no unitary
    /// diagonalization is available (defective or non-normal operators).
    pub fn new(
        matrix: CMatrix,
        spectrum: CVec,
        eigentransform: Option<Eigentransform>,
        initial_state: CVec,
    ) -> Self {
        assert_eq!(matrix.n_rows(), matrix.n_cols());
        assert_eq!(matrix.n_rows(), initial_state.len());
        Self { matrix, spectrum, eigentransform, initial_state }
    }

    /// Spatial dimension `m`.
    pub fn dim(&self) -> usize {
        self.matrix.n_rows()
    }

    /// The operator `A`.
    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    /// Exact eigenvalues of `A`. For [`Eigentransform::FourierModes`]
    /// problems the ordering matches the transform's mode indexing.
    pub fn spectrum(&self) -> &[Complex64] {
        &self.spectrum
    }

    /// Unitary transform to eigencoordinates, if one exists.
    pub fn eigentransform(&self) -> Option<Eigentransform> {
        self.eigentransform
    }

    /// Initial state `y(0)`.
    pub fn initial_state(&self) -> &[Complex64] {
        &self.initial_state
    }
}

/// Periodic advection–diffusion on `x ∈ [−1/2, 1/2)` with `Nx` cells:
/// `y' + Ay = g` discretizes `u_t + u_x − ν u_xx = g` by centered
/// differences on the uniform grid `x_i = −1/2 + iΔx`, `Δx = 1/Nx`.
///
/// `A` is circulant with stencil
/// `(−ν/Δx² + 1/(2Δx)) u_{i−1} + (2ν/Δx²) u_i + (−ν/Δx² − 1/(2Δx)) u_{i+1}`
/// and exact spectrum
/// `λ_j = (2ν/Δx²)(1 − cos θ_j) + (i/Δx) sin θ_j`, `θ_j = 2πj/Nx`.
/// The initial state is `sin(2πx)`.
pub fn advection_diffusion(nu: f64, nx: usize) -> SpatialProblem {
    assert!(nx >= 3, "need at least three grid cells");
    let dx = 1.0 / nx as f64;
    let diff = nu / (dx * dx);
    let adv = 1.0 / (2.0 * dx);

    let mut matrix = CMatrix::zeros(nx, nx);
    for i in 0..nx {
        *matrix.at_mut(i, i) += Complex64::new(2.0 * diff, 0.0);
        *matrix.at_mut(i, (i + nx - 1) % nx) += Complex64::new(-diff + adv, 0.0);
        *matrix.at_mut(i, (i + 1) % nx) += Complex64::new(-diff - adv, 0.0);
    }

    let spectrum: CVec = (0..nx)
        .map(|j| {
            let theta = 2.0 * core::f64::consts::PI * j as f64 / nx as f64;
            Complex64::new(2.0 * diff * (1.0 - theta.cos()), theta.sin() / dx)
        })
        .collect();

    let initial_state: CVec = (0..nx)
        .map(|i| {
            let x = -0.5 + i as f64 * dx;
            Complex64::new((2.0 * core::f64::consts::PI * x).sin(), 0.0)
        })
        .collect();

    SpatialProblem::new(matrix, spectrum, Some(Eigentransform::FourierModes), initial_state)
}

/// Periodic wave equation `u_tt = u_xx` on `x ∈ [−1/2, 1/2)` in first-order
/// form: with `w = (u, v)` and the periodic second-difference `Δ_h`,
///
/// ```text
///   w' + A w = 0,     A = [ 0    −I ]
///                         [ −Δ_h  0 ]
/// ```
///
/// The spectrum is `±i√μ_j` with `μ_j = (2/Δx²)(1 − cos θ_j)` the
/// eigenvalues of `−Δ_h` (listed as all `+i√μ_j` followed by all `−i√μ_j`).
/// No eigentransform is provided: at `μ_0 = 0` the operator carries a 2×2
/// Jordan block, so no diagonalizing basis exists. The initial state is
/// `u = sin(2πx)`, `v = u_t(0) = 0`.
pub fn wave_first_order(nx: usize) -> SpatialProblem {
    assert!(nx >= 3, "need at least three grid cells");
    let dx = 1.0 / nx as f64;
    let m = 2 * nx;
    let w = 1.0 / (dx * dx);

    let mut matrix = CMatrix::zeros(m, m);
    for i in 0..nx {
        *matrix.at_mut(i, nx + i) = Complex64::new(-1.0, 0.0);
        // −Δ_h: +2/Δx² on the diagonal, −1/Δx² on the periodic neighbors.
        *matrix.at_mut(nx + i, i) = Complex64::new(2.0 * w, 0.0);
        *matrix.at_mut(nx + i, (i + nx - 1) % nx) += Complex64::new(-w, 0.0);
        *matrix.at_mut(nx + i, (i + 1) % nx) += Complex64::new(-w, 0.0);
    }

    let mut spectrum = CVec::with_capacity(m);
    for sign in [1.0, -1.0] {
        for j in 0..nx {
            let theta = 2.0 * core::f64::consts::PI * j as f64 / nx as f64;
            let mu = 2.0 * w * (1.0 - theta.cos());
            spectrum.push(Complex64::new(0.0, sign * mu.max(0.0).sqrt()));
        }
    }

    let mut initial_state = vec![Complex64::ZERO; m];
    for (i, slot) in initial_state[..nx].iter_mut().enumerate() {
        let x = -0.5 + i as f64 * dx;
        *slot = Complex64::new((2.0 * core::f64::consts::PI * x).sin(), 0.0);
    }

    SpatialProblem::new(matrix, spectrum, None, initial_state)
}

/// Scalar model problem `y' + λy = g` with `y(0) = 1`.
pub fn scalar_problem(lambda: Complex64) -> SpatialProblem {
    let mut matrix = CMatrix::zeros(1, 1);
    *matrix.at_mut(0, 0) = lambda;
    SpatialProblem::new(matrix, vec![lambda], Some(Eigentransform::Identity), vec![Complex64::ONE])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::inf_norm_diff;
    use rand::rngs::StdRng;
    use rand::{Rng, SeedableRng};

    #[test]
    fn advection_diffusion_rows_sum_to_zero() {
        // The stencil annihilates constants (conservation of the periodic
        // scheme); row sums must vanish exactly.
        let p = advection_diffusion(1e-3, 10);
        for i in 0..p.dim() {
            let sum: Complex64 = p.matrix().row(i).iter().sum();
            assert!(sum.norm() < 1e-13, "row {i} sums to {sum}");
        }
    }

    #[test]
    fn advection_diffusion_transform_diagonalizes_the_matrix() {
        // Q(Av) must equal λ ∘ (Qv) entry by entry: this pins both the
        // spectrum formula and the mode ordering of the transform.
        let p = advection_diffusion(3e-2, 8);
        let transform = p.eigentransform().unwrap();
        let mut rng = StdRng::seed_from_u64(12);
        let v: CVec =
            (0..8).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();

        let mut av = vec![Complex64::ZERO; 8];
        p.matrix().matvec(&v, &mut av);
        transform.apply(&mut av);

        let mut qv = v.clone();
        transform.apply(&mut qv);
        let expected: CVec = qv.iter().zip(p.spectrum()).map(|(q, l)| q * l).collect();
        assert!(inf_norm_diff(&av, &expected) < 1e-12);
    }

    #[test]
    fn advection_diffusion_initial_state_is_a_sine() {
        let p = advection_diffusion(1e-3, 8);
        // x₆ = −1/2 + 6/8 = 1/4: sin(π/2) = 1.
        assert!((p.initial_state()[6].re - 1.0).abs() < 1e-14);
        // x₂ = −1/4: sin(−π/2) = −1.
        assert!((p.initial_state()[2].re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn fourier_transform_is_unitary() {
        let mut rng = StdRng::seed_from_u64(3);
        let v: CVec =
            (0..12).map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect();
        let mut w = v.clone();
        Eigentransform::FourierModes.apply(&mut w);
        let norm_before: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let norm_after: f64 = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        assert!((norm_before - norm_after).abs() < 1e-12);
    }

    #[test]
    fn wave_operator_is_defective_at_the_constant_mode() {
        let p = wave_first_order(6);
        let m = p.dim();
        // (0, 𝟙): one application gives (−𝟙, 0) ≠ 0, a second gives 0 — the
        // 2×2 Jordan block at μ = 0 that rules out an eigentransform.
        let mut w = vec![Complex64::ZERO; m];
        for slot in &mut w[6..] {
            *slot = Complex64::ONE;
        }
        let mut aw = vec![Complex64::ZERO; m];
        p.matrix().matvec(&w, &mut aw);
        assert!(crate::linalg::inf_norm(&aw) > 0.5);
        let mut aaw = vec![Complex64::ZERO; m];
        p.matrix().matvec(&aw, &mut aaw);
        assert!(crate::linalg::inf_norm(&aaw) < 1e-12);
        assert!(p.eigentransform().is_none());
    }

    #[test]
    fn wave_spectrum_matches_eigenvector_action() {
        // For mode j with μ = (2/Δx²)(1 − cos θ), the vector (u, −λu) with
        // u_k = e^{iθk} satisfies A w = λ w, λ = i√μ.
        let nx = 8;
        let p = wave_first_order(nx);
        let j = 3;
        let theta = 2.0 * core::f64::consts::PI * j as f64 / nx as f64;
        let lambda = p.spectrum()[j];
        let u: CVec = (0..nx).map(|k| Complex64::new(0.0, theta * k as f64).exp()).collect();
        let mut w: CVec = u.clone();
        w.extend(u.iter().map(|uk| -lambda * uk));
        let mut aw = vec![Complex64::ZERO; 2 * nx];
        p.matrix().matvec(&w, &mut aw);
        let expect: CVec = w.iter().map(|wk| lambda * wk).collect();
        assert!(inf_norm_diff(&aw, &expect) < 1e-9);
    }

    #[test]
    fn scalar_problem_is_trivially_diagonal() {
        let lambda = Complex64::new(0.3, -0.7);
        let p = scalar_problem(lambda);
        assert_eq!(p.dim(), 1);
        assert_eq!(p.spectrum()[0], lambda);
        assert_eq!(p.eigentransform(), Some(Eigentransform::Identity));
    }
}
