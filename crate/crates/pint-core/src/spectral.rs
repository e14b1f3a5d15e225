//! Discrete Fourier machinery for α-circulant block diagonalization.
//!
//! An α-circulant matrix `C(α)` (a circulant whose above-diagonal entries are
//! additionally scaled by `α`) factors as
//!
//! ```text
//!   C(α) = D_α⁻¹ F⁻¹ Λ F D_α ,        D_α = diag(α^{0/N}, …, α^{(N−1)/N}),
//! ```
//!
//! where `F` is the unnormalized DFT with negative-exponent convention and
//! `Λ = diag(F · D_α · c)` holds the eigenvalues computed from the first
//! column `c`. The preconditioner exploits exactly this factorization along
//! the time axis: [`SpectralTransform::analyze`] applies `F D_α` to every
//! spatial component, the per-frequency spatial systems are solved
//! independently, and [`SpectralTransform::synthesize`] maps back with
//! `D_α⁻¹ F⁻¹`.
//!
//! The FFT is hand-rolled so the whole pipeline stays `no_std` and
//! bit-reproducible across platforms: iterative radix-2 for power-of-two
//! lengths and Bluestein's chirp-z embedding for everything else (the
//! multistep experiments need prime lengths such as 1021). The chirp phase
//! uses `n² mod 2N` integer arithmetic so the evaluated angles stay in
//! `[−2π, 0]` regardless of length.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use num_complex::Complex64;
// Inherent float methods only exist with std; the trait supplies them for
// no_std builds and is harmlessly shadowed in tests.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::linalg::CMatrix;
use crate::CVec;

/// Transform direction for [`fft`].
///
/// `Forward` is the unnormalized negative-exponent sum
/// `X_k = Σ_n x_n e^{−2πikn/N}`; `Inverse` is its exact inverse (positive
/// exponent, scaled by `1/N`).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// Negative-exponent, unnormalized.
    Forward,
    /// Positive-exponent, scaled by `1/N`.
    Inverse,
}

fn cis(theta: f64) -> Complex64 {
    Complex64::new(theta.cos(), theta.sin())
}

enum PlanKind {
    /// Length-1 transform: identity.
    Trivial,
    /// Iterative radix-2; `twiddles[k] = e^{−2πik/N}` for `k < N/2`.
    Pow2 { twiddles: Vec<Complex64> },
    /// Bluestein chirp-z: convolution with a fixed chirp kernel, carried out
    /// by an inner power-of-two plan of length `≥ 2N−1`.
    Bluestein {
        /// `chirp[j] = e^{−iπ j²/N}`.
        chirp: Vec<Complex64>,
        /// Forward FFT of the circularly embedded conjugate chirp.
        kernel_fft: Vec<Complex64>,
        inner: Box<FftPlan>,
    },
}

/// Reusable FFT plan for a fixed length.
///
/// Building a plan precomputes twiddle factors (and, for non-power-of-two
/// lengths, the Bluestein kernel), so repeated transforms of the same length
/// only pay for butterflies.
pub struct FftPlan {
    n: usize,
    kind: PlanKind,
}

impl FftPlan {
    /// Plan a transform of length `n` (`n ≥ 1`).
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "FFT length must be at least 1");
        let kind = if n == 1 {
            PlanKind::Trivial
        } else if n.is_power_of_two() {
            let twiddles = (0..n / 2)
                .map(|k| cis(-2.0 * core::f64::consts::PI * k as f64 / n as f64))
                .collect();
            PlanKind::Pow2 { twiddles }
        } else {
            let m = (2 * n - 1).next_power_of_two();
            let inner = Box::new(FftPlan::new(m));
            let two_n = 2 * n as u64;
            let chirp: Vec<Complex64> = (0..n)
                .map(|j| {
                    let sq = (j as u64 * j as u64) % two_n;
                    cis(-core::f64::consts::PI * sq as f64 / n as f64)
                })
                .collect();
            // Conjugate chirp, embedded so that index arithmetic wraps:
            // kernel[j] and kernel[m−j] both hold e^{+iπ j²/N}.
            let mut kernel = vec![Complex64::ZERO; m];
            for j in 0..n {
                let v = chirp[j].conj();
                kernel[j] = v;
                if j != 0 {
                    kernel[m - j] = v;
                }
            }
            inner.forward(&mut kernel);
            PlanKind::Bluestein { chirp, kernel_fft: kernel, inner }
        };
        Self { n, kind }
    }

    /// Planned transform length.
    pub fn len(&self) -> usize {
        self.n
    }

    /// True only for the degenerate length-0 case, which `new` rejects.
    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Unnormalized negative-exponent transform, in place.
    pub fn forward(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n, "buffer length does not match plan");
        match &self.kind {
            PlanKind::Trivial => {}
            PlanKind::Pow2 { twiddles } => pow2_forward(data, twiddles),
            PlanKind::Bluestein { chirp, kernel_fft, inner } => {
                let m = inner.len();
                let mut work = vec![Complex64::ZERO; m];
                for (w, (x, c)) in work.iter_mut().zip(data.iter().zip(chirp)) {
                    *w = x * c;
                }
                inner.forward(&mut work);
                for (w, k) in work.iter_mut().zip(kernel_fft) {
                    *w *= k;
                }
                inner.inverse(&mut work);
                for (x, (w, c)) in data.iter_mut().zip(work.iter().zip(chirp)) {
                    *x = w * c;
                }
            }
        }
    }

    /// Positive-exponent transform scaled by `1/N`, in place. Exact inverse
    /// of [`forward`](Self::forward).
    pub fn inverse(&self, data: &mut [Complex64]) {
        // conj ∘ forward ∘ conj realizes the positive-exponent sum.
        for x in data.iter_mut() {
            *x = x.conj();
        }
        self.forward(data);
        let scale = 1.0 / self.n as f64;
        for x in data.iter_mut() {
            *x = x.conj() * scale;
        }
    }

    /// Transform in the given [`Direction`].
    pub fn transform(&self, data: &mut [Complex64], direction: Direction) {
        match direction {
            Direction::Forward => self.forward(data),
            Direction::Inverse => self.inverse(data),
        }
    }
}

fn pow2_forward(data: &mut [Complex64], twiddles: &[Complex64]) {
    let n = data.len();
    // Bit-reversal permutation.
    let mut j = 0usize;
    for i in 1..n {
        let mut bit = n >> 1;
        while j & bit != 0 {
            j ^= bit;
            bit >>= 1;
        }
        j |= bit;
        if i < j {
            data.swap(i, j);
        }
    }
    let mut len = 2;
    while len <= n {
        let half = len / 2;
        let step = n / len;
        let mut base = 0;
        while base < n {
            for k in 0..half {
                let w = twiddles[k * step];
                let u = data[base + k];
                let v = data[base + k + half] * w;
                data[base + k] = u + v;
                data[base + k + half] = u - v;
            }
            base += len;
        }
        len <<= 1;
    }
}

/// One-shot FFT of any length; plans internally. Prefer [`FftPlan`] when the
/// same length is transformed repeatedly.
pub fn fft(data: &mut [Complex64], direction: Direction) {
    FftPlan::new(data.len()).transform(data, direction);
}

/// An α-circulant matrix, stored as its first column plus the weight `α`.
///
/// Entry `(i, j)` equals `c_{(i−j) mod N}`, multiplied by `α` whenever the
/// entry lies strictly above the diagonal (`j > i`). `α = 1` recovers an
/// ordinary circulant.
#[derive(Debug, Clone, PartialEq)]
pub struct AlphaCirculant {
    alpha: f64,
    first_column: Vec<f64>,
}

impl AlphaCirculant {
    /// Build from a full first column.
    pub fn new(alpha: f64, first_column: Vec<f64>) -> Self {
        assert!(!first_column.is_empty(), "circulant needs at least one row");
        assert!(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
        Self { alpha, first_column }
    }

    /// Order-`n` α-shift: first column `(0, 1, 0, …, 0)`. This is the
    /// α-circulant closest (rank-one corner change) to the backward shift
    /// that advances a one-step recurrence.
    pub fn shift(alpha: f64, n: usize) -> Self {
        assert!(n >= 2, "shift needs at least two rows");
        let mut col = vec![0.0; n];
        col[1] = 1.0;
        Self::new(alpha, col)
    }

    /// Order-`n` α-circulant whose first column starts with `coeffs` and is
    /// zero-padded — the usual lift of a lower-triangular Toeplitz
    /// coefficient band `(c_0, …, c_r)`.
    pub fn from_coefficients(alpha: f64, coeffs: &[f64], n: usize) -> Self {
        assert!(coeffs.len() <= n, "coefficient band longer than matrix order");
        let mut col = vec![0.0; n];
        col[..coeffs.len()].copy_from_slice(coeffs);
        Self::new(alpha, col)
    }

    /// Matrix order.
    pub fn order(&self) -> usize {
        self.first_column.len()
    }

    /// The weight `α`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// First column `c`.
    pub fn first_column(&self) -> &[f64] {
        &self.first_column
    }

    /// Eigenvalues `λ = F · D_α · c` (unnormalized forward DFT of the
    /// `α^{j/N}`-weighted first column), in frequency order.
    pub fn eigenvalues(&self) -> CVec {
        let n = self.order();
        let mut data: CVec = self
            .first_column
            .iter()
            .enumerate()
            .map(|(j, &c)| Complex64::new(c * alpha_weight(self.alpha, j, n), 0.0))
            .collect();
        fft(&mut data, Direction::Forward);
        data
    }

    /// Materialize as a dense matrix (for reference checks; the solver never
    /// does this at scale).
    pub fn to_dense(&self) -> CMatrix {
        let n = self.order();
        CMatrix::from_fn(n, n, |i, j| {
            let c = self.first_column[(n + i - j) % n];
            let v = if j > i { self.alpha * c } else { c };
            Complex64::new(v, 0.0)
        })
    }
}

#[inline]
fn alpha_weight(alpha: f64, j: usize, n: usize) -> f64 {
    // α^{j/N}; exact 1.0 when α = 1 so the plain circulant path has no
    // rounding of its own.
    if alpha == 1.0 {
        1.0
    } else {
        (alpha.ln() * j as f64 / n as f64).exp()
    }
}

/// The transform pair that block-diagonalizes `C(α) ⊗ I`.
///
/// Vectors are laid out as `N` contiguous time blocks of `block_len` entries
/// each. [`analyze`](Self::analyze) applies `(F D_α) ⊗ I` in place (so block
/// `k` afterwards belongs to frequency `k`); [`synthesize`](Self::synthesize)
/// applies the inverse `(D_α⁻¹ F⁻¹) ⊗ I`.
pub struct SpectralTransform {
    plan: FftPlan,
    weights: Vec<f64>,
    inv_weights: Vec<f64>,
}

impl SpectralTransform {
    /// Transform along `n_time` blocks with weight `alpha ∈ (0, 1]`.
    pub fn new(alpha: f64, n_time: usize) -> Self {
        assert!(alpha > 0.0 && alpha <= 1.0, "alpha must lie in (0, 1]");
        let weights: Vec<f64> = (0..n_time).map(|j| alpha_weight(alpha, j, n_time)).collect();
        let inv_weights = weights.iter().map(|w| 1.0 / w).collect();
        Self { plan: FftPlan::new(n_time), weights, inv_weights }
    }

    /// Number of time blocks.
    pub fn n_time(&self) -> usize {
        self.plan.len()
    }

    /// In-place analysis `(F D_α ⊗ I) u`. `u.len()` must equal
    /// `n_time * block_len`.
    pub fn analyze(&self, u: &mut [Complex64], block_len: usize) {
        self.apply(u, block_len, Direction::Forward);
    }

    /// In-place synthesis `(D_α⁻¹ F⁻¹ ⊗ I) u`.
    pub fn synthesize(&self, u: &mut [Complex64], block_len: usize) {
        self.apply(u, block_len, Direction::Inverse);
    }

    fn apply(&self, u: &mut [Complex64], block_len: usize, direction: Direction) {
        let n = self.n_time();
        assert_eq!(u.len(), n * block_len, "vector length must be n_time × block_len");
        let mut lane = vec![Complex64::ZERO; n];
        for s in 0..block_len {
            match direction {
                Direction::Forward => {
                    for t in 0..n {
                        lane[t] = u[t * block_len + s] * self.weights[t];
                    }
                    self.plan.forward(&mut lane);
                    for t in 0..n {
                        u[t * block_len + s] = lane[t];
                    }
                }
                Direction::Inverse => {
                    for t in 0..n {
                        lane[t] = u[t * block_len + s];
                    }
                    self.plan.inverse(&mut lane);
                    for t in 0..n {
                        u[t * block_len + s] = lane[t] * self.inv_weights[t];
                    }
                }
            }
        }
    }
}

/// Reference multiplication `y = C(α) x` carried out entirely in the α-scaled
/// Fourier basis (analyze → multiply by eigenvalues → synthesize).
///
/// Exercises the same factorization the preconditioner relies on, so dense
/// agreement here validates the eigenvalue/transform conventions jointly.
pub fn alpha_basis_apply(circulant: &AlphaCirculant, x: &[Complex64]) -> CVec {
    let n = circulant.order();
    assert_eq!(x.len(), n);
    let transform = SpectralTransform::new(circulant.alpha(), n);
    let eigs = circulant.eigenvalues();
    let mut y = x.to_vec();
    transform.analyze(&mut y, 1);
    for (v, lambda) in y.iter_mut().zip(&eigs) {
        *v *= lambda;
    }
    transform.synthesize(&mut y, 1);
    y
}
