//! Parallel-in-time solution of linear evolution systems `y' + A y = g`.
//!
//! The crate assembles the *all-at-once* linear system that couples every time
//! step of a one-step (Runge–Kutta) or linear multistep discretization, and
//! solves it with a stationary iteration preconditioned by a block
//! α-circulant approximation of the time-stepping operator:
//!
//! ```text
//!   u^{k+1} = u^k + P_α⁻¹ (b − K u^k)
//! ```
//!
//! Each application of `P_α⁻¹` block-diagonalizes in a scaled discrete Fourier
//! basis along the time axis, turning one sweep into `N` independent complex
//! spatial solves — the source of the method's time-parallelism. The iteration
//! error contracts like `α/(1−α)` per sweep until the roundoff floor of the
//! diagonalization is reached, and [`solver::iterate`] instruments exactly
//! that behavior against the predicted envelope.
//!
//! Modules, bottom up:
//!
//! * [`linalg`] — dense complex matrices, LU solves, norms.
//! * [`spectral`] — FFTs, α-circulant eigenvalues, the scaled-Fourier
//!   transform pair, and reference multiplication in the α-basis.
//! * [`roots`] — polynomial root finding for the multistep stability checks.
//! * [`integrators`] — Runge–Kutta tableaus and stability functions, multistep
//!   coefficient sets, and spectrum-based stability verdicts.
//! * [`problems`] — the spatial operators used by the experiments
//!   (advection–diffusion, first-order wave, scalar model).
//! * [`all_at_once`] — assembly of `K u = b` for both discretization families,
//!   plus the sequential-in-time reference solve.
//! * [`solver`] — the preconditioned stationary iteration, its convergence
//!   history, and the stage-reduced inner solver for Runge–Kutta systems.
//!
//! The crate is `no_std` (with `alloc`): everything here is deterministic
//! dense math on buffers, so it runs identically in a bare-metal worker or a
//! desktop binary. Parallel sweep execution is delegated through the
//! [`solver::FrequencyExecutor`] trait, with a serial implementation provided
//! here and thread-pool implementations left to `std` callers.

#![cfg_attr(not(test), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod all_at_once;
pub mod integrators;
pub mod linalg;
pub mod problems;
pub mod roots;
pub mod solver;
pub mod spectral;

pub use num_complex::Complex64;

/// Convenience alias: the crate works in double-precision complex arithmetic
/// throughout.
pub type CVec = alloc::vec::Vec<Complex64>;
