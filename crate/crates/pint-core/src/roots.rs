//! Polynomial root finding for the multistep stability checks.
//!
//! The characteristic polynomials rooted here have degree ≤ 6 with complex
//! coefficients (`ρ(s) + z σ(s)` evaluated at points `z` of a spatial
//! spectrum), so a simultaneous Aberth–Ehrlich iteration is ample. Two
//! robustness measures matter more than speed:
//!
//! * roots at the origin are deflated *exactly* beforehand (several methods
//!   produce `ρ(s) = s^r(s − 1)`-type polynomials whose zero roots would
//!   otherwise drag the iteration), and
//! * every returned root is verified a posteriori against a coefficient-scaled
//!   residual bound; failure surfaces as an error rather than a bad verdict.

use core::fmt;

use num_complex::Complex64;
// Inherent float methods only exist with std; the trait supplies them for
// no_std builds and is harmlessly shadowed in tests.
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::CVec;

/// Relative residual each returned root must satisfy:
/// `|p(root)| ≤ RESIDUAL_TOL · Σ_k |c_k|·|root|^k`.
pub const RESIDUAL_TOL: f64 = 1e-10;

const MAX_SWEEPS: usize = 200;

/// Root finding failure.
#[derive(Debug, Clone, PartialEq)]
pub enum RootsError {
    /// Every coefficient is zero; roots are undefined.
    ZeroPolynomial,
    /// The iteration finished but some root failed the residual contract.
    Unverified {
        /// Worst relative residual observed.
        max_residual: f64,
    },
}

impl fmt::Display for RootsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RootsError::ZeroPolynomial => write!(f, "zero polynomial has no defined roots"),
            RootsError::Unverified { max_residual } => write!(
                f,
                "root residual {max_residual:.3e} exceeds tolerance {RESIDUAL_TOL:.1e}"
            ),
        }
    }
}

impl core::error::Error for RootsError {}

/// All complex roots of `p(s) = Σ_k coeffs[k] s^k` (ascending powers),
/// with multiplicity, in unspecified order.
///
/// Exactly-zero leading coefficients are ignored (they lower the degree);
/// exactly-zero trailing coefficients are deflated into roots at the origin.
pub fn polynomial_roots(coeffs: &[Complex64]) -> Result<CVec, RootsError> {
    // Effective degree: drop exactly-zero leading coefficients.
    let mut degree_end = coeffs.len();
    while degree_end > 0 && coeffs[degree_end - 1] == Complex64::ZERO {
        degree_end -= 1;
    }
    if degree_end == 0 {
        return Err(RootsError::ZeroPolynomial);
    }

    // Deflate exact roots at the origin.
    let mut start = 0;
    while start < degree_end - 1 && coeffs[start] == Complex64::ZERO {
        start += 1;
    }
    let mut roots: CVec = (0..start).map(|_| Complex64::ZERO).collect();

    let p = &coeffs[start..degree_end];
    let degree = p.len() - 1;
    if degree == 0 {
        return Ok(roots); // constant (possibly after deflation): no further roots
    }

    roots.extend(aberth(p));
    verify(coeffs, &roots)?;
    Ok(roots)
}

/// Horner evaluation of `p` and `p'` at `z` (ascending coefficients).
fn eval(p: &[Complex64], z: Complex64) -> (Complex64, Complex64) {
    let mut v = Complex64::ZERO;
    let mut d = Complex64::ZERO;
    for &c in p.iter().rev() {
        d = d * z + v;
        v = v * z + c;
    }
    (v, d)
}

/// Aberth–Ehrlich simultaneous iteration on a polynomial with nonzero
/// constant and leading coefficients.
fn aberth(p: &[Complex64]) -> CVec {
    let degree = p.len() - 1;
    let lead = p[degree];

    // Cauchy-style inclusion radius, used to seed the iterates on a circle.
    let radius = 1.0
        + p[..degree]
            .iter()
            .map(|c| (c / lead).norm())
            .fold(0.0, f64::max);

    // Slightly irrational angular offset breaks the symmetry deadlocks that a
    // perfectly regular start can hit on symmetric polynomials.
    let mut z: CVec = (0..degree)
        .map(|i| {
            let theta = 2.0 * core::f64::consts::PI * i as f64 / degree as f64 + 0.437;
            Complex64::new(radius * theta.cos(), radius * theta.sin())
        })
        .collect();

    for _ in 0..MAX_SWEEPS {
        let mut moved = 0.0f64;
        for i in 0..degree {
            let (v, d) = eval(p, z[i]);
            if v == Complex64::ZERO {
                continue;
            }
            // Newton correction, repelled from the other iterates.
            let newton = if d == Complex64::ZERO {
                // Stationary point: nudge off it and retry next sweep.
                let nudge = 1e-6 * (1.0 + z[i].norm());
                z[i] += Complex64::new(nudge, 0.0);
                continue;
            } else {
                v / d
            };
            let mut repulsion = Complex64::ZERO;
            for j in 0..degree {
                if j != i {
                    repulsion += (z[i] - z[j]).finv();
                }
            }
            let denom = Complex64::ONE - newton * repulsion;
            let step = if denom == Complex64::ZERO { newton } else { newton / denom };
            z[i] -= step;
            moved = moved.max(step.norm() / (1.0 + z[i].norm()));
        }
        if moved < 1e-15 {
            break;
        }
    }
    z
}

/// Check every root against the coefficient-scaled residual bound.
fn verify(coeffs: &[Complex64], roots: &[Complex64]) -> Result<(), RootsError> {
    let mut worst = 0.0f64;
    for &r in roots {
        let (v, _) = eval(coeffs, r);
        // Scale: Σ |c_k| |r|^k — the natural backward-error normalization.
        let mut scale = 0.0;
        let mut pw = 1.0;
        let rn = r.norm();
        for c in coeffs {
            scale += c.norm() * pw;
            pw *= rn;
        }
        worst = worst.max(v.norm() / scale.max(f64::MIN_POSITIVE));
    }
    if worst <= RESIDUAL_TOL {
        Ok(())
    } else {
        Err(RootsError::Unverified { max_residual: worst })
    }
}
