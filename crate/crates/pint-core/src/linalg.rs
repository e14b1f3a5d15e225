//! Dense complex linear algebra: row-major matrices, LU with partial
//! pivoting, and the handful of norms the solver instruments.
//!
//! Every system factored here is small (spatial blocks of a few hundred rows,
//! Runge–Kutta stage systems a small multiple of that), so a textbook `O(n³)`
//! LU is the right tool; no blocking or pivot-growth heroics.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

/// Error returned when a factorization encounters a pivot column that is zero
/// to working precision, i.e. the matrix is singular (or so close that any
/// solve would be meaningless).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SingularMatrix {
    /// Elimination step at which no usable pivot was found.
    pub step: usize,
}

impl fmt::Display for SingularMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "matrix is singular to working precision (pivot {})", self.step)
    }
}

impl core::error::Error for SingularMatrix {}

/// Dense row-major complex matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n_rows: usize,
    n_cols: usize,
    data: Vec<Complex64>,
}

impl CMatrix {
    /// All-zero matrix of the given shape.
    pub fn zeros(n_rows: usize, n_cols: usize) -> Self {
        Self { n_rows, n_cols, data: vec![Complex64::ZERO; n_rows * n_cols] }
    }

    /// Identity of order `n`.
    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            *m.at_mut(i, i) = Complex64::ONE;
        }
        m
    }

    /// Build entry-wise from `f(row, col)`.
    pub fn from_fn(n_rows: usize, n_cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                data.push(f(i, j));
            }
        }
        Self { n_rows, n_cols, data }
    }

    /// Number of rows.
    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Number of columns.
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    /// Entry `(i, j)`.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        self.data[i * self.n_cols + j]
    }

    /// Mutable entry `(i, j)`.
    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut Complex64 {
        debug_assert!(i < self.n_rows && j < self.n_cols);
        &mut self.data[i * self.n_cols + j]
    }

    /// Row `i` as a slice.
    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.n_cols..(i + 1) * self.n_cols]
    }

    /// `y = A x`.
    pub fn matvec(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert_eq!(x.len(), self.n_cols);
        assert_eq!(y.len(), self.n_rows);
        for (i, yi) in y.iter_mut().enumerate() {
            let row = self.row(i);
            let mut acc = Complex64::ZERO;
            for (a, b) in row.iter().zip(x) {
                acc += a * b;
            }
            *yi = acc;
        }
    }

    /// `A B` as a new matrix.
    pub fn matmul(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n_cols, other.n_rows);
        let mut out = CMatrix::zeros(self.n_rows, other.n_cols);
        for i in 0..self.n_rows {
            for k in 0..self.n_cols {
                let aik = self.at(i, k);
                if aik == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.n_cols {
                    *out.at_mut(i, j) += aik * other.at(k, j);
                }
            }
        }
        out
    }

    /// `self += c * other` (same shape).
    pub fn scaled_add(&mut self, c: Complex64, other: &CMatrix) {
        assert_eq!(self.n_rows, other.n_rows);
        assert_eq!(self.n_cols, other.n_cols);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
    }

    /// Scale every entry by `c`.
    pub fn scale(&mut self, c: Complex64) {
        for a in &mut self.data {
            *a *= c;
        }
    }

    /// Row-sum (∞) norm.
    pub fn inf_norm(&self) -> f64 {
        (0..self.n_rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// LU factorization with partial pivoting. Fails if a pivot column is
    /// zero relative to the matrix scale.
    pub fn lu(&self) -> Result<LuFactors, SingularMatrix> {
        assert_eq!(self.n_rows, self.n_cols, "LU requires a square matrix");
        let n = self.n_rows;
        let mut lu = self.data.clone();
        let mut piv: Vec<usize> = (0..n).collect();
        let scale = self
            .data
            .iter()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
            .max(f64::MIN_POSITIVE);
        let tiny = scale * (n as f64) * f64::EPSILON;

        for k in 0..n {
            // Pick the largest remaining entry in column k as pivot.
            let mut p = k;
            let mut best = lu[k * n + k].norm();
            for i in (k + 1)..n {
                let cand = lu[i * n + k].norm();
                if cand > best {
                    best = cand;
                    p = i;
                }
            }
            if best <= tiny {
                return Err(SingularMatrix { step: k });
            }
            if p != k {
                piv.swap(k, p);
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let m = lu[i * n + k] / pivot;
                lu[i * n + k] = m;
                if m != Complex64::ZERO {
                    for j in (k + 1)..n {
                        let u = lu[k * n + j];
                        lu[i * n + j] -= m * u;
                    }
                }
            }
        }
        Ok(LuFactors { n, lu, piv })
    }
}

/// Packed LU factors of a square complex matrix, reusable across many solves.
#[derive(Debug, Clone)]
pub struct LuFactors {
    n: usize,
    /// `L` (unit diagonal, strictly lower part) and `U` packed together.
    lu: Vec<Complex64>,
    /// Row permutation: row `i` of the factored matrix came from `piv[i]`.
    piv: Vec<usize>,
}

impl LuFactors {
    /// Order of the factored matrix.
    pub fn order(&self) -> usize {
        self.n
    }

    /// Solve `A x = b` in place: on return `b` holds `x`.
    pub fn solve_in_place(&self, b: &mut [Complex64]) {
        let n = self.n;
        assert_eq!(b.len(), n);
        // Apply the row permutation, then forward/back substitution.
        let mut x: Vec<Complex64> = self.piv.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in (i + 1)..n {
                acc -= self.lu[i * n + j] * x[j];
            }
            x[i] = acc / self.lu[i * n + i];
        }
        b.copy_from_slice(&x);
    }
}

/// Max-modulus (∞) norm of a complex vector. Returns 0 for an empty slice.
pub fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// ∞-norm of the difference `a − b`.
pub fn inf_norm_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}
