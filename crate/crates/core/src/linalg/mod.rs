//! Dense complex linear algebra: the kernel layer everything else builds on.
//!
//! Matrices are small (a few dozen rows at most), dense, and immutable once
//! built, so the implementations favor spectral accuracy and determinism over
//! asymptotic speed: Hermitian eigendecompositions use cyclic Jacobi
//! rotations, singular value decompositions use one-sided Jacobi, and matrix
//! exponentials use scaling-and-squaring on a truncated series.

mod eig;
mod expm;
mod ops;
mod svd;

pub use eig::{herm_eig, HermitianEig};
pub use expm::expm;
pub use ops::{
    complete_columns, fidelity, kron, norms, partial_trace, polar_isometry, polar_unitary_right,
    psd_sqrt_and_inv_sqrt, spectral_norm, trace_norm, unvectorize, vectorize, Norms, TracedFactor,
};
pub use svd::{singular_values, svd, Svd};

use num_complex::Complex64;
use std::fmt;
use std::ops::{Add, Index, Mul, Sub};
use thiserror::Error;

/// Relative asymmetry under which a nearly-Hermitian input is silently
/// symmetrized; anything worse is rejected.
pub const HERMITIAN_SLACK: f64 = 1e-8;

#[derive(Debug, Error, PartialEq)]
pub enum LinalgError {
    #[error("matrix must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("entry count {got} does not match {rows}x{cols}")]
    BadEntryCount { rows: usize, cols: usize, got: usize },
    #[error("non-finite entry at ({row},{col})")]
    NonFinite { row: usize, col: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix is not Hermitian: asymmetry {asymmetry:.3e} exceeds tolerance {tol:.3e}")]
    NotHermitian { asymmetry: f64, tol: f64 },
    #[error("spectral norm estimate {estimate:.6e} exceeds declared bound {bound:.6e}")]
    NormBoundExceeded { estimate: f64, bound: f64 },
    #[error("eigenvalue {value:.6e} below floor {floor:.6e}")]
    EigenvalueBelowFloor { value: f64, floor: f64 },
    #[error("negative eigenvalue {value:.6e} beyond tolerance {tol:.6e}")]
    NotPositiveSemidefinite { value: f64, tol: f64 },
    #[error("requested tolerance {requested:.3e} not met (achieved {achieved:.3e})")]
    ToleranceNotMet { requested: f64, achieved: f64 },
    #[error("tolerance must be positive, got {0}")]
    NonPositiveTolerance(f64),
}

/// Dense complex matrix in row-major order. The universal carrier for
/// operators, states, and channels.
#[derive(Clone, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<Complex64>,
}

impl ComplexMatrix {
    /// Build from row-major entries, rejecting shape mismatches and
    /// non-finite values.
    pub fn new(rows: usize, cols: usize, entries: Vec<Complex64>) -> Result<Self, LinalgError> {
        if entries.len() != rows * cols {
            return Err(LinalgError::BadEntryCount { rows, cols, got: entries.len() });
        }
        let m = ComplexMatrix { rows, cols, entries };
        m.check_finite()?;
        Ok(m)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        ComplexMatrix { rows, cols, entries: vec![Complex64::new(0.0, 0.0); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::new(1.0, 0.0));
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut entries = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for c in 0..cols {
                entries.push(f(r, c));
            }
        }
        ComplexMatrix { rows, cols, entries }
    }

    /// Real diagonal matrix.
    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        Self::from_fn(n, n, |r, c| {
            if r == c {
                Complex64::new(diag[r], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        })
    }

    /// Rank-one |u><v|.
    pub fn outer(u: &[Complex64], v: &[Complex64]) -> Self {
        Self::from_fn(u.len(), v.len(), |r, c| u[r] * v[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    #[inline]
    pub fn at(&self, r: usize, c: usize) -> Complex64 {
        self.entries[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: Complex64) {
        self.entries[r * self.cols + c] = v;
    }

    pub fn check_finite(&self) -> Result<(), LinalgError> {
        for r in 0..self.rows {
            for c in 0..self.cols {
                let z = self.at(r, c);
                if !z.re.is_finite() || !z.im.is_finite() {
                    return Err(LinalgError::NonFinite { row: r, col: c });
                }
            }
        }
        Ok(())
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.at(c, r).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |r, c| self.at(c, r))
    }

    pub fn conjugate(&self) -> Self {
        Self::from_fn(self.rows, self.cols, |r, c| self.at(r, c).conj())
    }

    pub fn scaled(&self, s: f64) -> Self {
        self.scaled_c(Complex64::new(s, 0.0))
    }

    pub fn scaled_c(&self, s: Complex64) -> Self {
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|z| z * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        debug_assert!(self.is_square());
        (0..self.rows).map(|i| self.at(i, i)).sum()
    }

    /// Hilbert-Schmidt inner product <A,B> = Tr(A* B).
    pub fn inner(&self, other: &Self) -> Complex64 {
        debug_assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.entries
            .iter()
            .zip(other.entries.iter())
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Matrix-vector product.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        debug_assert_eq!(self.cols, v.len());
        self.entries
            .chunks_exact(self.cols)
            .map(|row| row.iter().zip(v.iter()).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(
            self.cols, other.rows,
            "matmul shape mismatch: {}x{} * {}x{}",
            self.rows, self.cols, other.rows, other.cols
        );
        let mut out = Self::zeros(self.rows, other.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.at(r, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                let brow = &other.entries[k * other.cols..(k + 1) * other.cols];
                let orow = &mut out.entries[r * other.cols..(r + 1) * other.cols];
                for c in 0..other.cols {
                    orow[c] += a * brow[c];
                }
            }
        }
        out
    }

    /// Frobenius asymmetry ||A - A*||_2.
    pub fn asymmetry(&self) -> f64 {
        debug_assert!(self.is_square());
        let mut sum = 0.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                let d = self.at(r, c) - self.at(c, r).conj();
                sum += d.norm_sqr();
            }
        }
        sum.sqrt()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.is_square() && self.asymmetry() <= tol
    }

    /// Return (A + A*)/2 if the asymmetry is within the silent-symmetrization
    /// slack, otherwise an error. Iterated exponentials accumulate tiny
    /// asymmetry, so exact Hermiticity cannot be demanded of callers.
    pub fn hermitize(&self) -> Result<Self, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::NonSquare { rows: self.rows, cols: self.cols });
        }
        let tol = HERMITIAN_SLACK * self.frobenius_norm().max(1.0);
        let asym = self.asymmetry();
        if asym > tol {
            return Err(LinalgError::NotHermitian { asymmetry: asym, tol });
        }
        Ok(Self::from_fn(self.rows, self.cols, |r, c| {
            (self.at(r, c) + self.at(c, r).conj()) * 0.5
        }))
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (r, c): (usize, usize)) -> &Complex64 {
        &self.entries[r * self.cols + c]
    }
}

impl Add for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "add shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols), "sub shape mismatch");
        ComplexMatrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&rhs.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Mul for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                let z = self.at(r, c);
                write!(f, "{:+.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

/// Complex scalar shorthand used throughout the crate.
#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn new_rejects_bad_entry_count() {
        let err = ComplexMatrix::new(2, 2, vec![c64(1.0, 0.0); 3]).unwrap_err();
        assert_eq!(err, LinalgError::BadEntryCount { rows: 2, cols: 2, got: 3 });
    }

    #[test]
    fn new_rejects_non_finite() {
        let err = ComplexMatrix::new(1, 2, vec![c64(1.0, 0.0), c64(f64::NAN, 0.0)]).unwrap_err();
        assert_eq!(err, LinalgError::NonFinite { row: 0, col: 1 });
    }

    #[test]
    fn matmul_and_adjoint() {
        let a = ComplexMatrix::new(2, 2, vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)])
            .unwrap();
        let b = a.adjoint();
        let p = &a * &b;
        assert_eq!(p.at(0, 0), c64(1.0, 0.0));
        assert_eq!(p.at(1, 1), c64(0.0, 0.0));
    }

    #[test]
    fn hermitize_symmetrizes_small_asymmetry() {
        let mut m = ComplexMatrix::identity(2);
        m.set(0, 1, c64(0.5, 1e-10));
        m.set(1, 0, c64(0.5, 1e-10)); // conj would be -1e-10
        let h = m.hermitize().unwrap();
        assert!(h.asymmetry() < 1e-15);
    }

    #[test]
    fn hermitize_rejects_large_asymmetry() {
        let mut m = ComplexMatrix::identity(2);
        m.set(0, 1, c64(1.0, 0.0));
        assert!(matches!(m.hermitize(), Err(LinalgError::NotHermitian { .. })));
    }
}
