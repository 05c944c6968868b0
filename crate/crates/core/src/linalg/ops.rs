//! Tensor-structure operations, norms, and positive-operator functions.

use super::eig::herm_eig;
use super::svd::singular_values;
use super::{ComplexMatrix, LinalgError};
use num_complex::Complex64;

/// Which tensor factor a partial trace removes from an operator on A (x) B.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TracedFactor {
    First,
    Second,
}

/// Kronecker product A (x) B.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (ar, ac) = (a.rows(), a.cols());
    let (br, bc) = (b.rows(), b.cols());
    let mut out = ComplexMatrix::zeros(ar * br, ac * bc);
    for i in 0..ar {
        for j in 0..ac {
            let aij = a.at(i, j);
            if aij.norm_sqr() == 0.0 {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out.set(i * br + k, j * bc + l, aij * b.at(k, l));
                }
            }
        }
    }
    out
}

/// Partial trace of an operator on A (x) B, removing the requested factor.
/// `dims` is (dim_a, dim_b); indices are grouped as a*dim_b + b.
pub fn partial_trace(
    m: &ComplexMatrix,
    dims: (usize, usize),
    traced: TracedFactor,
) -> Result<ComplexMatrix, LinalgError> {
    let (da, db) = dims;
    let side = da * db;
    if !m.is_square() || m.rows() != side {
        return Err(LinalgError::DimensionMismatch(format!(
            "partial trace over {}x{} factors needs a {side}x{side} operator, got {}x{}",
            da,
            db,
            m.rows(),
            m.cols()
        )));
    }
    match traced {
        TracedFactor::First => {
            let mut out = ComplexMatrix::zeros(db, db);
            for b in 0..db {
                for b2 in 0..db {
                    let mut sum = Complex64::new(0.0, 0.0);
                    for a in 0..da {
                        sum += m.at(a * db + b, a * db + b2);
                    }
                    out.set(b, b2, sum);
                }
            }
            Ok(out)
        }
        TracedFactor::Second => {
            let mut out = ComplexMatrix::zeros(da, da);
            for a in 0..da {
                for a2 in 0..da {
                    let mut sum = Complex64::new(0.0, 0.0);
                    for b in 0..db {
                        sum += m.at(a * db + b, a2 * db + b);
                    }
                    out.set(a, a2, sum);
                }
            }
            Ok(out)
        }
    }
}

/// vec(|i><j|) = |i>|j>: row-major flattening of A in L(X,Y) into Y (x) X.
/// Preserves the Hilbert-Schmidt inner product.
pub fn vectorize(a: &ComplexMatrix) -> Vec<Complex64> {
    a.entries().to_vec()
}

/// Reverse of [`vectorize`]: reshape a vector in Y (x) X back to a rows x cols
/// matrix in L(X,Y).
pub fn unvectorize(v: &[Complex64], rows: usize, cols: usize) -> ComplexMatrix {
    assert_eq!(v.len(), rows * cols, "unvectorize length mismatch");
    ComplexMatrix::from_fn(rows, cols, |r, c| v[r * cols + c])
}

/// Trace, Frobenius, and spectral norms: the 1, 2 and infinity norms of the
/// singular value vector.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Norms {
    pub trace: f64,
    pub frobenius: f64,
    pub spectral: f64,
}

pub fn norms(a: &ComplexMatrix) -> Norms {
    let sig = singular_values(a);
    Norms {
        trace: sig.iter().sum(),
        frobenius: a.frobenius_norm(),
        spectral: sig.first().copied().unwrap_or(0.0),
    }
}

pub fn spectral_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).first().copied().unwrap_or(0.0)
}

pub fn trace_norm(a: &ComplexMatrix) -> f64 {
    singular_values(a).iter().sum()
}

/// PSD square root with negative eigenvalues beyond `tol * scale` rejected
/// and smaller ones clamped to zero.
fn psd_sqrt_checked(p: &ComplexMatrix, tol: f64) -> Result<ComplexMatrix, LinalgError> {
    let eig = herm_eig(p, 1e-10 * p.frobenius_norm().max(1.0))?;
    let scale = eig.max_eigenvalue().abs().max(1.0);
    let min = eig.min_eigenvalue();
    if min < -tol * scale {
        return Err(LinalgError::NotPositiveSemidefinite { value: min, tol: tol * scale });
    }
    Ok(eig.apply_fn(|x| x.max(0.0).sqrt()))
}

/// Fidelity F(P,Q) = || sqrt(P) sqrt(Q) ||_1 for positive semidefinite P, Q.
pub fn fidelity(p: &ComplexMatrix, q: &ComplexMatrix) -> Result<f64, LinalgError> {
    if p.rows() != q.rows() || p.cols() != q.cols() {
        return Err(LinalgError::DimensionMismatch(format!(
            "fidelity needs equal dimensions, got {}x{} and {}x{}",
            p.rows(),
            p.cols(),
            q.rows(),
            q.cols()
        )));
    }
    let sp = psd_sqrt_checked(p, 1e-9)?;
    let sq = psd_sqrt_checked(q, 1e-9)?;
    Ok(trace_norm(&(&sp * &sq)))
}

/// Square root and inverse square root of a PSD operator, committed jointly:
/// both come from the same eigendecomposition, so S * T = 1 to roundoff.
/// Eigenvalues below `floor` mean the operator is effectively singular.
pub fn psd_sqrt_and_inv_sqrt(
    p: &ComplexMatrix,
    floor: f64,
) -> Result<(ComplexMatrix, ComplexMatrix), LinalgError> {
    let eig = herm_eig(p, 1e-10 * p.frobenius_norm().max(1.0))?;
    let min = eig.min_eigenvalue();
    if min < floor {
        return Err(LinalgError::EigenvalueBelowFloor { value: min, floor });
    }
    let s = eig.apply_fn(f64::sqrt);
    let t = eig.apply_fn(|x| 1.0 / x.sqrt());
    Ok((s, t))
}

/// Extend an n x r matrix with orthonormal columns to an n x n unitary,
/// deterministically: repeatedly append the standard basis vector with the
/// largest residual after projecting out the columns accepted so far.
pub fn complete_columns(m: &ComplexMatrix) -> ComplexMatrix {
    let n = m.rows();
    let r = m.cols();
    let mut cols: Vec<Vec<Complex64>> =
        (0..r).map(|j| (0..n).map(|i| m.at(i, j)).collect()).collect();
    while cols.len() < n {
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for cand in 0..n {
            let mut v = vec![Complex64::new(0.0, 0.0); n];
            v[cand] = Complex64::new(1.0, 0.0);
            for col in &cols {
                let overlap: Complex64 = col.iter().zip(v.iter()).map(|(a, b)| a.conj() * b).sum();
                for i in 0..n {
                    v[i] -= overlap * col[i];
                }
            }
            let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, v));
            }
        }
        let (norm, mut v) = best.expect("dimension is positive");
        debug_assert!(norm > 1e-8, "no independent direction left");
        for z in v.iter_mut() {
            *z /= norm;
        }
        cols.push(v);
    }
    ComplexMatrix::from_fn(n, n, |i, j| cols[j][i])
}

/// Unitary W (from the polar decomposition, completed deterministically on
/// rank deficiency) such that A * W is positive semidefinite.
pub fn polar_unitary_right(a: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let dec = super::svd::svd(a, 1e-9 * a.frobenius_norm().max(1.0), 1e-14 * a.max_abs().max(1e-300))?;
    let u = complete_columns(&dec.left);
    let v = complete_columns(&dec.right);
    Ok(&v * &u.adjoint())
}

/// Orthonormal-column factor of the polar decomposition of a tall matrix
/// (rows >= cols): the isometry maximizing Re <P, G>. Rank deficiency is
/// completed deterministically.
pub fn polar_isometry(g: &ComplexMatrix) -> Result<ComplexMatrix, LinalgError> {
    let rows = g.rows();
    let cols = g.cols();
    debug_assert!(rows >= cols);
    let dec = super::svd::svd(g, 1e-9 * g.frobenius_norm().max(1.0), 1e-14 * g.max_abs().max(1e-300))?;
    if dec.rank() == cols {
        return Ok(&dec.left * &dec.right.adjoint());
    }
    // Complete both factors so the result still has orthonormal columns.
    let left_full = complete_columns(&dec.left);
    let left_ext = ComplexMatrix::from_fn(rows, cols, |i, j| left_full.at(i, j));
    let right_full = complete_columns(&dec.right);
    Ok(&left_ext * &right_full.adjoint())
}
