//! Hermitian eigendecomposition via cyclic Jacobi rotations.

use super::{ComplexMatrix, LinalgError};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 128;

/// Spectral decomposition H = U diag(eigenvalues) U* with eigenvalues sorted
/// from largest to smallest and the columns of `unitary` the matching
/// eigenvectors.
#[derive(Clone, Debug)]
pub struct HermitianEig {
    pub unitary: ComplexMatrix,
    pub eigenvalues: Vec<f64>,
}

impl HermitianEig {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    /// U diag(f(lambda)) U*.
    pub fn apply_fn(&self, f: impl Fn(f64) -> f64) -> ComplexMatrix {
        let n = self.dim();
        let u = &self.unitary;
        let mut scaled = ComplexMatrix::zeros(n, n);
        for r in 0..n {
            for c in 0..n {
                scaled.set(r, c, u.at(r, c) * f(self.eigenvalues[c]));
            }
        }
        &scaled * &u.adjoint()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        self.apply_fn(|x| x)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("empty spectrum")
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    /// Eigenvector for the j-th (descending) eigenvalue.
    pub fn eigenvector(&self, j: usize) -> Vec<Complex64> {
        (0..self.dim()).map(|r| self.unitary.at(r, j)).collect()
    }
}

/// Eigendecomposition of a Hermitian matrix to reconstruction accuracy `tol`
/// (Frobenius). Inputs within the silent-symmetrization slack of Hermitian
/// are symmetrized first; larger asymmetry is an error.
pub fn herm_eig(h: &ComplexMatrix, tol: f64) -> Result<HermitianEig, LinalgError> {
    if tol <= 0.0 {
        return Err(LinalgError::NonPositiveTolerance(tol));
    }
    if !h.is_square() {
        return Err(LinalgError::NonSquare { rows: h.rows(), cols: h.cols() });
    }
    h.check_finite()?;
    let mut a = h.hermitize()?;
    let n = a.rows();
    let mut u = ComplexMatrix::identity(n);
    let scale = a.frobenius_norm().max(1.0);

    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a.at(p, q).norm_sqr();
            }
        }
        if off.sqrt() <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                rotate(&mut a, &mut u, p, q);
            }
        }
    }

    // Diagonal of a Hermitian matrix is real; imaginary residue is roundoff.
    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (a.at(i, i).re, i)).collect();
    pairs.sort_by(|x, y| y.0.partial_cmp(&x.0).unwrap());
    let eigenvalues: Vec<f64> = pairs.iter().map(|&(v, _)| v).collect();
    let unitary = ComplexMatrix::from_fn(n, n, |r, c| u.at(r, pairs[c].1));

    let out = HermitianEig { unitary, eigenvalues };
    let achieved = (&out.reconstruct() - h).frobenius_norm();
    if achieved > tol {
        return Err(LinalgError::ToleranceNotMet { requested: tol, achieved });
    }
    Ok(out)
}

/// One Jacobi rotation zeroing the (p,q) off-diagonal entry: A <- G* A G,
/// U <- U G with G[p,p]=G[q,q]=c, G[p,q]=s*phase, G[q,p]=-s*conj(phase).
fn rotate(a: &mut ComplexMatrix, u: &mut ComplexMatrix, p: usize, q: usize) {
    let apq = a.at(p, q);
    let mag = apq.norm();
    if mag < 1e-300 {
        return;
    }
    let phase = apq / mag;
    let app = a.at(p, p).re;
    let aqq = a.at(q, q).re;
    let tau = (aqq - app) / (2.0 * mag);
    let t = if tau >= 0.0 {
        1.0 / (tau + (1.0 + tau * tau).sqrt())
    } else {
        -1.0 / (-tau + (1.0 + tau * tau).sqrt())
    };
    let c = 1.0 / (1.0 + t * t).sqrt();
    let s = t * c;
    let sp = phase * s;

    let n = a.rows();
    // Column update: B = A G.
    for i in 0..n {
        let aip = a.at(i, p);
        let aiq = a.at(i, q);
        a.set(i, p, aip * c - aiq * sp.conj());
        a.set(i, q, aip * sp + aiq * c);
    }
    // Row update: A' = G* B.
    for j in 0..n {
        let apj = a.at(p, j);
        let aqj = a.at(q, j);
        a.set(p, j, apj * c - aqj * sp);
        a.set(q, j, apj * sp.conj() + aqj * c);
    }
    // Clean the entries the rotation is meant to zero.
    a.set(p, q, Complex64::new(0.0, 0.0));
    a.set(q, p, Complex64::new(0.0, 0.0));
    a.set(p, p, Complex64::new(a.at(p, p).re, 0.0));
    a.set(q, q, Complex64::new(a.at(q, q).re, 0.0));

    for i in 0..u.rows() {
        let uip = u.at(i, p);
        let uiq = u.at(i, q);
        u.set(i, p, uip * c - uiq * sp.conj());
        u.set(i, q, uip * sp + uiq * c);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn identity_eigenvalues() {
        let e = herm_eig(&ComplexMatrix::identity(4), 1e-12).unwrap();
        assert_eq!(e.eigenvalues, vec![1.0; 4]);
        let uu = &e.unitary.adjoint() * &e.unitary;
        assert!((&uu - &ComplexMatrix::identity(4)).frobenius_norm() < 1e-12);
    }

    #[test]
    fn already_diagonal() {
        let e = herm_eig(&ComplexMatrix::from_diag(&[2.0, 1.0]), 1e-12).unwrap();
        assert_eq!(e.eigenvalues, vec![2.0, 1.0]);
        assert!((e.unitary.at(0, 0).norm() - 1.0).abs() < 1e-12);
        assert!((e.unitary.at(1, 1).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn pauli_x_spectrum() {
        let x = ComplexMatrix::new(
            2,
            2,
            vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)],
        )
        .unwrap();
        let e = herm_eig(&x, 1e-12).unwrap();
        assert!((e.eigenvalues[0] - 1.0).abs() < 1e-14);
        assert!((e.eigenvalues[1] + 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_non_square() {
        let m = ComplexMatrix::zeros(2, 3);
        assert!(matches!(herm_eig(&m, 1e-12), Err(LinalgError::NonSquare { .. })));
    }
}
