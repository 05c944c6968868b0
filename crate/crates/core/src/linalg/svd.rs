//! Rank-revealing singular value decomposition via one-sided Jacobi.

use super::{ComplexMatrix, LinalgError};
use num_complex::Complex64;

const MAX_SWEEPS: usize = 128;

/// M = left * diag(singulars) * right^* with orthonormal columns on both
/// sides and singular values sorted descending. Values at or below the rank
/// cutoff are dropped, so every retained singular value is strictly positive.
#[derive(Clone, Debug)]
pub struct Svd {
    pub left: ComplexMatrix,
    pub right: ComplexMatrix,
    pub singulars: Vec<f64>,
}

impl Svd {
    pub fn rank(&self) -> usize {
        self.singulars.len()
    }

    pub fn reconstruct(&self) -> ComplexMatrix {
        let r = self.rank();
        let mut ls = ComplexMatrix::zeros(self.left.rows(), r);
        for i in 0..self.left.rows() {
            for j in 0..r {
                ls.set(i, j, self.left.at(i, j) * self.singulars[j]);
            }
        }
        &ls * &self.right.adjoint()
    }
}

/// Rank-revealing SVD with reconstruction accuracy `tol` (Frobenius).
/// Singular values <= `rank_cutoff` are dropped.
pub fn svd(m: &ComplexMatrix, tol: f64, rank_cutoff: f64) -> Result<Svd, LinalgError> {
    if tol <= 0.0 {
        return Err(LinalgError::NonPositiveTolerance(tol));
    }
    if rank_cutoff <= 0.0 {
        return Err(LinalgError::NonPositiveTolerance(rank_cutoff));
    }
    m.check_finite()?;
    let out = svd_inner(m, rank_cutoff);
    let achieved = (&out.reconstruct() - m).frobenius_norm();
    // Dropped singular values contribute up to their own mass to the
    // residual; the caller's cutoff bounds that contribution.
    let allowed = tol + rank_cutoff * (m.rows().min(m.cols()) as f64).sqrt();
    if achieved > allowed {
        return Err(LinalgError::ToleranceNotMet { requested: tol, achieved });
    }
    Ok(out)
}

/// All singular values of `m`, sorted descending, nothing dropped.
pub fn singular_values(m: &ComplexMatrix) -> Vec<f64> {
    let tall = if m.rows() >= m.cols() { m.clone() } else { m.adjoint() };
    let (w, _) = orthogonalize_columns(tall);
    let mut sig: Vec<f64> = (0..w.cols()).map(|j| column_norm(&w, j)).collect();
    sig.sort_by(|a, b| b.partial_cmp(a).unwrap());
    sig
}

fn svd_inner(m: &ComplexMatrix, rank_cutoff: f64) -> Svd {
    // One-sided Jacobi wants at least as many rows as columns.
    let flipped = m.rows() < m.cols();
    let work = if flipped { m.adjoint() } else { m.clone() };
    let (w, v) = orthogonalize_columns(work);

    let mut order: Vec<(f64, usize)> = (0..w.cols()).map(|j| (column_norm(&w, j), j)).collect();
    order.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let kept: Vec<(f64, usize)> =
        order.into_iter().filter(|&(s, _)| s > rank_cutoff).collect();
    let r = kept.len();

    let mut left = ComplexMatrix::zeros(w.rows(), r);
    let mut right = ComplexMatrix::zeros(v.rows(), r);
    let mut singulars = Vec::with_capacity(r);
    for (out_j, &(s, j)) in kept.iter().enumerate() {
        singulars.push(s);
        for i in 0..w.rows() {
            left.set(i, out_j, w.at(i, j) / s);
        }
        for i in 0..v.rows() {
            right.set(i, out_j, v.at(i, j));
        }
    }

    if flipped {
        Svd { left: right, right: left, singulars }
    } else {
        Svd { left, right, singulars }
    }
}

/// Hestenes sweep loop: returns (W, V) with W = input * V, V unitary, and the
/// columns of W pairwise orthogonal.
fn orthogonalize_columns(mut w: ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
    let m = w.cols();
    let mut v = ComplexMatrix::identity(m);
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..m {
            for q in (p + 1)..m {
                let alpha = column_norm_sqr(&w, p);
                let beta = column_norm_sqr(&w, q);
                let gamma = column_inner(&w, p, q);
                let mag = gamma.norm();
                if mag < 1e-300 || mag <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / mag;
                let tau = (beta - alpha) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let sp = phase * s;
                for i in 0..w.rows() {
                    let wip = w.at(i, p);
                    let wiq = w.at(i, q);
                    w.set(i, p, wip * c - wiq * sp.conj());
                    w.set(i, q, wip * sp + wiq * c);
                }
                for i in 0..m {
                    let vip = v.at(i, p);
                    let viq = v.at(i, q);
                    v.set(i, p, vip * c - viq * sp.conj());
                    v.set(i, q, vip * sp + viq * c);
                }
            }
        }
        if !rotated {
            break;
        }
    }
    (w, v)
}

fn column_norm_sqr(m: &ComplexMatrix, j: usize) -> f64 {
    (0..m.rows()).map(|i| m.at(i, j).norm_sqr()).sum()
}

fn column_norm(m: &ComplexMatrix, j: usize) -> f64 {
    column_norm_sqr(m, j).sqrt()
}

fn column_inner(m: &ComplexMatrix, p: usize, q: usize) -> Complex64 {
    (0..m.rows()).map(|i| m.at(i, p).conj() * m.at(i, q)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn identity_singulars() {
        let s = svd(&ComplexMatrix::identity(3), 1e-12, 1e-12).unwrap();
        assert_eq!(s.singulars, vec![1.0; 3]);
    }

    #[test]
    fn rank_one_outer_product() {
        let u = vec![c64(0.6, 0.0), c64(0.8, 0.0)];
        let v = vec![c64(0.0, 1.0), c64(0.0, 0.0)];
        let m = ComplexMatrix::outer(&u, &v);
        let s = svd(&m, 1e-12, 1e-12).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.singulars[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_row_dropped() {
        let m = ComplexMatrix::from_diag(&[3.0, 0.0]);
        let s = svd(&m, 1e-12, 1e-12).unwrap();
        assert_eq!(s.rank(), 1);
        assert!((s.singulars[0] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn wide_matrix_reconstructs() {
        let m = ComplexMatrix::new(
            2,
            3,
            vec![
                c64(1.0, 0.5),
                c64(0.0, -1.0),
                c64(2.0, 0.0),
                c64(0.3, 0.0),
                c64(1.0, 1.0),
                c64(-0.7, 0.2),
            ],
        )
        .unwrap();
        let s = svd(&m, 1e-10, 1e-13).unwrap();
        assert!((&s.reconstruct() - &m).frobenius_norm() < 1e-12);
        let gram = &s.left.adjoint() * &s.left;
        assert!((&gram - &ComplexMatrix::identity(s.rank())).frobenius_norm() < 1e-12);
    }
}
