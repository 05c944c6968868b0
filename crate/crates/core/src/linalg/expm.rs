//! Matrix exponential by scaling-and-squaring with a truncated series.

use super::svd::singular_values;
use super::{ComplexMatrix, LinalgError};

/// Series length on the scaled matrix (norm <= 1/2); the truncation error is
/// far below double precision.
const SERIES_TERMS: u32 = 20;

/// exp(M) for square M with ||M|| <= norm_bound. The bound is declared by the
/// caller and checked against a spectral-norm estimate; exceeding it is an
/// error rather than a silent slow path.
pub fn expm(m: &ComplexMatrix, norm_bound: f64, tol: f64) -> Result<ComplexMatrix, LinalgError> {
    if tol <= 0.0 {
        return Err(LinalgError::NonPositiveTolerance(tol));
    }
    if !m.is_square() {
        return Err(LinalgError::NonSquare { rows: m.rows(), cols: m.cols() });
    }
    m.check_finite()?;
    let n = m.rows();
    if n == 0 {
        return Ok(ComplexMatrix::zeros(0, 0));
    }
    let snorm = singular_values(m).first().copied().unwrap_or(0.0);
    if snorm > norm_bound * (1.0 + 1e-12) {
        return Err(LinalgError::NormBoundExceeded { estimate: snorm, bound: norm_bound });
    }

    // Scale down to norm <= 1/2, run the series, square back up.
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while snorm * scale > 0.5 {
        scale *= 0.5;
        squarings += 1;
    }
    let ms = m.scaled(scale);

    // Horner form of 1 + M(1 + M/2(1 + M/3(...))).
    let id = ComplexMatrix::identity(n);
    let mut acc = id.clone();
    for j in (1..=SERIES_TERMS).rev() {
        acc = &id + &ms.scaled(1.0 / j as f64).matmul(&acc);
    }
    for _ in 0..squarings {
        acc = acc.matmul(&acc);
    }
    acc.check_finite()?;
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    #[test]
    fn exp_zero_is_identity() {
        let e = expm(&ComplexMatrix::zeros(3, 3), 1.0, 1e-12).unwrap();
        assert!((&e - &ComplexMatrix::identity(3)).frobenius_norm() < 1e-14);
    }

    #[test]
    fn exp_diagonal() {
        let e = expm(&ComplexMatrix::from_diag(&[1.0, -2.0]), 3.0, 1e-12).unwrap();
        assert!((e.at(0, 0).re - 1.0_f64.exp()).abs() < 1e-13);
        assert!((e.at(1, 1).re - (-2.0_f64).exp()).abs() < 1e-15);
        assert!(e.at(0, 1).norm() < 1e-15);
    }

    #[test]
    fn exp_nilpotent_terminates() {
        let m = ComplexMatrix::new(
            2,
            2,
            vec![c64(0.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)],
        )
        .unwrap();
        let e = expm(&m, 2.0, 1e-12).unwrap();
        let want = ComplexMatrix::new(
            2,
            2,
            vec![c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0)],
        )
        .unwrap();
        assert!((&e - &want).frobenius_norm() < 1e-14);
    }

    #[test]
    fn norm_bound_enforced() {
        let m = ComplexMatrix::from_diag(&[5.0, 0.0]);
        assert!(matches!(
            expm(&m, 2.0, 1e-12),
            Err(LinalgError::NormBoundExceeded { .. })
        ));
    }
}
