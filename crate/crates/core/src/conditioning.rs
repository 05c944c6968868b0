//! Conditioning: turn a raw (|psi>, Pi) pair into a well-conditioned
//! interactive measurement operator with matching decision thresholds.
//!
//! The raw operator R built from |psi> and Pi can be arbitrarily
//! ill-conditioned or singular. The transformation here bins the Schmidt
//! coefficients of |psi| into dyadic intervals, keeps one bin with mass at
//! least 1/(2k), replaces the state by the maximally entangled vector over
//! that bin, compresses Pi onto the bin's Z-vectors, and mixes the compressed
//! operator with the identity at weight 1/(64k). The result Q satisfies
//! 1/(64kN) <= Q <= 1/N (so kappa(Q) <= 64k) while a promise gap of the
//! original instance survives at gamma = 3/(64k), epsilon = 1/12.

use crate::linalg::{kron, svd, ComplexMatrix, LinalgError};
use crate::quantum::{InteractiveMeasurement, MeasurementOperator, PureState, QuantumError};
use num_complex::Complex64;
use thiserror::Error;

/// Schmidt coefficients below this are numerically zero and dropped before
/// binning.
pub const DEFAULT_SCHMIDT_CUTOFF: f64 = 1e-14;

#[derive(Debug, Error)]
pub enum ConditionError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("no bin with index <= {k} carries mass >= 1/(2k); k is invalid for this state")]
    NoQualifyingBin { k: usize },
    #[error("state dimensions ({dim_x},{dim_z}) are not 2^p = {expected} on both sides")]
    WrongDims { dim_x: usize, dim_z: usize, expected: usize },
    #[error("reference evaluation failed: {0}")]
    Reference(String),
}

/// Schmidt decomposition |psi> = sum_j sqrt(lambda_j) |x_j>|z_j> with
/// coefficients sorted descending and summing to 1.
#[derive(Clone, Debug)]
pub struct SchmidtData {
    /// lambda_j, descending, nonnegative, summing to 1.
    pub coefficients: Vec<f64>,
    /// Columns are the |x_j>.
    pub x_vectors: ComplexMatrix,
    /// Columns are the |z_j>.
    pub z_vectors: ComplexMatrix,
}

impl SchmidtData {
    /// Reassemble sum_j sqrt(lambda_j) |x_j>|z_j>.
    pub fn reconstruct(&self) -> Vec<Complex64> {
        let dx = self.x_vectors.rows();
        let dz = self.z_vectors.rows();
        let mut out = vec![Complex64::new(0.0, 0.0); dx * dz];
        for (j, &lam) in self.coefficients.iter().enumerate() {
            let w = lam.sqrt();
            for i in 0..dx {
                for z in 0..dz {
                    out[i * dz + z] += self.x_vectors.at(i, j) * self.z_vectors.at(z, j) * w;
                }
            }
        }
        out
    }
}

/// Schmidt decomposition by SVD of the reshaped amplitude matrix; squared
/// singular values are the coefficients. Coefficients <= `cutoff` are
/// dropped.
pub fn schmidt(psi: &PureState, cutoff: f64) -> Result<SchmidtData, ConditionError> {
    let a = ComplexMatrix::from_fn(psi.dim_x(), psi.dim_z(), |i, z| {
        psi.amplitudes()[i * psi.dim_z() + z]
    });
    let dec = svd(&a, 1e-10, cutoff.sqrt().max(1e-300))?;
    let coefficients: Vec<f64> = dec.singulars.iter().map(|s| s * s).collect();
    // z_j is the conjugated right singular vector: A = U S V* means
    // psi = sum_j s_j u_j (x) conj(v_j).
    Ok(SchmidtData {
        coefficients,
        x_vectors: dec.left,
        z_vectors: dec.right.conjugate(),
    })
}

/// Pick the smallest bin index i in 1..=k whose dyadic interval
/// I_i = (2^-i, 2^-i+1] holds coefficients of total mass >= 1/(2k). Returns
/// the bin index and the member indices.
pub fn select_bin(s: &SchmidtData, k: usize) -> Result<(usize, Vec<usize>), ConditionError> {
    for i in 1..=k {
        let lo = 2.0_f64.powi(-(i as i32));
        let hi = 2.0_f64.powi(-(i as i32) + 1);
        let sigma: Vec<usize> = s
            .coefficients
            .iter()
            .enumerate()
            .filter(|&(_, &lam)| lam > lo && lam <= hi)
            .map(|(j, _)| j)
            .collect();
        let mass: f64 = sigma.iter().map(|&j| s.coefficients[j]).sum();
        if mass >= 1.0 / (2.0 * k as f64) {
            return Ok((i, sigma));
        }
    }
    Err(ConditionError::NoQualifyingBin { k })
}

/// Conditioned instance: Q with kappa(Q) <= 64k on Y (x) X for X = C^N,
/// N = |Sigma|, together with the thresholds the solver needs.
#[derive(Clone, Debug)]
pub struct ConditionedInstance {
    pub q: InteractiveMeasurement,
    /// Decision threshold 3/(64k).
    pub gamma: f64,
    /// Promise half-gap, fixed at 1/12.
    pub epsilon: f64,
    /// k = p + 1.
    pub k: usize,
    /// Chosen bin index i.
    pub selected_bin: usize,
    /// Schmidt indices in the chosen bin (the set Sigma).
    pub selected_indices: Vec<usize>,
}

/// Overlap <phi|psi> = sum_{j in Sigma} sqrt(lambda_j / N) of the bin's
/// uniform vector with the original state; real and nonnegative by
/// construction.
pub fn bin_overlap(s: &SchmidtData, sigma: &[usize]) -> f64 {
    let n = sigma.len() as f64;
    sigma.iter().map(|&j| s.coefficients[j].sqrt()).sum::<f64>() / n.sqrt()
}

/// Full conditioning pass. The replacement vector |phi> is uniform over the
/// chosen bin, so in the compressed basis it becomes the maximally entangled
/// |tau> whose state operator is 1/sqrt(N); Q is then the compressed, mixed
/// measurement operator scaled by 1/N.
pub fn condition(
    psi: &PureState,
    pi: &MeasurementOperator,
    p: usize,
) -> Result<ConditionedInstance, ConditionError> {
    let m = 1usize << p;
    if psi.dim_x() != m || psi.dim_z() != m {
        return Err(ConditionError::WrongDims {
            dim_x: psi.dim_x(),
            dim_z: psi.dim_z(),
            expected: m,
        });
    }
    if pi.side() != m * m {
        return Err(ConditionError::Quantum(QuantumError::DimensionMismatch(format!(
            "Pi side {} does not match M^2 = {}",
            pi.side(),
            m * m
        ))));
    }
    let k = p + 1;
    let sdata = schmidt(psi, DEFAULT_SCHMIDT_CUTOFF)?;
    let (bin, sigma) = select_bin(&sdata, k)?;
    let n = sigma.len();

    // Z isometry C^N -> Z_0 built from the bin's z-vectors.
    let z_iso = ComplexMatrix::from_fn(m, n, |r, c| sdata.z_vectors.at(r, sigma[c]));
    let lift = kron(&ComplexMatrix::identity(m), &z_iso);
    let compressed = &(&lift.adjoint() * pi.matrix()) * &lift;

    let w = 1.0 / (64.0 * k as f64);
    let mixed = &compressed.scaled(1.0 - w) + &ComplexMatrix::identity(m * n).scaled(w);
    let q = InteractiveMeasurement::new(mixed.scaled(1.0 / n as f64), m, n)?;

    Ok(ConditionedInstance {
        q,
        gamma: 3.0 / (64.0 * k as f64),
        epsilon: 1.0 / 12.0,
        k,
        selected_bin: bin,
        selected_indices: sigma,
    })
}

/// Result of checking the conditioning inequalities with an external
/// reference for mu.
#[derive(Clone, Debug)]
pub struct SandwichReport {
    pub k: usize,
    /// (lower, upper) bracket for mu of the raw operator.
    pub mu_raw: (f64, f64),
    /// (lower, upper) bracket for mu of the conditioned operator.
    pub mu_conditioned: (f64, f64),
    /// mu_raw - (1 - 1/(8k)) <= mu_conditioned held.
    pub lower_ok: bool,
    /// mu_conditioned <= 4k mu_raw + 1/(64k) held.
    pub upper_ok: bool,
}

impl SandwichReport {
    pub fn ok(&self) -> bool {
        self.lower_ok && self.upper_ok
    }
}

/// Evaluate mu on the raw and conditioned operators through a caller-supplied
/// reference (an oracle returning certified lower/upper brackets) and check
/// the two-sided conditioning inequalities up to `slack`.
pub fn sandwich_check<F>(
    psi: &PureState,
    pi: &MeasurementOperator,
    p: usize,
    slack: f64,
    mut oracle_mu: F,
) -> Result<SandwichReport, ConditionError>
where
    F: FnMut(&ComplexMatrix, (usize, usize)) -> Result<(f64, f64), ConditionError>,
{
    let m = 1usize << p;
    let raw = crate::quantum::build_q(psi, pi)?;
    let mu_raw = oracle_mu(&raw, (m, m))?;
    let cond = condition(psi, pi, p)?;
    let mu_q = oracle_mu(cond.q.matrix(), (cond.q.dim_y(), cond.q.dim_x()))?;

    let k = cond.k as f64;
    let lower_bound = mu_raw.0 - (1.0 - 1.0 / (8.0 * k));
    let upper_bound = 4.0 * k * mu_raw.1 + 1.0 / (64.0 * k);
    Ok(SandwichReport {
        k: cond.k,
        mu_raw,
        mu_conditioned: mu_q,
        lower_ok: lower_bound <= mu_q.1 + slack,
        upper_ok: mu_q.0 <= upper_bound + slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::c64;

    fn state(amps: Vec<Complex64>, dx: usize, dz: usize) -> PureState {
        PureState::new(amps, dx, dz).unwrap()
    }

    #[test]
    fn schmidt_product_state() {
        let psi = state(vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)], 2, 2);
        let s = schmidt(&psi, DEFAULT_SCHMIDT_CUTOFF).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn schmidt_bell_state() {
        let r = 1.0 / 2.0_f64.sqrt();
        let psi = state(vec![c64(r, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(r, 0.0)], 2, 2);
        let s = schmidt(&psi, DEFAULT_SCHMIDT_CUTOFF).unwrap();
        assert_eq!(s.coefficients.len(), 2);
        assert!((s.coefficients[0] - 0.5).abs() < 1e-12);
        assert!((s.coefficients[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn schmidt_skewed_state() {
        let psi = state(
            vec![c64(0.9_f64.sqrt(), 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.1_f64.sqrt(), 0.0)],
            2,
            2,
        );
        let s = schmidt(&psi, DEFAULT_SCHMIDT_CUTOFF).unwrap();
        assert!((s.coefficients[0] - 0.9).abs() < 1e-12);
        assert!((s.coefficients[1] - 0.1).abs() < 1e-12);
    }

    #[test]
    fn schmidt_reconstructs() {
        let a = 0.3_f64;
        let amps = vec![
            c64(a, 0.1),
            c64(0.2, -0.4),
            c64(0.5, 0.0),
            c64(0.1, 0.2),
        ];
        let norm = amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let amps: Vec<Complex64> = amps.into_iter().map(|z| z / norm).collect();
        let psi = state(amps.clone(), 2, 2);
        let s = schmidt(&psi, DEFAULT_SCHMIDT_CUTOFF).unwrap();
        let rec = s.reconstruct();
        let err: f64 = rec
            .iter()
            .zip(amps.iter())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            .sqrt();
        assert!(err < 1e-9, "reconstruction error {err}");
        let total: f64 = s.coefficients.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
    }

    fn fake_schmidt(coeffs: &[f64]) -> SchmidtData {
        let n = coeffs.len();
        SchmidtData {
            coefficients: coeffs.to_vec(),
            x_vectors: ComplexMatrix::identity(n),
            z_vectors: ComplexMatrix::identity(n),
        }
    }

    #[test]
    fn select_bin_single_coefficient() {
        let (i, sigma) = select_bin(&fake_schmidt(&[1.0]), 2).unwrap();
        assert_eq!((i, sigma), (1, vec![0]));
    }

    #[test]
    fn select_bin_boundary_inclusive() {
        // 1/2 belongs to I_2 = (1/4, 1/2], not I_1 = (1/2, 1].
        let (i, sigma) = select_bin(&fake_schmidt(&[0.5, 0.5]), 2).unwrap();
        assert_eq!((i, sigma), (2, vec![0, 1]));
    }

    #[test]
    fn select_bin_enumerated_intervals() {
        // 0.6 in I_1, 0.3 in I_2, 0.1 in I_4 (excluded for k = 3); the first
        // bin already carries mass 0.6 >= 1/6.
        let (i, sigma) = select_bin(&fake_schmidt(&[0.6, 0.3, 0.1]), 3).unwrap();
        assert_eq!((i, sigma), (1, vec![0]));
    }

    #[test]
    fn select_bin_failure() {
        // All mass below 2^-k for k = 1: no qualifying bin.
        let (_i, _s) = match select_bin(&fake_schmidt(&[0.25, 0.25, 0.25, 0.25]), 1) {
            Err(ConditionError::NoQualifyingBin { k }) => (k, ()),
            other => panic!("expected NoQualifyingBin, got {other:?}"),
        };
    }

    #[test]
    fn condition_maximally_entangled_keeps_everything() {
        let r = 1.0 / 2.0_f64.sqrt();
        let psi = state(vec![c64(r, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(r, 0.0)], 2, 2);
        let pi = MeasurementOperator::new(ComplexMatrix::identity(4)).unwrap();
        let inst = condition(&psi, &pi, 1).unwrap();
        // Every coefficient is 2^-p, landing in bin p+1 with all indices.
        assert_eq!(inst.selected_bin, 2);
        assert_eq!(inst.q.dim_x(), 2);
        assert_eq!(inst.k, 2);
        assert!((inst.gamma - 3.0 / 128.0).abs() < 1e-15);
    }

    #[test]
    fn condition_product_state_direct_formula() {
        // Product state: N = 1, so Q is the <z|-block of the mixed Pi scaled
        // by 1/N = 1. Hand-compute from the definition.
        let psi = state(vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0)], 2, 2);
        let mut pim = ComplexMatrix::identity(4).scaled(0.5);
        pim.set(0, 0, c64(0.9, 0.0));
        let pi = MeasurementOperator::new(pim.clone()).unwrap();
        let inst = condition(&psi, &pi, 1).unwrap();
        assert_eq!(inst.q.dim_x(), 1);
        let k = 2.0_f64;
        let w = 1.0 / (64.0 * k);
        // z_0 = |0>: block entries Pi[(y,0),(y',0)].
        for y in 0..2 {
            for y2 in 0..2 {
                let want = pim.at(y * 2, y2 * 2) * (1.0 - w)
                    + if y == y2 { c64(w, 0.0) } else { c64(0.0, 0.0) };
                let got = inst.q.matrix().at(y, y2);
                assert!((got - want).norm() < 1e-12, "block ({y},{y2})");
            }
        }
    }

    #[test]
    fn condition_accept_always_preserves_mu_one() {
        // pi = 1: mu(Q) = (1 - 1/(64k)) * 1 + 1/(64k) = 1. Check the operator
        // has the exact form 1/N * 1.
        let r = 1.0 / 2.0_f64.sqrt();
        let psi = state(vec![c64(r, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(r, 0.0)], 2, 2);
        let pi = MeasurementOperator::new(ComplexMatrix::identity(4)).unwrap();
        let inst = condition(&psi, &pi, 1).unwrap();
        let want = ComplexMatrix::identity(4).scaled(0.5);
        assert!((inst.q.matrix() - &want).frobenius_norm() < 1e-12);
    }
}
