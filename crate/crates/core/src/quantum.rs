//! States, measurement operators, channels in Choi form, and the interactive
//! measurement operator of a two-message verifier.
//!
//! Conventions: the message register X occupies the high-order tensor
//! factors and the private register Z the low-order ones, so a pure state on
//! X (x) Z is indexed as `i * dim_z + z`. The verifier's output qubit is the
//! first (most significant) qubit of the post-response Y (x) Z space.

use crate::linalg::{
    herm_eig, kron, partial_trace, ComplexMatrix, HermitianEig, LinalgError, TracedFactor,
};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("state norm {0} is not 1 within 1e-10")]
    NotNormalized(f64),
    #[error("amplitude count {len} does not equal dim_x {dim_x} * dim_z {dim_z}")]
    BadStateShape { len: usize, dim_x: usize, dim_z: usize },
    #[error("measurement operator eigenvalue {0:.3e} outside [0,1] beyond 1e-9")]
    NotAMeasurement(f64),
    #[error("gate {index} is not unitary: ||G*G - 1|| = {deviation:.3e}")]
    NonUnitaryGate { index: usize, deviation: f64 },
    #[error("gate {index} targets qubit {qubit}, register has {total} qubits")]
    QubitOutOfRange { index: usize, qubit: usize, total: usize },
    #[error("gate {index} has {targets} targets but a {side}x{side} matrix")]
    GateShapeMismatch { index: usize, targets: usize, side: usize },
    #[error("gate {index} repeats target qubit {qubit}")]
    RepeatedTarget { index: usize, qubit: usize },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("operator is singular: smallest eigenvalue {0:.3e}")]
    SingularOperator(f64),
}

/// Pure state on X (x) Z with unit norm.
#[derive(Clone, Debug)]
pub struct PureState {
    amplitudes: Vec<Complex64>,
    dim_x: usize,
    dim_z: usize,
}

impl PureState {
    pub fn new(amplitudes: Vec<Complex64>, dim_x: usize, dim_z: usize) -> Result<Self, QuantumError> {
        if amplitudes.len() != dim_x * dim_z {
            return Err(QuantumError::BadStateShape { len: amplitudes.len(), dim_x, dim_z });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(PureState { amplitudes, dim_x, dim_z })
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn dim_z(&self) -> usize {
        self.dim_z
    }

    /// |psi><psi| as a density operator on X (x) Z.
    pub fn density(&self) -> ComplexMatrix {
        ComplexMatrix::outer(&self.amplitudes, &self.amplitudes)
    }
}

/// Measurement operator: Hermitian with spectrum in `[0, 1]` (within 1e-9).
#[derive(Clone, Debug)]
pub struct MeasurementOperator {
    matrix: ComplexMatrix,
}

impl MeasurementOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QuantumError> {
        let h = matrix.hermitize()?;
        let eig = herm_eig(&h, 1e-9 * h.frobenius_norm().max(1.0))?;
        if eig.min_eigenvalue() < -1e-9 {
            return Err(QuantumError::NotAMeasurement(eig.min_eigenvalue()));
        }
        if eig.max_eigenvalue() > 1.0 + 1e-9 {
            return Err(QuantumError::NotAMeasurement(eig.max_eigenvalue()));
        }
        Ok(MeasurementOperator { matrix: h })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn side(&self) -> usize {
        self.matrix.rows()
    }
}

/// Choi representation J(Psi) of a super-operator from L(X) to L(Y), living
/// on Y (x) X.
#[derive(Clone, Debug)]
pub struct ChoiMatrix {
    pub matrix: ComplexMatrix,
    pub dim_y: usize,
    pub dim_x: usize,
}

impl ChoiMatrix {
    pub fn new(matrix: ComplexMatrix, dim_y: usize, dim_x: usize) -> Result<Self, QuantumError> {
        if matrix.rows() != dim_y * dim_x || !matrix.is_square() {
            return Err(QuantumError::DimensionMismatch(format!(
                "Choi matrix must be {0}x{0}, got {1}x{2}",
                dim_y * dim_x,
                matrix.rows(),
                matrix.cols()
            )));
        }
        Ok(ChoiMatrix { matrix, dim_y, dim_x })
    }

    /// Check complete positivity (PSD) and the trace-preserving marginal
    /// Tr_Y(J) = 1_X, both within `tol`.
    pub fn validate_channel(&self, tol: f64) -> Result<(), QuantumError> {
        let h = self.matrix.hermitize()?;
        let eig = herm_eig(&h, 1e-9 * h.frobenius_norm().max(1.0))?;
        if eig.min_eigenvalue() < -tol {
            return Err(QuantumError::InvalidChannel(format!(
                "negative eigenvalue {:.3e}",
                eig.min_eigenvalue()
            )));
        }
        let marginal = partial_trace(&self.matrix, (self.dim_y, self.dim_x), TracedFactor::First)?;
        let dev = (&marginal - &ComplexMatrix::identity(self.dim_x)).frobenius_norm();
        if dev > tol {
            return Err(QuantumError::InvalidChannel(format!(
                "Tr_Y(J) deviates from identity by {dev:.3e}"
            )));
        }
        Ok(())
    }

    /// J(Psi) = sum_k vec(K_k) vec(K_k)* for Kraus operators K_k in L(X,Y).
    pub fn from_kraus(kraus: &[ComplexMatrix]) -> Result<Self, QuantumError> {
        let first = kraus.first().ok_or_else(|| {
            QuantumError::InvalidChannel("no Kraus operators given".into())
        })?;
        let (dy, dx) = (first.rows(), first.cols());
        let mut j = ComplexMatrix::zeros(dy * dx, dy * dx);
        for k in kraus {
            if k.rows() != dy || k.cols() != dx {
                return Err(QuantumError::DimensionMismatch(
                    "Kraus operators must share a shape".into(),
                ));
            }
            let v = crate::linalg::vectorize(k);
            j = &j + &ComplexMatrix::outer(&v, &v);
        }
        ChoiMatrix::new(j, dy, dx)
    }

    /// Choi matrix of the completely depolarizing channel, 1_Y / M (x) 1_X.
    pub fn depolarizing(dim_y: usize, dim_x: usize) -> Self {
        let m = kron(
            &ComplexMatrix::identity(dim_y).scaled(1.0 / dim_y as f64),
            &ComplexMatrix::identity(dim_x),
        );
        ChoiMatrix { matrix: m, dim_y, dim_x }
    }
}

/// Invertible interactive measurement operator on Y (x) X with its square
/// root, inverse square root (committed jointly from one eigendecomposition),
/// spectral norms, and condition number cached.
#[derive(Clone, Debug)]
pub struct InteractiveMeasurement {
    q: ComplexMatrix,
    dim_y: usize,
    dim_x: usize,
    sqrt_q: ComplexMatrix,
    inv_sqrt_q: ComplexMatrix,
    spectral_norm: f64,
    inv_spectral_norm: f64,
    kappa: f64,
}

impl InteractiveMeasurement {
    pub fn new(q: ComplexMatrix, dim_y: usize, dim_x: usize) -> Result<Self, QuantumError> {
        if q.rows() != dim_y * dim_x || !q.is_square() {
            return Err(QuantumError::DimensionMismatch(format!(
                "operator must be {0}x{0} for dims ({1},{2}), got {3}x{4}",
                dim_y * dim_x,
                dim_y,
                dim_x,
                q.rows(),
                q.cols()
            )));
        }
        let h = q.hermitize()?;
        let eig = herm_eig(&h, 1e-10 * h.frobenius_norm().max(1.0))?;
        let min = eig.min_eigenvalue();
        let max = eig.max_eigenvalue();
        if min <= 1e-14 * max.max(1e-300) {
            return Err(QuantumError::SingularOperator(min));
        }
        let sqrt_q = eig.apply_fn(f64::sqrt);
        let inv_sqrt_q = eig.apply_fn(|x| 1.0 / x.sqrt());
        Ok(InteractiveMeasurement {
            q: h,
            dim_y,
            dim_x,
            sqrt_q,
            inv_sqrt_q,
            spectral_norm: max,
            inv_spectral_norm: 1.0 / min,
            kappa: max / min,
        })
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.q
    }

    pub fn dim_y(&self) -> usize {
        self.dim_y
    }

    pub fn dim_x(&self) -> usize {
        self.dim_x
    }

    pub fn side(&self) -> usize {
        self.dim_y * self.dim_x
    }

    pub fn sqrt(&self) -> &ComplexMatrix {
        &self.sqrt_q
    }

    pub fn inv_sqrt(&self) -> &ComplexMatrix {
        &self.inv_sqrt_q
    }

    pub fn spectral_norm(&self) -> f64 {
        self.spectral_norm
    }

    pub fn inv_spectral_norm(&self) -> f64 {
        self.inv_spectral_norm
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }
}

/// Phi(X) = Tr_Y(Q^{-1/2} X Q^{-1/2}), mapping L(Y (x) X) to L(X).
pub fn phi(q: &InteractiveMeasurement, x: &ComplexMatrix) -> Result<ComplexMatrix, QuantumError> {
    if x.rows() != q.side() || !x.is_square() {
        return Err(QuantumError::DimensionMismatch(format!(
            "phi input must be {0}x{0}, got {1}x{2}",
            q.side(),
            x.rows(),
            x.cols()
        )));
    }
    let conj = &(q.inv_sqrt() * x) * q.inv_sqrt();
    Ok(partial_trace(&conj, (q.dim_y, q.dim_x), TracedFactor::First)?)
}

/// The adjoint Phi*(Y) = Q^{-1/2} (1_Y (x) Y) Q^{-1/2}, mapping L(X) to
/// L(Y (x) X).
pub fn phi_star(
    q: &InteractiveMeasurement,
    y: &ComplexMatrix,
) -> Result<ComplexMatrix, QuantumError> {
    if y.rows() != q.dim_x || !y.is_square() {
        return Err(QuantumError::DimensionMismatch(format!(
            "phi* input must be {0}x{0}, got {1}x{2}",
            q.dim_x,
            y.rows(),
            y.cols()
        )));
    }
    let embedded = kron(&ComplexMatrix::identity(q.dim_y), y);
    Ok(&(q.inv_sqrt() * &embedded) * q.inv_sqrt())
}

/// A unitary acting on a subset of qubits, with 0-indexed targets; qubit 0 is
/// the most significant (first) qubit of the register.
#[derive(Clone, Debug)]
pub struct Gate {
    pub targets: Vec<usize>,
    pub matrix: ComplexMatrix,
}

/// Two-message verifier instance: the prepared state |psi> on X (x) Z and the
/// accept operator Pi on Y (x) Z, with M = 2^p on every register.
#[derive(Clone, Debug)]
pub struct VerifierInstance {
    pub psi: PureState,
    pub pi: MeasurementOperator,
    pub p: usize,
}

fn check_gate(gate: &Gate, index: usize, total_qubits: usize) -> Result<(), QuantumError> {
    let t = gate.targets.len();
    let side = 1usize << t;
    if gate.matrix.rows() != side || gate.matrix.cols() != side {
        return Err(QuantumError::GateShapeMismatch { index, targets: t, side: gate.matrix.rows() });
    }
    for (i, &qb) in gate.targets.iter().enumerate() {
        if qb >= total_qubits {
            return Err(QuantumError::QubitOutOfRange { index, qubit: qb, total: total_qubits });
        }
        if gate.targets[..i].contains(&qb) {
            return Err(QuantumError::RepeatedTarget { index, qubit: qb });
        }
    }
    let dev = (&(&gate.matrix.adjoint() * &gate.matrix) - &ComplexMatrix::identity(side))
        .frobenius_norm();
    if dev > 1e-9 {
        return Err(QuantumError::NonUnitaryGate { index, deviation: dev });
    }
    Ok(())
}

/// Expand a gate to the full 2^n-dimensional register. Qubit 0 carries the
/// highest-order bit of the index.
fn expand_gate(gate: &Gate, n_qubits: usize) -> ComplexMatrix {
    let dim = 1usize << n_qubits;
    let t = gate.targets.len();
    let mut out = ComplexMatrix::zeros(dim, dim);
    // Bit position (from the low end) of each target.
    let shifts: Vec<usize> = gate.targets.iter().map(|&qb| n_qubits - 1 - qb).collect();
    for col in 0..dim {
        let mut sub_col = 0usize;
        for (k, &sh) in shifts.iter().enumerate() {
            if (col >> sh) & 1 == 1 {
                sub_col |= 1 << (t - 1 - k);
            }
        }
        let base = shifts.iter().fold(col, |acc, &sh| acc & !(1usize << sh));
        for sub_row in 0..(1usize << t) {
            let g = gate.matrix.at(sub_row, sub_col);
            if g.norm_sqr() == 0.0 {
                continue;
            }
            let mut row = base;
            for (k, &sh) in shifts.iter().enumerate() {
                if (sub_row >> (t - 1 - k)) & 1 == 1 {
                    row |= 1 << sh;
                }
            }
            out.set(row, col, g);
        }
    }
    out
}

/// Build |psi> = U |0...0> and Pi = V* (|1><1| (x) 1) V from gate lists over
/// 2p qubits, checking unitarity of every gate. Gates apply in list order.
pub fn build_verifier_instance(
    u_gates: &[Gate],
    v_gates: &[Gate],
    p: usize,
) -> Result<VerifierInstance, QuantumError> {
    let n_qubits = 2 * p;
    let dim = 1usize << n_qubits;
    let m = 1usize << p;

    for (i, g) in u_gates.iter().enumerate() {
        check_gate(g, i, n_qubits)?;
    }
    for (i, g) in v_gates.iter().enumerate() {
        check_gate(g, i, n_qubits)?;
    }

    let mut state = vec![Complex64::new(0.0, 0.0); dim];
    state[0] = Complex64::new(1.0, 0.0);
    for g in u_gates {
        state = expand_gate(g, n_qubits).apply(&state);
    }
    let psi = PureState::new(state, m, m)?;

    let mut v = ComplexMatrix::identity(dim);
    for g in v_gates {
        v = &expand_gate(g, n_qubits) * &v;
    }
    // Accept projector: output qubit (qubit 0, most significant) equals 1,
    // i.e. the upper half of the index range.
    let mut accept = ComplexMatrix::zeros(dim, dim);
    for i in dim / 2..dim {
        accept.set(i, i, Complex64::new(1.0, 0.0));
    }
    let pi_matrix = &(&v.adjoint() * &accept) * &v;
    let pi = MeasurementOperator::new(pi_matrix)?;

    Ok(VerifierInstance { psi, pi, p })
}

/// B = sum_i |psi_i><i| in L(X,Z): the columns of B are the Z-components of
/// |psi> grouped by X index, so B*B is the reduced density operator on X.
pub fn state_operator_b(psi: &PureState) -> ComplexMatrix {
    ComplexMatrix::from_fn(psi.dim_z, psi.dim_x, |z, i| psi.amplitudes[i * psi.dim_z + z])
}

/// Raw interactive measurement operator Q = (1_Y (x) B*) Pi (1_Y (x) B) on
/// Y (x) X. The result may be singular; wrap it in
/// [`InteractiveMeasurement::new`] only after conditioning guarantees
/// invertibility.
pub fn build_q(psi: &PureState, pi: &MeasurementOperator) -> Result<ComplexMatrix, QuantumError> {
    let dz = psi.dim_z;
    if !pi.side().is_multiple_of(dz) {
        return Err(QuantumError::DimensionMismatch(format!(
            "Pi side {} is not a multiple of dim_z {}",
            pi.side(),
            dz
        )));
    }
    let dim_y = pi.side() / dz;
    let b = state_operator_b(psi);
    let lift = kron(&ComplexMatrix::identity(dim_y), &b);
    let q = &(&lift.adjoint() * pi.matrix()) * &lift;
    Ok(q.hermitize()?)
}

/// Acceptance probability <Pi, (Psi (x) 1)(|psi><psi|)> of a verifier
/// instance against a prover channel given in Choi form, evaluated through
/// the identity (Psi (x) 1)(|psi><psi|) = (1 (x) B) J(Psi) (1 (x) B*).
pub fn accept_probability(
    instance: &VerifierInstance,
    channel: &ChoiMatrix,
) -> Result<f64, QuantumError> {
    channel.validate_channel(1e-8)?;
    if channel.dim_x != instance.psi.dim_x {
        return Err(QuantumError::DimensionMismatch(format!(
            "channel input dim {} does not match message dim {}",
            channel.dim_x,
            instance.psi.dim_x
        )));
    }
    if channel.dim_y * instance.psi.dim_z != instance.pi.side() {
        return Err(QuantumError::DimensionMismatch(format!(
            "channel output dim {} incompatible with Pi side {}",
            channel.dim_y,
            instance.pi.side()
        )));
    }
    let b = state_operator_b(&instance.psi);
    let lift = kron(&ComplexMatrix::identity(channel.dim_y), &b);
    let evolved = &(&lift * &channel.matrix) * &lift.adjoint();
    Ok(instance.pi.matrix().inner(&evolved).re)
}

/// Spectrum helper shared by tests: descending eigenvalues of a Hermitian
/// operator.
pub fn hermitian_spectrum(m: &ComplexMatrix) -> Result<HermitianEig, QuantumError> {
    Ok(herm_eig(m, 1e-9 * m.frobenius_norm().max(1.0))?)
}
