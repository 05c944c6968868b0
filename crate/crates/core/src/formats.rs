//! Wire formats: instance JSON, certificate JSON, run reports, and the
//! iteration-trace CSV.
//!
//! Complex numbers serialize as [re, im] pairs. Operators ("pi", "q",
//! certificate matrices) are arrays of rows; gate matrices are flat
//! row-major pair lists since their dimension is fixed by the target count.

use crate::certificates::{CheckOutcome, DualCertificate, PrimalCertificate};
use crate::conditioning::ConditionedInstance;
use crate::linalg::ComplexMatrix;
use crate::mmw::IterationRecord;
use crate::quantum::{Gate, MeasurementOperator, PureState};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("matrix rows have inconsistent lengths")]
    RaggedRows,
    #[error("gate matrix length {0} is not a square of a power of two")]
    BadGateShape(usize),
    #[error("state length {0} is not a square M^2 with M a power of two")]
    BadStateShape(usize),
    #[error("{0}")]
    Domain(String),
    #[error("unknown certificate kind {0:?}")]
    UnknownKind(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type ComplexPair = [f64; 2];

pub fn matrix_to_rows(m: &ComplexMatrix) -> Vec<Vec<ComplexPair>> {
    (0..m.rows())
        .map(|r| (0..m.cols()).map(|c| [m.at(r, c).re, m.at(r, c).im]).collect())
        .collect()
}

pub fn matrix_from_rows(rows: &[Vec<ComplexPair>]) -> Result<ComplexMatrix, FormatError> {
    let nrows = rows.len();
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(FormatError::RaggedRows);
    }
    let entries: Vec<Complex64> =
        rows.iter().flatten().map(|&[re, im]| Complex64::new(re, im)).collect();
    ComplexMatrix::new(nrows, ncols, entries).map_err(|e| FormatError::Domain(e.to_string()))
}

pub fn vector_to_pairs(v: &[Complex64]) -> Vec<ComplexPair> {
    v.iter().map(|z| [z.re, z.im]).collect()
}

pub fn vector_from_pairs(v: &[ComplexPair]) -> Vec<Complex64> {
    v.iter().map(|&[re, im]| Complex64::new(re, im)).collect()
}

/// Gate description: flat row-major complex matrix over the target qubits,
/// most significant target first.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GateDto {
    pub targets: Vec<usize>,
    pub matrix: Vec<ComplexPair>,
}

impl GateDto {
    pub fn to_gate(&self) -> Result<Gate, FormatError> {
        let len = self.matrix.len();
        let side = (len as f64).sqrt().round() as usize;
        if side * side != len || !side.is_power_of_two() {
            return Err(FormatError::BadGateShape(len));
        }
        let matrix = ComplexMatrix::new(side, side, vector_from_pairs(&self.matrix))
            .map_err(|e| FormatError::Domain(e.to_string()))?;
        Ok(Gate { targets: self.targets.clone(), matrix })
    }

    pub fn from_gate(g: &Gate) -> Self {
        GateDto {
            targets: g.targets.clone(),
            matrix: vector_to_pairs(g.matrix.entries()),
        }
    }
}

/// Verifier given as circuits over 2p qubits.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CircuitInstanceFile {
    pub p: usize,
    pub u_gates: Vec<GateDto>,
    pub v_gates: Vec<GateDto>,
}

/// Verifier given directly as (|psi>, Pi).
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct StateInstanceFile {
    pub psi: Vec<ComplexPair>,
    pub pi: Vec<Vec<ComplexPair>>,
}

impl StateInstanceFile {
    pub fn to_parts(&self) -> Result<(PureState, MeasurementOperator), FormatError> {
        let len = self.psi.len();
        let m = (len as f64).sqrt().round() as usize;
        if m * m != len || !m.is_power_of_two() {
            return Err(FormatError::BadStateShape(len));
        }
        let psi = PureState::new(vector_from_pairs(&self.psi), m, m)
            .map_err(|e| FormatError::Domain(e.to_string()))?;
        let pi = MeasurementOperator::new(matrix_from_rows(&self.pi)?)
            .map_err(|e| FormatError::Domain(e.to_string()))?;
        Ok((psi, pi))
    }
}

/// Bare operator with thresholds, ready for the solver.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RawQInstanceFile {
    pub q: Vec<Vec<ComplexPair>>,
    pub dim_y: usize,
    pub dim_x: usize,
    pub gamma: f64,
    pub epsilon: f64,
}

/// Conditioning diagnostics carried alongside the conditioned operator.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BinDiagnostics {
    pub index: usize,
    pub indices: Vec<usize>,
    pub overlap: f64,
}

/// Output of the conditioning pass; also accepted wherever a raw-Q instance
/// is.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ConditionedInstanceFile {
    pub q: Vec<Vec<ComplexPair>>,
    pub dim_y: usize,
    pub dim_x: usize,
    pub gamma: f64,
    pub epsilon: f64,
    pub k: usize,
    pub kappa: f64,
    pub bin: BinDiagnostics,
}

impl ConditionedInstanceFile {
    pub fn from_instance(inst: &ConditionedInstance, overlap: f64) -> Self {
        ConditionedInstanceFile {
            q: matrix_to_rows(inst.q.matrix()),
            dim_y: inst.q.dim_y(),
            dim_x: inst.q.dim_x(),
            gamma: inst.gamma,
            epsilon: inst.epsilon,
            k: inst.k,
            kappa: inst.q.kappa(),
            bin: BinDiagnostics {
                index: inst.selected_bin,
                indices: inst.selected_indices.clone(),
                overlap,
            },
        }
    }
}

/// Any accepted instance payload, distinguished by its fields.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InstanceFile {
    Conditioned(ConditionedInstanceFile),
    RawQ(RawQInstanceFile),
    State(StateInstanceFile),
    Circuit(CircuitInstanceFile),
}

/// Serialized certificate, verifiable in a separate process from the solver
/// that produced it.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateFile {
    pub kind: String,
    pub matrix: Vec<Vec<ComplexPair>>,
    pub claimed_trace: f64,
    pub gamma: f64,
    pub epsilon: f64,
}

impl CertificateFile {
    pub fn from_primal(cert: &PrimalCertificate, gamma: f64, epsilon: f64) -> Self {
        CertificateFile {
            kind: "primal".into(),
            matrix: matrix_to_rows(&cert.x),
            claimed_trace: cert.claimed_trace,
            gamma,
            epsilon,
        }
    }

    pub fn from_dual(cert: &DualCertificate, gamma: f64, epsilon: f64) -> Self {
        CertificateFile {
            kind: "dual".into(),
            matrix: matrix_to_rows(&cert.y),
            claimed_trace: cert.claimed_trace,
            gamma,
            epsilon,
        }
    }

    pub fn to_primal(&self) -> Result<PrimalCertificate, FormatError> {
        if self.kind != "primal" {
            return Err(FormatError::UnknownKind(self.kind.clone()));
        }
        Ok(PrimalCertificate { x: matrix_from_rows(&self.matrix)?, claimed_trace: self.claimed_trace })
    }

    pub fn to_dual(&self) -> Result<DualCertificate, FormatError> {
        if self.kind != "dual" {
            return Err(FormatError::UnknownKind(self.kind.clone()));
        }
        Ok(DualCertificate { y: matrix_from_rows(&self.matrix)?, claimed_trace: self.claimed_trace })
    }
}

/// Iteration trace as CSV with 17 significant digits, one row per iteration.
pub fn write_trace_csv<W: Write>(records: &[IterationRecord], mut w: W) -> Result<(), FormatError> {
    writeln!(w, "t,s,trace_w,pairing")?;
    for rec in records {
        match rec.pairing {
            Some(p) => writeln!(w, "{},{:.16e},{:.16e},{:.16e}", rec.t, rec.s, rec.trace_w, p)?,
            None => writeln!(w, "{},{:.16e},{:.16e},", rec.t, rec.s, rec.trace_w)?,
        }
    }
    Ok(())
}

/// Instance summary embedded in a run report.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InstanceDigest {
    pub dim_y: usize,
    pub dim_x: usize,
    pub kappa: f64,
    pub gamma: f64,
    pub epsilon: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ParamsDigest {
    pub delta: f64,
    pub t_max: u128,
    pub eta: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CertificateSummary {
    pub kind: String,
    pub claimed_trace: f64,
    pub verified: bool,
    pub checks: Vec<CheckOutcome>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct OracleSection {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub converged: bool,
    pub seed: u64,
    /// Whether the oracle bracket certifies |mu - gamma| >= 4 eps gamma.
    pub promise_ok: bool,
    /// Whether the solver's decision matches the oracle's side of gamma.
    pub decision_consistent: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Timings {
    pub solve_ms: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_ms: Option<f64>,
    pub verify_ms: f64,
}

/// Full result of a solve run; deterministic except for `timings`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub instance: InstanceDigest,
    pub params: ParamsDigest,
    pub decision: String,
    pub iterations: u64,
    pub certificate: CertificateSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleSection>,
    pub timings: Timings,
}
