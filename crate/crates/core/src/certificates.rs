//! Primal and dual certificates: explicit feasible points of the
//! mu(Q)-deciding SDP whose validity is checkable by eigenvalue tests alone,
//! without trusting the solver that produced them.
//!
//! A primal certificate is X >= 0 with Phi(X) <= 1; its trace lower-bounds
//! mu(Q). A dual certificate is Y >= 0 with Phi*(Y) >= 1; its trace
//! upper-bounds mu(Q). The accept-side construction extends the final
//! density operator to a feasible X through a marginal-replacement lemma
//! that preserves fidelity (an extension of Uhlmann's theorem); the
//! reject-side certificate is the scaled average of the penalty operators.

use crate::linalg::{
    fidelity, herm_eig, partial_trace, polar_unitary_right, ComplexMatrix, HermitianEig,
    LinalgError, TracedFactor,
};
use crate::mmw::AcceptWitness;
use crate::quantum::{phi, phi_star, InteractiveMeasurement, QuantumError};
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CertificateError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error(
        "extension fidelity {got:.12} differs from marginal fidelity {want:.12} beyond 1e-7; \
         numerical-rank pathology in the input"
    )]
    FidelityMismatch { got: f64, want: f64 },
    #[error("extension marginal deviates from the target by {0:.3e}")]
    MarginalMismatch(f64),
    #[error("certificate trace {got:.12} fell below the guaranteed (1-2eps)gamma = {want:.12}")]
    TraceBoundViolated { got: f64, want: f64 },
    #[error("no penalty operators: a dual certificate needs a full rejecting run")]
    EmptyHistory,
}

/// Primal certificate: X on Y (x) X, PSD and Phi-feasible, with Tr(X)
/// lower-bounding mu(Q).
#[derive(Clone, Debug)]
pub struct PrimalCertificate {
    pub x: ComplexMatrix,
    pub claimed_trace: f64,
}

/// Dual certificate: Y on X with Phi*(Y) >= 1, so Tr(Y) upper-bounds mu(Q).
#[derive(Clone, Debug)]
pub struct DualCertificate {
    pub y: ComplexMatrix,
    pub claimed_trace: f64,
}

/// Relabel an operator on A (x) B as one on B (x) A: index a*db + b maps to
/// b*da + a.
fn swap_factors(m: &ComplexMatrix, da: usize, db: usize) -> ComplexMatrix {
    let side = da * db;
    debug_assert_eq!(m.rows(), side);
    let mut inv = vec![0usize; side];
    for a in 0..da {
        for b in 0..db {
            inv[b * da + a] = a * db + b;
        }
    }
    ComplexMatrix::from_fn(side, side, |r, c| m.at(inv[r], inv[c]))
}

/// Given R0 >= 0 on Y (x) X and a target marginal P1 >= 0 on X, produce
/// R1 >= 0 on Y (x) X with Tr_Y(R1) = P1 and F(R0, R1) = F(P0, P1) for
/// P0 = Tr_Y(R0).
///
/// Construction: (a) the polar decomposition of sqrt(P0) sqrt(P1) gives the
/// unitary V making that product PSD, so F(P0,P1) = Tr(sqrt(P0) sqrt(P1) V);
/// (b) a purification of R0 with ancilla W = C^{NM} has the form
/// vec(sqrt(P0) U*) for an isometry U recovered from the purification in the
/// P0 eigenbasis (kernel directions completed deterministically);
/// (c) R1 = Tr_W(vec(sqrt(P1) V U*) vec(sqrt(P1) V U*)*).
pub fn uhlmann_extend(
    r0: &ComplexMatrix,
    p1: &ComplexMatrix,
    dim_y: usize,
    dim_x: usize,
) -> Result<ComplexMatrix, CertificateError> {
    let side = dim_y * dim_x;
    if r0.rows() != side || !r0.is_square() {
        return Err(CertificateError::DimensionMismatch(format!(
            "R0 must be {side}x{side}, got {}x{}",
            r0.rows(),
            r0.cols()
        )));
    }
    if p1.rows() != dim_x || !p1.is_square() {
        return Err(CertificateError::DimensionMismatch(format!(
            "P1 must be {dim_x}x{dim_x}, got {}x{}",
            p1.rows(),
            p1.cols()
        )));
    }
    let n = dim_x;
    let m = dim_y;
    let nw = n * m; // ancilla dimension

    // Work in X (x) Y order so the traced factor is the trailing one.
    let r0x = swap_factors(&r0.hermitize()?, m, n);
    let p0 = partial_trace(&r0x, (n, m), TracedFactor::Second)?;

    let p0_eig = herm_eig(&p0, 1e-10 * p0.frobenius_norm().max(1.0))?;
    let p1h = p1.hermitize()?;
    let p1_eig = herm_eig(&p1h, 1e-10 * p1h.frobenius_norm().max(1.0))?;
    let sqrt_p0 = p0_eig.apply_fn(|x| x.max(0.0).sqrt());
    let sqrt_p1 = p1_eig.apply_fn(|x| x.max(0.0).sqrt());

    let cross = &sqrt_p0 * &sqrt_p1;
    let v = if cross.max_abs() > 0.0 {
        polar_unitary_right(&cross)?
    } else {
        ComplexMatrix::identity(n)
    };

    // Purify R0: |u0> in X (x) Y (x) W with the ancilla index mirroring the
    // eigenindex of R0.
    let r0_eig = herm_eig(&r0x, 1e-9 * r0x.frobenius_norm().max(1.0))?;
    // A = sqrt(P0) U* as an N x (M * NW) matrix: A[x, (y, w)] = purification
    // amplitude.
    let mut a = ComplexMatrix::zeros(n, m * nw);
    for (w_idx, &ev) in r0_eig.eigenvalues.iter().enumerate() {
        let weight = ev.max(0.0).sqrt();
        if weight == 0.0 {
            continue;
        }
        for x in 0..n {
            for y in 0..m {
                let amp = r0_eig.unitary.at(x * m + y, w_idx) * weight;
                let col = y * nw + w_idx;
                a.set(x, col, a.at(x, col) + amp);
            }
        }
    }

    // Recover U* = E K from A = sqrt(P0) U*: in the P0 eigenbasis E the rows
    // of K are (E* A) rows divided by sqrt(eigenvalue); kernel rows get a
    // deterministic orthonormal completion.
    let e = &p0_eig.unitary;
    let ea = &e.adjoint() * &a;
    let scale = p0_eig.max_eigenvalue().abs().max(1e-300);
    let cutoff = 1e-12 * scale;
    let mut k_rows: Vec<Vec<Complex64>> = Vec::with_capacity(n);
    let mut kernel_rows: Vec<usize> = Vec::new();
    for (row, &ev) in p0_eig.eigenvalues.iter().enumerate() {
        if ev > cutoff {
            let inv = 1.0 / ev.sqrt();
            k_rows.push((0..m * nw).map(|c| ea.at(row, c) * inv).collect());
        } else {
            k_rows.push(vec![Complex64::new(0.0, 0.0); m * nw]);
            kernel_rows.push(row);
        }
    }
    for &row in &kernel_rows {
        // Greedy residual completion against all current rows.
        let dim = m * nw;
        let mut best: Option<(f64, Vec<Complex64>)> = None;
        for cand in 0..dim {
            let mut vcand = vec![Complex64::new(0.0, 0.0); dim];
            vcand[cand] = Complex64::new(1.0, 0.0);
            for existing in k_rows.iter() {
                let overlap: Complex64 =
                    existing.iter().zip(vcand.iter()).map(|(a, b)| a.conj() * b).sum();
                for (slot, base) in vcand.iter_mut().zip(existing.iter()) {
                    *slot -= overlap * base;
                }
            }
            let norm = vcand.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if best.as_ref().is_none_or(|(bn, _)| norm > *bn) {
                best = Some((norm, vcand));
            }
        }
        let (norm, mut vbest) = best.expect("positive dimension");
        for z in vbest.iter_mut() {
            *z /= norm;
        }
        k_rows[row] = vbest;
    }
    let k = ComplexMatrix::from_fn(n, m * nw, |r, c| k_rows[r][c]);

    // G = sqrt(P1) V E K reshaped to (N*M) x NW; R1 = G G*.
    let target = &(&(&sqrt_p1 * &v) * e) * &k;
    let g = ComplexMatrix::from_fn(n * m, nw, |row, w_idx| {
        let (x, y) = (row / m, row % m);
        target.at(x, y * nw + w_idx)
    });
    let r1x = &g * &g.adjoint();
    let r1 = swap_factors(&r1x, n, m);

    // Both lemma equalities are verified before the extension is released.
    let marginal = partial_trace(&r1, (m, n), TracedFactor::First)?;
    let marginal_err = (&marginal - &p1h).frobenius_norm();
    if marginal_err > 1e-8 * p1h.frobenius_norm().max(1.0) {
        return Err(CertificateError::MarginalMismatch(marginal_err));
    }
    let f_marginals = fidelity(&clamp_psd(&p0), &clamp_psd(&p1h))?;
    let f_extensions = fidelity(&clamp_psd(&r0.hermitize()?), &clamp_psd(&r1))?;
    if (f_marginals - f_extensions).abs() > 1e-7 * f_marginals.max(1.0) {
        return Err(CertificateError::FidelityMismatch { got: f_extensions, want: f_marginals });
    }
    Ok(r1)
}

/// Clip roundoff-negative eigenvalues so fidelity sees a true PSD input.
fn clamp_psd(m: &ComplexMatrix) -> ComplexMatrix {
    match herm_eig(m, 1e-9 * m.frobenius_norm().max(1.0)) {
        Ok(eig) if eig.min_eigenvalue() < 0.0 => eig.apply_fn(|x| x.max(0.0)),
        _ => m.clone(),
    }
}

/// Accept-side construction without the trace-floor check: the marginal of
/// R0 = Q^{-1/2} rho Q^{-1/2} is replaced by the capped spectrum P1 (1/gamma
/// on the violating set, the original eigenvalues elsewhere), extended back
/// to Y (x) X fidelity-preservingly, and conjugated by sqrt(Q). The result
/// is Phi-feasible by construction whatever its trace turns out to be.
pub fn assemble_primal(
    q: &InteractiveMeasurement,
    gamma: f64,
    witness: &AcceptWitness,
) -> Result<PrimalCertificate, CertificateError> {
    let n = q.dim_x();
    let spectral: &HermitianEig = &witness.spectral;
    let mut p1 = ComplexMatrix::zeros(n, n);
    for j in 0..n {
        let lam = if witness.big_set.contains(&j) {
            1.0 / gamma
        } else {
            spectral.eigenvalues[j].max(0.0)
        };
        if lam == 0.0 {
            continue;
        }
        let v = spectral.eigenvector(j);
        p1 = &p1 + &ComplexMatrix::outer(&v, &v).scaled(lam);
    }
    let r0 = &(q.inv_sqrt() * &witness.rho) * q.inv_sqrt();
    let r1 = uhlmann_extend(&r0, &p1, q.dim_y(), n)?;
    let x = (&(q.sqrt() * &r1) * q.sqrt()).scaled(gamma).hermitize()?;
    let claimed_trace = x.trace().re;
    Ok(PrimalCertificate { x, claimed_trace })
}

/// Accept-side certificate with the guaranteed bound enforced: when the
/// accept threshold delta came from the faithful derivation, Tr(X) >=
/// (1-2eps)gamma holds, and falling below it signals a solver or precision
/// bug.
pub fn build_primal(
    q: &InteractiveMeasurement,
    gamma: f64,
    epsilon: f64,
    witness: &AcceptWitness,
) -> Result<PrimalCertificate, CertificateError> {
    let cert = assemble_primal(q, gamma, witness)?;
    let floor = (1.0 - 2.0 * epsilon) * gamma;
    if cert.claimed_trace < floor - 1e-9 {
        return Err(CertificateError::TraceBoundViolated { got: cert.claimed_trace, want: floor });
    }
    Ok(cert)
}

/// Reject-side certificate: Y = (1+eps)/T * (Y_0 + ... + Y_{T-1}).
pub fn build_dual(
    y_history: &[ComplexMatrix],
    epsilon: f64,
) -> Result<DualCertificate, CertificateError> {
    let t = y_history.len();
    if t == 0 {
        return Err(CertificateError::EmptyHistory);
    }
    let n = y_history[0].rows();
    let mut sum = ComplexMatrix::zeros(n, n);
    for y in y_history {
        sum = &sum + y;
    }
    let y = sum.scaled((1.0 + epsilon) / t as f64);
    let claimed_trace = y.trace().re;
    Ok(DualCertificate { y, claimed_trace })
}

/// One named eigenvalue/trace test inside a verification report.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub bound: f64,
    pub pass: bool,
}

/// Outcome of verifying a certificate against an instance; trusts nothing
/// about how the certificate was produced.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct VerificationReport {
    pub pass: bool,
    pub checks: Vec<CheckOutcome>,
}

impl VerificationReport {
    fn from_checks(checks: Vec<CheckOutcome>) -> Self {
        VerificationReport { pass: checks.iter().all(|c| c.pass), checks }
    }

    /// Names of the violated constraints.
    pub fn violations(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect()
    }
}

fn push(checks: &mut Vec<CheckOutcome>, name: &'static str, value: f64, bound: f64, pass: bool) {
    checks.push(CheckOutcome { name: name.to_owned(), value, bound, pass });
}

/// Verify X >= 0, Phi(X) <= 1, and Tr(X) >= (1-2eps)gamma. A pass certifies
/// mu(Q) >= (1-2eps)gamma up to verification tolerance, by weak duality.
pub fn verify_primal(
    cert: &PrimalCertificate,
    q: &InteractiveMeasurement,
    gamma: f64,
    epsilon: f64,
) -> VerificationReport {
    let mut checks = Vec::new();
    let side = q.side();
    let dims_ok = cert.x.is_square() && cert.x.rows() == side;
    push(&mut checks, "dimensions", cert.x.rows() as f64, side as f64, dims_ok);
    if !dims_ok {
        return VerificationReport::from_checks(checks);
    }

    let scale = cert.x.frobenius_norm().max(1.0);
    let asym = cert.x.asymmetry();
    push(&mut checks, "hermitian", asym, 1e-9 * scale, asym <= 1e-9 * scale);

    // Eigenvalue checks run on the symmetrized matrix so a failed hermiticity
    // check still yields an informative report.
    let sym = ComplexMatrix::from_fn(side, side, |r, c| {
        (cert.x.at(r, c) + cert.x.at(c, r).conj()) * 0.5
    });
    match herm_eig(&sym, 1e-8 * scale) {
        Ok(eig) => {
            let min = eig.min_eigenvalue();
            push(&mut checks, "positive_semidefinite", min, -1e-9, min >= -1e-9);
        }
        Err(_) => push(&mut checks, "positive_semidefinite", f64::NAN, -1e-9, false),
    }
    match phi(q, &sym) {
        Ok(image) => match herm_eig(&image, 1e-8 * image.frobenius_norm().max(1.0)) {
            Ok(eig) => {
                let max = eig.max_eigenvalue();
                push(&mut checks, "phi_feasibility", max, 1.0 + 1e-8, max <= 1.0 + 1e-8);
            }
            Err(_) => push(&mut checks, "phi_feasibility", f64::NAN, 1.0 + 1e-8, false),
        },
        Err(_) => push(&mut checks, "phi_feasibility", f64::NAN, 1.0 + 1e-8, false),
    }
    let tr = sym.trace().re;
    let floor = (1.0 - 2.0 * epsilon) * gamma;
    push(&mut checks, "trace_bound", tr, floor, tr >= floor - 1e-9);
    let drift = (tr - cert.claimed_trace).abs();
    push(&mut checks, "claimed_trace", drift, 1e-9, drift <= 1e-9);

    VerificationReport::from_checks(checks)
}

/// Verify Y >= 0, Phi*(Y) >= 1, and Tr(Y) <= (1+eps)gamma. A pass certifies
/// mu(Q) <= (1+eps)gamma up to verification tolerance.
pub fn verify_dual(
    cert: &DualCertificate,
    q: &InteractiveMeasurement,
    gamma: f64,
    epsilon: f64,
) -> VerificationReport {
    let mut checks = Vec::new();
    let n = q.dim_x();
    let dims_ok = cert.y.is_square() && cert.y.rows() == n;
    push(&mut checks, "dimensions", cert.y.rows() as f64, n as f64, dims_ok);
    if !dims_ok {
        return VerificationReport::from_checks(checks);
    }

    let scale = cert.y.frobenius_norm().max(1.0);
    let asym = cert.y.asymmetry();
    push(&mut checks, "hermitian", asym, 1e-9 * scale, asym <= 1e-9 * scale);

    let sym =
        ComplexMatrix::from_fn(n, n, |r, c| (cert.y.at(r, c) + cert.y.at(c, r).conj()) * 0.5);
    match herm_eig(&sym, 1e-8 * scale) {
        Ok(eig) => {
            let min = eig.min_eigenvalue();
            push(&mut checks, "positive_semidefinite", min, -1e-9, min >= -1e-9);
        }
        Err(_) => push(&mut checks, "positive_semidefinite", f64::NAN, -1e-9, false),
    }
    match phi_star(q, &sym) {
        Ok(image) => match herm_eig(&image, 1e-8 * image.frobenius_norm().max(1.0)) {
            Ok(eig) => {
                let min = eig.min_eigenvalue();
                push(&mut checks, "phi_star_feasibility", min, 1.0 - 1e-8, min >= 1.0 - 1e-8);
            }
            Err(_) => push(&mut checks, "phi_star_feasibility", f64::NAN, 1.0 - 1e-8, false),
        },
        Err(_) => push(&mut checks, "phi_star_feasibility", f64::NAN, 1.0 - 1e-8, false),
    }
    let tr = sym.trace().re;
    let ceiling = (1.0 + epsilon) * gamma;
    push(&mut checks, "trace_bound", tr, ceiling, tr <= ceiling + 1e-9);
    let drift = (tr - cert.claimed_trace).abs();
    push(&mut checks, "claimed_trace", drift, 1e-9, drift <= 1e-9);

    VerificationReport::from_checks(checks)
}
