//! Matrix-multiplicative-weights iteration deciding mu(Q) >= gamma versus
//! mu(Q) <= gamma.
//!
//! Each iteration spectrally decomposes Phi(rho_t), collects the eigenvalue
//! mass violating the gamma threshold, and either halts (accept) when that
//! mass drops to delta * ||Q^-1|| or penalizes the violating subspace with an
//! operator Y_t folded into an exponential weight update. Rejection after
//! t_max full iterations leaves behind the Y_t list from which a dual
//! certificate is assembled; acceptance leaves the final density operator
//! and its spectral data for the primal certificate.
//!
//! The weight matrix W_{t+1} is recomputed each iteration as the exponential
//! of the full accumulated sum; exponentials of non-commuting sums do not
//! factor, and the trace-decay analysis needs the sum form. The exponent is
//! shifted by its smallest eigenvalue before exponentiation (rho is
//! invariant under the shift) so traces can be tracked in log scale without
//! underflow.

use crate::linalg::{expm, herm_eig, ComplexMatrix, HermitianEig, LinalgError};
use crate::quantum::{phi, phi_star, InteractiveMeasurement, QuantumError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolverError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("gamma must be in (0,1), got {0}")]
    BadGamma(f64),
    #[error("epsilon must be in (0,1), got {0}")]
    BadEpsilon(f64),
    #[error("delta must be positive, got {0}")]
    BadDelta(f64),
    #[error("t_max must be positive")]
    BadTMax,
    #[error("iteration {t}: {check} violated ({detail})")]
    InvariantViolated { t: u128, check: &'static str, detail: String },
    #[error(
        "iteration {t}: pairing {value} fell below 1 - eta^2/12 = {bound}; the dual certificate \
         would be void"
    )]
    PrecisionMonitor { t: u128, value: f64, bound: f64 },
}

/// Parameters of one solver run. The defaults follow the update rule's own
/// formulas: delta = eps^2 / (8 kappa(Q)^2), t_max = ceil(24 ln(NM) /
/// (eps^3 gamma^3 delta)), eta = eps * gamma / 2.
#[derive(Clone, Copy, Debug)]
pub struct SolverParams {
    pub delta: f64,
    pub t_max: u128,
    pub eta: f64,
    pub exp_tol: f64,
    pub eig_tol: f64,
}

/// Default parameters for `q` at thresholds (gamma, epsilon), straight from
/// the formulas above.
pub fn derive_params(
    q: &InteractiveMeasurement,
    gamma: f64,
    epsilon: f64,
) -> Result<SolverParams, SolverError> {
    check_thresholds(gamma, epsilon)?;
    let kappa = q.kappa();
    let delta = epsilon * epsilon / (8.0 * kappa * kappa);
    params_with_delta(q, gamma, epsilon, delta, None)
}

/// Same derivation with an explicit delta and optional iteration cap; the
/// accuracy targets are recomputed for the delta actually in force.
pub fn params_with_delta(
    q: &InteractiveMeasurement,
    gamma: f64,
    epsilon: f64,
    delta: f64,
    t_max_override: Option<u128>,
) -> Result<SolverParams, SolverError> {
    check_thresholds(gamma, epsilon)?;
    if delta <= 0.0 || !delta.is_finite() {
        return Err(SolverError::BadDelta(delta));
    }
    let nm = q.side() as f64;
    let t_formula = 24.0 * nm.ln() / (epsilon.powi(3) * gamma.powi(3) * delta);
    let t_max = match t_max_override {
        Some(0) => return Err(SolverError::BadTMax),
        Some(t) => t,
        None => t_formula.ceil() as u128,
    };
    Ok(SolverParams {
        delta,
        t_max,
        eta: epsilon * gamma / 2.0,
        exp_tol: 1e-12,
        eig_tol: delta / (4.0 * q.dim_x() as f64 * q.inv_spectral_norm()),
    })
}

fn check_thresholds(gamma: f64, epsilon: f64) -> Result<(), SolverError> {
    if !(gamma > 0.0 && gamma < 1.0) {
        return Err(SolverError::BadGamma(gamma));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(SolverError::BadEpsilon(epsilon));
    }
    Ok(())
}

/// One row of the iteration trace.
#[derive(Clone, Copy, Debug)]
pub struct IterationRecord {
    pub t: u64,
    /// Eigenvalue mass of Phi(rho_t) above the 1/gamma threshold.
    pub s: f64,
    /// Tr(W_t) for the weight matrix in force at this iteration.
    pub trace_w: f64,
    /// <rho_t, Phi*(Y_t)>, absent on the accepting iteration.
    pub pairing: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    Accept,
    Reject,
}

/// Everything the primal certificate construction needs from an accepting
/// iteration.
#[derive(Clone, Debug)]
pub struct AcceptWitness {
    pub rho: ComplexMatrix,
    /// Spectral decomposition of Phi(rho), eigenvalues descending.
    pub spectral: HermitianEig,
    /// Indices (into the descending spectrum) with gamma * lambda > 1.
    pub big_set: Vec<usize>,
    pub s: f64,
    pub iteration: u128,
}

#[derive(Clone, Debug)]
pub struct SolverOutcome {
    pub decision: Decision,
    /// Present exactly when the decision is Accept.
    pub accept: Option<AcceptWitness>,
    /// The penalty operators Y_0..Y_{T-1}; complete on Reject.
    pub y_history: Vec<ComplexMatrix>,
    pub trace: Vec<IterationRecord>,
}

/// Run the weight-update iteration on an invertible interactive measurement
/// operator. With `params` absent the faithful derivation is used;
/// experiments at desk scale pass overrides and cross-check against the
/// oracle.
pub fn solve(
    q: &InteractiveMeasurement,
    gamma: f64,
    epsilon: f64,
    params: Option<SolverParams>,
) -> Result<SolverOutcome, SolverError> {
    let params = match params {
        Some(p) => {
            if p.delta <= 0.0 {
                return Err(SolverError::BadDelta(p.delta));
            }
            if p.t_max == 0 {
                return Err(SolverError::BadTMax);
            }
            check_thresholds(gamma, epsilon)?;
            p
        }
        None => derive_params(q, gamma, epsilon)?,
    };
    let (eta, delta) = (params.eta, params.delta);
    let nm = q.side();
    let n = q.dim_x();
    let accept_threshold = delta * q.inv_spectral_norm();
    let pairing_floor = 1.0 - eta * eta / 12.0;
    let decay_rate = eta * delta * (-eta).exp();
    // Envelope on the exponent norm over the whole run.
    let exp_norm_bound = eta * (params.t_max.min(1 << 60) as f64 + 1.0) + 1.0;

    let mut rho = ComplexMatrix::identity(nm).scaled(1.0 / nm as f64);
    let mut log_trace_w = (nm as f64).ln();
    let mut accumulated = ComplexMatrix::zeros(n, n);
    let mut y_history: Vec<ComplexMatrix> = Vec::new();
    let mut trace: Vec<IterationRecord> = Vec::new();

    let mut t: u128 = 0;
    while t < params.t_max {
        let p0 = phi(q, &rho)?;
        let spectral = herm_eig(&p0, params.eig_tol.max(1e-13 * p0.frobenius_norm().max(1.0)))?;
        let big_set: Vec<usize> = (0..n)
            .filter(|&j| gamma * spectral.eigenvalues[j] > 1.0)
            .collect();
        let s: f64 = big_set.iter().map(|&j| spectral.eigenvalues[j]).sum();

        if s <= accept_threshold {
            trace.push(IterationRecord {
                t: t as u64,
                s,
                trace_w: log_trace_w.exp(),
                pairing: None,
            });
            return Ok(SolverOutcome {
                decision: Decision::Accept,
                accept: Some(AcceptWitness { rho, spectral, big_set, s, iteration: t }),
                y_history,
                trace,
            });
        }

        let mut y = ComplexMatrix::zeros(n, n);
        for &j in &big_set {
            let v = spectral.eigenvector(j);
            y = &y + &ComplexMatrix::outer(&v, &v);
        }
        let y = y.scaled(1.0 / s);

        let trace_y = y.trace().re;
        if trace_y >= gamma + 1e-12 {
            return Err(SolverError::InvariantViolated {
                t,
                check: "Tr(Y_t) < gamma",
                detail: format!("Tr(Y_t) = {trace_y}, gamma = {gamma}"),
            });
        }
        let lifted = phi_star(q, &y)?;
        let lifted_eig = herm_eig(&lifted, 1e-10 * lifted.frobenius_norm().max(1.0))?;
        let lifted_norm = lifted_eig
            .eigenvalues
            .iter()
            .fold(0.0_f64, |acc, &v| acc.max(v.abs()));
        if delta * lifted_norm >= 1.0 + 1e-12 {
            return Err(SolverError::InvariantViolated {
                t,
                check: "||delta Phi*(Y_t)|| < 1",
                detail: format!("norm = {}", delta * lifted_norm),
            });
        }
        let pairing = rho.inner(&lifted).re;
        if pairing < pairing_floor {
            return Err(SolverError::PrecisionMonitor { t, value: pairing, bound: pairing_floor });
        }

        trace.push(IterationRecord {
            t: t as u64,
            s,
            trace_w: log_trace_w.exp(),
            pairing: Some(pairing),
        });

        accumulated = &accumulated + &y;
        y_history.push(y);

        // W_{t+1} = exp(-eta delta Phi*(Y_0 + ... + Y_t)), exponentiated
        // after shifting out the smallest eigenvalue.
        let exponent = phi_star(q, &accumulated)?.scaled(eta * delta);
        let exp_eig = herm_eig(&exponent, 1e-10 * exponent.frobenius_norm().max(1.0))?;
        let shift = exp_eig.min_eigenvalue();
        let shifted = &exponent.scaled(-1.0) + &ComplexMatrix::identity(nm).scaled(shift);
        let w_shifted = expm(&shifted, exp_norm_bound, params.exp_tol)?;
        let trace_shifted = w_shifted.trace().re;
        if !(trace_shifted.is_finite() && trace_shifted > 0.0) {
            return Err(SolverError::InvariantViolated {
                t,
                check: "Tr(W) > 0 and finite",
                detail: format!("shifted trace = {trace_shifted}"),
            });
        }
        let new_log_trace_w = -shift + trace_shifted.ln();
        let decay = new_log_trace_w - log_trace_w;
        let allowed = -decay_rate * pairing + 1e-8;
        if decay > allowed {
            return Err(SolverError::InvariantViolated {
                t,
                check: "Tr(W) decay within the Golden-Thompson rate",
                detail: format!("log decay = {decay}, allowed = {allowed}"),
            });
        }
        log_trace_w = new_log_trace_w;
        rho = w_shifted.scaled(1.0 / trace_shifted).hermitize()?;

        t += 1;
    }

    Ok(SolverOutcome { decision: Decision::Reject, accept: None, y_history, trace })
}

/// <rho, Phi*(Y)>: equals 1 per iteration in exact arithmetic; monitored
/// against the 1 - eta^2/12 floor while solving.
pub fn pairing_value(
    q: &InteractiveMeasurement,
    rho: &ComplexMatrix,
    y: &ComplexMatrix,
) -> Result<f64, SolverError> {
    Ok(rho.inner(&phi_star(q, y)?).re)
}
