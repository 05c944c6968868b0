//! Reference computation of mu(Q) for desk-scale instances, algorithmically
//! independent of the weight-update solver.
//!
//! Lower bounds come from gradient ascent of <Q, J> over channels
//! parametrized by Stinespring isometries (a majorize-maximize step: the
//! gradient is reshaped and snapped back to an isometry through its polar
//! factor, which never decreases the objective). Upper bounds come from
//! exterior-penalty subgradient descent on Tr(Y) against the constraint
//! 1 (x) Y >= Q, with eigenvector subgradients, Polyak step sizes targeted
//! at the primal value, and feasibility restored by Y <- Y + max(0,
//! -lambda_min) * 1. Every reported bound carries an explicit witness, so
//! weak duality makes the bracket trustworthy without trusting this module.

use crate::linalg::{
    herm_eig, kron, partial_trace, polar_isometry, ComplexMatrix, LinalgError, TracedFactor,
};
use crate::quantum::{build_q, MeasurementOperator, PureState, QuantumError};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Desk-scale cap on the operator side.
pub const MAX_SIDE: usize = 64;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("operator side {0} exceeds the desk-scale cap {MAX_SIDE}")]
    TooLarge(usize),
    #[error("dims ({0},{1}) do not match the operator side {2}")]
    BadDims(usize, usize, usize),
    #[error("operator is not PSD: eigenvalue {0:.3e}")]
    NotPsd(f64),
    #[error("witness failed self-validation: {0}")]
    WitnessInvalid(String),
}

#[derive(Clone, Copy, Debug)]
pub struct OracleOptions {
    /// Stop once upper - lower <= tol.
    pub tol: f64,
    /// Cap on dual subgradient iterations.
    pub iter_budget: u64,
    /// Random restarts of the primal ascent.
    pub restarts: u32,
    /// Ascent iterations per restart.
    pub ascent_iters: u32,
    pub seed: u64,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions { tol: 1e-6, iter_budget: 60_000, restarts: 8, ascent_iters: 2_000, seed: 0x5eed }
    }
}

/// Certified bracket lower <= mu(Q) <= upper with explicit witnesses.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    /// Feasible Choi matrix achieving `lower`.
    pub choi_witness: ComplexMatrix,
    /// Dual-feasible Y achieving `upper`.
    pub dual_witness: ComplexMatrix,
    /// Whether the bracket closed within tolerance inside the budget.
    pub converged: bool,
    pub seed: u64,
    pub dual_iterations: u64,
}

/// Certified two-sided estimate of mu(Q) = max <Q, J> over Choi matrices of
/// channels. Works on singular Q too. When the budget runs out with gap >
/// tol the result is still returned with `converged = false`.
pub fn reference_mu(
    q_matrix: &ComplexMatrix,
    dims: (usize, usize),
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    let (dim_y, dim_x) = dims;
    let side = dim_y * dim_x;
    if side > MAX_SIDE {
        return Err(OracleError::TooLarge(side));
    }
    if q_matrix.rows() != side || !q_matrix.is_square() {
        return Err(OracleError::BadDims(dim_y, dim_x, q_matrix.rows()));
    }
    let q = q_matrix.hermitize()?;
    let q_eig = herm_eig(&q, 1e-9 * q.frobenius_norm().max(1.0))?;
    let scale = q_eig.max_eigenvalue().abs().max(1.0);
    if q_eig.min_eigenvalue() < -1e-9 * scale {
        return Err(OracleError::NotPsd(q_eig.min_eigenvalue()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let (lower, choi_witness) = primal_ascent(&q, dim_y, dim_x, opts, &mut rng)?;
    let (upper, dual_witness, dual_iterations) =
        dual_descent(&q, &q_eig.max_eigenvalue(), dim_y, dim_x, lower, opts)?;

    validate_choi_witness(&choi_witness, dim_y, dim_x)?;
    validate_dual_witness(&q, &dual_witness, dim_y)?;

    let gap = upper - lower;
    Ok(OracleResult {
        lower,
        upper,
        gap,
        choi_witness,
        dual_witness,
        converged: gap <= opts.tol,
        seed: opts.seed,
        dual_iterations,
    })
}

/// mu of the raw operator built from (|psi>, Pi); no invertibility needed.
pub fn mu_of_raw_instance(
    psi: &PureState,
    pi: &MeasurementOperator,
    opts: &OracleOptions,
) -> Result<OracleResult, OracleError> {
    let r = build_q(psi, pi)?;
    let dim_y = pi.side() / psi.dim_z();
    reference_mu(&r, (dim_y, psi.dim_x()), opts)
}

/// Stinespring ascent. The isometry V maps X into Y (x) E with dE = NM; its
/// reshuffle Vt (rows (y,i), columns e) has Gram matrix J = Vt Vt*, which is
/// exactly the Choi matrix of the channel. The objective Tr(Vt* Q Vt) is a
/// PSD quadratic form, so replacing V by the polar factor of the gradient is
/// monotone.
fn primal_ascent(
    q: &ComplexMatrix,
    dim_y: usize,
    dim_x: usize,
    opts: &OracleOptions,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, ComplexMatrix), OracleError> {
    let n = dim_x;
    let m = dim_y;
    let d_env = n * m;
    let tall_rows = m * d_env;

    let mut best_f = -1.0;
    let mut best_j: Option<ComplexMatrix> = None;

    for _ in 0..opts.restarts.max(1) {
        let start = ComplexMatrix::from_fn(tall_rows, n, |_, _| {
            Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
        });
        let mut v = polar_isometry(&start)?;
        let mut f_prev = f64::NEG_INFINITY;
        for _ in 0..opts.ascent_iters {
            let vt = reshuffle_to_choi_frame(&v, m, n, d_env);
            let g_t = q * &vt;
            let f = vt.inner(&g_t).re;
            if (f - f_prev).abs() <= 1e-15 * f.abs().max(1.0) {
                break;
            }
            f_prev = f;
            if g_t.max_abs() < 1e-300 {
                break; // Q annihilates everything reachable; f = 0 is exact.
            }
            let g = reshuffle_to_isometry_frame(&g_t, m, n, d_env);
            v = polar_isometry(&g)?;
        }
        let vt = reshuffle_to_choi_frame(&v, m, n, d_env);
        let j = &vt * &vt.adjoint();
        let f = q.inner(&j).re;
        if f > best_f {
            best_f = f;
            best_j = Some(j);
        }
    }
    Ok((best_f, best_j.expect("at least one restart")))
}

fn reshuffle_to_choi_frame(v: &ComplexMatrix, m: usize, n: usize, d_env: usize) -> ComplexMatrix {
    // V[(y*dE + e), i] -> Vt[(y*N + i), e]
    ComplexMatrix::from_fn(m * n, d_env, |row, e| {
        let (y, i) = (row / n, row % n);
        v.at(y * d_env + e, i)
    })
}

fn reshuffle_to_isometry_frame(
    g_t: &ComplexMatrix,
    m: usize,
    n: usize,
    d_env: usize,
) -> ComplexMatrix {
    ComplexMatrix::from_fn(m * d_env, n, |row, i| {
        let (y, e) = (row / d_env, row % d_env);
        g_t.at(y * n + i, e)
    })
}

/// Exterior-penalty Polyak subgradient descent for
/// min Tr(Y) s.t. 1 (x) Y >= Q. The penalty constant 2N exceeds the exact
/// penalty threshold, so penalized and constrained minimizers coincide; the
/// Polyak step targets the primal value, which lower-bounds the optimum.
fn dual_descent(
    q: &ComplexMatrix,
    q_norm: &f64,
    dim_y: usize,
    dim_x: usize,
    target: f64,
    opts: &OracleOptions,
) -> Result<(f64, ComplexMatrix, u64), OracleError> {
    let n = dim_x;
    let m = dim_y;
    let id_n = ComplexMatrix::identity(n);
    let penalty = 2.0 * n as f64;

    let mut y = id_n.scaled(q_norm.max(0.0));
    let mut best_val = f64::INFINITY;
    let mut best_y = y.clone();
    let mut iterations = 0u64;

    for it in 0..opts.iter_budget {
        iterations = it + 1;
        let slack = &kron(&ComplexMatrix::identity(m), &y) - q;
        let eig = herm_eig(&slack, 1e-9 * slack.frobenius_norm().max(1.0))?;
        let lam_min = eig.min_eigenvalue();
        let viol = (-lam_min).max(0.0);

        let feas_val = y.trace().re + n as f64 * viol;
        if feas_val < best_val {
            best_val = feas_val;
            best_y = &y + &id_n.scaled(viol);
        }
        if best_val - target <= opts.tol {
            break;
        }

        let objective = y.trace().re + penalty * viol;
        let grad = if viol > 0.0 {
            let v = eig.eigenvector(eig.dim() - 1);
            let vv = ComplexMatrix::outer(&v, &v);
            let reduced = partial_trace(&vv, (m, n), TracedFactor::First)?;
            &id_n - &reduced.scaled(penalty)
        } else {
            if objective <= target + 1e-15 {
                break; // At or below the weak-duality floor while feasible.
            }
            id_n.clone()
        };
        let grad_sq = grad.frobenius_norm().powi(2);
        let mut step = (objective - target) / grad_sq;
        if !(step.is_finite() && step > 0.0) {
            step = 1e-3 / ((it + 1) as f64).sqrt();
        }
        y = &y - &grad.scaled(step);
        y = y.hermitize()?;
    }
    Ok((best_val, best_y, iterations))
}

fn validate_choi_witness(j: &ComplexMatrix, dim_y: usize, dim_x: usize) -> Result<(), OracleError> {
    let eig = herm_eig(&j.hermitize()?, 1e-8 * j.frobenius_norm().max(1.0))
        .map_err(|e| OracleError::WitnessInvalid(e.to_string()))?;
    if eig.min_eigenvalue() < -1e-8 {
        return Err(OracleError::WitnessInvalid(format!(
            "Choi witness has eigenvalue {:.3e}",
            eig.min_eigenvalue()
        )));
    }
    let marginal = partial_trace(j, (dim_y, dim_x), TracedFactor::First)?;
    let dev_eig = herm_eig(
        &(&marginal - &ComplexMatrix::identity(dim_x)).hermitize()?,
        1e-8 * marginal.frobenius_norm().max(1.0),
    )
    .map_err(|e| OracleError::WitnessInvalid(e.to_string()))?;
    if dev_eig.max_eigenvalue() > 1e-8 {
        return Err(OracleError::WitnessInvalid(format!(
            "Choi marginal exceeds identity by {:.3e}",
            dev_eig.max_eigenvalue()
        )));
    }
    Ok(())
}

fn validate_dual_witness(
    q: &ComplexMatrix,
    y: &ComplexMatrix,
    dim_y: usize,
) -> Result<(), OracleError> {
    let slack = &kron(&ComplexMatrix::identity(dim_y), y) - q;
    let eig = herm_eig(&slack.hermitize()?, 1e-8 * slack.frobenius_norm().max(1.0))
        .map_err(|e| OracleError::WitnessInvalid(e.to_string()))?;
    if eig.min_eigenvalue() < -1e-8 {
        return Err(OracleError::WitnessInvalid(format!(
            "dual witness slack has eigenvalue {:.3e}",
            eig.min_eigenvalue()
        )));
    }
    Ok(())
}
