//! Error-reduction preprocessing: parameter arithmetic, the analytic
//! Chernoff/Markov bounds, and a Monte Carlo check of the completeness side.
//!
//! A proof system with completeness a and soundness b, a - b >= 1/q, is
//! repeated s*t times in parallel (s = 2rq, t = 8rq^2 s); row majorities at
//! threshold t(a+b)/2 are AND-ed. The honest-prover rejection probability is
//! bounded by s*e^{-rs} < 2^-r; the soundness side satisfies
//! (1 - 1/(2q))^s < 2^-r. Only the completeness side is simulatable: the
//! soundness bound quantifies over adversaries and is checked analytically
//! only.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum AmplifyError {
    #[error("completeness {a} and soundness {b} must satisfy a - b >= 1/q = {inv_q}")]
    GapTooSmall { a: f64, b: f64, inv_q: f64 },
    #[error("probabilities must lie in [0,1], got a={a}, b={b}")]
    BadProbability { a: f64, b: f64 },
    #[error("r and q must be positive")]
    ZeroParameter,
    #[error("outcome matrix must be {s}x{t}, got {rows}x{cols}")]
    ShapeMismatch { s: u64, t: u64, rows: usize, cols: usize },
}

/// Repetition parameters: s = 2rq rows of t = 8rq^2 s trials each, with row
/// acceptance threshold t(a+b)/2.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AmplificationParams {
    pub r: u64,
    pub q: u64,
    pub a: f64,
    pub b: f64,
    pub s: u64,
    pub t: u64,
    pub threshold: f64,
}

pub fn derive_params(r: u64, q: u64, a: f64, b: f64) -> Result<AmplificationParams, AmplifyError> {
    if r == 0 || q == 0 {
        return Err(AmplifyError::ZeroParameter);
    }
    if !(0.0..=1.0).contains(&a) || !(0.0..=1.0).contains(&b) {
        return Err(AmplifyError::BadProbability { a, b });
    }
    let inv_q = 1.0 / q as f64;
    // Dust guard: boundary pairs like (b + 1/q, b) round one ulp short.
    if a - b < inv_q - 1e-12 {
        return Err(AmplifyError::GapTooSmall { a, b, inv_q });
    }
    let s = 2 * r * q;
    let t = 8 * r * q * q * s;
    Ok(AmplificationParams { r, q, a, b, s, t, threshold: t as f64 * (a + b) / 2.0 })
}

/// Majority-then-AND decision on an s x t matrix of per-execution outcomes.
/// A row passes when its sum meets the threshold (inclusive).
pub fn decision(rows: &[Vec<bool>], params: &AmplificationParams) -> Result<bool, AmplifyError> {
    if rows.len() != params.s as usize || rows.iter().any(|r| r.len() != params.t as usize) {
        return Err(AmplifyError::ShapeMismatch {
            s: params.s,
            t: params.t,
            rows: rows.len(),
            cols: rows.first().map(|r| r.len()).unwrap_or(0),
        });
    }
    Ok(rows
        .iter()
        .all(|row| row.iter().filter(|&&y| y).count() as f64 >= params.threshold))
}

/// Honest-prover rejection bound s * e^{-rs}; always below 2^-r for valid
/// parameters.
pub fn completeness_bound(params: &AmplificationParams) -> f64 {
    let rs = (params.r * params.s) as f64;
    let bound = params.s as f64 * (-rs).exp();
    assert!(
        bound < 2f64.powi(-(params.r as i32)),
        "completeness chain violated: {bound} >= 2^-{}",
        params.r
    );
    bound
}

/// Adversarial acceptance bound (1 - 1/(2q))^s; always below 2^-r for valid
/// parameters.
pub fn soundness_bound(params: &AmplificationParams) -> f64 {
    let base = 1.0 - 1.0 / (2.0 * params.q as f64);
    let bound = base.powi(params.s as i32);
    assert!(
        bound < 2f64.powi(-(params.r as i32)),
        "soundness chain violated: {bound} >= 2^-{}",
        params.r
    );
    bound
}

/// Result of the completeness Monte Carlo: seeded, reproducible.
#[derive(Clone, Copy, Debug)]
pub struct CompletenessSimulation {
    pub trials: u64,
    pub failures: u64,
    pub rate: f64,
    pub bound: f64,
    pub seed: u64,
}

/// Draw s x t independent Bernoulli(a) outcome matrices and count rejections
/// of the honest prover. The empirical rate must stay within the analytic
/// bound plus three binomial standard deviations.
pub fn simulate_completeness(
    params: &AmplificationParams,
    trials: u64,
    seed: u64,
) -> CompletenessSimulation {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0u64;
    for _ in 0..trials {
        let mut rejected = false;
        for _ in 0..params.s {
            let mut sum = 0u64;
            for _ in 0..params.t {
                if rng.gen::<f64>() < params.a {
                    sum += 1;
                }
            }
            if (sum as f64) < params.threshold {
                rejected = true;
                break;
            }
        }
        if rejected {
            failures += 1;
        }
    }
    let rate = failures as f64 / trials as f64;
    let bound = completeness_bound(params);
    let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
    assert!(
        rate <= bound + 3.0 * sigma + 1e-12,
        "empirical completeness failure rate {rate} exceeds bound {bound} + slack"
    );
    CompletenessSimulation { trials, failures, rate, bound, seed }
}
