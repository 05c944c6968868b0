//! Decides the maximum acceptance probability of two-message quantum
//! verifiers.
//!
//! The pipeline: build the interactive measurement operator `Q` of a verifier
//! from its circuits (or take `Q` directly), condition it to bounded
//! condition number with matching thresholds `gamma` and `epsilon`, then run
//! a matrix-multiplicative-weights iteration that decides `mu(Q) >= gamma`
//! versus `mu(Q) <= gamma` and emits a primal or dual certificate that can be
//! verified independently of the solver. A slow reference oracle
//! cross-checks `mu` on desk-scale instances, and an amplification module
//! covers the error-reduction preprocessing arithmetic.

pub mod amplification;
pub mod certificates;
pub mod conditioning;
pub mod formats;
pub mod linalg;
pub mod mmw;
pub mod oracle;
pub mod quantum;
