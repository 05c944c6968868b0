//! Shared random-matrix generators for the integration suites. Everything is
//! seeded so each suite is deterministic end to end.
#![allow(dead_code)] // each test binary uses a different subset

use muq::linalg::{c64, herm_eig, polar_isometry, spectral_norm, ComplexMatrix};
use muq::quantum::{MeasurementOperator, PureState};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rand_complex(rng: &mut ChaCha8Rng) -> Complex64 {
    c64(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
}

pub fn rand_matrix(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| rand_complex(rng))
}

pub fn rand_hermitian(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = rand_matrix(n, n, rng);
    (&g + &g.adjoint()).scaled(0.5)
}

/// Random Hermitian rescaled to spectral norm exactly `norm`.
pub fn rand_hermitian_with_norm(n: usize, norm: f64, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let h = rand_hermitian(n, rng);
    let s = spectral_norm(&h);
    h.scaled(norm / s.max(1e-300))
}

pub fn rand_psd(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let g = rand_matrix(n, n, rng);
    &g * &g.adjoint()
}

/// Random Hermitian with spectrum mapped affinely into [0,1].
pub fn rand_contraction(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let h = rand_hermitian(n, rng);
    let eig = herm_eig(&h, 1e-9 * h.frobenius_norm().max(1.0)).unwrap();
    let (hi, lo) = (eig.max_eigenvalue(), eig.min_eigenvalue());
    let span = (hi - lo).max(1e-12);
    eig.apply_fn(|x| (x - lo) / span)
}

pub fn rand_unitary(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    polar_isometry(&rand_matrix(n, n, rng)).unwrap()
}

/// Random density operator (PSD, unit trace).
pub fn rand_density(n: usize, rng: &mut ChaCha8Rng) -> ComplexMatrix {
    let p = rand_psd(n, rng);
    let tr = p.trace().re;
    p.scaled(1.0 / tr)
}

/// Random well-conditioned PSD Q on Y (x) X with kappa <= kap_max and
/// spectral norm `scale`.
pub fn rand_conditioned_q(
    dim_y: usize,
    dim_x: usize,
    kap_max: f64,
    scale: f64,
    rng: &mut ChaCha8Rng,
) -> ComplexMatrix {
    let side = dim_y * dim_x;
    let u = rand_unitary(side, rng);
    let lo = 1.0 / kap_max;
    let mut diag: Vec<f64> = (0..side).map(|_| lo + (1.0 - lo) * rng.gen::<f64>()).collect();
    diag[0] = 1.0;
    diag[side - 1] = lo;
    let scaled = ComplexMatrix::from_fn(side, side, |r, c| u.at(r, c) * diag[c] * scale);
    (&scaled * &u.adjoint()).hermitize().unwrap()
}

/// Random pure state on C^m (x) C^m with a prescribed-shape Schmidt
/// spectrum, so conditioning tests hit a variety of bins.
pub fn rand_structured_state(m: usize, rng: &mut ChaCha8Rng) -> PureState {
    let power = 0.5 + 3.5 * rng.gen::<f64>();
    let mut lam: Vec<f64> = (0..m).map(|_| rng.gen::<f64>().powf(power) + 1e-6).collect();
    let total: f64 = lam.iter().sum();
    for l in lam.iter_mut() {
        *l /= total;
    }
    let ux = rand_unitary(m, rng);
    let uz = rand_unitary(m, rng);
    let mut amps = vec![c64(0.0, 0.0); m * m];
    for (j, &l) in lam.iter().enumerate() {
        let w = l.sqrt();
        for i in 0..m {
            for z in 0..m {
                amps[i * m + z] += ux.at(i, j) * uz.at(z, j) * w;
            }
        }
    }
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    for a in amps.iter_mut() {
        *a /= norm;
    }
    PureState::new(amps, m, m).unwrap()
}

/// Random measurement operator on C^side (spectrum in [0,1]).
pub fn rand_measurement(side: usize, rng: &mut ChaCha8Rng) -> MeasurementOperator {
    MeasurementOperator::new(rand_contraction(side, rng)).unwrap()
}
