//! Independent dense linear-algebra oracles for the integration tests.
//!
//! The library computes kernels and generators through circulant spectral
//! shortcuts; everything here recomputes the same objects by a different
//! route (dense matrices, a symmetric eigendecomposition for fractional
//! powers, scaling-and-squaring for the exponential) so agreement is
//! evidence rather than tautology.

#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cyclechain::{CycleSize, Pmf};

/// Dense combinatorial Laplacian of the m-cycle: 2 on the diagonal, -1 on
/// the two neighbours (mod m).
pub fn laplacian(m: usize) -> DMatrix<f64> {
    let mut l = DMatrix::zeros(m, m);
    for r in 0..m {
        l[(r, r)] = 2.0;
        l[(r, (r + 1) % m)] -= 1.0;
        l[(r, (r + m - 1) % m)] -= 1.0;
    }
    l
}

/// Matrix power A^beta of a symmetric positive semidefinite matrix through
/// a dense eigendecomposition. Null-space eigenvalues come out of the
/// solver as roundoff-sized numbers, and a fractional power amplifies them
/// (the derivative of x^beta is infinite at zero for beta < 1), so anything
/// below a relative threshold is snapped to exactly zero first, the usual
/// numerical-rank rule.
pub fn symmetric_power(a: &DMatrix<f64>, beta: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(a.clone());
    let cut = 1e-12 * eig.eigenvalues.amax();
    let powered = eig
        .eigenvalues
        .map(|lam| if lam < cut { 0.0 } else { lam.powf(beta) });
    &eig.eigenvectors * DMatrix::from_diagonal(&powered) * eig.eigenvectors.transpose()
}

/// Matrix exponential by scaling and squaring around a Taylor core run to
/// machine precision. Deliberately not the library's uniformization or
/// spectral route.
pub fn expm(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let norm = a
        .row_iter()
        .map(|row| row.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let scaled = a / 2.0_f64.powi(squarings as i32);
    let mut result = DMatrix::<f64>::identity(n, n);
    let mut term = DMatrix::<f64>::identity(n, n);
    for k in 1..200 {
        term = (&term * &scaled) / (k as f64);
        result += &term;
        if term.amax() < 1e-18 {
            break;
        }
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

/// A reproducible stream of strictly positive random pmfs.
pub fn pmf_stream(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One strictly positive pmf drawn from the stream; weights stay in
/// [0.05, 1.05) so probability ratios are bounded.
pub fn random_pmf(rng: &mut ChaCha8Rng, m: CycleSize) -> Pmf {
    let w: Vec<f64> = (0..m.get()).map(|_| 0.05 + rng.random::<f64>()).collect();
    Pmf::from_weights(w).expect("positive weights normalize")
}

/// Report one acceptance gate; keeps a visible line per criterion in the
/// test output and fails the test when the gate is exceeded.
pub fn gate(name: &str, err: f64, tol: f64) {
    let ok = err <= tol;
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("{verdict} {name}: max error {err:.3e}, tolerance {tol:.1e}");
    assert!(ok, "{name}: {err:.3e} exceeds {tol:.1e}");
}

/// Largest absolute entry of a slice, for max-error accumulation.
pub fn max_abs(values: &[f64]) -> f64 {
    values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
