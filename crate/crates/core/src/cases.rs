//! Standard problems: the scalar pseudo-exponential example, its delayed
//! variant, a two-delay matrix case, and seeded random pseudo-exponentials.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::matrix::{CMatrix, C64, ONE};
use crate::weyl::{PseudoExpParams, WeylData};

/// Minimum conjugate spectral gap for random draws.
pub const RANDOM_MIN_GAP: f64 = 0.2;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// `α = 2.5i`, `θ₁ = 2`, `θ₂ = 1`; potential `20/(4e^{5x} + e^{−5x})`.
pub fn scalar_pseudo_exponential() -> PseudoExpParams {
    PseudoExpParams::new(
        CMatrix::scalar(c(0.0, 2.5)),
        CMatrix::scalar(c(2.0, 0.0)),
        CMatrix::scalar(ONE),
    )
    .expect("scalar parameters satisfy the identity")
}

/// Weyl data `β = 1.5i`, `θ₁ = 2`, `θ₂ = 1`, `R = 1` with a single delay `d`.
pub fn scalar(delay: f64) -> WeylData {
    WeylData::new(
        CMatrix::scalar(c(0.0, 1.5)),
        CMatrix::scalar(c(2.0, 0.0)),
        CMatrix::scalar(ONE),
        vec![delay],
        CMatrix::scalar(ONE),
    )
    .expect("scalar shapes are consistent")
}

/// `n = p = 2`, non-normal `β`, delays `0.3` and `0.7`, `R` the swap.
pub fn two_delay() -> WeylData {
    let beta = CMatrix::from_rows(&[[c(0.0, 1.0), c(0.3, 0.0)], [c(-0.2, 0.0), c(0.5, 0.8)]]);
    let theta1 = CMatrix::from_rows(&[[c(0.6, 0.1), c(-0.3, 0.4)], [c(0.2, -0.5), c(0.7, 0.0)]]);
    let theta2 = CMatrix::from_rows(&[[c(0.5, 0.0), c(0.1, 0.3)], [c(-0.4, 0.2), c(0.6, -0.1)]]);
    let r = CMatrix::from_real_rows(&[[0.0, 1.0], [1.0, 0.0]]);
    WeylData::new(beta, theta1, theta2, vec![0.3, 0.7], r).expect("two-delay shapes are consistent")
}

/// Random admissible pseudo-exponential parameters; dimensions cycle through
/// `n ∈ 1..=4`, `p ∈ 1..=2` with the seed.
pub fn random_pseudo_exponential(seed: u64) -> PseudoExpParams {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 1 + (seed % 4) as usize;
    let p = 1 + ((seed / 4) % 2) as usize;
    PseudoExpParams::random(&mut rng, n, p, RANDOM_MIN_GAP)
}
