#![allow(dead_code)]

use dpmwf::linalg::{CMatrix, C64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

pub fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(rng)
}

pub fn complex_gaussian(rng: &mut ChaCha8Rng) -> C64 {
    C64::new(gaussian(rng), gaussian(rng)) * std::f64::consts::FRAC_1_SQRT_2
}

/// `A Aᴴ` with `A` an `m × rank` complex Gaussian matrix.
pub fn random_psd(rng: &mut ChaCha8Rng, m: usize, rank: usize) -> CMatrix {
    let cols: Vec<Vec<C64>> = (0..rank)
        .map(|_| (0..m).map(|_| complex_gaussian(rng)).collect())
        .collect();
    let mut r = CMatrix::zeros(m);
    for c in &cols {
        r.add_outer(c, 1.0);
    }
    r
}

/// Speech covariance of random rank, full-rank noise covariance and their
/// sum, as `(rss, rnn, rxx)`.
pub fn psd_triplet(rng: &mut ChaCha8Rng, m: usize) -> (CMatrix, CMatrix, CMatrix) {
    let rank = rng.random_range(1..=m);
    let rss = random_psd(rng, m, rank);
    let rnn = random_psd(rng, m, m + 2).add_scaled(&CMatrix::identity(m), 0.1);
    let rxx = &rss + &rnn;
    (rss, rnn, rxx)
}

pub fn to_nalgebra(a: &CMatrix) -> DMatrix<C64> {
    let n = a.dim();
    DMatrix::from_fn(n, n, |i, j| a[(i, j)])
}

pub fn from_nalgebra(a: &DMatrix<C64>) -> CMatrix {
    CMatrix::from_fn(a.nrows(), |i, j| a[(i, j)])
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(a: &CMatrix) -> f64 {
    to_nalgebra(a)
        .symmetric_eigenvalues()
        .iter()
        .cloned()
        .fold(f64::INFINITY, f64::min)
}

pub fn frobenius_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    (a - b).frobenius_norm()
}

pub fn random_signal(rng: &mut ChaCha8Rng, channels: usize, samples: usize) -> Vec<Vec<f64>> {
    (0..channels)
        .map(|_| (0..samples).map(|_| gaussian(rng)).collect())
        .collect()
}
