#![allow(dead_code)]

use mfglht::seed::{rng_from, Rng};
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

pub fn rel(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

pub fn normal_matrix(rng: &mut Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.sample(StandardNormal))
}

/// Random matrix with smallest singular value at least `floor`.
pub fn well_conditioned(rng: &mut Rng, n: usize, floor: f64) -> DMatrix<f64> {
    loop {
        let m = normal_matrix(rng, n, n) + DMatrix::identity(n, n) * 1.5;
        if m.clone().svd(false, false).singular_values.min() >= floor {
            return m;
        }
    }
}

/// Random `q x k` coefficient matrix of full row rank.
pub fn random_g(rng: &mut Rng, q: usize, k: usize) -> DMatrix<f64> {
    loop {
        let g = normal_matrix(rng, q, k);
        if g.clone().svd(false, false).singular_values.min() > 0.2 {
            return g;
        }
    }
}

pub fn rng(seed: u64) -> Rng {
    rng_from(seed)
}
