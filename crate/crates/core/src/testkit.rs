//! Synthetic exact models for unit tests.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::TransferDataSet;

/// Scalar data of `F(λ) = Σ y_t² / (λ + μ_t)`.
pub fn diagonal_model_data(mu: &[f64], y2: &[f64], b: &[f64]) -> TransferDataSet {
    let f = |l: f64| mu.iter().zip(y2).map(|(m, y)| y / (l + m)).sum::<f64>();
    let df = |l: f64| mu.iter().zip(y2).map(|(m, y)| -y / (l + m).powi(2)).sum::<f64>();
    TransferDataSet::scalar(b.to_vec(), b.iter().map(|&l| f(l)).collect(), b.iter().map(|&l| df(l)).collect()).unwrap()
}

/// Data of a random SPD system `(A + λI) u = G`, `F = G^T u`, `DF = -u^T u`.
/// With `repeat` all sources share one column.
pub fn random_model_data(seed: u64, n: usize, k: usize, b: &[f64], repeat: bool) -> TransferDataSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let a = x.transpose() * &x / n as f64 + DMatrix::identity(n, n) * 0.1;
    let g = if repeat {
        let col = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        DMatrix::from_fn(n, k, |i, _| col[i])
    } else {
        DMatrix::from_fn(n, k, |_, _| rng.random_range(-1.0..1.0))
    };
    let mut f = Vec::new();
    let mut df = Vec::new();
    for &l in b {
        let u = (&a + DMatrix::identity(n, n) * l).cholesky().unwrap().solve(&g);
        f.push(g.transpose() * &u);
        df.push(-(u.transpose() * &u));
    }
    TransferDataSet::new(b.to_vec(), f, df).unwrap()
}
