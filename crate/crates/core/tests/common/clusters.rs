//! Two well-separated Gaussian clusters and the check that t-SNE keeps them apart.

use codeevo::embed::{tsne, Matrix, TsneOptions};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

/// Two 10-point Gaussian clusters in 5-D, centres 100σ apart.
pub fn two_clusters(seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let rows: Vec<Vec<f64>> = (0..20)
        .map(|i| {
            let offset = if i < 10 { 0.0 } else { 100.0 / 5f64.sqrt() };
            (0..5).map(|_| offset + normal.sample(&mut rng)).collect()
        })
        .collect();
    Matrix::from_rows(&rows)
}

pub fn separation_oracle(seed: u64) {
    let x = two_clusters(seed);
    let r = tsne(&x, TsneOptions { perplexity: 5.0, seed, iterations: 1000 }).unwrap();
    let dist = |i: usize, j: usize| {
        let (a, b) = (r.coords.row(i), r.coords.row(j));
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    };
    let mut within: f64 = 0.0;
    let mut between = f64::INFINITY;
    for i in 0..20 {
        for j in i + 1..20 {
            if (i < 10) == (j < 10) {
                within = within.max(dist(i, j));
            } else {
                between = between.min(dist(i, j));
            }
        }
    }
    assert!(between > within, "seed {seed}: between {between} <= within {within}");
}
