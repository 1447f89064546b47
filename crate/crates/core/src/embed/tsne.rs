//! Exact t-SNE (O(n²) per iteration) with momentum and adaptive gains.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::Matrix;
use crate::error::{Error, Result};

const ENTROPY_TOLERANCE: f64 = 1e-5;
const BISECTION_STEPS: usize = 50;
const EARLY_PHASE: usize = 250;
const EXAGGERATION: f64 = 12.0;
const LEARNING_RATE: f64 = 200.0;
const INIT_SD: f64 = 1e-4;
const P_FLOOR: f64 = 1e-12;
const MIN_GAIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TsneOptions {
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: usize,
}

impl Default for TsneOptions {
    fn default() -> Self {
        TsneOptions {
            perplexity: 30.0,
            seed: 0,
            iterations: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneResult {
    /// n×2 embedding.
    pub coords: Matrix,
    pub perplexity: f64,
    pub seed: u64,
    pub iterations: usize,
}

fn squared_distances(x: &Matrix) -> Matrix {
    let n = x.rows();
    let mut d = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let s: f64 = x.row(i).iter().zip(x.row(j)).map(|(a, b)| (a - b) * (a - b)).sum();
            d[(i, j)] = s;
            d[(j, i)] = s;
        }
    }
    d
}

/// Conditional affinities of row `i` for precision `beta`; returns the
/// entropy in bits.
fn conditional_row(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let shift = dist
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != i)
        .map(|(_, &d)| d)
        .fold(f64::INFINITY, f64::min);
    let mut sum = 0.0;
    let mut weighted = 0.0;
    for (j, (&d, p)) in dist.iter().zip(out.iter_mut()).enumerate() {
        if j == i {
            *p = 0.0;
            continue;
        }
        *p = (-beta * (d - shift)).exp();
        sum += *p;
        weighted += (d - shift) * *p;
    }
    out.iter_mut().for_each(|p| *p /= sum);
    (sum.ln() + beta * weighted / sum) / std::f64::consts::LN_2
}

/// Bisection on the precision until the row entropy is within tolerance of
/// `target` bits; leaves the affinities in `row` and returns the entropy.
fn solve_row(dist: &[f64], i: usize, target: f64, row: &mut [f64]) -> f64 {
    let (mut beta, mut lo, mut hi) = (1.0, f64::NEG_INFINITY, f64::INFINITY);
    let mut h = conditional_row(dist, i, beta, row);
    for _ in 0..BISECTION_STEPS {
        let diff = h - target;
        if diff.abs() < ENTROPY_TOLERANCE {
            break;
        }
        if diff > 0.0 {
            lo = beta;
            beta = if hi.is_infinite() { beta * 2.0 } else { (beta + hi) / 2.0 };
        } else {
            hi = beta;
            beta = if lo.is_infinite() { beta / 2.0 } else { (beta + lo) / 2.0 };
        }
        h = conditional_row(dist, i, beta, row);
    }
    h
}

/// Symmetrized joint affinities P with per-point bandwidths matched to
/// `perplexity` by bisection.
pub fn joint_probabilities(x: &Matrix, perplexity: f64) -> Matrix {
    let n = x.rows();
    let dist = squared_distances(x);
    let target = perplexity.log2();
    let mut cond = Matrix::zeros(n, n);
    let mut row = vec![0.0; n];
    for i in 0..n {
        solve_row(dist.row(i), i, target, &mut row);
        cond.row_mut(i).copy_from_slice(&row);
    }
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                p[(i, j)] = ((cond[(i, j)] + cond[(j, i)]) / (2.0 * n as f64)).max(P_FLOOR);
            }
        }
    }
    p
}

/// Student-t kernel values 1 / (1 + |y_i − y_j|²), zero diagonal, and their sum.
fn kernel(y: &Matrix) -> (Matrix, f64) {
    let n = y.rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let yi = y.row(i);
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        let yj = y.row(j);
                        let d: f64 = yi.iter().zip(yj).map(|(a, b)| (a - b) * (a - b)).sum();
                        1.0 / (1.0 + d)
                    }
                })
                .collect()
        })
        .collect();
    // Row sums then a fixed-order total keep the reduction deterministic.
    let z: f64 = rows.iter().map(|r| r.iter().sum::<f64>()).sum();
    (Matrix::from_rows(&rows), z)
}

/// KL(P || Q) for the embedding `y`.
pub fn kl_divergence(p: &Matrix, y: &Matrix) -> f64 {
    let (num, z) = kernel(y);
    let n = y.rows();
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j && p[(i, j)] > 0.0 {
                let q = num[(i, j)] / z;
                kl += p[(i, j)] * (p[(i, j)] / q).ln();
            }
        }
    }
    kl
}

fn gradient_with(p: &Matrix, y: &Matrix, exaggeration: f64) -> Matrix {
    let (num, z) = kernel(y);
    let (n, dim) = (y.rows(), y.cols());
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = vec![0.0; dim];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = 4.0 * (exaggeration * p[(i, j)] - num[(i, j)] / z) * num[(i, j)];
                for (c, gc) in g.iter_mut().enumerate() {
                    *gc += w * (y[(i, c)] - y[(j, c)]);
                }
            }
            g
        })
        .collect();
    Matrix::from_rows(&rows)
}

/// Analytic gradient of [`kl_divergence`] with respect to `y`.
pub fn kl_gradient(p: &Matrix, y: &Matrix) -> Matrix {
    gradient_with(p, y, 1.0)
}

/// Exact t-SNE to two dimensions.
pub fn tsne(x: &Matrix, options: TsneOptions) -> Result<TsneResult> {
    let n = x.rows();
    if n < 4 {
        return Err(Error::InvalidArgument(format!("t-SNE needs at least 4 points, got {n}")));
    }
    let max_perplexity = (n as f64 - 1.0) / 3.0;
    if !(1.0..=max_perplexity).contains(&options.perplexity) {
        return Err(Error::InvalidArgument(format!(
            "perplexity {} outside [1, {max_perplexity}] for {n} points",
            options.perplexity
        )));
    }
    let p = joint_probabilities(x, options.perplexity);

    let mut rng = ChaCha8Rng::seed_from_u64(options.seed);
    let normal = Normal::new(0.0, INIT_SD).expect("valid normal parameters");
    let mut y = Matrix::from_vec(n, 2, (0..2 * n).map(|_| normal.sample(&mut rng)).collect());
    let mut velocity = Matrix::zeros(n, 2);
    // Per-coordinate adaptive gains (delta-bar-delta).
    let mut gains = vec![1.0f64; 2 * n];

    for it in 0..options.iterations {
        let (momentum, exaggeration) = if it < EARLY_PHASE {
            (0.5, EXAGGERATION)
        } else {
            (0.8, 1.0)
        };
        let grad = gradient_with(&p, &y, exaggeration);
        for (((v, g), yv), gain) in velocity
            .as_mut_slice()
            .iter_mut()
            .zip(grad.as_slice())
            .zip(y.as_mut_slice().iter_mut())
            .zip(gains.iter_mut())
        {
            *gain = if (*g > 0.0) != (*v > 0.0) {
                *gain + 0.2
            } else {
                (*gain * 0.8).max(MIN_GAIN)
            };
            *v = momentum * *v - LEARNING_RATE * *gain * g;
            *yv += *v;
        }
        for c in 0..2 {
            let mean = (0..n).map(|i| y[(i, c)]).sum::<f64>() / n as f64;
            for i in 0..n {
                y[(i, c)] -= mean;
            }
        }
    }
    Ok(TsneResult {
        coords: y,
        perplexity: options.perplexity,
        seed: options.seed,
        iterations: options.iterations,
    })
}
