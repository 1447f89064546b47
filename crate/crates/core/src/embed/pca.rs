use super::Matrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct PcaResult {
    /// k×d, orthonormal rows.
    pub components: Matrix,
    pub explained_variance_ratio: Vec<f64>,
    /// n×k scores of the centered data.
    pub projected: Matrix,
    pub mean: Vec<f64>,
}

impl PcaResult {
    /// Map scores back to the input space.
    pub fn reconstruct(&self, scores: &Matrix) -> Matrix {
        let (k, d) = (self.components.rows(), self.components.cols());
        let mut out = Matrix::zeros(scores.rows(), d);
        for i in 0..scores.rows() {
            for j in 0..d {
                let mut v = self.mean[j];
                for c in 0..k {
                    v += scores[(i, c)] * self.components[(c, j)];
                }
                out[(i, j)] = v;
            }
        }
        out
    }
}

/// Top-`k` principal components from the sample covariance of `x`.
pub fn pca(x: &Matrix, k: usize) -> Result<PcaResult> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(Error::InvalidArgument(format!("PCA needs at least 2 rows, got {n}")));
    }
    if k == 0 || k > d || k > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "PCA component count {k} outside 1..={}",
            d.min(n - 1)
        )));
    }
    let mean: Vec<f64> = (0..d)
        .map(|j| x.iter_rows().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let mut centered = x.clone();
    for i in 0..n {
        for (v, m) in centered.row_mut(i).iter_mut().zip(&mean) {
            *v -= m;
        }
    }
    let mut cov = Matrix::zeros(d, d);
    for a in 0..d {
        for b in a..d {
            let s: f64 = centered.iter_rows().map(|r| r[a] * r[b]).sum::<f64>() / (n - 1) as f64;
            cov[(a, b)] = s;
            cov[(b, a)] = s;
        }
    }
    let (values, vectors) = jacobi_eigen(cov);

    let mut order: Vec<usize> = (0..d).collect();
    // Stable: equal eigenvalues keep solver order.
    order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    let clamped: Vec<f64> = values.iter().map(|&v| v.max(0.0)).collect();
    let total: f64 = clamped.iter().sum();

    let mut components = Matrix::zeros(k, d);
    let mut ratios = Vec::with_capacity(k);
    for (c, &idx) in order.iter().take(k).enumerate() {
        let mut v: Vec<f64> = (0..d).map(|j| vectors[(j, idx)]).collect();
        let mut lead = 0;
        for j in 1..d {
            if v[j].abs() > v[lead].abs() {
                lead = j;
            }
        }
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|e| *e = -*e);
        }
        components.row_mut(c).copy_from_slice(&v);
        ratios.push(if total > 0.0 { clamped[idx] / total } else { 0.0 });
    }

    let mut projected = Matrix::zeros(n, k);
    for i in 0..n {
        for c in 0..k {
            projected[(i, c)] = centered
                .row(i)
                .iter()
                .zip(components.row(c))
                .map(|(a, b)| a * b)
                .sum();
        }
    }
    Ok(PcaResult {
        components,
        explained_variance_ratio: ratios,
        projected,
        mean,
    })
}

/// Cyclic Jacobi rotations for a symmetric matrix. Returns eigenvalues and
/// the eigenvectors as columns.
pub fn jacobi_eigen(mut a: Matrix) -> (Vec<f64>, Matrix) {
    let d = a.rows();
    let mut v = Matrix::zeros(d, d);
    for i in 0..d {
        v[(i, i)] = 1.0;
    }
    let scale: f64 = a.as_slice().iter().map(|x| x * x).sum();
    for _ in 0..MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..d {
            for q in p + 1..d {
                off += a[(p, q)] * a[(p, q)];
            }
        }
        if off <= scale * 1e-32 || off == 0.0 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                let apq = a[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = c * akp - s * akq;
                    a[(k, q)] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = c * apk - s * aqk;
                    a[(q, k)] = s * apk + c * aqk;
                }
                for k in 0..d {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..d).map(|i| a[(i, i)]).collect(), v)
}
