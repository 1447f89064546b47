//! Brute-force reference implementations of the graph features: all-pairs
//! BFS, triangle counting over node triples, direct tabulation.

use std::collections::{BTreeMap, VecDeque};

use codeevo::pyast::AstGraph;

pub fn adjacency_matrix(g: &AstGraph) -> Vec<Vec<bool>> {
    let n = g.nodes.len();
    let mut a = vec![vec![false; n]; n];
    for &(u, v) in &g.edges {
        a[u][v] = true;
        a[v][u] = true;
    }
    a
}

fn bfs_matrix(a: &[Vec<bool>], s: usize) -> Vec<Option<usize>> {
    let n = a.len();
    let mut dist = vec![None; n];
    dist[s] = Some(0);
    let mut q = VecDeque::from([s]);
    while let Some(v) = q.pop_front() {
        for u in 0..n {
            if a[v][u] && dist[u].is_none() {
                dist[u] = Some(dist[v].unwrap() + 1);
                q.push_back(u);
            }
        }
    }
    dist
}

fn entropy(values: &[usize]) -> f64 {
    let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
    for &v in values {
        *counts.entry(v).or_default() += 1;
    }
    let n = values.len() as f64;
    counts
        .values()
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum::<f64>()
        .max(0.0)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn var(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

fn min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// The 22 features in canonical order, computed the slow way. Assumes a
/// connected graph.
pub fn graph_features(g: &AstGraph) -> [f64; 22] {
    let a = adjacency_matrix(g);
    let n = a.len();
    let m = g.edges.len();
    let degrees: Vec<usize> = a.iter().map(|row| row.iter().filter(|&&b| b).count()).collect();
    let deg_f: Vec<f64> = degrees.iter().map(|&d| d as f64).collect();
    let depths: Vec<usize> = g.nodes.iter().map(|x| x.depth).collect();
    let depth_f: Vec<f64> = depths.iter().map(|&d| d as f64).collect();

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for &(u, v) in &g.edges {
        xs.extend([deg_f[u], deg_f[v]]);
        ys.extend([deg_f[v], deg_f[u]]);
    }
    let assort = if xs.is_empty() {
        0.0
    } else {
        let (mx, my) = (mean(&xs), mean(&ys));
        let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let vx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        let vy: f64 = ys.iter().map(|y| (y - my) * (y - my)).sum();
        if vx == 0.0 || vy == 0.0 {
            0.0
        } else {
            cov / (vx * vy).sqrt()
        }
    };

    let mut clustering = vec![0.0; n];
    let mut triangles = 0usize;
    let mut triples = 0usize;
    for v in 0..n {
        let nb: Vec<usize> = (0..n).filter(|&u| a[v][u]).collect();
        let k = nb.len();
        let mut t = 0usize;
        for i in 0..k {
            for j in i + 1..k {
                if a[nb[i]][nb[j]] {
                    t += 1;
                }
            }
        }
        if k >= 2 {
            clustering[v] = t as f64 / (k * (k - 1) / 2) as f64;
        }
        triangles += t;
        triples += k * k.saturating_sub(1) / 2;
    }
    let transitivity = if triples == 0 { 0.0 } else { triangles as f64 / triples as f64 };

    let mut ecc = vec![0usize; n];
    let mut total = 0usize;
    for (s, e) in ecc.iter_mut().enumerate() {
        for d in bfs_matrix(&a, s).into_iter().flatten() {
            *e = (*e).max(d);
            total += d;
        }
    }
    let ecc_f: Vec<f64> = ecc.iter().map(|&e| e as f64).collect();
    let aspl = if n < 2 { 0.0 } else { total as f64 / (n * (n - 1)) as f64 };

    [
        n as f64,
        m as f64,
        m as f64 / n as f64,
        min(&deg_f),
        max(&deg_f),
        mean(&deg_f),
        var(&deg_f),
        entropy(&degrees),
        assort,
        min(&depth_f),
        max(&depth_f),
        mean(&depth_f),
        entropy(&depths),
        min(&clustering),
        max(&clustering),
        mean(&clustering),
        var(&clustering),
        transitivity,
        max(&ecc_f),
        min(&ecc_f),
        mean(&ecc_f),
        aspl,
    ]
}

/// Relative-or-absolute closeness at `tol`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}
