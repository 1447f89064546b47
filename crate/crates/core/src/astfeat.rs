//! Graph features of an abstract syntax tree.
//!
//! Distances, degrees and clustering are taken on the undirected view of
//! the tree. Entropies are in nats. Degenerate statistics (no edges, zero
//! variance, no connected triples) are reported as 0.

use serde::{Deserialize, Serialize};

use crate::pyast::AstGraph;

/// Canonical column names of the 22 graph features, in export order.
pub const AST_FEATURE_NAMES: [&str; 22] = [
    "node_count",
    "edge_count",
    "edge_density",
    "degree_min",
    "degree_max",
    "degree_mean",
    "degree_var",
    "degree_entropy",
    "assortativity",
    "depth_min",
    "depth_max",
    "depth_mean",
    "depth_entropy",
    "clustering_min",
    "clustering_max",
    "clustering_mean",
    "clustering_var",
    "transitivity",
    "diameter",
    "radius",
    "mean_eccentricity",
    "avg_shortest_path",
];

pub const EIGEN_FEATURE_NAMES: [&str; 2] = ["eig_centrality_max", "eig_centrality_mean"];

const EIGEN_TOLERANCE: f64 = 1e-10;
const EIGEN_MAX_ITERATIONS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct GraphFeatures {
    pub node_count: f64,
    pub edge_count: f64,
    pub edge_density: f64,
    pub degree_min: f64,
    pub degree_max: f64,
    pub degree_mean: f64,
    pub degree_var: f64,
    pub degree_entropy: f64,
    pub assortativity: f64,
    pub depth_min: f64,
    pub depth_max: f64,
    pub depth_mean: f64,
    pub depth_entropy: f64,
    pub clustering_min: f64,
    pub clustering_max: f64,
    pub clustering_mean: f64,
    pub clustering_var: f64,
    pub transitivity: f64,
    pub diameter: f64,
    pub radius: f64,
    pub mean_eccentricity: f64,
    pub avg_shortest_path: f64,
    /// (max, mean) of eigenvector centrality; only when requested.
    pub eigen_centrality: Option<(f64, f64)>,
}

impl GraphFeatures {
    /// The 22 canonical values in [`AST_FEATURE_NAMES`] order.
    pub fn values(&self) -> [f64; 22] {
        [
            self.node_count,
            self.edge_count,
            self.edge_density,
            self.degree_min,
            self.degree_max,
            self.degree_mean,
            self.degree_var,
            self.degree_entropy,
            self.assortativity,
            self.depth_min,
            self.depth_max,
            self.depth_mean,
            self.depth_entropy,
            self.clustering_min,
            self.clustering_max,
            self.clustering_mean,
            self.clustering_var,
            self.transitivity,
            self.diameter,
            self.radius,
            self.mean_eccentricity,
            self.avg_shortest_path,
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphFeatureOptions {
    pub eigen_centrality: bool,
}

pub fn compute_graph_features(g: &AstGraph) -> GraphFeatures {
    compute_graph_features_with(g, GraphFeatureOptions::default())
}

pub fn compute_graph_features_with(g: &AstGraph, options: GraphFeatureOptions) -> GraphFeatures {
    let n = g.node_count();
    assert!(n >= 1, "an AST graph has at least its root node");
    let m = g.edge_count();
    let adj = g.undirected_adjacency();
    let degrees: Vec<usize> = adj.iter().map(Vec::len).collect();
    let depths: Vec<usize> = g.nodes.iter().map(|node| node.depth).collect();

    let (degree_min, degree_max, degree_mean, degree_var) = summary(&degrees);
    let (depth_min, depth_max, depth_mean, _) = summary(&depths);
    let (local, triangles2, triples) = clustering(&adj);
    let (clustering_min, clustering_max, clustering_mean, clustering_var) = summary_f64(&local);
    // triangles2 counts each triangle once per corner.
    let transitivity = if triples == 0 {
        0.0
    } else {
        triangles2 as f64 / triples as f64
    };

    let distances = if m + 1 == n && is_connected(&adj) {
        tree_distances(&adj)
    } else {
        general_distances(&adj)
    };

    GraphFeatures {
        node_count: n as f64,
        edge_count: m as f64,
        edge_density: m as f64 / n as f64,
        degree_min,
        degree_max,
        degree_mean,
        degree_var,
        degree_entropy: entropy(&degrees),
        assortativity: assortativity(g, &degrees),
        depth_min,
        depth_max,
        depth_mean,
        depth_entropy: entropy(&depths),
        clustering_min,
        clustering_max,
        clustering_mean,
        clustering_var,
        transitivity,
        diameter: distances.diameter,
        radius: distances.radius,
        mean_eccentricity: distances.mean_eccentricity,
        avg_shortest_path: distances.avg_shortest_path,
        eigen_centrality: options.eigen_centrality.then(|| eigen_centrality(&adj)),
    }
}

fn summary(values: &[usize]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let min = *values.iter().min().unwrap_or(&0) as f64;
    let max = *values.iter().max().unwrap_or(&0) as f64;
    // Integer sums keep mean and variance exact up to the final division.
    let sum: u128 = values.iter().map(|&v| v as u128).sum();
    let sum_sq: u128 = values.iter().map(|&v| (v as u128) * (v as u128)).sum();
    let mean = sum as f64 / n;
    let len = values.len() as u128;
    let var = (len * sum_sq - sum * sum) as f64 / (n * n);
    (min, max, mean, var)
}

fn summary_f64(values: &[f64]) -> (f64, f64, f64, f64) {
    let n = values.len() as f64;
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (min, max, mean, var)
}

/// Shannon entropy (nats) of the empirical distribution of `values`.
fn entropy(values: &[usize]) -> f64 {
    let max = values.iter().copied().max().unwrap_or(0);
    let mut counts = vec![0usize; max + 1];
    for &v in values {
        counts[v] += 1;
    }
    let n = values.len() as f64;
    let h: f64 = counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum();
    h.max(0.0)
}

/// Pearson correlation of endpoint degrees over both orientations of every
/// edge. Exact integer moments; 0 when the degree marginal is constant.
fn assortativity(g: &AstGraph, degrees: &[usize]) -> f64 {
    if g.edges.is_empty() {
        return 0.0;
    }
    let mut count: i128 = 0;
    let mut sum: i128 = 0;
    let mut sum_sq: i128 = 0;
    let mut sum_xy: i128 = 0;
    for &(u, v) in &g.edges {
        let (du, dv) = (degrees[u] as i128, degrees[v] as i128);
        count += 2;
        sum += du + dv;
        sum_sq += du * du + dv * dv;
        sum_xy += 2 * du * dv;
    }
    let cov = count * sum_xy - sum * sum;
    let var = count * sum_sq - sum * sum;
    if var == 0 {
        0.0
    } else {
        (cov as f64 / var as f64).clamp(-1.0, 1.0)
    }
}

/// Local clustering per node, total corner-triangle count and total
/// connected-triple count.
fn clustering(adj: &[Vec<usize>]) -> (Vec<f64>, u64, u64) {
    let n = adj.len();
    let mut mark = vec![usize::MAX; n];
    let mut local = vec![0.0; n];
    let mut triangles_total = 0u64;
    let mut triples_total = 0u64;
    for v in 0..n {
        let d = adj[v].len() as u64;
        if d < 2 {
            continue;
        }
        for &u in &adj[v] {
            mark[u] = v;
        }
        let mut links = 0u64;
        for &u in &adj[v] {
            links += adj[u].iter().filter(|&&w| w != v && mark[w] == v).count() as u64;
        }
        // Each neighbour pair is seen twice.
        let triangles = links / 2;
        let pairs = d * (d - 1) / 2;
        local[v] = triangles as f64 / pairs as f64;
        triangles_total += triangles;
        triples_total += pairs;
    }
    (local, triangles_total, triples_total)
}

struct Distances {
    diameter: f64,
    radius: f64,
    mean_eccentricity: f64,
    avg_shortest_path: f64,
}

fn bfs(adj: &[Vec<usize>], source: usize) -> Vec<usize> {
    let mut dist = vec![usize::MAX; adj.len()];
    let mut queue = std::collections::VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if dist[u] == usize::MAX {
                dist[u] = dist[v] + 1;
                queue.push_back(u);
            }
        }
    }
    dist
}

fn is_connected(adj: &[Vec<usize>]) -> bool {
    bfs(adj, 0).iter().all(|&d| d != usize::MAX)
}

fn farthest(dist: &[usize]) -> usize {
    let mut best = 0;
    for (i, &d) in dist.iter().enumerate() {
        if d > dist[best] {
            best = i;
        }
    }
    best
}

/// Linear-time distances for trees: eccentricities from the two ends of a
/// diameter path, pairwise sum from edge cut sizes.
fn tree_distances(adj: &[Vec<usize>]) -> Distances {
    let n = adj.len();
    if n == 1 {
        return Distances {
            diameter: 0.0,
            radius: 0.0,
            mean_eccentricity: 0.0,
            avg_shortest_path: 0.0,
        };
    }
    let from_root = bfs(adj, 0);
    let a = farthest(&from_root);
    let dist_a = bfs(adj, a);
    let b = farthest(&dist_a);
    let dist_b = bfs(adj, b);
    let ecc: Vec<usize> = (0..n).map(|v| dist_a[v].max(dist_b[v])).collect();
    let radius = *ecc.iter().min().unwrap_or(&0);
    let ecc_sum: usize = ecc.iter().sum();

    // Subtree sizes in BFS order from the root.
    let mut order = Vec::with_capacity(n);
    let mut parent = vec![usize::MAX; n];
    let mut seen = vec![false; n];
    seen[0] = true;
    order.push(0);
    let mut head = 0;
    while head < order.len() {
        let v = order[head];
        head += 1;
        for &u in &adj[v] {
            if !seen[u] {
                seen[u] = true;
                parent[u] = v;
                order.push(u);
            }
        }
    }
    let mut size = vec![1u128; n];
    let mut pair_sum: u128 = 0;
    for &v in order.iter().rev() {
        if parent[v] != usize::MAX {
            pair_sum += size[v] * (n as u128 - size[v]);
            size[parent[v]] += size[v];
        }
    }
    Distances {
        diameter: dist_a[b] as f64,
        radius: radius as f64,
        mean_eccentricity: ecc_sum as f64 / n as f64,
        avg_shortest_path: (2 * pair_sum) as f64 / (n as f64 * (n as f64 - 1.0)),
    }
}

/// All-pairs BFS over reachable pairs; used when the graph is not a tree.
fn general_distances(adj: &[Vec<usize>]) -> Distances {
    let n = adj.len();
    let mut ecc = vec![0usize; n];
    let mut total: u128 = 0;
    let mut pairs: u128 = 0;
    for (s, e) in ecc.iter_mut().enumerate() {
        for d in bfs(adj, s) {
            if d != usize::MAX && d > 0 {
                *e = (*e).max(d);
                total += d as u128;
                pairs += 1;
            }
        }
    }
    Distances {
        diameter: *ecc.iter().max().unwrap_or(&0) as f64,
        radius: *ecc.iter().min().unwrap_or(&0) as f64,
        mean_eccentricity: ecc.iter().sum::<usize>() as f64 / n as f64,
        avg_shortest_path: if pairs == 0 {
            0.0
        } else {
            total as f64 / pairs as f64
        },
    }
}

/// Power iteration on (A + I); the shift keeps bipartite graphs such as
/// trees from oscillating without changing the leading eigenvector.
fn eigen_centrality(adj: &[Vec<usize>]) -> (f64, f64) {
    let n = adj.len();
    let mut x = vec![1.0 / n as f64; n];
    for _ in 0..EIGEN_MAX_ITERATIONS {
        let mut next: Vec<f64> = x.clone();
        for (v, neighbours) in adj.iter().enumerate() {
            for &u in neighbours {
                next[v] += x[u];
            }
        }
        let norm = next.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            break;
        }
        next.iter_mut().for_each(|v| *v /= norm);
        let err: f64 = next.iter().zip(&x).map(|(a, b)| (a - b).abs()).sum();
        x = next;
        if err < n as f64 * EIGEN_TOLERANCE {
            break;
        }
    }
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mean = x.iter().sum::<f64>() / n as f64;
    (max, mean)
}
