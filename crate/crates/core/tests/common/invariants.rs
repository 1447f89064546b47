use codeevo::astfeat::GraphFeatures;

/// Properties every syntax tree satisfies.
pub fn check_tree_invariants(f: &GraphFeatures) {
    let ln_n = f.node_count.ln() + 1e-12;
    assert!(f.node_count >= 1.0);
    assert_eq!(f.edge_count, f.node_count - 1.0);
    assert!(f.degree_min <= f.degree_mean && f.degree_mean <= f.degree_max);
    assert!(f.depth_min <= f.depth_mean && f.depth_mean <= f.depth_max);
    assert!(f.radius <= f.diameter && f.diameter <= 2.0 * f.radius);
    assert!((0.0..=ln_n).contains(&f.degree_entropy));
    assert!((0.0..=ln_n).contains(&f.depth_entropy));
    assert!((-1.0..=1.0).contains(&f.assortativity));
    assert_eq!((f.clustering_min, f.clustering_max, f.transitivity), (0.0, 0.0, 0.0));
}
