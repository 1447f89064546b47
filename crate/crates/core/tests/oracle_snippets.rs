//! Compares the parser and feature extractors against values frozen from
//! CPython's `ast`/`tokenize` and networkx (see tests/oracle/feature_oracle.py).

use std::path::PathBuf;

use codeevo::pyast::parse_to_graph;
use serde_json::Value;

fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

fn oracle() -> serde_json::Map<String, Value> {
    let text = std::fs::read_to_string(fixtures().join("oracle.json")).unwrap();
    match serde_json::from_str(&text).unwrap() {
        Value::Object(m) => m,
        _ => panic!("oracle.json must be an object"),
    }
}

fn snippet(name: &str) -> String {
    std::fs::read_to_string(fixtures().join("snippets").join(name)).unwrap()
}

#[test]
fn syntax_trees_match_cpython() {
    for (name, expected) in oracle() {
        let graph = parse_to_graph(&snippet(&name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        let nodes: Vec<(String, u64)> = expected["nodes"]
            .as_array()
            .unwrap()
            .iter()
            .map(|n| (n[0].as_str().unwrap().to_string(), n[1].as_u64().unwrap()))
            .collect();
        let ours: Vec<(String, u64)> = graph
            .nodes
            .iter()
            .map(|n| (n.kind.clone(), n.depth as u64))
            .collect();
        if ours != nodes {
            let first = ours
                .iter()
                .zip(&nodes)
                .position(|(a, b)| a != b)
                .unwrap_or(ours.len().min(nodes.len()));
            panic!(
                "{name}: node sequences differ at {first} (ours {} nodes, oracle {}):\n ours   {:?}\n oracle {:?}",
                ours.len(),
                nodes.len(),
                &ours[first.saturating_sub(3)..(first + 5).min(ours.len())],
                &nodes[first.saturating_sub(3)..(first + 5).min(nodes.len())]
            );
        }
        let edges: Vec<(usize, usize)> = expected["edges"]
            .as_array()
            .unwrap()
            .iter()
            .map(|e| (e[0].as_u64().unwrap() as usize, e[1].as_u64().unwrap() as usize))
            .collect();
        let mut ours_edges = graph.edges.clone();
        ours_edges.sort();
        let mut edges_sorted = edges;
        edges_sorted.sort();
        assert_eq!(ours_edges, edges_sorted, "{name}: edges");
    }
}

fn assert_close(name: &str, field: &str, ours: f64, expected: f64) {
    let tol = 1e-9 * expected.abs().max(1.0);
    assert!(
        (ours - expected).abs() <= tol,
        "{name}: {field} = {ours}, oracle {expected}"
    );
}

#[test]
fn graph_features_match_networkx() {
    use codeevo::astfeat::{compute_graph_features, AST_FEATURE_NAMES};
    for (name, expected) in oracle() {
        let graph = parse_to_graph(&snippet(&name)).unwrap();
        let values = compute_graph_features(&graph).values();
        for (field, ours) in AST_FEATURE_NAMES.iter().zip(values) {
            let want = expected["graph"][field]
                .as_f64()
                .unwrap_or_else(|| panic!("{name}: oracle lacks {field}"));
            assert_close(&name, field, ours, want);
        }
    }
}

#[test]
fn complexity_matches_tokenize_and_ast() {
    use codeevo::codemetrics::{metrics_from_tree, units};
    use codeevo::pyast::parse_module;
    for (name, expected) in oracle() {
        let tree = parse_module(&snippet(&name)).unwrap();
        let m = metrics_from_tree(&tree);
        let c = &expected["complexity"];
        let int = |f: &str| c[f].as_u64().unwrap();
        assert_eq!(m.cc_total, int("cc_total"), "{name}: cc_total");
        assert_eq!(m.token_total, int("token_total"), "{name}: token_total");
        assert_eq!(m.param_total, int("param_total"), "{name}: param_total");
        assert_eq!(m.nesting_max, int("nesting_max"), "{name}: nesting_max");
        assert_close(&name, "cc_mean", m.cc_mean, c["cc_mean"].as_f64().unwrap());
        assert_close(&name, "token_mean", m.token_mean, c["token_mean"].as_f64().unwrap());
        assert_close(&name, "param_mean", m.param_mean, c["param_mean"].as_f64().unwrap());
        assert_close(&name, "nesting_mean", m.nesting_mean, c["nesting_mean"].as_f64().unwrap());
        // Per-unit values, compared as multisets since ordering conventions differ.
        let mut cc: Vec<u64> = units(&tree).iter().map(|u| u.cyclomatic).collect();
        let mut tok: Vec<u64> = units(&tree).iter().map(|u| u.tokens).collect();
        let mut want_cc: Vec<u64> = c["unit_cc"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        let mut want_tok: Vec<u64> = c["unit_tokens"].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).collect();
        cc.sort();
        tok.sort();
        want_cc.sort();
        want_tok.sort();
        assert_eq!(cc, want_cc, "{name}: unit_cc");
        assert_eq!(tok, want_tok, "{name}: unit_tokens");
    }
}

#[test]
fn eigen_centrality_matches_networkx() {
    use codeevo::astfeat::{compute_graph_features_with, GraphFeatureOptions};
    let options = GraphFeatureOptions { eigen_centrality: true };
    for (name, expected) in oracle() {
        let graph = parse_to_graph(&snippet(&name)).unwrap();
        let (max, mean) = compute_graph_features_with(&graph, options).eigen_centrality.unwrap();
        // Both sides stop at a convergence tolerance, not at the fixed point.
        let g = &expected["graph"];
        assert!((max - g["eig_centrality_max"].as_f64().unwrap()).abs() < 1e-7, "{name}: max {max}");
        assert!((mean - g["eig_centrality_mean"].as_f64().unwrap()).abs() < 1e-7, "{name}: mean {mean}");
    }
}
