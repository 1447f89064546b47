//! Python 3 source → abstract syntax tree graph.
//!
//! The graph keeps every abstract-grammar node (statements, expressions,
//! operator nodes, `arguments`/`arg`, handlers, comprehension clauses,
//! patterns) except expression-context markers and type comments. Node ids
//! are assigned in pre-order.

pub mod lexer;
pub mod node;
pub mod parser;

use serde::{Deserialize, Serialize};

pub use node::{NodeId, NodeKind, SyntaxNode, SyntaxTree};
pub use parser::parse_module;

/// Syntax error with a 1-based source position.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message} (line {line}, column {column})")]
pub struct ParseError {
    pub message: String,
    pub line: usize,
    pub column: usize,
}

impl ParseError {
    pub fn new(message: impl Into<String>, line: usize, column: usize) -> Self {
        ParseError {
            message: message.into(),
            line,
            column,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstNode {
    pub id: usize,
    pub kind: String,
    pub depth: usize,
}

/// Rooted tree of syntax nodes with parent → child edges.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AstGraph {
    pub nodes: Vec<AstNode>,
    pub edges: Vec<(usize, usize)>,
    #[serde(skip)]
    pub root_id: usize,
}

impl AstGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Debug dump: `{"nodes":[{"id","kind","depth"}],"edges":[[p,c]]}`.
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("graph serialization cannot fail")
    }

    /// Adjacency lists of the undirected view.
    pub fn undirected_adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.nodes.len()];
        for &(p, c) in &self.edges {
            adj[p].push(c);
            adj[c].push(p);
        }
        adj
    }
}

impl SyntaxTree {
    pub fn to_graph(&self) -> AstGraph {
        let order = self.preorder();
        let mut ids = vec![usize::MAX; self.nodes.len()];
        for (new_id, &(old, _)) in order.iter().enumerate() {
            ids[old] = new_id;
        }
        let nodes = order
            .iter()
            .enumerate()
            .map(|(id, &(old, depth))| AstNode {
                id,
                kind: self.nodes[old].kind.as_str().to_string(),
                depth,
            })
            .collect();
        let mut edges = Vec::with_capacity(order.len().saturating_sub(1));
        for &(old, _) in &order {
            for &c in &self.nodes[old].children {
                edges.push((ids[old], ids[c]));
            }
        }
        AstGraph {
            nodes,
            edges,
            root_id: 0,
        }
    }
}

/// Parse source text into its abstract syntax tree graph.
pub fn parse_to_graph(code: &str) -> Result<AstGraph, ParseError> {
    Ok(parse_module(code)?.to_graph())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(code: &str) -> Vec<(String, usize)> {
        parse_to_graph(code)
            .unwrap()
            .nodes
            .into_iter()
            .map(|n| (n.kind, n.depth))
            .collect()
    }

    fn k(pairs: &[(&str, usize)]) -> Vec<(String, usize)> {
        pairs.iter().map(|(s, d)| (s.to_string(), *d)).collect()
    }

    #[test]
    fn empty_module_is_a_single_node() {
        let g = parse_to_graph("").unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert_eq!(g.nodes[0].kind, "Module");
    }

    #[test]
    fn assignment_excludes_store_context() {
        assert_eq!(
            kinds("x = 1"),
            k(&[("Module", 0), ("Assign", 1), ("Name", 2), ("Constant", 2)])
        );
        assert_eq!(parse_to_graph("x = 1").unwrap().edge_count(), 3);
    }

    #[test]
    fn function_with_pass() {
        assert_eq!(
            kinds("def f(): pass"),
            k(&[("Module", 0), ("FunctionDef", 1), ("arguments", 2), ("Pass", 2)])
        );
    }

    #[test]
    fn binary_operator_node_is_included() {
        assert_eq!(
            kinds("x = 1 + 2"),
            k(&[
                ("Module", 0),
                ("Assign", 1),
                ("Name", 2),
                ("BinOp", 2),
                ("Constant", 3),
                ("Add", 3),
                ("Constant", 3)
            ])
        );
    }

    #[test]
    fn if_expression_orders_test_first() {
        let names: Vec<String> = kinds("a if b else c").into_iter().map(|p| p.0).collect();
        assert_eq!(names, ["Module", "Expr", "IfExp", "Name", "Name", "Name"]);
    }

    #[test]
    fn decorators_follow_body_in_field_order() {
        let names: Vec<String> = kinds("@d\ndef f(x=1) -> int:\n    pass\n")
            .into_iter()
            .map(|p| p.0)
            .collect();
        assert_eq!(
            names,
            ["Module", "FunctionDef", "arguments", "arg", "Constant", "Pass", "Name", "Name"]
        );
    }

    #[test]
    fn match_is_a_soft_keyword() {
        let names: Vec<String> = kinds("match = 3\nmatch(x)\n").into_iter().map(|p| p.0).collect();
        assert_eq!(
            names,
            ["Module", "Assign", "Name", "Constant", "Expr", "Call", "Name", "Name"]
        );
    }

    #[test]
    fn elif_is_flagged() {
        let tree = parse_module("if a:\n    pass\nelif b:\n    pass\n").unwrap();
        let elifs = tree.nodes.iter().filter(|n| n.is_elif).count();
        assert_eq!(elifs, 1);
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_to_graph("def f(:\n    pass\n").unwrap_err();
        assert_eq!(err.line, 1);
        let err = parse_to_graph("x = 1\n  y = 2\n").unwrap_err();
        assert_eq!(err.message, "unexpected indent");
        assert!(parse_to_graph("if x:\npass\n").is_err());
        assert!(parse_to_graph("x = = 1").is_err());
        assert!(parse_to_graph("f'{}'").is_err());
    }

    #[test]
    fn json_dump_shape() {
        let json = parse_to_graph("1").unwrap().to_json();
        assert_eq!(
            json,
            r#"{"nodes":[{"id":0,"kind":"Module","depth":0},{"id":1,"kind":"Expr","depth":1},{"id":2,"kind":"Constant","depth":2}],"edges":[[0,1],[1,2]]}"#
        );
    }
}
