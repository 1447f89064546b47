//! Source-level complexity metrics.
//!
//! A unit is a function definition (nested ones included). A module without
//! functions is treated as a single unit. Cyclomatic complexity of a unit
//! does not descend into nested function definitions.

use serde::{Deserialize, Serialize};

use crate::pyast::{parse_module, NodeId, NodeKind, ParseError, SyntaxTree};

pub const COMPLEXITY_FEATURE_NAMES: [&str; 6] = [
    "cc_total",
    "cc_mean",
    "token_total",
    "token_mean",
    "param_total",
    "param_mean",
];

pub const NESTING_FEATURE_NAMES: [&str; 2] = ["nesting_max", "nesting_mean"];

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ComplexityMetrics {
    pub cc_total: u64,
    pub cc_mean: f64,
    pub token_total: u64,
    pub token_mean: f64,
    pub param_total: u64,
    pub param_mean: f64,
    pub nesting_max: u64,
    pub nesting_mean: f64,
}

impl ComplexityMetrics {
    /// The six canonical values in [`COMPLEXITY_FEATURE_NAMES`] order.
    pub fn values(&self) -> [f64; 6] {
        [
            self.cc_total as f64,
            self.cc_mean,
            self.token_total as f64,
            self.token_mean,
            self.param_total as f64,
            self.param_mean,
        ]
    }
}

/// Per-unit breakdown, mostly useful for diagnostics.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Unit {
    pub node: NodeId,
    pub cyclomatic: u64,
    pub tokens: u64,
    pub params: u64,
}

pub fn compute_complexity(code: &str) -> Result<ComplexityMetrics, ParseError> {
    Ok(metrics_from_tree(&parse_module(code)?))
}

pub fn metrics_from_tree(tree: &SyntaxTree) -> ComplexityMetrics {
    let units = units(tree);
    let token_total = tree.significant_token_count() as u64;
    let functions = units.iter().filter(|u| u.node != tree.root).count() as u64;
    let k = units.len() as f64;
    let cc_total: u64 = units.iter().map(|u| u.cyclomatic).sum();
    let unit_tokens: u64 = units.iter().map(|u| u.tokens).sum();
    let param_total: u64 = units.iter().map(|u| u.params).sum();
    let depths = statement_depths(tree);
    ComplexityMetrics {
        cc_total,
        cc_mean: cc_total as f64 / k,
        token_total,
        token_mean: unit_tokens as f64 / k,
        param_total,
        param_mean: if functions == 0 {
            0.0
        } else {
            param_total as f64 / functions as f64
        },
        nesting_max: depths.iter().copied().max().unwrap_or(0),
        nesting_mean: if depths.is_empty() {
            0.0
        } else {
            depths.iter().sum::<u64>() as f64 / depths.len() as f64
        },
    }
}

/// Units of `tree` in pre-order.
pub fn units(tree: &SyntaxTree) -> Vec<Unit> {
    // Prefix counts of significant tokens for O(1) span queries.
    let mut prefix = Vec::with_capacity(tree.tokens.len() + 1);
    prefix.push(0u64);
    for t in &tree.tokens {
        prefix.push(prefix.last().unwrap() + t.kind.is_significant() as u64);
    }
    let functions: Vec<NodeId> = tree
        .preorder()
        .into_iter()
        .map(|(id, _)| id)
        .filter(|&id| tree.node(id).kind.is_function())
        .collect();
    if functions.is_empty() {
        return vec![Unit {
            node: tree.root,
            cyclomatic: cyclomatic(tree, tree.root),
            tokens: tree.significant_token_count() as u64,
            params: 0,
        }];
    }
    functions
        .into_iter()
        .map(|id| {
            let node = tree.node(id);
            let arguments = tree.node(node.children[0]);
            debug_assert_eq!(arguments.kind, NodeKind::arguments);
            let params = arguments
                .children
                .iter()
                .filter(|&&c| tree.node(c).kind == NodeKind::arg)
                .count() as u64;
            Unit {
                node: id,
                cyclomatic: cyclomatic(tree, id),
                tokens: prefix[node.last_token + 1] - prefix[node.first_token],
                params,
            }
        })
        .collect()
}

fn cyclomatic(tree: &SyntaxTree, unit: NodeId) -> u64 {
    let mut cc = 1u64;
    let mut stack = vec![unit];
    while let Some(id) = stack.pop() {
        let node = tree.node(id);
        let n = node.children.len() as u64;
        cc += match node.kind {
            NodeKind::If
            | NodeKind::While
            | NodeKind::For
            | NodeKind::AsyncFor
            | NodeKind::ExceptHandler
            | NodeKind::IfExp => 1,
            // target, iter, then one child per `if`
            NodeKind::comprehension => n - 1,
            // operator node, then the values
            NodeKind::BoolOp => n - 2,
            // subject, then the cases
            NodeKind::Match => n.saturating_sub(2),
            _ => 0,
        };
        stack.extend(
            node.children
                .iter()
                .copied()
                .filter(|&c| !tree.node(c).kind.is_function()),
        );
    }
    cc
}

/// Nesting level of every statement; `elif` adds no level.
fn statement_depths(tree: &SyntaxTree) -> Vec<u64> {
    let mut depths = Vec::new();
    let mut stack = vec![(tree.root, 0u64)];
    while let Some((id, level)) = stack.pop() {
        let node = tree.node(id);
        if node.kind.is_statement() && !node.is_elif {
            depths.push(level);
        }
        let inner = if node.kind.is_compound() && !node.is_elif {
            level + 1
        } else {
            level
        };
        for &c in node.children.iter().rev() {
            stack.push((c, inner));
        }
    }
    depths
}
