//! Abstract-grammar node kinds and the arena-backed syntax tree.

use super::lexer::Token;

macro_rules! node_kinds {
    ($($name:ident),* $(,)?) => {
        /// Node kinds of the Python abstract grammar. Expression-context
        /// markers (Load/Store/Del) are deliberately absent.
        #[allow(non_camel_case_types)]
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
        pub enum NodeKind {
            $($name),*
        }

        impl NodeKind {
            pub fn as_str(self) -> &'static str {
                match self {
                    $(NodeKind::$name => stringify!($name)),*
                }
            }

            pub fn from_name(name: &str) -> Option<NodeKind> {
                match name {
                    $(stringify!($name) => Some(NodeKind::$name),)*
                    _ => None,
                }
            }
        }
    };
}

node_kinds! {
    // mod
    Module,
    // stmt
    FunctionDef, AsyncFunctionDef, ClassDef, Return, Delete, Assign, AugAssign, AnnAssign,
    For, AsyncFor, While, If, With, AsyncWith, Match, Raise, Try, Assert, Import, ImportFrom,
    Global, Nonlocal, Expr, Pass, Break, Continue,
    // expr
    BoolOp, NamedExpr, BinOp, UnaryOp, Lambda, IfExp, Dict, Set, ListComp, SetComp, DictComp,
    GeneratorExp, Await, Yield, YieldFrom, Compare, Call, FormattedValue, JoinedStr, Constant,
    Attribute, Subscript, Starred, Name, List, Tuple, Slice,
    // boolop
    And, Or,
    // operator
    Add, Sub, Mult, MatMult, Div, Mod, Pow, LShift, RShift, BitOr, BitXor, BitAnd, FloorDiv,
    // unaryop
    Invert, Not, UAdd, USub,
    // cmpop
    Eq, NotEq, Lt, LtE, Gt, GtE, Is, IsNot, In, NotIn,
    // auxiliary
    comprehension, ExceptHandler, arguments, arg, keyword, alias, withitem, match_case,
    // pattern
    MatchValue, MatchSingleton, MatchSequence, MatchMapping, MatchClass, MatchStar, MatchAs,
    MatchOr,
}

impl NodeKind {
    pub fn is_statement(self) -> bool {
        use NodeKind::*;
        matches!(
            self,
            FunctionDef
                | AsyncFunctionDef
                | ClassDef
                | Return
                | Delete
                | Assign
                | AugAssign
                | AnnAssign
                | For
                | AsyncFor
                | While
                | If
                | With
                | AsyncWith
                | Match
                | Raise
                | Try
                | Assert
                | Import
                | ImportFrom
                | Global
                | Nonlocal
                | Expr
                | Pass
                | Break
                | Continue
        )
    }

    /// Statements that own a nested block.
    pub fn is_compound(self) -> bool {
        use NodeKind::*;
        matches!(
            self,
            FunctionDef
                | AsyncFunctionDef
                | ClassDef
                | If
                | For
                | AsyncFor
                | While
                | With
                | AsyncWith
                | Try
                | Match
        )
    }

    pub fn is_function(self) -> bool {
        matches!(self, NodeKind::FunctionDef | NodeKind::AsyncFunctionDef)
    }
}

pub type NodeId = usize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SyntaxNode {
    pub kind: NodeKind,
    pub children: Vec<NodeId>,
    /// Inclusive token index range covered by the node.
    pub first_token: usize,
    pub last_token: usize,
    /// Set on `If` nodes introduced by an `elif` clause.
    pub is_elif: bool,
}

/// Parsed module: node arena plus the token stream it was built from.
#[derive(Debug, Clone)]
pub struct SyntaxTree {
    pub nodes: Vec<SyntaxNode>,
    pub root: NodeId,
    pub tokens: Vec<Token>,
}

impl SyntaxTree {
    pub fn node(&self, id: NodeId) -> &SyntaxNode {
        &self.nodes[id]
    }

    /// Node ids in pre-order (parent before children, children in field order).
    pub fn preorder(&self) -> Vec<(NodeId, usize)> {
        let mut out = Vec::with_capacity(self.nodes.len());
        let mut stack = vec![(self.root, 0usize)];
        while let Some((id, depth)) = stack.pop() {
            out.push((id, depth));
            for &c in self.nodes[id].children.iter().rev() {
                stack.push((c, depth + 1));
            }
        }
        out
    }

    /// Number of lexical tokens (layout excluded).
    pub fn significant_token_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.kind.is_significant()).count()
    }
}
