//! Recursive-descent parser for Python 3 producing abstract-grammar nodes.
//!
//! Children are pushed in abstract-grammar field order, then list order,
//! so a pre-order walk reproduces `ast.walk`-style layouts with expression
//! contexts omitted.

use super::lexer::{self, string_parts, Token, TokenKind};
use super::node::{NodeId, NodeKind, SyntaxNode, SyntaxTree};
use super::ParseError;

type PResult<T> = Result<T, ParseError>;

const KEYWORDS: [&str; 35] = [
    "False", "None", "True", "and", "as", "assert", "async", "await", "break", "class", "continue",
    "def", "del", "elif", "else", "except", "finally", "for", "from", "global", "if", "import",
    "in", "is", "lambda", "nonlocal", "not", "or", "pass", "raise", "return", "try", "while",
    "with", "yield",
];

const AUG_OPS: [(&str, NodeKind); 13] = [
    ("+=", NodeKind::Add),
    ("-=", NodeKind::Sub),
    ("*=", NodeKind::Mult),
    ("@=", NodeKind::MatMult),
    ("/=", NodeKind::Div),
    ("%=", NodeKind::Mod),
    ("&=", NodeKind::BitAnd),
    ("|=", NodeKind::BitOr),
    ("^=", NodeKind::BitXor),
    ("<<=", NodeKind::LShift),
    (">>=", NodeKind::RShift),
    ("**=", NodeKind::Pow),
    ("//=", NodeKind::FloorDiv),
];

fn is_keyword(s: &str) -> bool {
    KEYWORDS.contains(&s)
}

/// Pieces of an f-string body before literal runs are merged.
enum Piece {
    Literal,
    Node(NodeId),
}

pub struct Parser<'s> {
    src: &'s str,
    toks: Vec<Token>,
    pos: usize,
    nodes: Vec<SyntaxNode>,
    /// Span assigned to nodes parsed from inside an f-string token.
    span_override: Option<(usize, usize)>,
}

/// Parse a module into its syntax tree.
pub fn parse_module(src: &str) -> PResult<SyntaxTree> {
    let toks = lexer::tokenize(src)?;
    let mut p = Parser {
        src,
        toks,
        pos: 0,
        nodes: Vec::new(),
        span_override: None,
    };
    let root = p.module()?;
    Ok(SyntaxTree {
        nodes: p.nodes,
        root,
        tokens: p.toks,
    })
}

impl<'s> Parser<'s> {
    // ---------------------------------------------------------------
    // token helpers

    fn tok(&self) -> Token {
        self.toks[self.pos.min(self.toks.len() - 1)]
    }

    fn peek_tok(&self, off: usize) -> Token {
        self.toks[(self.pos + off).min(self.toks.len() - 1)]
    }

    fn text(&self) -> &'s str {
        self.tok().text(self.src)
    }

    fn kind(&self) -> TokenKind {
        self.tok().kind
    }

    fn at_op(&self, op: &str) -> bool {
        self.kind() == TokenKind::Op && self.text() == op
    }

    fn at_kw(&self, kw: &str) -> bool {
        self.kind() == TokenKind::Name && self.text() == kw
    }

    fn peek_is_kw(&self, off: usize, kw: &str) -> bool {
        let t = self.peek_tok(off);
        t.kind == TokenKind::Name && t.text(self.src) == kw
    }

    fn peek_is_op(&self, off: usize, op: &str) -> bool {
        let t = self.peek_tok(off);
        t.kind == TokenKind::Op && t.text(self.src) == op
    }

    fn at_identifier(&self) -> bool {
        self.kind() == TokenKind::Name && !is_keyword(self.text())
    }

    fn bump(&mut self) {
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
    }

    fn eat_op(&mut self, op: &str) -> bool {
        if self.at_op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn eat_kw(&mut self, kw: &str) -> bool {
        if self.at_kw(kw) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn error_here(&self, msg: impl Into<String>) -> ParseError {
        let t = self.tok();
        ParseError::new(msg, t.line, t.col + 1)
    }

    fn invalid(&self) -> ParseError {
        self.error_here("invalid syntax")
    }

    fn expect_op(&mut self, op: &str) -> PResult<()> {
        if self.eat_op(op) {
            Ok(())
        } else {
            Err(self.error_here(format!("invalid syntax: expected '{op}'")))
        }
    }

    fn expect_kw(&mut self, kw: &str) -> PResult<()> {
        if self.eat_kw(kw) {
            Ok(())
        } else {
            Err(self.error_here(format!("invalid syntax: expected '{kw}'")))
        }
    }

    fn expect_identifier(&mut self) -> PResult<()> {
        if self.at_identifier() {
            self.bump();
            Ok(())
        } else {
            Err(self.invalid())
        }
    }

    fn expect_newline(&mut self) -> PResult<()> {
        match self.kind() {
            TokenKind::Newline => {
                self.bump();
                Ok(())
            }
            TokenKind::EndMarker => Ok(()),
            _ => Err(self.invalid()),
        }
    }

    /// Tokens that terminate an unparenthesized expression list.
    fn at_list_end(&self) -> bool {
        match self.kind() {
            TokenKind::Newline | TokenKind::EndMarker | TokenKind::Dedent | TokenKind::Indent => true,
            TokenKind::Op => {
                let t = self.text();
                matches!(t, ")" | "]" | "}" | "=" | ";" | ":") || AUG_OPS.iter().any(|(o, _)| *o == t)
            }
            _ => false,
        }
    }

    // ---------------------------------------------------------------
    // node construction

    fn node(&mut self, kind: NodeKind, children: Vec<NodeId>, start: usize) -> NodeId {
        let (first, last) = match self.span_override {
            Some(span) => span,
            None => (start, self.pos.saturating_sub(1).max(start)),
        };
        self.nodes.push(SyntaxNode {
            kind,
            children,
            first_token: first,
            last_token: last,
            is_elif: false,
        });
        self.nodes.len() - 1
    }

    fn leaf(&mut self, kind: NodeKind, start: usize) -> NodeId {
        self.node(kind, Vec::new(), start)
    }

    /// Leaf covering exactly the current token, then advance.
    fn leaf_bump(&mut self, kind: NodeKind) -> NodeId {
        let start = self.pos;
        self.bump();
        self.leaf(kind, start)
    }

    // ---------------------------------------------------------------
    // statements

    fn module(&mut self) -> PResult<NodeId> {
        let mut body = Vec::new();
        loop {
            match self.kind() {
                TokenKind::EndMarker => break,
                TokenKind::Newline => self.bump(),
                _ => body.extend(self.statement()?),
            }
        }
        let last = self.toks.len() - 1;
        self.nodes.push(SyntaxNode {
            kind: NodeKind::Module,
            children: body,
            first_token: 0,
            last_token: last,
            is_elif: false,
        });
        Ok(self.nodes.len() - 1)
    }

    fn statement(&mut self) -> PResult<Vec<NodeId>> {
        match self.kind() {
            TokenKind::Indent => return Err(self.error_here("unexpected indent")),
            TokenKind::Dedent => return Err(self.error_here("unexpected unindent")),
            TokenKind::Op if self.text() == "@" => return Ok(vec![self.decorated()?]),
            TokenKind::Name => {}
            _ => return self.simple_statements(),
        }
        let stmt = match self.text() {
            "if" => self.if_statement(false)?,
            "while" => self.while_statement()?,
            "for" => self.for_statement(self.pos, false)?,
            "try" => self.try_statement()?,
            "with" => self.with_statement(self.pos, false)?,
            "def" => self.function_def(Vec::new(), false)?,
            "class" => self.class_def(Vec::new())?,
            "async" => self.async_statement(Vec::new())?,
            "match" => match self.try_match_statement()? {
                Some(n) => n,
                None => return self.simple_statements(),
            },
            _ => return self.simple_statements(),
        };
        Ok(vec![stmt])
    }

    fn block(&mut self) -> PResult<Vec<NodeId>> {
        self.expect_op(":")?;
        if self.kind() == TokenKind::Newline {
            self.bump();
            if self.kind() != TokenKind::Indent {
                return Err(self.error_here("expected an indented block"));
            }
            self.bump();
            let mut body = Vec::new();
            loop {
                match self.kind() {
                    TokenKind::Dedent => {
                        self.bump();
                        break;
                    }
                    TokenKind::EndMarker => break,
                    TokenKind::Newline => self.bump(),
                    _ => body.extend(self.statement()?),
                }
            }
            Ok(body)
        } else {
            self.simple_statements()
        }
    }

    fn simple_statements(&mut self) -> PResult<Vec<NodeId>> {
        let mut out = vec![self.simple_statement()?];
        while self.eat_op(";") {
            if matches!(self.kind(), TokenKind::Newline | TokenKind::EndMarker) {
                break;
            }
            out.push(self.simple_statement()?);
        }
        self.expect_newline()?;
        Ok(out)
    }

    fn at_simple_end(&self) -> bool {
        matches!(self.kind(), TokenKind::Newline | TokenKind::EndMarker) || self.at_op(";")
    }

    fn simple_statement(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.kind() == TokenKind::Name {
            match self.text() {
                "pass" => return Ok(self.leaf_bump(NodeKind::Pass)),
                "break" => return Ok(self.leaf_bump(NodeKind::Break)),
                "continue" => return Ok(self.leaf_bump(NodeKind::Continue)),
                "return" => {
                    self.bump();
                    let mut children = Vec::new();
                    if !self.at_simple_end() {
                        children.push(self.star_expressions()?);
                    }
                    return Ok(self.node(NodeKind::Return, children, start));
                }
                "raise" => {
                    self.bump();
                    let mut children = Vec::new();
                    if !self.at_simple_end() {
                        children.push(self.expression()?);
                        if self.eat_kw("from") {
                            children.push(self.expression()?);
                        }
                    }
                    return Ok(self.node(NodeKind::Raise, children, start));
                }
                "global" | "nonlocal" => {
                    let kind = if self.text() == "global" {
                        NodeKind::Global
                    } else {
                        NodeKind::Nonlocal
                    };
                    self.bump();
                    self.expect_identifier()?;
                    while self.eat_op(",") {
                        self.expect_identifier()?;
                    }
                    return Ok(self.leaf(kind, start));
                }
                "del" => {
                    self.bump();
                    let mut targets = vec![self.bitwise_or()?];
                    while self.eat_op(",") {
                        if self.at_simple_end() {
                            break;
                        }
                        targets.push(self.bitwise_or()?);
                    }
                    return Ok(self.node(NodeKind::Delete, targets, start));
                }
                "assert" => {
                    self.bump();
                    let mut children = vec![self.expression()?];
                    if self.eat_op(",") {
                        children.push(self.expression()?);
                    }
                    return Ok(self.node(NodeKind::Assert, children, start));
                }
                "import" => return self.import_statement(),
                "from" => return self.import_from(),
                _ => {}
            }
        }
        self.expression_statement()
    }

    fn expression_statement(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let first = self.yield_or_star_expressions()?;
        if self.at_op("=") {
            let mut targets = vec![first];
            let value = loop {
                self.bump();
                let v = self.yield_or_star_expressions()?;
                if self.at_op("=") {
                    targets.push(v);
                } else {
                    break v;
                }
            };
            targets.push(value);
            return Ok(self.node(NodeKind::Assign, targets, start));
        }
        if self.kind() == TokenKind::Op {
            let t = self.text();
            if let Some((_, op_kind)) = AUG_OPS.iter().find(|(o, _)| *o == t) {
                let op = self.leaf_bump(*op_kind);
                let value = self.yield_or_star_expressions()?;
                return Ok(self.node(NodeKind::AugAssign, vec![first, op, value], start));
            }
        }
        if self.eat_op(":") {
            let mut children = vec![first, self.expression()?];
            if self.eat_op("=") {
                children.push(self.yield_or_star_expressions()?);
            }
            return Ok(self.node(NodeKind::AnnAssign, children, start));
        }
        Ok(self.node(NodeKind::Expr, vec![first], start))
    }

    fn yield_or_star_expressions(&mut self) -> PResult<NodeId> {
        if self.at_kw("yield") {
            self.yield_expression()
        } else {
            self.star_expressions()
        }
    }

    fn dotted_name(&mut self) -> PResult<()> {
        self.expect_identifier()?;
        while self.at_op(".") {
            self.bump();
            self.expect_identifier()?;
        }
        Ok(())
    }

    fn alias(&mut self, dotted: bool) -> PResult<NodeId> {
        let start = self.pos;
        if dotted {
            self.dotted_name()?;
        } else {
            self.expect_identifier()?;
        }
        if self.eat_kw("as") {
            self.expect_identifier()?;
        }
        Ok(self.leaf(NodeKind::alias, start))
    }

    fn import_statement(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        let mut names = vec![self.alias(true)?];
        while self.eat_op(",") {
            names.push(self.alias(true)?);
        }
        Ok(self.node(NodeKind::Import, names, start))
    }

    fn import_from(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        let mut dots = 0;
        while self.at_op(".") || self.at_op("...") {
            dots += 1;
            self.bump();
        }
        if !self.at_kw("import") {
            self.dotted_name()?;
        } else if dots == 0 {
            return Err(self.invalid());
        }
        self.expect_kw("import")?;
        let mut names = Vec::new();
        if self.at_op("*") {
            names.push(self.leaf_bump(NodeKind::alias));
        } else if self.eat_op("(") {
            names.push(self.alias(false)?);
            while self.eat_op(",") {
                if self.at_op(")") {
                    break;
                }
                names.push(self.alias(false)?);
            }
            self.expect_op(")")?;
        } else {
            names.push(self.alias(false)?);
            while self.eat_op(",") {
                names.push(self.alias(false)?);
            }
        }
        Ok(self.node(NodeKind::ImportFrom, names, start))
    }

    fn if_statement(&mut self, is_elif: bool) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        let mut children = vec![self.named_expression()?];
        children.extend(self.block()?);
        if self.at_kw("elif") {
            children.push(self.if_statement(true)?);
        } else if self.eat_kw("else") {
            children.extend(self.block()?);
        }
        let id = self.node(NodeKind::If, children, start);
        self.nodes[id].is_elif = is_elif;
        Ok(id)
    }

    fn while_statement(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        let mut children = vec![self.named_expression()?];
        children.extend(self.block()?);
        if self.eat_kw("else") {
            children.extend(self.block()?);
        }
        Ok(self.node(NodeKind::While, children, start))
    }

    fn for_statement(&mut self, start: usize, is_async: bool) -> PResult<NodeId> {
        self.expect_kw("for")?;
        let target = self.star_targets()?;
        self.expect_kw("in")?;
        let iter = self.star_expressions()?;
        let mut children = vec![target, iter];
        children.extend(self.block()?);
        if self.eat_kw("else") {
            children.extend(self.block()?);
        }
        let kind = if is_async {
            NodeKind::AsyncFor
        } else {
            NodeKind::For
        };
        Ok(self.node(kind, children, start))
    }

    fn try_statement(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        let mut children = self.block()?;
        let mut handlers = 0;
        while self.at_kw("except") {
            let hstart = self.pos;
            self.bump();
            let mut hchildren = Vec::new();
            if !self.at_op(":") {
                hchildren.push(self.expression()?);
                if self.eat_kw("as") {
                    self.expect_identifier()?;
                }
            }
            hchildren.extend(self.block()?);
            children.push(self.node(NodeKind::ExceptHandler, hchildren, hstart));
            handlers += 1;
        }
        let mut has_else = false;
        if handlers > 0 && self.eat_kw("else") {
            children.extend(self.block()?);
            has_else = true;
        }
        let mut has_finally = false;
        if self.eat_kw("finally") {
            children.extend(self.block()?);
            has_finally = true;
        }
        if handlers == 0 && !has_finally {
            return Err(self.error_here("expected 'except' or 'finally' block"));
        }
        let _ = has_else;
        Ok(self.node(NodeKind::Try, children, start))
    }

    fn with_item(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut children = vec![self.expression()?];
        if self.eat_kw("as") {
            children.push(self.star_target()?);
        }
        Ok(self.node(NodeKind::withitem, children, start))
    }

    fn with_statement(&mut self, start: usize, is_async: bool) -> PResult<NodeId> {
        self.expect_kw("with")?;
        let mut items = None;
        if self.at_op("(") {
            // Parenthesized item list; fall back to a plain expression.
            let save_pos = self.pos;
            let save_len = self.nodes.len();
            let attempt = (|| -> PResult<Vec<NodeId>> {
                self.bump();
                let mut v = vec![self.with_item()?];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    v.push(self.with_item()?);
                }
                self.expect_op(")")?;
                if !self.at_op(":") {
                    return Err(self.invalid());
                }
                Ok(v)
            })();
            match attempt {
                Ok(v) => items = Some(v),
                Err(_) => {
                    self.pos = save_pos;
                    self.nodes.truncate(save_len);
                }
            }
        }
        let mut children = match items {
            Some(v) => v,
            None => {
                let mut v = vec![self.with_item()?];
                while self.eat_op(",") {
                    v.push(self.with_item()?);
                }
                v
            }
        };
        children.extend(self.block()?);
        let kind = if is_async {
            NodeKind::AsyncWith
        } else {
            NodeKind::With
        };
        Ok(self.node(kind, children, start))
    }

    fn decorated(&mut self) -> PResult<NodeId> {
        let mut decorators = Vec::new();
        while self.eat_op("@") {
            decorators.push(self.named_expression()?);
            self.expect_newline()?;
        }
        match self.text() {
            "def" => self.function_def(decorators, false),
            "class" => self.class_def(decorators),
            "async" => self.async_statement(decorators),
            _ => Err(self.invalid()),
        }
    }

    fn async_statement(&mut self, decorators: Vec<NodeId>) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        match self.text() {
            "def" => self.function_def(decorators, true),
            "for" if decorators.is_empty() => self.for_statement(start, true),
            "with" if decorators.is_empty() => self.with_statement(start, true),
            _ => Err(self.invalid()),
        }
    }

    fn function_def(&mut self, decorators: Vec<NodeId>, is_async: bool) -> PResult<NodeId> {
        let start = self.pos;
        self.expect_kw("def")?;
        self.expect_identifier()?;
        self.expect_op("(")?;
        let args = self.parameters(true, ")")?;
        self.expect_op(")")?;
        let returns = if self.eat_op("->") {
            Some(self.expression()?)
        } else {
            None
        };
        let mut children = vec![args];
        children.extend(self.block()?);
        children.extend(decorators);
        children.extend(returns);
        let kind = if is_async {
            NodeKind::AsyncFunctionDef
        } else {
            NodeKind::FunctionDef
        };
        Ok(self.node(kind, children, start))
    }

    fn class_def(&mut self, decorators: Vec<NodeId>) -> PResult<NodeId> {
        let start = self.pos;
        self.expect_kw("class")?;
        self.expect_identifier()?;
        let mut children = Vec::new();
        if self.eat_op("(") {
            let (bases, keywords) = self.call_arguments()?;
            children.extend(bases);
            children.extend(keywords);
        }
        children.extend(self.block()?);
        children.extend(decorators);
        Ok(self.node(NodeKind::ClassDef, children, start))
    }

    /// Parameter list of a `def` (with annotations) or `lambda`.
    fn parameters(&mut self, annotations: bool, close: &str) -> PResult<NodeId> {
        let start = self.pos;
        let mut posonly = Vec::new();
        let mut args = Vec::new();
        let mut defaults = Vec::new();
        let mut vararg = None;
        let mut kwonly = Vec::new();
        let mut kw_defaults = Vec::new();
        let mut kwarg = None;
        let mut seen_star = false;
        while !self.at_op(close) {
            if self.eat_op("/") {
                if seen_star || !posonly.is_empty() || args.is_empty() {
                    return Err(self.invalid());
                }
                posonly = std::mem::take(&mut args);
            } else if self.eat_op("*") {
                if seen_star {
                    return Err(self.invalid());
                }
                seen_star = true;
                if self.at_identifier() {
                    vararg = Some(self.parameter(annotations)?);
                }
            } else if self.eat_op("**") {
                kwarg = Some(self.parameter(annotations)?);
                self.eat_op(",");
                break;
            } else {
                let a = self.parameter(annotations)?;
                let default = if self.eat_op("=") {
                    Some(self.expression()?)
                } else {
                    None
                };
                if seen_star {
                    kwonly.push(a);
                    kw_defaults.extend(default);
                } else {
                    if default.is_none() && !defaults.is_empty() {
                        return Err(self.error_here("non-default argument follows default argument"));
                    }
                    args.push(a);
                    defaults.extend(default);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        let mut children = posonly;
        children.extend(args);
        children.extend(vararg);
        children.extend(kwonly);
        children.extend(kw_defaults);
        children.extend(kwarg);
        children.extend(defaults);
        Ok(self.node(NodeKind::arguments, children, start))
    }

    fn parameter(&mut self, annotations: bool) -> PResult<NodeId> {
        let start = self.pos;
        self.expect_identifier()?;
        let mut children = Vec::new();
        if annotations && self.eat_op(":") {
            children.push(self.expression()?);
        }
        Ok(self.node(NodeKind::arg, children, start))
    }

    // ---------------------------------------------------------------
    // match statement

    fn try_match_statement(&mut self) -> PResult<Option<NodeId>> {
        let save_pos = self.pos;
        let save_len = self.nodes.len();
        let start = self.pos;
        self.bump();
        let head = (|| -> PResult<NodeId> {
            let first = self.star_named_expression()?;
            let subject = if self.at_op(",") {
                let mut elts = vec![first];
                while self.eat_op(",") {
                    if self.at_op(":") {
                        break;
                    }
                    elts.push(self.star_named_expression()?);
                }
                self.node(NodeKind::Tuple, elts, start + 1)
            } else {
                first
            };
            self.expect_op(":")?;
            if self.kind() != TokenKind::Newline || self.peek_tok(1).kind != TokenKind::Indent {
                return Err(self.invalid());
            }
            if !self.peek_is_kw(2, "case") {
                return Err(self.invalid());
            }
            Ok(subject)
        })();
        let subject = match head {
            Ok(s) => s,
            Err(_) => {
                self.pos = save_pos;
                self.nodes.truncate(save_len);
                return Ok(None);
            }
        };
        self.bump(); // NEWLINE
        self.bump(); // INDENT
        let mut children = vec![subject];
        loop {
            match self.kind() {
                TokenKind::Dedent => {
                    self.bump();
                    break;
                }
                TokenKind::EndMarker => break,
                TokenKind::Newline => self.bump(),
                _ if self.at_kw("case") => children.push(self.match_case()?),
                _ => return Err(self.invalid()),
            }
        }
        Ok(Some(self.node(NodeKind::Match, children, start)))
    }

    fn match_case(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        let mut children = vec![self.open_patterns()?];
        if self.eat_kw("if") {
            children.push(self.named_expression()?);
        }
        children.extend(self.block()?);
        Ok(self.node(NodeKind::match_case, children, start))
    }

    fn open_patterns(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let first = self.maybe_star_pattern()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut items = vec![first];
        while self.eat_op(",") {
            if self.at_op(":") || self.at_kw("if") {
                break;
            }
            items.push(self.maybe_star_pattern()?);
        }
        Ok(self.node(NodeKind::MatchSequence, items, start))
    }

    fn maybe_star_pattern(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.eat_op("*") {
            if !(self.at_identifier()) {
                return Err(self.invalid());
            }
            self.bump();
            return Ok(self.leaf(NodeKind::MatchStar, start));
        }
        self.pattern()
    }

    fn pattern(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let p = self.or_pattern()?;
        if self.eat_kw("as") {
            self.expect_identifier()?;
            return Ok(self.node(NodeKind::MatchAs, vec![p], start));
        }
        Ok(p)
    }

    fn or_pattern(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut alts = vec![self.closed_pattern()?];
        while self.eat_op("|") {
            alts.push(self.closed_pattern()?);
        }
        if alts.len() == 1 {
            Ok(alts[0])
        } else {
            Ok(self.node(NodeKind::MatchOr, alts, start))
        }
    }

    /// Signed number literal, possibly complex (`-1`, `1+2j`).
    fn signed_number(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut value = if self.at_op("-") {
            let op = self.leaf_bump(NodeKind::USub);
            if self.kind() != TokenKind::Number {
                return Err(self.invalid());
            }
            let n = self.leaf_bump(NodeKind::Constant);
            self.node(NodeKind::UnaryOp, vec![op, n], start)
        } else {
            self.leaf_bump(NodeKind::Constant)
        };
        if (self.at_op("+") || self.at_op("-")) && self.peek_tok(1).kind == TokenKind::Number {
            let kind = if self.at_op("+") {
                NodeKind::Add
            } else {
                NodeKind::Sub
            };
            let op = self.leaf_bump(kind);
            let rhs = self.leaf_bump(NodeKind::Constant);
            value = self.node(NodeKind::BinOp, vec![value, op, rhs], start);
        }
        Ok(value)
    }

    fn name_or_attribute(&mut self) -> PResult<(NodeId, bool)> {
        let start = self.pos;
        self.expect_identifier()?;
        let mut node = self.leaf(NodeKind::Name, start);
        let mut dotted = false;
        while self.at_op(".") {
            self.bump();
            self.expect_identifier()?;
            node = self.node(NodeKind::Attribute, vec![node], start);
            dotted = true;
        }
        Ok((node, dotted))
    }

    fn closed_pattern(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        match self.kind() {
            TokenKind::Number => {
                let v = self.signed_number()?;
                return Ok(self.node(NodeKind::MatchValue, vec![v], start));
            }
            TokenKind::Op if self.text() == "-" => {
                let v = self.signed_number()?;
                return Ok(self.node(NodeKind::MatchValue, vec![v], start));
            }
            TokenKind::String => {
                let v = self.strings()?;
                return Ok(self.node(NodeKind::MatchValue, vec![v], start));
            }
            TokenKind::Name if matches!(self.text(), "None" | "True" | "False") => {
                return Ok(self.leaf_bump(NodeKind::MatchSingleton));
            }
            TokenKind::Name => {
                if self.text() == "_" && !self.peek_is_op(1, ".") && !self.peek_is_op(1, "(") {
                    return Ok(self.leaf_bump(NodeKind::MatchAs));
                }
                let (target, dotted) = self.name_or_attribute()?;
                if self.at_op("(") {
                    return self.class_pattern(target, start);
                }
                if dotted {
                    return Ok(self.node(NodeKind::MatchValue, vec![target], start));
                }
                // Plain capture: the Name node is not part of MatchAs.
                self.nodes.truncate(target);
                return Ok(self.leaf(NodeKind::MatchAs, start));
            }
            TokenKind::Op => {}
            _ => return Err(self.invalid()),
        }
        if self.eat_op("(") {
            if self.eat_op(")") {
                return Ok(self.node(NodeKind::MatchSequence, Vec::new(), start));
            }
            let first = self.maybe_star_pattern()?;
            if self.at_op(",") {
                let mut items = vec![first];
                while self.eat_op(",") {
                    if self.at_op(")") {
                        break;
                    }
                    items.push(self.maybe_star_pattern()?);
                }
                self.expect_op(")")?;
                return Ok(self.node(NodeKind::MatchSequence, items, start));
            }
            self.expect_op(")")?;
            return Ok(first);
        }
        if self.eat_op("[") {
            let mut items = Vec::new();
            while !self.at_op("]") {
                items.push(self.maybe_star_pattern()?);
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op("]")?;
            return Ok(self.node(NodeKind::MatchSequence, items, start));
        }
        if self.eat_op("{") {
            let mut keys = Vec::new();
            let mut values = Vec::new();
            while !self.at_op("}") {
                if self.eat_op("**") {
                    self.expect_identifier()?;
                } else {
                    let key = match self.kind() {
                        TokenKind::Number => self.signed_number()?,
                        TokenKind::Op if self.text() == "-" => self.signed_number()?,
                        TokenKind::String => self.strings()?,
                        TokenKind::Name if matches!(self.text(), "None" | "True" | "False") => {
                            self.leaf_bump(NodeKind::Constant)
                        }
                        _ => {
                            let (n, dotted) = self.name_or_attribute()?;
                            if !dotted {
                                return Err(self.invalid());
                            }
                            n
                        }
                    };
                    self.expect_op(":")?;
                    keys.push(key);
                    values.push(self.pattern()?);
                }
                if !self.eat_op(",") {
                    break;
                }
            }
            self.expect_op("}")?;
            keys.extend(values);
            return Ok(self.node(NodeKind::MatchMapping, keys, start));
        }
        Err(self.invalid())
    }

    fn class_pattern(&mut self, cls: NodeId, start: usize) -> PResult<NodeId> {
        self.expect_op("(")?;
        let mut positional = Vec::new();
        let mut keyword = Vec::new();
        while !self.at_op(")") {
            if self.at_identifier() && self.peek_is_op(1, "=") {
                self.bump();
                self.bump();
                keyword.push(self.pattern()?);
            } else {
                if !keyword.is_empty() {
                    return Err(self.error_here("positional patterns follow keyword patterns"));
                }
                positional.push(self.pattern()?);
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        let mut children = vec![cls];
        children.extend(positional);
        children.extend(keyword);
        Ok(self.node(NodeKind::MatchClass, children, start))
    }

    // ---------------------------------------------------------------
    // expressions

    fn star_expressions(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let first = self.star_expression()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_list_end() {
                break;
            }
            elts.push(self.star_expression()?);
        }
        Ok(self.node(NodeKind::Tuple, elts, start))
    }

    fn star_expression(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.eat_op("*") {
            let inner = self.bitwise_or()?;
            return Ok(self.node(NodeKind::Starred, vec![inner], start));
        }
        self.expression()
    }

    fn star_named_expression(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.eat_op("*") {
            let inner = self.bitwise_or()?;
            return Ok(self.node(NodeKind::Starred, vec![inner], start));
        }
        self.named_expression()
    }

    fn named_expression(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.at_identifier() && self.peek_is_op(1, ":=") {
            let target = self.leaf_bump(NodeKind::Name);
            self.bump();
            let value = self.expression()?;
            return Ok(self.node(NodeKind::NamedExpr, vec![target, value], start));
        }
        self.expression()
    }

    fn expression(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.at_kw("lambda") {
            return self.lambda();
        }
        let body = self.disjunction()?;
        if self.eat_kw("if") {
            let test = self.disjunction()?;
            self.expect_kw("else")?;
            let orelse = self.expression()?;
            return Ok(self.node(NodeKind::IfExp, vec![test, body, orelse], start));
        }
        Ok(body)
    }

    fn lambda(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        let args = self.parameters(false, ":")?;
        self.expect_op(":")?;
        let body = self.expression()?;
        Ok(self.node(NodeKind::Lambda, vec![args, body], start))
    }

    fn bool_chain(
        &mut self,
        kw: &str,
        op_kind: NodeKind,
        next: fn(&mut Self) -> PResult<NodeId>,
    ) -> PResult<NodeId> {
        let start = self.pos;
        let first = next(self)?;
        if !self.at_kw(kw) {
            return Ok(first);
        }
        let op = self.leaf(op_kind, self.pos);
        let mut children = vec![op, first];
        while self.eat_kw(kw) {
            children.push(next(self)?);
        }
        Ok(self.node(NodeKind::BoolOp, children, start))
    }

    fn disjunction(&mut self) -> PResult<NodeId> {
        self.bool_chain("or", NodeKind::Or, Self::conjunction)
    }

    fn conjunction(&mut self) -> PResult<NodeId> {
        self.bool_chain("and", NodeKind::And, Self::inversion)
    }

    fn inversion(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.at_kw("not") {
            let op = self.leaf_bump(NodeKind::Not);
            let operand = self.inversion()?;
            return Ok(self.node(NodeKind::UnaryOp, vec![op, operand], start));
        }
        self.comparison()
    }

    fn comparison_operator(&mut self) -> Option<NodeId> {
        let start = self.pos;
        let kind = match self.kind() {
            TokenKind::Op => match self.text() {
                "==" => NodeKind::Eq,
                "!=" | "<>" => NodeKind::NotEq,
                "<" => NodeKind::Lt,
                "<=" => NodeKind::LtE,
                ">" => NodeKind::Gt,
                ">=" => NodeKind::GtE,
                _ => return None,
            },
            TokenKind::Name => match self.text() {
                "in" => NodeKind::In,
                "not" if self.peek_is_kw(1, "in") => {
                    self.bump();
                    NodeKind::NotIn
                }
                "is" if self.peek_is_kw(1, "not") => {
                    self.bump();
                    NodeKind::IsNot
                }
                "is" => NodeKind::Is,
                _ => return None,
            },
            _ => return None,
        };
        self.bump();
        Some(self.leaf(kind, start))
    }

    fn comparison(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let left = self.bitwise_or()?;
        let mut ops = Vec::new();
        let mut comparators = Vec::new();
        while let Some(op) = self.comparison_operator() {
            ops.push(op);
            comparators.push(self.bitwise_or()?);
        }
        if ops.is_empty() {
            return Ok(left);
        }
        let mut children = vec![left];
        children.extend(ops);
        children.extend(comparators);
        Ok(self.node(NodeKind::Compare, children, start))
    }

    fn binary_level(
        &mut self,
        table: &[(&str, NodeKind)],
        next: fn(&mut Self) -> PResult<NodeId>,
    ) -> PResult<NodeId> {
        let start = self.pos;
        let mut left = next(self)?;
        loop {
            if self.kind() != TokenKind::Op {
                break;
            }
            let t = self.text();
            let Some((_, kind)) = table.iter().find(|(o, _)| *o == t) else {
                break;
            };
            let op = self.leaf_bump(*kind);
            let right = next(self)?;
            left = self.node(NodeKind::BinOp, vec![left, op, right], start);
        }
        Ok(left)
    }

    fn bitwise_or(&mut self) -> PResult<NodeId> {
        self.binary_level(&[("|", NodeKind::BitOr)], Self::bitwise_xor)
    }

    fn bitwise_xor(&mut self) -> PResult<NodeId> {
        self.binary_level(&[("^", NodeKind::BitXor)], Self::bitwise_and)
    }

    fn bitwise_and(&mut self) -> PResult<NodeId> {
        self.binary_level(&[("&", NodeKind::BitAnd)], Self::shift_expr)
    }

    fn shift_expr(&mut self) -> PResult<NodeId> {
        self.binary_level(
            &[("<<", NodeKind::LShift), (">>", NodeKind::RShift)],
            Self::sum,
        )
    }

    fn sum(&mut self) -> PResult<NodeId> {
        self.binary_level(&[("+", NodeKind::Add), ("-", NodeKind::Sub)], Self::term)
    }

    fn term(&mut self) -> PResult<NodeId> {
        self.binary_level(
            &[
                ("*", NodeKind::Mult),
                ("/", NodeKind::Div),
                ("//", NodeKind::FloorDiv),
                ("%", NodeKind::Mod),
                ("@", NodeKind::MatMult),
            ],
            Self::factor,
        )
    }

    fn factor(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let kind = match self.kind() {
            TokenKind::Op => match self.text() {
                "+" => Some(NodeKind::UAdd),
                "-" => Some(NodeKind::USub),
                "~" => Some(NodeKind::Invert),
                _ => None,
            },
            _ => None,
        };
        if let Some(kind) = kind {
            let op = self.leaf_bump(kind);
            let operand = self.factor()?;
            return Ok(self.node(NodeKind::UnaryOp, vec![op, operand], start));
        }
        self.power()
    }

    fn power(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let base = if self.at_kw("await") {
            self.bump();
            let inner = self.primary()?;
            self.node(NodeKind::Await, vec![inner], start)
        } else {
            self.primary()?
        };
        if self.at_op("**") {
            let op = self.leaf_bump(NodeKind::Pow);
            let exp = self.factor()?;
            return Ok(self.node(NodeKind::BinOp, vec![base, op, exp], start));
        }
        Ok(base)
    }

    fn primary(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut node = self.atom()?;
        loop {
            if self.eat_op(".") {
                self.expect_identifier()?;
                node = self.node(NodeKind::Attribute, vec![node], start);
            } else if self.eat_op("(") {
                let (args, keywords) = self.call_arguments()?;
                let mut children = vec![node];
                children.extend(args);
                children.extend(keywords);
                node = self.node(NodeKind::Call, children, start);
            } else if self.eat_op("[") {
                let slice = self.slices()?;
                self.expect_op("]")?;
                node = self.node(NodeKind::Subscript, vec![node, slice], start);
            } else {
                break;
            }
        }
        Ok(node)
    }

    /// Arguments after an opening parenthesis, consuming the closing one.
    fn call_arguments(&mut self) -> PResult<(Vec<NodeId>, Vec<NodeId>)> {
        let mut args = Vec::new();
        let mut keywords = Vec::new();
        while !self.at_op(")") {
            let start = self.pos;
            if self.eat_op("*") {
                let inner = self.expression()?;
                args.push(self.node(NodeKind::Starred, vec![inner], start));
            } else if self.eat_op("**") {
                let value = self.expression()?;
                keywords.push(self.node(NodeKind::keyword, vec![value], start));
            } else if self.at_identifier() && self.peek_is_op(1, "=") {
                self.bump();
                self.bump();
                let value = self.expression()?;
                keywords.push(self.node(NodeKind::keyword, vec![value], start));
            } else {
                let e = self.named_expression()?;
                if self.at_comprehension() {
                    let mut children = vec![e];
                    children.extend(self.comprehension_clauses()?);
                    args.push(self.node(NodeKind::GeneratorExp, children, start));
                } else {
                    args.push(e);
                }
            }
            if !self.eat_op(",") {
                break;
            }
        }
        self.expect_op(")")?;
        Ok((args, keywords))
    }

    fn slices(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let first = self.slice()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_op("]") {
                break;
            }
            elts.push(self.slice()?);
        }
        Ok(self.node(NodeKind::Tuple, elts, start))
    }

    fn slice(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.at_op("*") {
            return self.star_named_expression();
        }
        let lower = if self.at_op(":") {
            None
        } else {
            let e = self.named_expression()?;
            if !self.at_op(":") {
                return Ok(e);
            }
            Some(e)
        };
        self.expect_op(":")?;
        let mut children: Vec<NodeId> = lower.into_iter().collect();
        if !(self.at_op(":") || self.at_op(",") || self.at_op("]")) {
            children.push(self.expression()?);
        }
        if self.eat_op(":") && !(self.at_op(",") || self.at_op("]")) {
            children.push(self.expression()?);
        }
        Ok(self.node(NodeKind::Slice, children, start))
    }

    fn at_comprehension(&self) -> bool {
        self.at_kw("for") || (self.at_kw("async") && self.peek_is_kw(1, "for"))
    }

    fn comprehension_clauses(&mut self) -> PResult<Vec<NodeId>> {
        let mut out = Vec::new();
        while self.at_comprehension() {
            let start = self.pos;
            self.eat_kw("async");
            self.expect_kw("for")?;
            let target = self.star_targets()?;
            self.expect_kw("in")?;
            let mut children = vec![target, self.disjunction()?];
            while self.eat_kw("if") {
                children.push(self.disjunction()?);
            }
            out.push(self.node(NodeKind::comprehension, children, start));
        }
        Ok(out)
    }

    fn star_targets(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let first = self.star_target()?;
        if !self.at_op(",") {
            return Ok(first);
        }
        let mut elts = vec![first];
        while self.eat_op(",") {
            if self.at_kw("in") || self.at_op("=") || self.at_op(")") || self.at_op(":") {
                break;
            }
            elts.push(self.star_target()?);
        }
        Ok(self.node(NodeKind::Tuple, elts, start))
    }

    fn star_target(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        if self.eat_op("*") {
            let inner = self.star_target()?;
            return Ok(self.node(NodeKind::Starred, vec![inner], start));
        }
        self.primary()
    }

    fn yield_expression(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.expect_kw("yield")?;
        if self.eat_kw("from") {
            let value = self.expression()?;
            return Ok(self.node(NodeKind::YieldFrom, vec![value], start));
        }
        let mut children = Vec::new();
        if !self.at_list_end() {
            children.push(self.star_expressions()?);
        }
        Ok(self.node(NodeKind::Yield, children, start))
    }

    fn atom(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        match self.kind() {
            TokenKind::Name => match self.text() {
                "True" | "False" | "None" => Ok(self.leaf_bump(NodeKind::Constant)),
                t if is_keyword(t) => Err(self.invalid()),
                _ => Ok(self.leaf_bump(NodeKind::Name)),
            },
            TokenKind::Number => Ok(self.leaf_bump(NodeKind::Constant)),
            TokenKind::String => self.strings(),
            TokenKind::Op => match self.text() {
                "..." => Ok(self.leaf_bump(NodeKind::Constant)),
                "(" => {
                    self.bump();
                    if self.eat_op(")") {
                        return Ok(self.node(NodeKind::Tuple, Vec::new(), start));
                    }
                    if self.at_kw("yield") {
                        let y = self.yield_expression()?;
                        self.expect_op(")")?;
                        return Ok(y);
                    }
                    let first = self.star_named_expression()?;
                    if self.at_comprehension() {
                        let mut children = vec![first];
                        children.extend(self.comprehension_clauses()?);
                        self.expect_op(")")?;
                        return Ok(self.node(NodeKind::GeneratorExp, children, start));
                    }
                    if self.at_op(",") {
                        let mut elts = vec![first];
                        while self.eat_op(",") {
                            if self.at_op(")") {
                                break;
                            }
                            elts.push(self.star_named_expression()?);
                        }
                        self.expect_op(")")?;
                        return Ok(self.node(NodeKind::Tuple, elts, start));
                    }
                    self.expect_op(")")?;
                    Ok(first)
                }
                "[" => {
                    self.bump();
                    if self.eat_op("]") {
                        return Ok(self.node(NodeKind::List, Vec::new(), start));
                    }
                    let first = self.star_named_expression()?;
                    if self.at_comprehension() {
                        let mut children = vec![first];
                        children.extend(self.comprehension_clauses()?);
                        self.expect_op("]")?;
                        return Ok(self.node(NodeKind::ListComp, children, start));
                    }
                    let mut elts = vec![first];
                    while self.eat_op(",") {
                        if self.at_op("]") {
                            break;
                        }
                        elts.push(self.star_named_expression()?);
                    }
                    self.expect_op("]")?;
                    Ok(self.node(NodeKind::List, elts, start))
                }
                "{" => self.brace_display(),
                _ => Err(self.invalid()),
            },
            _ => Err(self.invalid()),
        }
    }

    fn brace_display(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        self.bump();
        if self.eat_op("}") {
            return Ok(self.node(NodeKind::Dict, Vec::new(), start));
        }
        let mut keys = Vec::new();
        let mut values = Vec::new();
        if self.eat_op("**") {
            values.push(self.bitwise_or()?);
        } else {
            let first = self.star_named_expression()?;
            if self.eat_op(":") {
                let value = self.expression()?;
                if self.at_comprehension() {
                    let mut children = vec![first, value];
                    children.extend(self.comprehension_clauses()?);
                    self.expect_op("}")?;
                    return Ok(self.node(NodeKind::DictComp, children, start));
                }
                keys.push(first);
                values.push(value);
            } else {
                // Set display or comprehension.
                if self.at_comprehension() {
                    let mut children = vec![first];
                    children.extend(self.comprehension_clauses()?);
                    self.expect_op("}")?;
                    return Ok(self.node(NodeKind::SetComp, children, start));
                }
                let mut elts = vec![first];
                while self.eat_op(",") {
                    if self.at_op("}") {
                        break;
                    }
                    elts.push(self.star_named_expression()?);
                }
                self.expect_op("}")?;
                return Ok(self.node(NodeKind::Set, elts, start));
            }
        }
        while self.eat_op(",") {
            if self.at_op("}") {
                break;
            }
            if self.eat_op("**") {
                values.push(self.bitwise_or()?);
            } else {
                keys.push(self.expression()?);
                self.expect_op(":")?;
                values.push(self.expression()?);
            }
        }
        self.expect_op("}")?;
        keys.extend(values);
        Ok(self.node(NodeKind::Dict, keys, start))
    }

    // ---------------------------------------------------------------
    // string literals and f-strings

    fn strings(&mut self) -> PResult<NodeId> {
        let start = self.pos;
        let mut end = start;
        while self.toks[end].kind == TokenKind::String {
            end += 1;
        }
        let any_f = (start..end).any(|i| {
            let (prefix, _, _) = string_parts(self.toks[i].text(self.src));
            prefix.contains('f')
        });
        if !any_f {
            self.pos = end;
            return Ok(self.node(NodeKind::Constant, Vec::new(), start));
        }
        let span = match self.span_override {
            Some(s) => s,
            None => (start, end - 1),
        };
        let mut pieces = Vec::new();
        for i in start..end {
            let tok = self.toks[i];
            let text = tok.text(self.src);
            let (prefix, body_start, body_end) = string_parts(text);
            if prefix.contains('f') {
                let raw = prefix.contains('r');
                let (p, _) = self.fstring_pieces(
                    tok.start + body_start,
                    tok.start + body_end,
                    raw,
                    false,
                    span,
                    &tok,
                )?;
                pieces.extend(p);
            } else if body_end > body_start {
                pieces.push(Piece::Literal);
            }
        }
        self.pos = end;
        let values = self.merge_pieces(pieces, span);
        Ok(self.node_with_span(NodeKind::JoinedStr, values, span))
    }

    fn node_with_span(&mut self, kind: NodeKind, children: Vec<NodeId>, span: (usize, usize)) -> NodeId {
        self.nodes.push(SyntaxNode {
            kind,
            children,
            first_token: span.0,
            last_token: span.1,
            is_elif: false,
        });
        self.nodes.len() - 1
    }

    fn merge_pieces(&mut self, pieces: Vec<Piece>, span: (usize, usize)) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut pending = false;
        for piece in pieces {
            match piece {
                Piece::Literal => pending = true,
                Piece::Node(id) => {
                    if pending {
                        out.push(self.node_with_span(NodeKind::Constant, Vec::new(), span));
                        pending = false;
                    }
                    out.push(id);
                }
            }
        }
        if pending {
            out.push(self.node_with_span(NodeKind::Constant, Vec::new(), span));
        }
        out
    }

    /// Scan an f-string body in `src[from..to]`. With `in_spec`, stop at the
    /// unmatched `}` closing a format spec and return its offset.
    fn fstring_pieces(
        &mut self,
        from: usize,
        to: usize,
        raw: bool,
        in_spec: bool,
        span: (usize, usize),
        tok: &Token,
    ) -> PResult<(Vec<Piece>, usize)> {
        let bytes = self.src.as_bytes();
        let err = |msg: &str| ParseError::new(format!("f-string: {msg}"), tok.line, tok.col + 1);
        let mut pieces = Vec::new();
        let mut i = from;
        while i < to {
            match bytes[i] {
                b'{' if i + 1 < to && bytes[i + 1] == b'{' && !in_spec => {
                    pieces.push(Piece::Literal);
                    i += 2;
                }
                b'{' => {
                    let (mut field, next) = self.fstring_field(i + 1, to, raw, span, tok)?;
                    pieces.append(&mut field);
                    i = next;
                }
                b'}' if in_spec => return Ok((pieces, i)),
                b'}' if i + 1 < to && bytes[i + 1] == b'}' => {
                    pieces.push(Piece::Literal);
                    i += 2;
                }
                b'}' => return Err(err("single '}' is not allowed")),
                b'\\' if !raw => {
                    pieces.push(Piece::Literal);
                    if i + 2 < to && bytes[i + 1] == b'N' && bytes[i + 2] == b'{' {
                        while i < to && bytes[i] != b'}' {
                            i += 1;
                        }
                    } else {
                        i += 1;
                    }
                    i += 1;
                }
                _ => {
                    pieces.push(Piece::Literal);
                    i += 1;
                }
            }
        }
        if in_spec {
            return Err(err("expecting '}'"));
        }
        Ok((pieces, to))
    }

    /// Parse a replacement field whose expression starts at `from`.
    /// Returns the pieces it contributes and the offset after its `}`.
    fn fstring_field(
        &mut self,
        from: usize,
        to: usize,
        raw: bool,
        span: (usize, usize),
        tok: &Token,
    ) -> PResult<(Vec<Piece>, usize)> {
        let bytes = self.src.as_bytes();
        let err = |msg: &str| ParseError::new(format!("f-string: {msg}"), tok.line, tok.col + 1);
        let mut depth = 0usize;
        let mut j = from;
        let mut debug = false;
        while j < to {
            let c = bytes[j];
            match c {
                b'\'' | b'"' => {
                    let triple = j + 2 < to && bytes[j + 1] == c && bytes[j + 2] == c;
                    j += if triple { 3 } else { 1 };
                    loop {
                        if j >= to {
                            return Err(err("unterminated string"));
                        }
                        if bytes[j] == b'\\' {
                            j += 2;
                            continue;
                        }
                        if bytes[j] == c {
                            if !triple {
                                j += 1;
                                break;
                            }
                            if j + 2 < to && bytes[j + 1] == c && bytes[j + 2] == c {
                                j += 3;
                                break;
                            }
                        }
                        j += 1;
                    }
                    continue;
                }
                b'(' | b'[' | b'{' => depth += 1,
                b')' | b']' => depth = depth.saturating_sub(1),
                b'}' if depth > 0 => depth -= 1,
                b'}' => break,
                b'!' if depth == 0 && !(j + 1 < to && bytes[j + 1] == b'=') => break,
                b':' if depth == 0 => break,
                b'=' if depth == 0 => {
                    let next_eq = j + 1 < to && bytes[j + 1] == b'=';
                    let prev_op = j > from && matches!(bytes[j - 1], b'=' | b'!' | b'<' | b'>');
                    if next_eq {
                        j += 2;
                        continue;
                    }
                    if !prev_op {
                        debug = true;
                        break;
                    }
                }
                b'#' => return Err(err("expression part cannot include '#'")),
                _ => {}
            }
            j += 1;
        }
        if j >= to {
            return Err(err("expecting '}'"));
        }
        if self.src[from..j].trim().is_empty() {
            return Err(err("empty expression not allowed"));
        }
        let value = self.sub_expression(from, j, span, tok)?;
        let mut pieces = Vec::new();
        if debug {
            pieces.push(Piece::Literal);
            j += 1;
            while j < to && bytes[j].is_ascii_whitespace() {
                j += 1;
            }
        }
        if j < to && bytes[j] == b'!' {
            j += 2;
        }
        let mut children = vec![value];
        if j < to && bytes[j] == b':' {
            let (spec, close) = self.fstring_pieces(j + 1, to, raw, true, span, tok)?;
            let values = self.merge_pieces(spec, span);
            children.push(self.node_with_span(NodeKind::JoinedStr, values, span));
            j = close;
        }
        if j >= to || bytes[j] != b'}' {
            return Err(err("expecting '}'"));
        }
        pieces.push(Piece::Node(self.node_with_span(
            NodeKind::FormattedValue,
            children,
            span,
        )));
        Ok((pieces, j + 1))
    }

    /// Parse `src[from..to]` as the expression of a replacement field.
    fn sub_expression(
        &mut self,
        from: usize,
        to: usize,
        span: (usize, usize),
        tok: &Token,
    ) -> PResult<NodeId> {
        let line_start = self.src[..from].rfind('\n').map_or(0, |p| p + 1);
        let mut toks = lexer::tokenize_expression(self.src, from, to, tok.line, line_start)?;
        toks.push(Token {
            kind: TokenKind::EndMarker,
            start: to,
            end: to,
            line: tok.line,
            col: tok.col,
        });
        let saved_toks = std::mem::replace(&mut self.toks, toks);
        let saved_pos = std::mem::replace(&mut self.pos, 0);
        let saved_span = self.span_override.replace(span);
        let result = (|| {
            let e = self.yield_or_star_expressions()?;
            if self.kind() != TokenKind::EndMarker {
                return Err(self.invalid());
            }
            Ok(e)
        })();
        self.toks = saved_toks;
        self.pos = saved_pos;
        self.span_override = saved_span;
        result
    }
}
