//! Python 3 tokenizer.
//!
//! Produces the same significant token stream as CPython's `tokenize`
//! module (names, numbers, strings, operators) plus the layout tokens the
//! parser needs (NEWLINE, INDENT, DEDENT, end marker). Comments and
//! non-logical newlines are dropped. An f-string is a single string token.

use super::ParseError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TokenKind {
    Name,
    Number,
    String,
    Op,
    Newline,
    Indent,
    Dedent,
    EndMarker,
}

impl TokenKind {
    /// Layout and synthetic tokens are not counted as lexical tokens.
    pub fn is_significant(self) -> bool {
        matches!(
            self,
            TokenKind::Name | TokenKind::Number | TokenKind::String | TokenKind::Op
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Token {
    pub kind: TokenKind,
    /// Byte range into the source text.
    pub start: usize,
    pub end: usize,
    pub line: usize,
    pub col: usize,
}

impl Token {
    pub fn text<'s>(&self, src: &'s str) -> &'s str {
        &src[self.start..self.end]
    }
}

const OPS3: [&str; 5] = ["**=", "//=", ">>=", "<<=", "..."];
const OPS2: [&str; 20] = [
    "->", ":=", "==", "!=", "<=", ">=", "**", "//", "<<", ">>", "+=", "-=", "*=", "/=", "%=",
    "&=", "|=", "^=", "@=", "<>",
];
const OPS1: &str = "+-*/%@&|^~<>()[]{},:;.=";

pub struct Lexer<'s> {
    src: &'s str,
    bytes: &'s [u8],
    pos: usize,
    end: usize,
    line: usize,
    line_start: usize,
    brackets: Vec<(u8, usize, usize)>,
    indents: Vec<usize>,
    at_line_start: bool,
    tokens: Vec<Token>,
    /// Expression mode lexes an f-string replacement field: no layout tokens.
    expression_mode: bool,
}

/// Tokenize a whole module.
pub fn tokenize(src: &str) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer::new(src, 0, src.len(), false);
    lexer.run()?;
    Ok(lexer.tokens)
}

/// Tokenize `src[start..end]` as a bracketed expression (no layout tokens).
/// Offsets in the returned tokens refer to the full `src`.
pub fn tokenize_expression(
    src: &str,
    start: usize,
    end: usize,
    line: usize,
    line_start: usize,
) -> Result<Vec<Token>, ParseError> {
    let mut lexer = Lexer::new(src, start, end, true);
    lexer.line = line;
    lexer.line_start = line_start;
    lexer.run()?;
    Ok(lexer.tokens)
}

impl<'s> Lexer<'s> {
    fn new(src: &'s str, start: usize, end: usize, expression_mode: bool) -> Self {
        Lexer {
            src,
            bytes: src.as_bytes(),
            pos: start,
            end,
            line: 1,
            line_start: start,
            brackets: Vec::new(),
            indents: vec![0],
            at_line_start: !expression_mode,
            tokens: Vec::new(),
            expression_mode,
        }
    }

    fn error(&self, msg: impl Into<String>) -> ParseError {
        ParseError::new(msg, self.line, self.pos.saturating_sub(self.line_start) + 1)
    }

    fn peek(&self, off: usize) -> u8 {
        let i = self.pos + off;
        if i < self.end {
            self.bytes[i]
        } else {
            0
        }
    }

    fn push(&mut self, kind: TokenKind, start: usize, line: usize, col: usize) {
        self.tokens.push(Token {
            kind,
            start,
            end: self.pos,
            line,
            col,
        });
    }

    fn newline(&mut self) {
        self.line += 1;
        self.line_start = self.pos;
    }

    fn last_is_layout(&self) -> bool {
        match self.tokens.last() {
            None => true,
            Some(t) => matches!(
                t.kind,
                TokenKind::Newline | TokenKind::Indent | TokenKind::Dedent
            ),
        }
    }

    fn run(&mut self) -> Result<(), ParseError> {
        while self.pos < self.end {
            if self.at_line_start {
                self.at_line_start = false;
                if self.handle_indentation()? {
                    continue;
                }
            }
            let c = self.peek(0);
            match c {
                b' ' | b'\t' | b'\x0c' => self.pos += 1,
                b'\r' if self.peek(1) == b'\n' => self.pos += 1,
                b'\n' | b'\r' => {
                    let start = self.pos;
                    let col = start - self.line_start;
                    self.pos += 1;
                    if self.brackets.is_empty() && !self.expression_mode {
                        self.push(TokenKind::Newline, start, self.line, col);
                        self.at_line_start = true;
                    }
                    self.newline();
                }
                b'#' => {
                    while self.pos < self.end && !matches!(self.peek(0), b'\n' | b'\r') {
                        self.pos += 1;
                    }
                }
                b'\\' => {
                    self.pos += 1;
                    match self.peek(0) {
                        b'\n' => {
                            self.pos += 1;
                            self.newline();
                        }
                        b'\r' => {
                            self.pos += if self.peek(1) == b'\n' { 2 } else { 1 };
                            self.newline();
                        }
                        _ => return Err(self.error("unexpected character after line continuation character")),
                    }
                    if self.pos >= self.end && !self.expression_mode {
                        return Err(self.error("unexpected EOF while parsing"));
                    }
                }
                b'0'..=b'9' => self.number()?,
                b'.' if self.peek(1).is_ascii_digit() => self.number()?,
                b'"' | b'\'' => self.string(self.pos)?,
                _ if is_ident_start(c) => {
                    let start = self.pos;
                    // String prefixes: up to two letters from [rRbBuUfF].
                    let mut k = 0;
                    while k < 2 && is_prefix_char(self.peek(k)) {
                        k += 1;
                    }
                    if k > 0 {
                        for plen in (1..=k).rev() {
                            let q = self.peek(plen);
                            if (q == b'"' || q == b'\'') && valid_prefix(&self.src[start..start + plen]) {
                                self.pos += plen;
                                self.string(start)?;
                                break;
                            }
                        }
                        if self.pos != start {
                            continue;
                        }
                    }
                    self.identifier();
                }
                _ if c >= 0x80 => {
                    let ch = self.src[self.pos..].chars().next().unwrap_or('\0');
                    if ch.is_alphabetic() {
                        self.identifier();
                    } else {
                        return Err(self.error(format!("invalid character '{ch}'")));
                    }
                }
                _ => self.operator()?,
            }
        }
        if let Some(&(open, line, col)) = self.brackets.last() {
            if !self.expression_mode {
                return Err(ParseError::new(
                    format!("'{}' was never closed", open as char),
                    line,
                    col + 1,
                ));
            }
        }
        if !self.expression_mode {
            let line = self.line;
            let col = self.pos - self.line_start;
            if !self.last_is_layout() {
                self.push(TokenKind::Newline, self.pos, line, col);
            }
            while self.indents.len() > 1 {
                self.indents.pop();
                self.push(TokenKind::Dedent, self.pos, line, col);
            }
            self.push(TokenKind::EndMarker, self.pos, line, col);
        }
        Ok(())
    }

    /// Measure indentation at the start of a line. Returns true when the
    /// line is blank or comment-only and was consumed.
    fn handle_indentation(&mut self) -> Result<bool, ParseError> {
        let mut col = 0usize;
        let mut p = self.pos;
        while p < self.end {
            match self.bytes[p] {
                b' ' => col += 1,
                b'\t' => col = (col / 8 + 1) * 8,
                b'\x0c' => col = 0,
                _ => break,
            }
            p += 1;
        }
        let next = if p < self.end { self.bytes[p] } else { 0 };
        if matches!(next, b'#' | b'\n' | b'\r' | 0) {
            // Blank line: skip it without producing layout tokens.
            self.pos = p;
            while self.pos < self.end && !matches!(self.peek(0), b'\n' | b'\r') {
                self.pos += 1;
            }
            if self.pos < self.end {
                if self.peek(0) == b'\r' && self.peek(1) == b'\n' {
                    self.pos += 1;
                }
                self.pos += 1;
                self.newline();
                self.at_line_start = true;
            }
            return Ok(true);
        }
        self.pos = p;
        let current = *self.indents.last().unwrap_or(&0);
        if col > current {
            self.indents.push(col);
            self.push(TokenKind::Indent, self.line_start, self.line, 0);
        } else if col < current {
            while col < *self.indents.last().unwrap_or(&0) {
                self.indents.pop();
                self.push(TokenKind::Dedent, self.pos, self.line, col);
            }
            if col != *self.indents.last().unwrap_or(&0) {
                return Err(self.error("unindent does not match any outer indentation level"));
            }
        }
        Ok(false)
    }

    fn identifier(&mut self) {
        let start = self.pos;
        let col = start - self.line_start;
        for ch in self.src[start..self.end].chars() {
            if ch == '_' || ch.is_alphanumeric() {
                self.pos += ch.len_utf8();
            } else {
                break;
            }
        }
        self.push(TokenKind::Name, start, self.line, col);
    }

    fn number(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let col = start - self.line_start;
        let digits = |lx: &mut Self, pred: fn(u8) -> bool| {
            while pred(lx.peek(0)) || (lx.peek(0) == b'_' && pred(lx.peek(1))) {
                lx.pos += 1;
            }
        };
        if self.peek(0) == b'0' && matches!(self.peek(1), b'x' | b'X' | b'o' | b'O' | b'b' | b'B') {
            self.pos += 2;
            let pred: fn(u8) -> bool = match self.bytes[self.pos - 1] {
                b'x' | b'X' => |c| c.is_ascii_hexdigit(),
                b'o' | b'O' => |c| (b'0'..=b'7').contains(&c),
                _ => |c| c == b'0' || c == b'1',
            };
            if self.peek(0) == b'_' {
                self.pos += 1;
            }
            if !pred(self.peek(0)) {
                return Err(self.error("invalid numeric literal"));
            }
            digits(self, pred);
        } else {
            digits(self, |c| c.is_ascii_digit());
            if self.peek(0) == b'.' {
                self.pos += 1;
                digits(self, |c| c.is_ascii_digit());
            }
            if matches!(self.peek(0), b'e' | b'E') {
                let save = self.pos;
                self.pos += 1;
                if matches!(self.peek(0), b'+' | b'-') {
                    self.pos += 1;
                }
                if self.peek(0).is_ascii_digit() {
                    digits(self, |c| c.is_ascii_digit());
                } else {
                    self.pos = save;
                }
            }
            if matches!(self.peek(0), b'j' | b'J') {
                self.pos += 1;
            }
        }
        self.push(TokenKind::Number, start, self.line, col);
        Ok(())
    }

    /// Lex a string literal whose prefix (if any) starts at `start` and
    /// whose opening quote is at `self.pos`.
    fn string(&mut self, start: usize) -> Result<(), ParseError> {
        let line = self.line;
        let col = start - self.line_start;
        let quote = self.peek(0);
        let triple = self.peek(1) == quote && self.peek(2) == quote;
        self.pos += if triple { 3 } else { 1 };
        loop {
            if self.pos >= self.end {
                return Err(ParseError::new(
                    if triple {
                        "unterminated triple-quoted string literal"
                    } else {
                        "unterminated string literal"
                    },
                    line,
                    col + 1,
                ));
            }
            let c = self.peek(0);
            match c {
                b'\\' => {
                    self.pos += 1;
                    match self.peek(0) {
                        b'\n' => {
                            self.pos += 1;
                            self.newline();
                        }
                        b'\r' => {
                            self.pos += if self.peek(1) == b'\n' { 2 } else { 1 };
                            self.newline();
                        }
                        _ => {
                            if self.pos < self.end {
                                self.pos += 1;
                            }
                        }
                    }
                }
                b'\n' | b'\r' => {
                    if !triple {
                        return Err(ParseError::new("unterminated string literal", line, col + 1));
                    }
                    if c == b'\r' && self.peek(1) == b'\n' {
                        self.pos += 1;
                    }
                    self.pos += 1;
                    self.newline();
                }
                _ if c == quote => {
                    if !triple {
                        self.pos += 1;
                        break;
                    }
                    if self.peek(1) == quote && self.peek(2) == quote {
                        self.pos += 3;
                        break;
                    }
                    self.pos += 1;
                }
                _ => self.pos += 1,
            }
        }
        self.tokens.push(Token {
            kind: TokenKind::String,
            start,
            end: self.pos,
            line,
            col,
        });
        Ok(())
    }

    fn operator(&mut self) -> Result<(), ParseError> {
        let start = self.pos;
        let col = start - self.line_start;
        let rest = &self.src[start..self.end];
        let len = if OPS3.iter().any(|op| rest.starts_with(op)) {
            3
        } else if OPS2.iter().any(|op| rest.starts_with(op)) {
            2
        } else if OPS1.as_bytes().contains(&self.peek(0)) {
            1
        } else {
            let ch = rest.chars().next().unwrap_or('\0');
            return Err(self.error(format!("invalid character '{ch}'")));
        };
        let c = self.peek(0);
        if len == 1 {
            match c {
                b'(' | b'[' | b'{' => self.brackets.push((c, self.line, col)),
                b')' | b']' | b'}' => {
                    let want = match c {
                        b')' => b'(',
                        b']' => b'[',
                        _ => b'{',
                    };
                    match self.brackets.pop().map(|b| b.0) {
                        Some(open) if open == want => {}
                        Some(open) => {
                            return Err(self.error(format!(
                                "closing parenthesis '{}' does not match opening parenthesis '{}'",
                                c as char, open as char
                            )))
                        }
                        None => return Err(self.error(format!("unmatched '{}'", c as char))),
                    }
                }
                _ => {}
            }
        }
        self.pos += len;
        self.push(TokenKind::Op, start, self.line, col);
        Ok(())
    }
}

fn is_ident_start(c: u8) -> bool {
    c == b'_' || c.is_ascii_alphabetic()
}

fn is_prefix_char(c: u8) -> bool {
    matches!(c, b'r' | b'R' | b'b' | b'B' | b'u' | b'U' | b'f' | b'F')
}

fn valid_prefix(p: &str) -> bool {
    let lower = p.to_ascii_lowercase();
    matches!(
        lower.as_str(),
        "r" | "b" | "u" | "f" | "br" | "rb" | "fr" | "rf"
    )
}

/// Split a string token into (prefix, body start, body end) byte offsets
/// relative to the token's start.
pub fn string_parts(text: &str) -> (String, usize, usize) {
    let prefix_len = text
        .bytes()
        .take_while(|b| *b != b'"' && *b != b'\'')
        .count();
    let rest = &text[prefix_len..];
    let q = if rest.starts_with("\"\"\"") || rest.starts_with("'''") {
        3
    } else {
        1
    };
    (
        text[..prefix_len].to_ascii_lowercase(),
        prefix_len + q,
        text.len() - q,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kinds(src: &str) -> Vec<(TokenKind, String)> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .map(|t| (t.kind, t.text(src).to_string()))
            .collect()
    }

    fn significant(src: &str) -> Vec<String> {
        tokenize(src)
            .unwrap()
            .into_iter()
            .filter(|t| t.kind.is_significant())
            .map(|t| t.text(src).to_string())
            .collect()
    }

    #[test]
    fn layout_tokens_for_simple_function() {
        let k: Vec<TokenKind> = kinds("def f(x):\n    return x").into_iter().map(|t| t.0).collect();
        use TokenKind::*;
        assert_eq!(
            k,
            vec![Name, Name, Op, Name, Op, Op, Newline, Indent, Name, Name, Newline, Dedent, EndMarker]
        );
    }

    #[test]
    fn operators_use_longest_match() {
        assert_eq!(
            significant("a **= b // c ... -> := != x"),
            vec!["a", "**=", "b", "//", "c", "...", "->", ":=", "!=", "x"]
        );
    }

    #[test]
    fn numbers() {
        assert_eq!(
            significant("0x1F 1_000 1e-3 3j .5 1.5E+10 0b1_0 7."),
            vec!["0x1F", "1_000", "1e-3", "3j", ".5", "1.5E+10", "0b1_0", "7."]
        );
    }

    #[test]
    fn prefixed_and_triple_strings() {
        let src = "a = rb'x' f\"{y}\" '''t\n''' u\"\"";
        assert_eq!(
            significant(src),
            vec!["a", "=", "rb'x'", "f\"{y}\"", "'''t\n'''", "u\"\""]
        );
    }

    #[test]
    fn comments_and_blank_lines_are_dropped() {
        let a = significant("x = 1  # c\n\n# only comment\n   \ny = 2\n");
        assert_eq!(a, vec!["x", "=", "1", "y", "=", "2"]);
    }

    #[test]
    fn newlines_inside_brackets_are_ignored() {
        let k = kinds("f(a,\n  b)\n");
        assert_eq!(k.iter().filter(|t| t.0 == TokenKind::Newline).count(), 1);
    }

    #[test]
    fn bad_dedent_is_an_error() {
        let err = tokenize("if x:\n    a\n  b\n").unwrap_err();
        assert!(err.message.contains("unindent"));
        assert_eq!(err.line, 3);
    }

    #[test]
    fn unterminated_string_is_an_error() {
        assert!(tokenize("x = 'abc\n").is_err());
        assert!(tokenize("x = '''abc\n").is_err());
    }

    #[test]
    fn unbalanced_brackets_are_errors() {
        assert!(tokenize("f(a\n").is_err());
        assert!(tokenize("a)\n").is_err());
        assert!(tokenize("(a]\n").is_err());
    }

    #[test]
    fn string_parts_strip_prefix_and_quotes() {
        assert_eq!(string_parts("rf'''ab'''"), ("rf".to_string(), 5, 7));
        assert_eq!(string_parts("\"x\""), (String::new(), 1, 2));
    }
}
