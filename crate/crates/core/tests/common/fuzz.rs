//! Statement-grammar fuzzer producing syntactically valid Python modules.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const NAMES: [&str; 10] = ["x", "y", "z", "best", "pop", "data", "sigma", "f_opt", "i", "budget"];
const ATTRS: [&str; 5] = ["shape", "append", "mean", "value", "copy"];
const FUNCS: [&str; 6] = ["len", "range", "min", "max", "np.clip", "self.evaluate"];

pub struct Fuzzer {
    rng: ChaCha8Rng,
    out: String,
    indent: usize,
    in_function: bool,
    in_loop: bool,
    in_async: bool,
    next_id: usize,
}

impl Fuzzer {
    pub fn new(seed: u64) -> Self {
        Fuzzer {
            rng: ChaCha8Rng::seed_from_u64(seed),
            out: String::new(),
            indent: 0,
            in_function: false,
            in_loop: false,
            in_async: false,
            next_id: 0,
        }
    }

    /// A module of roughly `statements` top-level statements.
    pub fn module(&mut self, statements: usize) -> String {
        self.out.clear();
        self.indent = 0;
        if self.rng.gen_bool(0.5) {
            self.line("import numpy as np");
        }
        for _ in 0..statements {
            self.statement(3);
        }
        std::mem::take(&mut self.out)
    }

    fn line(&mut self, text: &str) {
        for _ in 0..self.indent {
            self.out.push_str("    ");
        }
        self.out.push_str(text);
        self.out.push('\n');
    }

    fn fresh(&mut self, prefix: &str) -> String {
        self.next_id += 1;
        format!("{prefix}{}", self.next_id)
    }

    fn name(&mut self) -> &'static str {
        NAMES.choose(&mut self.rng).unwrap()
    }

    fn block(&mut self, depth: usize) {
        self.indent += 1;
        let n = self.rng.gen_range(1..=3);
        for _ in 0..n {
            self.statement(depth.saturating_sub(1));
        }
        self.indent -= 1;
    }

    fn statement(&mut self, depth: usize) {
        let compound = depth > 0 && self.rng.gen_bool(0.35);
        if compound {
            self.compound(depth);
        } else {
            self.simple();
        }
    }

    fn simple(&mut self) {
        let choice = self.rng.gen_range(0..14);
        let text = match choice {
            0..=3 => format!("{} = {}", self.target(), self.expr(3)),
            4 => {
                let op = ["+=", "-=", "*=", "//=", "|=", "**="].choose(&mut self.rng).unwrap();
                format!("{} {op} {}", self.name(), self.expr(2))
            }
            5 => format!("{}: float = {}", self.name(), self.expr(2)),
            6 => format!("{}({})", FUNCS.choose(&mut self.rng).unwrap(), self.expr(2)),
            7 => format!("assert {}, 'check failed'", self.expr(2)),
            8 => "pass".to_string(),
            9 => format!("{}, {} = {}, {}", self.name(), self.name(), self.expr(1), self.expr(1)),
            10 if self.in_function => {
                if self.rng.gen_bool(0.3) && !self.in_async {
                    format!("yield {}", self.expr(2))
                } else {
                    format!("return {}", self.expr(2))
                }
            }
            11 if self.in_loop => ["break", "continue"].choose(&mut self.rng).unwrap().to_string(),
            12 => ["import math", "from os import path as osp", "import random, sys"]
                .choose(&mut self.rng)
                .unwrap()
                .to_string(),
            13 if self.in_async => format!("{} = await {}", self.name(), self.call(1)),
            _ => format!("{}.{}({})", self.name(), ATTRS.choose(&mut self.rng).unwrap(), self.expr(1)),
        };
        self.line(&text);
    }

    fn compound(&mut self, depth: usize) {
        match self.rng.gen_range(0..9) {
            0 | 1 => {
                let head = format!("if {}:", self.expr(2));
                self.line(&head);
                self.block(depth);
                for _ in 0..self.rng.gen_range(0..3) {
                    let head = format!("elif {}:", self.expr(2));
                    self.line(&head);
                    self.block(depth);
                }
                if self.rng.gen_bool(0.5) {
                    self.line("else:");
                    self.block(depth);
                }
            }
            2 => {
                let head = format!("for {} in {}:", self.name(), self.iterable());
                self.line(&head);
                self.loop_body(depth);
                if self.rng.gen_bool(0.2) {
                    self.line("else:");
                    self.block(depth);
                }
            }
            3 => {
                let head = format!("while {}:", self.expr(2));
                self.line(&head);
                self.loop_body(depth);
            }
            4 | 5 => self.function(depth),
            6 => {
                let name = self.fresh("Algo");
                self.line(&format!("class {name}(object):"));
                self.indent += 1;
                self.line("budget = 100");
                self.function(depth.saturating_sub(1).max(1));
                self.indent -= 1;
            }
            7 => {
                self.line("try:");
                self.block(depth);
                for _ in 0..self.rng.gen_range(1..3) {
                    let exc = ["except ValueError:", "except (KeyError, IndexError) as e:", "except Exception:"]
                        .choose(&mut self.rng)
                        .unwrap();
                    self.line(exc);
                    self.block(depth);
                }
                if self.rng.gen_bool(0.3) {
                    self.line("else:");
                    self.block(depth);
                }
                if self.rng.gen_bool(0.3) {
                    self.line("finally:");
                    self.block(depth);
                }
            }
            _ => {
                let head = format!("with open({}) as {}:", self.string(), self.name());
                self.line(&head);
                self.block(depth);
            }
        }
    }

    fn loop_body(&mut self, depth: usize) {
        let saved = self.in_loop;
        self.in_loop = true;
        self.block(depth);
        self.in_loop = saved;
    }

    fn function(&mut self, depth: usize) {
        if self.rng.gen_bool(0.2) {
            self.line("@staticmethod");
        }
        let is_async = self.rng.gen_bool(0.1);
        let name = self.fresh("step");
        let params = self.params();
        let ret = if self.rng.gen_bool(0.3) { " -> float" } else { "" };
        let kw = if is_async { "async def" } else { "def" };
        self.line(&format!("{kw} {name}({params}){ret}:"));
        let saved = (self.in_function, self.in_loop, self.in_async);
        self.in_function = true;
        self.in_loop = false;
        self.in_async = is_async;
        if self.rng.gen_bool(0.3) {
            self.indent += 1;
            self.line("\"\"\"Docstring.\"\"\"");
            self.indent -= 1;
        }
        self.block(depth);
        (self.in_function, self.in_loop, self.in_async) = saved;
    }

    fn params(&mut self) -> String {
        let mut parts: Vec<String> = Vec::new();
        let positional = self.rng.gen_range(0..4);
        for k in 0..positional {
            parts.push(match self.rng.gen_range(0..3) {
                0 => format!("p{k}"),
                1 => format!("p{k}: int"),
                _ => format!("p{k}=0.5"),
            });
            if parts.last().unwrap().ends_with("0.5") {
                // Later positional parameters need defaults too.
                for j in k + 1..positional {
                    parts.push(format!("p{j}=None"));
                }
                break;
            }
        }
        if self.rng.gen_bool(0.2) {
            parts.push("*args".into());
            if self.rng.gen_bool(0.5) {
                parts.push("key=None".into());
            }
        }
        if self.rng.gen_bool(0.2) {
            parts.push("**kwargs".into());
        }
        parts.join(", ")
    }

    fn target(&mut self) -> String {
        match self.rng.gen_range(0..5) {
            0 => format!("{}[{}]", self.name(), self.atom()),
            1 => format!("self.{}", ATTRS.choose(&mut self.rng).unwrap()),
            _ => self.name().to_string(),
        }
    }

    fn iterable(&mut self) -> String {
        match self.rng.gen_range(0..3) {
            0 => format!("range({})", self.atom()),
            1 => self.name().to_string(),
            _ => format!("enumerate({})", self.name()),
        }
    }

    fn string(&mut self) -> String {
        match self.rng.gen_range(0..4) {
            0 => "'log.txt'".into(),
            1 => "\"out.csv\"".into(),
            2 => format!("f'{{{}}}.json'", self.name()),
            _ => "r'\\d+'".into(),
        }
    }

    fn atom(&mut self) -> String {
        match self.rng.gen_range(0..6) {
            0 => self.rng.gen_range(0..100).to_string(),
            1 => format!("{:.2}", self.rng.gen_range(0.0..10.0)),
            2 => self.string(),
            3 => ["None", "True", "False"].choose(&mut self.rng).unwrap().to_string(),
            _ => self.name().to_string(),
        }
    }

    fn call(&mut self, depth: usize) -> String {
        let f = FUNCS.choose(&mut self.rng).unwrap();
        let mut args: Vec<String> = (0..self.rng.gen_range(0..3)).map(|_| self.expr(depth)).collect();
        if self.rng.gen_bool(0.2) {
            args.push(format!("axis={}", self.atom()));
        }
        format!("{f}({})", args.join(", "))
    }

    /// Operand position: composite expressions are parenthesized.
    fn operand(&mut self, depth: usize) -> String {
        let e = self.expr(depth);
        if e.contains(' ') && !e.starts_with('(') {
            format!("({e})")
        } else {
            e
        }
    }

    fn expr(&mut self, depth: usize) -> String {
        if depth == 0 {
            return self.atom();
        }
        let d = depth - 1;
        match self.rng.gen_range(0..16) {
            0 | 1 => {
                let op = ["+", "-", "*", "/", "//", "%", "**", "@", "&", "|", "<<"]
                    .choose(&mut self.rng)
                    .unwrap();
                format!("{} {op} {}", self.operand(d), self.operand(d))
            }
            2 => {
                let op = ["<", ">=", "==", "!=", "in", "not in", "is not"].choose(&mut self.rng).unwrap();
                format!("{} {op} {}", self.operand(d), self.operand(d))
            }
            3 => {
                let op = ["and", "or"].choose(&mut self.rng).unwrap();
                format!("{} {op} {}", self.operand(d), self.operand(d))
            }
            4 => format!("not {}", self.operand(d)),
            5 => format!("-{}", self.atom()),
            6 => self.call(d),
            7 => format!("{}.{}", self.name(), ATTRS.choose(&mut self.rng).unwrap()),
            8 => format!("{}[{}:{}]", self.name(), self.atom(), self.atom()),
            9 => format!("[{}, {}]", self.operand(d), self.operand(d)),
            10 => format!("{{{}: {}}}", self.string(), self.operand(d)),
            11 => {
                let v = self.name();
                let cond = if self.rng.gen_bool(0.5) {
                    format!(" if {v} > 0")
                } else {
                    String::new()
                };
                format!("[{v} * 2 for {v} in {}{cond}]", self.iterable())
            }
            12 => format!("lambda q: q + {}", self.operand(d)),
            13 => format!("({} if {} else {})", self.operand(d), self.operand(d), self.operand(d)),
            14 => format!("({} := {})", self.name(), self.operand(d)),
            _ => format!("({})", self.operand(d)),
        }
    }
}

/// `count` modules with seeds derived from `seed`.
pub fn corpus(seed: u64, count: usize, statements: usize) -> Vec<String> {
    (0..count)
        .map(|k| Fuzzer::new(seed.wrapping_mul(1_000_003).wrapping_add(k as u64)).module(statements))
        .collect()
}
