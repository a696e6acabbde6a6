//! Closed expression grammar for exterior data and initial guesses.
//!
//! ```text
//! expr  := term (('+' | '-') term)*
//! term  := unary (('*' | '/') unary)*
//! unary := '-' unary | power
//! power := atom ('^' unary)?
//! atom  := number | 'x' | 'y' | func '(' expr (',' expr)* ')' | '(' expr ')'
//! func  := 'abs' | 'min' | 'max'
//! ```
//!
//! `^` binds tighter than unary minus and associates to the right, so
//! `-x^2` is `-(x^2)` and `2^3^2` is `2^9`.

use std::fmt;
use std::str::FromStr;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
enum Node {
    Num(f64),
    X,
    Y,
    Neg(Box<Node>),
    Bin(Op, Box<Node>, Box<Node>),
    Abs(Box<Node>),
    Min(Vec<Node>),
    Max(Vec<Node>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

/// A parsed expression in the coordinates `x` and `y`.
#[derive(Debug, Clone, PartialEq)]
pub struct Expr {
    source: String,
    root: Node,
}

impl Expr {
    pub fn parse(src: &str) -> Result<Self, CliError> {
        let mut p = Parser { src, pos: 0 };
        let root = p.expr()?;
        p.skip_ws();
        if p.pos < src.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(Self { source: src.to_string(), root })
    }

    pub fn eval(&self, x: [f64; 2]) -> f64 {
        eval(&self.root, x)
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

impl FromStr for Expr {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Expr::parse(s)
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.source)
    }
}

fn eval(n: &Node, x: [f64; 2]) -> f64 {
    match n {
        Node::Num(v) => *v,
        Node::X => x[0],
        Node::Y => x[1],
        Node::Neg(a) => -eval(a, x),
        Node::Abs(a) => eval(a, x).abs(),
        Node::Min(args) => args.iter().map(|a| eval(a, x)).fold(f64::INFINITY, f64::min),
        Node::Max(args) => args.iter().map(|a| eval(a, x)).fold(f64::NEG_INFINITY, f64::max),
        Node::Bin(op, a, b) => {
            let (a, b) = (eval(a, x), eval(b, x));
            match op {
                Op::Add => a + b,
                Op::Sub => a - b,
                Op::Mul => a * b,
                Op::Div => a / b,
                Op::Pow => a.powf(b),
            }
        }
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> CliError {
        CliError::Schema(format!("expression `{}`: {msg} at offset {}", self.src, self.pos))
    }

    fn skip_ws(&mut self) {
        while let Some(c) = self.peek() {
            if !c.is_whitespace() {
                break;
            }
            self.pos += c.len_utf8();
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Node, CliError> {
        let mut lhs = self.term()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.term()?));
        }
    }

    fn term(&mut self) -> Result<Node, CliError> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Node::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Node, CliError> {
        if self.eat('-') {
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node, CliError> {
        let base = self.atom()?;
        if self.eat('^') {
            return Ok(Node::Bin(Op::Pow, Box::new(base), Box::new(self.unary()?)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node, CliError> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let c = rest.chars().next().ok_or_else(|| self.error("unexpected end of input"))?;
        if c == '(' {
            self.pos += 1;
            let inner = self.expr()?;
            if !self.eat(')') {
                return Err(self.error("expected `)`"));
            }
            return Ok(inner);
        }
        if c.is_ascii_digit() || c == '.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() {
            let len = rest.find(|ch: char| !ch.is_ascii_alphanumeric() && ch != '_').unwrap_or(rest.len());
            let name = &rest[..len];
            self.pos += len;
            return match name {
                "x" => Ok(Node::X),
                "y" => Ok(Node::Y),
                "abs" | "min" | "max" => {
                    let args = self.args()?;
                    match (name, args.len()) {
                        ("abs", 1) => Ok(Node::Abs(Box::new(args.into_iter().next().unwrap()))),
                        ("abs", n) => Err(self.error(&format!("abs takes one argument, got {n}"))),
                        (_, n) if n < 2 => Err(self.error(&format!("{name} takes at least two arguments, got {n}"))),
                        ("min", _) => Ok(Node::Min(args)),
                        _ => Ok(Node::Max(args)),
                    }
                }
                _ => {
                    self.pos -= len;
                    Err(self.error(&format!("unknown name `{name}`")))
                }
            };
        }
        Err(self.error(&format!("unexpected `{c}`")))
    }

    fn args(&mut self) -> Result<Vec<Node>, CliError> {
        if !self.eat('(') {
            return Err(self.error("expected `(`"));
        }
        let mut args = vec![self.expr()?];
        while self.eat(',') {
            args.push(self.expr()?);
        }
        if !self.eat(')') {
            return Err(self.error("expected `)` or `,`"));
        }
        Ok(args)
    }

    fn number(&mut self) -> Result<Node, CliError> {
        let rest = &self.src[self.pos..];
        let bytes = rest.as_bytes();
        let mut end = 0;
        while end < bytes.len() && (bytes[end].is_ascii_digit() || bytes[end] == b'.') {
            end += 1;
        }
        if end < bytes.len() && (bytes[end] == b'e' || bytes[end] == b'E') {
            let mut k = end + 1;
            if k < bytes.len() && (bytes[k] == b'+' || bytes[k] == b'-') {
                k += 1;
            }
            if k < bytes.len() && bytes[k].is_ascii_digit() {
                while k < bytes.len() && bytes[k].is_ascii_digit() {
                    k += 1;
                }
                end = k;
            }
        }
        let v: f64 = rest[..end].parse().map_err(|_| self.error(&format!("bad number `{}`", &rest[..end])))?;
        self.pos += end;
        Ok(Node::Num(v))
    }
}
