//! Recursive-descent parser for the polynomial text format.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary ('*' unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' integer)?
//! atom   := integer | var | '(' expr ')'
//! var    := ('x' | 'y') digits?        bare `x` means `x1`
//! ```

use num_bigint::BigInt;

use super::MultiPoly;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Int(BigInt),
    Var(usize),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn lex(s: &str) -> Result<Vec<Tok>> {
    let chars: Vec<char> = s.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                out.push(Tok::Plus);
                i += 1
            }
            '-' | '\u{2212}' => {
                out.push(Tok::Minus);
                i += 1
            }
            '*' => {
                out.push(Tok::Star);
                i += 1
            }
            '^' => {
                out.push(Tok::Caret);
                i += 1
            }
            '(' => {
                out.push(Tok::LParen);
                i += 1
            }
            ')' => {
                out.push(Tok::RParen);
                i += 1
            }
            '0'..='9' => {
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let digits: String = chars[start..i].iter().collect();
                out.push(Tok::Int(digits.parse().map_err(|_| Error::Parse(format!("bad integer {digits}")))?));
            }
            'x' | 'y' => {
                i += 1;
                let start = i;
                while i < chars.len() && chars[i].is_ascii_digit() {
                    i += 1;
                }
                let idx = if start == i {
                    1
                } else {
                    let digits: String = chars[start..i].iter().collect();
                    digits.parse::<usize>().map_err(|_| Error::Parse(format!("bad variable index {digits}")))?
                };
                if idx == 0 {
                    return Err(Error::Parse("variable indices start at 1".into()));
                }
                out.push(Tok::Var(idx));
            }
            other => return Err(Error::Parse(format!("unexpected character {other:?} at offset {i}"))),
        }
    }
    Ok(out)
}

/// Expression tree; arity is only known once the whole input is read.
enum Node {
    Int(BigInt),
    Var(usize),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Neg(Box<Node>),
    Pow(Box<Node>, u32),
}

struct Parser {
    toks: Vec<Tok>,
    pos: usize,
    max_var: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        self.pos += 1;
        t
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        while self.peek() == Some(&Tok::Star) {
            self.pos += 1;
            lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Node> {
        if self.peek() == Some(&Tok::Minus) {
            self.pos += 1;
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            match self.next() {
                Some(Tok::Int(k)) => {
                    let k: u32 = k.try_into().map_err(|_| Error::Parse("exponent too large".into()))?;
                    return Ok(Node::Pow(Box::new(base), k));
                }
                other => return Err(Error::Parse(format!("expected integer exponent, found {other:?}"))),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Int(v)) => Ok(Node::Int(v)),
            Some(Tok::Var(i)) => {
                self.max_var = self.max_var.max(i);
                Ok(Node::Var(i - 1))
            }
            Some(Tok::LParen) => {
                let e = self.expr()?;
                match self.next() {
                    Some(Tok::RParen) => Ok(e),
                    other => Err(Error::Parse(format!("expected ')', found {other:?}"))),
                }
            }
            other => Err(Error::Parse(format!("unexpected token {other:?}"))),
        }
    }
}

fn build(node: &Node, n: usize) -> MultiPoly {
    match node {
        Node::Int(v) => MultiPoly::constant(n, v.clone()),
        Node::Var(i) => MultiPoly::var(n, *i),
        Node::Add(a, b) => build(a, n).add(&build(b, n)).expect("same arity"),
        Node::Sub(a, b) => build(a, n).sub(&build(b, n)).expect("same arity"),
        Node::Mul(a, b) => build(a, n).mul(&build(b, n)).expect("same arity"),
        Node::Neg(a) => build(a, n).neg(),
        Node::Pow(a, k) => build(a, n).pow(*k),
    }
}

fn parse_tree(s: &str) -> Result<(Node, usize)> {
    let toks = lex(s)?;
    if toks.is_empty() {
        return Err(Error::Parse("empty polynomial".into()));
    }
    let mut p = Parser { toks, pos: 0, max_var: 0 };
    let node = p.expr()?;
    if p.pos != p.toks.len() {
        return Err(Error::Parse(format!("trailing input at token {}", p.pos)));
    }
    Ok((node, p.max_var))
}

/// Parse with arity equal to the largest variable index that appears.
pub fn parse_poly(s: &str) -> Result<MultiPoly> {
    let (node, n) = parse_tree(s)?;
    Ok(build(&node, n))
}

/// Parse into a polynomial ring with exactly `nvars` variables.
pub fn parse_poly_with_nvars(s: &str, nvars: usize) -> Result<MultiPoly> {
    let (node, n) = parse_tree(s)?;
    if n > nvars {
        return Err(Error::ArityMismatch { expected: nvars, got: n });
    }
    Ok(build(&node, nvars))
}
