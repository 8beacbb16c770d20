//! Tiny arithmetic-expression interpreter for problem configs.
//!
//! Exponent fields, initial data and scalar structure functions can be given
//! as closed-form strings over named variables (`t`, `x1`..`x3`, and for
//! structure functions `s`, `xi`). Supported syntax: `+ - * / ^`, parentheses,
//! numeric literals, the constants `pi` and `e`, and the functions
//! `sin`, `cos`, `exp`, `min`, `max`.

use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    Comma,
}

fn lex(src: &str) -> Result<Vec<Tok>> {
    let mut toks = Vec::new();
    let bytes: Vec<char> = src.chars().collect();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i];
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => {
                toks.push(Tok::Plus);
                i += 1;
            }
            '-' => {
                toks.push(Tok::Minus);
                i += 1;
            }
            '*' => {
                toks.push(Tok::Star);
                i += 1;
            }
            '/' => {
                toks.push(Tok::Slash);
                i += 1;
            }
            '^' => {
                toks.push(Tok::Caret);
                i += 1;
            }
            '(' => {
                toks.push(Tok::LParen);
                i += 1;
            }
            ')' => {
                toks.push(Tok::RParen);
                i += 1;
            }
            ',' => {
                toks.push(Tok::Comma);
                i += 1;
            }
            '0'..='9' | '.' => {
                let start = i;
                while i < bytes.len()
                    && (bytes[i].is_ascii_digit()
                        || bytes[i] == '.'
                        || bytes[i] == 'e'
                        || bytes[i] == 'E'
                        || ((bytes[i] == '+' || bytes[i] == '-')
                            && i > start
                            && (bytes[i - 1] == 'e' || bytes[i - 1] == 'E')))
                {
                    i += 1;
                }
                let text: String = bytes[start..i].iter().collect();
                let v = text
                    .parse::<f64>()
                    .map_err(|_| Error::Expression(format!("bad number literal `{text}`")))?;
                toks.push(Tok::Num(v));
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == '_') {
                    i += 1;
                }
                toks.push(Tok::Ident(bytes[start..i].iter().collect()));
            }
            other => {
                return Err(Error::Expression(format!("unexpected character `{other}`")));
            }
        }
    }
    Ok(toks)
}

#[derive(Clone, Copy, Debug)]
enum Fn1 {
    Sin,
    Cos,
    Exp,
}

#[derive(Clone, Copy, Debug)]
enum Fn2 {
    Min,
    Max,
}

#[derive(Clone, Debug)]
enum Node {
    Num(f64),
    Var(usize),
    Neg(Box<Node>),
    Add(Box<Node>, Box<Node>),
    Sub(Box<Node>, Box<Node>),
    Mul(Box<Node>, Box<Node>),
    Div(Box<Node>, Box<Node>),
    Pow(Box<Node>, Box<Node>),
    Call1(Fn1, Box<Node>),
    Call2(Fn2, Box<Node>, Box<Node>),
}

/// A parsed expression over a fixed, ordered variable list.
#[derive(Clone, Debug)]
pub struct Expr {
    root: Node,
    pub vars: Vec<String>,
    pub source: String,
}

struct Parser<'a> {
    toks: &'a [Tok],
    pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, t: Tok) -> Result<()> {
        match self.next() {
            Some(got) if got == t => Ok(()),
            got => Err(Error::Expression(format!("expected {t:?}, got {got:?}"))),
        }
    }

    fn expr(&mut self) -> Result<Node> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.next();
                    lhs = Node::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.next();
                    lhs = Node::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Node> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.next();
                    lhs = Node::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.next();
                    lhs = Node::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Node> {
        if let Some(Tok::Minus) = self.peek() {
            self.next();
            return Ok(Node::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Node> {
        let base = self.atom()?;
        if let Some(Tok::Caret) = self.peek() {
            self.next();
            // right-associative, binds tighter than unary minus on the left
            let exp = self.unary()?;
            return Ok(Node::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Node> {
        match self.next() {
            Some(Tok::Num(v)) => Ok(Node::Num(v)),
            Some(Tok::LParen) => {
                let inner = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(inner)
            }
            Some(Tok::Ident(name)) => {
                if let Some(Tok::LParen) = self.peek() {
                    self.next();
                    let first = self.expr()?;
                    match name.as_str() {
                        "sin" | "cos" | "exp" => {
                            self.expect(Tok::RParen)?;
                            let f = match name.as_str() {
                                "sin" => Fn1::Sin,
                                "cos" => Fn1::Cos,
                                _ => Fn1::Exp,
                            };
                            Ok(Node::Call1(f, Box::new(first)))
                        }
                        "min" | "max" => {
                            self.expect(Tok::Comma)?;
                            let second = self.expr()?;
                            self.expect(Tok::RParen)?;
                            let f = if name == "min" { Fn2::Min } else { Fn2::Max };
                            Ok(Node::Call2(f, Box::new(first), Box::new(second)))
                        }
                        other => Err(Error::Expression(format!("unknown function `{other}`"))),
                    }
                } else {
                    match name.as_str() {
                        "pi" => Ok(Node::Num(std::f64::consts::PI)),
                        "e" => Ok(Node::Num(std::f64::consts::E)),
                        _ => match self.vars.iter().position(|v| *v == name) {
                            Some(idx) => Ok(Node::Var(idx)),
                            None => Err(Error::Expression(format!(
                                "unknown variable `{name}` (expected one of {:?})",
                                self.vars
                            ))),
                        },
                    }
                }
            }
            got => Err(Error::Expression(format!("unexpected token {got:?}"))),
        }
    }
}

impl Expr {
    /// Parse `src` against the ordered variable list `vars`.
    pub fn parse(src: &str, vars: &[&str]) -> Result<Expr> {
        let toks = lex(src)?;
        let vars: Vec<String> = vars.iter().map(|s| s.to_string()).collect();
        let mut p = Parser {
            toks: &toks,
            pos: 0,
            vars: &vars,
        };
        let root = p.expr()?;
        if p.pos != toks.len() {
            return Err(Error::Expression(format!(
                "trailing input after expression in `{src}`"
            )));
        }
        Ok(Expr {
            root,
            vars,
            source: src.to_string(),
        })
    }

    /// Evaluate with `args[i]` bound to the i-th declared variable.
    pub fn eval(&self, args: &[f64]) -> f64 {
        fn go(n: &Node, args: &[f64]) -> f64 {
            match n {
                Node::Num(v) => *v,
                Node::Var(i) => args.get(*i).copied().unwrap_or(0.0),
                Node::Neg(a) => -go(a, args),
                Node::Add(a, b) => go(a, args) + go(b, args),
                Node::Sub(a, b) => go(a, args) - go(b, args),
                Node::Mul(a, b) => go(a, args) * go(b, args),
                Node::Div(a, b) => go(a, args) / go(b, args),
                Node::Pow(a, b) => go(a, args).powf(go(b, args)),
                Node::Call1(f, a) => {
                    let x = go(a, args);
                    match f {
                        Fn1::Sin => x.sin(),
                        Fn1::Cos => x.cos(),
                        Fn1::Exp => x.exp(),
                    }
                }
                Node::Call2(f, a, b) => {
                    let x = go(a, args);
                    let y = go(b, args);
                    match f {
                        Fn2::Min => x.min(y),
                        Fn2::Max => x.max(y),
                    }
                }
            }
        }
        go(&self.root, args)
    }
}

/// Variable list for space-time scalar fields: `t, x1, x2, x3`.
pub const FIELD_VARS: [&str; 4] = ["t", "x1", "x2", "x3"];
/// Variable list for scalar structure functions: adds the solution value `s`
/// and the gradient magnitude `xi`.
pub const STRUCTURE_VARS: [&str; 6] = ["t", "x1", "x2", "x3", "s", "xi"];

#[cfg(test)]
mod tests {
    use super::*;

    fn field(src: &str) -> Expr {
        Expr::parse(src, &FIELD_VARS).unwrap()
    }

    #[test]
    fn arithmetic_and_precedence() {
        let e = field("2 + 3 * x1 ^ 2");
        assert_eq!(e.eval(&[0.0, 2.0, 0.0, 0.0]), 14.0);
        let e = field("-x1^2");
        assert_eq!(e.eval(&[0.0, 3.0, 0.0, 0.0]), -9.0);
        let e = field("(1 + 1) ^ (2 ^ 2)");
        assert_eq!(e.eval(&[0.0; 4]), 16.0);
    }

    #[test]
    fn functions_and_constants() {
        let e = field("sin(pi * x1) + cos(0) + exp(0)");
        let v = e.eval(&[0.0, 0.5, 0.0, 0.0]);
        assert!((v - 3.0).abs() < 1e-14);
        let e = field("min(t, 2) + max(x1, 3)");
        assert_eq!(e.eval(&[5.0, 1.0, 0.0, 0.0]), 5.0);
    }

    #[test]
    fn rejects_unknown_symbols() {
        assert!(Expr::parse("y + 1", &FIELD_VARS).is_err());
        assert!(Expr::parse("foo(1)", &FIELD_VARS).is_err());
        assert!(Expr::parse("1 +", &FIELD_VARS).is_err());
        assert!(Expr::parse("(1", &FIELD_VARS).is_err());
    }

    #[test]
    fn structure_vars_cover_state_and_gradient() {
        let e = Expr::parse("0.5 * s ^ 2 + xi", &STRUCTURE_VARS).unwrap();
        assert_eq!(e.eval(&[0.0, 0.0, 0.0, 0.0, 3.0, 4.0]), 8.5);
    }

    #[test]
    fn scientific_literals() {
        let e = field("1e-3 + 2.5E2");
        assert!((e.eval(&[0.0; 4]) - 250.001).abs() < 1e-12);
    }
}
