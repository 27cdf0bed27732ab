//! Arithmetic expressions over `x1..xn` with forward-mode derivatives.
//!
//! ```text
//! expr    := term (("+" | "-") term)*
//! term    := unary (("*" | "/") unary)*
//! unary   := ("-" | "+") unary | power
//! power   := atom ("^" unary)?
//! atom    := number | "x" index | "pi" | func "(" expr ")" | "(" expr ")"
//! func    := "sin" | "cos" | "exp" | "log"
//! ```
//!
//! `^` binds tighter than unary minus and is right-associative, so
//! `-x1^2` is `-(x1^2)` and `2^3^2` is `2^9`.

use std::fmt;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Log,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    /// Zero-based variable index.
    Var(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Call(Func, Box<Expr>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExprError {
    /// Byte offset into the source string.
    pub position: usize,
    pub msg: String,
}

impl fmt::Display for ExprError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at column {}", self.msg, self.position + 1)
    }
}

impl std::error::Error for ExprError {}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<(usize, Token)>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let ch = bytes[i] as char;
        if ch.is_ascii_whitespace() {
            i += 1;
        } else if ch.is_ascii_digit() || ch == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            // exponent part, only when digits follow
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value = text.parse::<f64>().map_err(|_| ExprError {
                position: start,
                msg: format!("malformed number `{text}`"),
            })?;
            out.push((start, Token::Num(value)));
        } else if ch.is_ascii_alphabetic() {
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_alphanumeric() {
                i += 1;
            }
            out.push((start, Token::Ident(src[start..i].to_string())));
        } else if "+-*/^()".contains(ch) {
            out.push((i, Token::Op(ch)));
            i += 1;
        } else {
            let ch = src[i..].chars().next().unwrap_or('?');
            return Err(ExprError {
                position: i,
                msg: format!("unexpected character `{ch}`"),
            });
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(usize, Token)>,
    pos: usize,
    end: usize,
    n: usize,
}

impl Parser {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn here(&self) -> usize {
        self.tokens.get(self.pos).map_or(self.end, |(p, _)| *p)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, ExprError> {
        Err(ExprError {
            position: self.here(),
            msg: msg.into(),
        })
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect_close(&mut self) -> Result<(), ExprError> {
        if self.eat(')') {
            Ok(())
        } else {
            self.err("expected `)`")
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            if self.eat('+') {
                lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
            } else if self.eat('-') {
                lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            if self.eat('*') {
                lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
            } else if self.eat('/') {
                lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
            } else {
                return Ok(lhs);
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.atom()?;
        if self.eat('^') {
            let exponent = self.unary()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exponent)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ExprError> {
        let start = self.here();
        match self.peek().cloned() {
            Some(Token::Num(v)) => {
                self.pos += 1;
                Ok(Expr::Const(v))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let inner = self.expr()?;
                self.expect_close()?;
                Ok(inner)
            }
            Some(Token::Ident(name)) => {
                self.pos += 1;
                let func = match name.as_str() {
                    "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
                    "sin" => Some(Func::Sin),
                    "cos" => Some(Func::Cos),
                    "exp" => Some(Func::Exp),
                    "log" => Some(Func::Log),
                    _ => None,
                };
                if let Some(func) = func {
                    if !self.eat('(') {
                        return self.err(format!("expected `(` after `{name}`"));
                    }
                    let arg = self.expr()?;
                    self.expect_close()?;
                    return Ok(Expr::Call(func, Box::new(arg)));
                }
                let index = name
                    .strip_prefix('x')
                    .filter(|d| !d.is_empty() && d.bytes().all(|b| b.is_ascii_digit()))
                    .and_then(|d| d.parse::<usize>().ok());
                match index {
                    Some(i) if i >= 1 && i <= self.n => Ok(Expr::Var(i - 1)),
                    Some(i) => Err(ExprError {
                        position: start,
                        msg: format!("variable x{i} out of range 1..={}", self.n),
                    }),
                    None => Err(ExprError {
                        position: start,
                        msg: format!("unknown identifier `{name}`"),
                    }),
                }
            }
            Some(Token::Op(c)) => self.err(format!("unexpected `{c}`")),
            None => self.err("unexpected end of expression"),
        }
    }
}

impl Expr {
    /// Parses `src` with variables `x1..=xn`.
    pub fn parse(src: &str, n: usize) -> Result<Self, ExprError> {
        let tokens = tokenize(src)?;
        let mut p = Parser {
            tokens,
            pos: 0,
            end: src.len(),
            n,
        };
        let e = p.expr()?;
        if p.pos != p.tokens.len() {
            return p.err("unexpected trailing input");
        }
        Ok(e)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expr::Const(c) => *c,
            Expr::Var(i) => x[*i],
            Expr::Neg(a) => -a.eval(x),
            Expr::Add(a, b) => a.eval(x) + b.eval(x),
            Expr::Sub(a, b) => a.eval(x) - b.eval(x),
            Expr::Mul(a, b) => a.eval(x) * b.eval(x),
            Expr::Div(a, b) => a.eval(x) / b.eval(x),
            Expr::Pow(a, b) => pow(a.eval(x), b.eval(x)),
            Expr::Call(f, a) => apply(*f, a.eval(x)).0,
        }
    }

    fn depends_on_vars(&self) -> bool {
        match self {
            Expr::Const(_) => false,
            Expr::Var(_) => true,
            Expr::Neg(a) | Expr::Call(_, a) => a.depends_on_vars(),
            Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) | Expr::Pow(a, b) => {
                a.depends_on_vars() || b.depends_on_vars()
            }
        }
    }

    /// Value and gradient at `x`; `grad` is overwritten.
    pub fn eval_grad(&self, x: &[f64], grad: &mut [f64]) -> f64 {
        let d = self.dual(x);
        grad.iter_mut().for_each(|g| *g = 0.0);
        for (i, v) in d.d {
            grad[i] += v;
        }
        d.v
    }

    fn dual(&self, x: &[f64]) -> Dual {
        match self {
            Expr::Const(c) => Dual { v: *c, d: Vec::new() },
            Expr::Var(i) => Dual {
                v: x[*i],
                d: vec![(*i, 1.0)],
            },
            Expr::Neg(a) => {
                let p = a.dual(x);
                let v = -p.v;
                p.chain(-1.0, v)
            }
            Expr::Add(a, b) => {
                let (p, q) = (a.dual(x), b.dual(x));
                let v = p.v + q.v;
                Dual::combine(p, 1.0, q, 1.0, v)
            }
            Expr::Sub(a, b) => {
                let (p, q) = (a.dual(x), b.dual(x));
                let v = p.v - q.v;
                Dual::combine(p, 1.0, q, -1.0, v)
            }
            Expr::Mul(a, b) => {
                let (p, q) = (a.dual(x), b.dual(x));
                let (pv, qv) = (p.v, q.v);
                Dual::combine(p, qv, q, pv, pv * qv)
            }
            Expr::Div(a, b) => {
                let (p, q) = (a.dual(x), b.dual(x));
                let (pv, qv) = (p.v, q.v);
                Dual::combine(p, 1.0 / qv, q, -pv / (qv * qv), pv / qv)
            }
            Expr::Pow(a, b) => {
                let p = a.dual(x);
                if !b.depends_on_vars() {
                    let e = b.eval(x);
                    let slope = if e == 0.0 { 0.0 } else { e * pow(p.v, e - 1.0) };
                    let v = pow(p.v, e);
                    return p.chain(slope, v);
                }
                let q = b.dual(x);
                let (pv, qv) = (p.v, q.v);
                let v = pow(pv, qv);
                Dual::combine(p, qv * pow(pv, qv - 1.0), q, v * pv.ln(), v)
            }
            Expr::Call(f, a) => {
                let p = a.dual(x);
                let (v, slope) = apply(*f, p.v);
                p.chain(slope, v)
            }
        }
    }
}

fn pow(a: f64, b: f64) -> f64 {
    if b == 2.0 {
        a * a
    } else {
        a.powf(b)
    }
}

/// Value and derivative.
fn apply(f: Func, v: f64) -> (f64, f64) {
    match f {
        Func::Sin => (v.sin(), v.cos()),
        Func::Cos => (v.cos(), -v.sin()),
        Func::Exp => (v.exp(), v.exp()),
        Func::Log => (v.ln(), 1.0 / v),
    }
}

/// Value with a sparse gradient.
struct Dual {
    v: f64,
    d: Vec<(usize, f64)>,
}

impl Dual {
    fn chain(mut self, slope: f64, value: f64) -> Self {
        self.d.iter_mut().for_each(|(_, g)| *g *= slope);
        self.v = value;
        self
    }

    fn combine(p: Dual, wp: f64, q: Dual, wq: f64, value: f64) -> Dual {
        let mut d = Vec::with_capacity(p.d.len() + q.d.len());
        d.extend(p.d.into_iter().map(|(i, g)| (i, g * wp)));
        d.extend(q.d.into_iter().map(|(i, g)| (i, g * wq)));
        Dual { v: value, d }
    }
}
