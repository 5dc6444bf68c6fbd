//! Expression trees for profile functions.
//!
//! Grammar (one free variable `x`, named parameters bound at parse time):
//!
//! ```text
//! expr   := term  (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' uint)?
//! atom   := number | ident | ident '(' expr ')' | '(' expr ')'
//! ```
//!
//! Functions: `sin`, `cos`, `exp`, `tanh`, `sqrt`. `abs` is rejected because
//! it is not twice differentiable. Exponents are nonnegative integer literals.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("syntax error at offset {offset}: {message}")]
    Syntax { offset: usize, message: String },
    #[error("unknown identifier `{name}` at offset {offset}")]
    UnknownIdentifier { offset: usize, name: String },
    #[error("`{name}` at offset {offset} is not twice differentiable")]
    NotC2 { offset: usize, name: String },
    #[error("exponent at offset {offset} must be a nonnegative integer literal")]
    BadExponent { offset: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Func {
    Sin,
    Cos,
    Exp,
    Tanh,
    Sqrt,
}

impl Func {
    fn apply(self, v: f64) -> f64 {
        match self {
            Func::Sin => v.sin(),
            Func::Cos => v.cos(),
            Func::Exp => v.exp(),
            Func::Tanh => v.tanh(),
            Func::Sqrt => v.sqrt(),
        }
    }

    fn name(self) -> &'static str {
        match self {
            Func::Sin => "sin",
            Func::Cos => "cos",
            Func::Exp => "exp",
            Func::Tanh => "tanh",
            Func::Sqrt => "sqrt",
        }
    }
}

/// Deterministic expression tree. Parameters are indices into the parameter
/// table held by the owning profile, so identical sources with identical
/// parameter tables produce identical trees.
#[derive(Clone, Debug, PartialEq)]
pub enum Expr {
    Num(f64),
    Var,
    Param(usize),
    Neg(Box<Expr>),
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, u32),
    Call(Func, Box<Expr>),
}

impl Expr {
    pub fn eval(&self, x: f64, params: &[f64]) -> f64 {
        match self {
            Expr::Num(v) => *v,
            Expr::Var => x,
            Expr::Param(i) => params[*i],
            Expr::Neg(e) => -e.eval(x, params),
            Expr::Add(a, b) => a.eval(x, params) + b.eval(x, params),
            Expr::Sub(a, b) => a.eval(x, params) - b.eval(x, params),
            Expr::Mul(a, b) => a.eval(x, params) * b.eval(x, params),
            Expr::Div(a, b) => a.eval(x, params) / b.eval(x, params),
            Expr::Pow(e, n) => e.eval(x, params).powi(*n as i32),
            Expr::Call(f, e) => f.apply(e.eval(x, params)),
        }
    }

    /// Symbolic derivative with respect to the free variable.
    pub fn derivative(&self) -> Expr {
        match self {
            Expr::Num(_) | Expr::Param(_) => Expr::Num(0.0),
            Expr::Var => Expr::Num(1.0),
            Expr::Neg(e) => neg(e.derivative()),
            Expr::Add(a, b) => add(a.derivative(), b.derivative()),
            Expr::Sub(a, b) => sub(a.derivative(), b.derivative()),
            Expr::Mul(a, b) => add(
                mul(a.derivative(), (**b).clone()),
                mul((**a).clone(), b.derivative()),
            ),
            Expr::Div(a, b) => div(
                sub(
                    mul(a.derivative(), (**b).clone()),
                    mul((**a).clone(), b.derivative()),
                ),
                pow((**b).clone(), 2),
            ),
            Expr::Pow(e, n) => match n {
                0 => Expr::Num(0.0),
                1 => e.derivative(),
                _ => mul(
                    mul(Expr::Num(*n as f64), pow((**e).clone(), n - 1)),
                    e.derivative(),
                ),
            },
            Expr::Call(f, e) => {
                let inner = e.derivative();
                let outer = match f {
                    Func::Sin => call(Func::Cos, (**e).clone()),
                    Func::Cos => neg(call(Func::Sin, (**e).clone())),
                    Func::Exp => call(Func::Exp, (**e).clone()),
                    Func::Tanh => sub(
                        Expr::Num(1.0),
                        pow(call(Func::Tanh, (**e).clone()), 2),
                    ),
                    Func::Sqrt => div(
                        Expr::Num(0.5),
                        call(Func::Sqrt, (**e).clone()),
                    ),
                };
                mul(outer, inner)
            }
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(v) => write!(f, "{v}"),
            Expr::Var => write!(f, "x"),
            Expr::Param(i) => write!(f, "${i}"),
            Expr::Neg(e) => write!(f, "(-{e})"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(e, n) => write!(f, "{e}^{n}"),
            Expr::Call(func, e) => write!(f, "{}({e})", func.name()),
        }
    }
}

fn is_zero(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 0.0)
}

fn is_one(e: &Expr) -> bool {
    matches!(e, Expr::Num(v) if *v == 1.0)
}

// Constructors with light constant folding; keeps second derivatives of
// nested expressions from blowing up.
fn neg(e: Expr) -> Expr {
    match e {
        Expr::Num(v) => Expr::Num(-v),
        Expr::Neg(inner) => *inner,
        other => Expr::Neg(Box::new(other)),
    }
}

fn add(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return b;
    }
    if is_zero(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x + y);
    }
    Expr::Add(Box::new(a), Box::new(b))
}

fn sub(a: Expr, b: Expr) -> Expr {
    if is_zero(&b) {
        return a;
    }
    if is_zero(&a) {
        return neg(b);
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x - y);
    }
    Expr::Sub(Box::new(a), Box::new(b))
}

fn mul(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) || is_zero(&b) {
        return Expr::Num(0.0);
    }
    if is_one(&a) {
        return b;
    }
    if is_one(&b) {
        return a;
    }
    if let (Expr::Num(x), Expr::Num(y)) = (&a, &b) {
        return Expr::Num(x * y);
    }
    Expr::Mul(Box::new(a), Box::new(b))
}

fn div(a: Expr, b: Expr) -> Expr {
    if is_zero(&a) {
        return Expr::Num(0.0);
    }
    if is_one(&b) {
        return a;
    }
    Expr::Div(Box::new(a), Box::new(b))
}

fn pow(e: Expr, n: u32) -> Expr {
    match n {
        0 => Expr::Num(1.0),
        1 => e,
        _ => Expr::Pow(Box::new(e), n),
    }
}

fn call(f: Func, e: Expr) -> Expr {
    Expr::Call(f, Box::new(e))
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

struct Lexer {
    tokens: Vec<(Token, usize)>,
    pos: usize,
    end: usize,
}

impl Lexer {
    fn new(src: &str) -> Result<Self, ParseError> {
        let bytes = src.as_bytes();
        let mut tokens = Vec::new();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            match c {
                ' ' | '\t' | '\n' | '\r' => i += 1,
                '+' => {
                    tokens.push((Token::Plus, i));
                    i += 1;
                }
                '-' => {
                    tokens.push((Token::Minus, i));
                    i += 1;
                }
                '*' => {
                    tokens.push((Token::Star, i));
                    i += 1;
                }
                '/' => {
                    tokens.push((Token::Slash, i));
                    i += 1;
                }
                '^' => {
                    tokens.push((Token::Caret, i));
                    i += 1;
                }
                '(' => {
                    tokens.push((Token::LParen, i));
                    i += 1;
                }
                ')' => {
                    tokens.push((Token::RParen, i));
                    i += 1;
                }
                '0'..='9' | '.' => {
                    let start = i;
                    while i < bytes.len()
                        && matches!(bytes[i] as char, '0'..='9' | '.' )
                    {
                        i += 1;
                    }
                    // exponent part like 1e-3
                    if i < bytes.len() && matches!(bytes[i] as char, 'e' | 'E') {
                        let mut j = i + 1;
                        if j < bytes.len() && matches!(bytes[j] as char, '+' | '-') {
                            j += 1;
                        }
                        if j < bytes.len() && (bytes[j] as char).is_ascii_digit() {
                            i = j;
                            while i < bytes.len() && (bytes[i] as char).is_ascii_digit() {
                                i += 1;
                            }
                        }
                    }
                    let text = &src[start..i];
                    let value = text.parse::<f64>().map_err(|_| ParseError::Syntax {
                        offset: start,
                        message: format!("invalid number `{text}`"),
                    })?;
                    tokens.push((Token::Num(value), start));
                }
                c if c.is_ascii_alphabetic() || c == '_' => {
                    let start = i;
                    while i < bytes.len()
                        && ((bytes[i] as char).is_ascii_alphanumeric() || bytes[i] == b'_')
                    {
                        i += 1;
                    }
                    tokens.push((Token::Ident(src[start..i].to_string()), start));
                }
                other => {
                    return Err(ParseError::Syntax {
                        offset: i,
                        message: format!("unexpected character `{other}`"),
                    })
                }
            }
        }
        Ok(Lexer {
            tokens,
            pos: 0,
            end: src.len(),
        })
    }

    fn peek(&self) -> Option<&(Token, usize)> {
        self.tokens.get(self.pos)
    }

    fn next(&mut self) -> Option<(Token, usize)> {
        let t = self.tokens.get(self.pos).cloned();
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn offset(&self) -> usize {
        self.tokens.get(self.pos).map(|(_, o)| *o).unwrap_or(self.end)
    }
}

pub struct Parser<'a> {
    lexer: Lexer,
    /// Parameter table in declaration order; identifiers resolve here.
    params: &'a [(String, f64)],
}

impl<'a> Parser<'a> {
    pub fn parse(src: &str, params: &'a [(String, f64)]) -> Result<Expr, ParseError> {
        let mut p = Parser {
            lexer: Lexer::new(src)?,
            params,
        };
        let expr = p.expr()?;
        if let Some((_, offset)) = p.lexer.peek() {
            return Err(ParseError::Syntax {
                offset: *offset,
                message: "trailing input".into(),
            });
        }
        Ok(expr)
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        while let Some((tok, _)) = self.lexer.peek() {
            match tok {
                Token::Plus => {
                    self.lexer.next();
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Token::Minus => {
                    self.lexer.next();
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.unary()?;
        while let Some((tok, _)) = self.lexer.peek() {
            match tok {
                Token::Star => {
                    self.lexer.next();
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Token::Slash => {
                    self.lexer.next();
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => break,
            }
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if let Some((Token::Minus, _)) = self.lexer.peek() {
            self.lexer.next();
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if let Some((Token::Caret, _)) = self.lexer.peek() {
            self.lexer.next();
            let offset = self.lexer.offset();
            match self.lexer.next() {
                Some((Token::Num(v), _)) => {
                    if v.fract() != 0.0 || v < 0.0 || v > u32::MAX as f64 {
                        return Err(ParseError::BadExponent { offset });
                    }
                    return Ok(Expr::Pow(Box::new(base), v as u32));
                }
                _ => return Err(ParseError::BadExponent { offset }),
            }
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        let offset = self.lexer.offset();
        match self.lexer.next() {
            Some((Token::Num(v), _)) => Ok(Expr::Num(v)),
            Some((Token::LParen, _)) => {
                let inner = self.expr()?;
                match self.lexer.next() {
                    Some((Token::RParen, _)) => Ok(inner),
                    _ => Err(ParseError::Syntax {
                        offset: self.lexer.offset(),
                        message: "expected `)`".into(),
                    }),
                }
            }
            Some((Token::Ident(name), id_offset)) => {
                if let Some((Token::LParen, _)) = self.lexer.peek() {
                    self.lexer.next();
                    let func = match name.as_str() {
                        "sin" => Func::Sin,
                        "cos" => Func::Cos,
                        "exp" => Func::Exp,
                        "tanh" => Func::Tanh,
                        "sqrt" => Func::Sqrt,
                        "abs" | "sign" | "floor" | "ceil" => {
                            return Err(ParseError::NotC2 {
                                offset: id_offset,
                                name,
                            })
                        }
                        _ => {
                            return Err(ParseError::UnknownIdentifier {
                                offset: id_offset,
                                name,
                            })
                        }
                    };
                    let arg = self.expr()?;
                    match self.lexer.next() {
                        Some((Token::RParen, _)) => Ok(Expr::Call(func, Box::new(arg))),
                        _ => Err(ParseError::Syntax {
                            offset: self.lexer.offset(),
                            message: "expected `)`".into(),
                        }),
                    }
                } else if name == "x" {
                    Ok(Expr::Var)
                } else if let Some(idx) = self.params.iter().position(|(n, _)| *n == name) {
                    Ok(Expr::Param(idx))
                } else {
                    Err(ParseError::UnknownIdentifier {
                        offset: id_offset,
                        name,
                    })
                }
            }
            _ => Err(ParseError::Syntax {
                offset,
                message: "expected expression".into(),
            }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k_param() -> Vec<(String, f64)> {
        vec![("k".to_string(), 0.001)]
    }

    #[test]
    fn parses_polynomial_and_differentiates() {
        let params = k_param();
        let e = Parser::parse("k*(2+x^2)/2", &params).unwrap();
        let vals: Vec<f64> = params.iter().map(|(_, v)| *v).collect();
        let d1 = e.derivative();
        let d2 = d1.derivative();
        for &x in &[-1.0, -0.3, 0.0, 0.7, 1.0] {
            assert!((e.eval(x, &vals) - 0.001 * (2.0 + x * x) / 2.0).abs() < 1e-18);
            assert!((d1.eval(x, &vals) - 0.001 * x).abs() < 1e-18);
            assert!((d2.eval(x, &vals) - 0.001).abs() < 1e-18);
        }
    }

    #[test]
    fn syntax_error_carries_offset() {
        let params = k_param();
        let err = Parser::parse("k*(2+sin(", &params).unwrap_err();
        match err {
            ParseError::Syntax { offset, .. } => assert_eq!(offset, 9),
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn rejects_abs() {
        let params = k_param();
        let err = Parser::parse("abs(x)", &params).unwrap_err();
        assert!(matches!(err, ParseError::NotC2 { .. }));
    }

    #[test]
    fn rejects_unknown_identifier_and_bad_exponent() {
        let params = k_param();
        assert!(matches!(
            Parser::parse("q + x", &params).unwrap_err(),
            ParseError::UnknownIdentifier { .. }
        ));
        assert!(matches!(
            Parser::parse("x^1.5", &params).unwrap_err(),
            ParseError::BadExponent { .. }
        ));
        assert!(matches!(
            Parser::parse("x^-2", &params).unwrap_err(),
            ParseError::BadExponent { .. }
        ));
    }

    #[test]
    fn parsing_is_deterministic() {
        let params = k_param();
        let a = Parser::parse("k*(2+sin(x))/2", &params).unwrap();
        let b = Parser::parse("k*(2+sin(x))/2", &params).unwrap();
        assert_eq!(a, b);
        assert_eq!(format!("{a:?}"), format!("{b:?}"));
    }
}
