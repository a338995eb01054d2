//! Tiny expression grammar for coefficient declarations in config files:
//! numbers, `t`, `x`, `+ - * / ^`, `exp`, `tanh`, parentheses.

use std::fmt;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error, PartialEq)]
pub enum ParseError {
    #[error("unexpected character '{0}' at byte {1}")]
    UnexpectedChar(char, usize),
    #[error("unexpected end of expression")]
    UnexpectedEnd,
    #[error("unknown function '{0}'")]
    UnknownFunction(String),
    #[error("malformed number '{0}'")]
    BadNumber(String),
    #[error("trailing input at byte {0}")]
    TrailingInput(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Const(f64),
    T,
    X,
    Add(Box<Expr>, Box<Expr>),
    Sub(Box<Expr>, Box<Expr>),
    Mul(Box<Expr>, Box<Expr>),
    Div(Box<Expr>, Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Neg(Box<Expr>),
    Exp(Box<Expr>),
    Tanh(Box<Expr>),
}

impl Expr {
    pub fn eval<S: Scalar>(&self, t: S, x: S) -> S {
        match self {
            Expr::Const(c) => S::of(*c),
            Expr::T => t,
            Expr::X => x,
            Expr::Add(a, b) => a.eval(t, x) + b.eval(t, x),
            Expr::Sub(a, b) => a.eval(t, x) - b.eval(t, x),
            Expr::Mul(a, b) => a.eval(t, x) * b.eval(t, x),
            Expr::Div(a, b) => a.eval(t, x) / b.eval(t, x),
            Expr::Pow(a, b) => a.eval(t, x).powf(b.eval(t, x)),
            Expr::Neg(a) => -a.eval(t, x),
            Expr::Exp(a) => a.eval(t, x).exp(),
            Expr::Tanh(a) => a.eval(t, x).tanh(),
        }
    }

    /// Constant-fold; subexpressions without `t`/`x` collapse to literals.
    pub fn fold(self) -> Expr {
        use Expr::*;
        let bin = |op: fn(Box<Expr>, Box<Expr>) -> Expr,
                   f: fn(f64, f64) -> f64,
                   a: Expr,
                   b: Expr| {
            let (a, b) = (a.fold(), b.fold());
            if let (Const(u), Const(v)) = (&a, &b) {
                Const(f(*u, *v))
            } else {
                op(Box::new(a), Box::new(b))
            }
        };
        match self {
            Add(a, b) => bin(Add, |u, v| u + v, *a, *b),
            Sub(a, b) => bin(Sub, |u, v| u - v, *a, *b),
            Mul(a, b) => bin(Mul, |u, v| u * v, *a, *b),
            Div(a, b) => bin(Div, |u, v| u / v, *a, *b),
            Pow(a, b) => bin(Pow, f64::powf, *a, *b),
            Neg(a) => match a.fold() {
                Const(u) => Const(-u),
                other => Neg(Box::new(other)),
            },
            Exp(a) => match a.fold() {
                Const(u) => Const(u.exp()),
                other => Exp(Box::new(other)),
            },
            Tanh(a) => match a.fold() {
                Const(u) => Const(u.tanh()),
                other => Tanh(Box::new(other)),
            },
            leaf => leaf,
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Const(c) => write!(f, "{c}"),
            Expr::T => write!(f, "t"),
            Expr::X => write!(f, "x"),
            Expr::Add(a, b) => write!(f, "({a} + {b})"),
            Expr::Sub(a, b) => write!(f, "({a} - {b})"),
            Expr::Mul(a, b) => write!(f, "({a} * {b})"),
            Expr::Div(a, b) => write!(f, "({a} / {b})"),
            Expr::Pow(a, b) => write!(f, "({a} ^ {b})"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Exp(a) => write!(f, "exp({a})"),
            Expr::Tanh(a) => write!(f, "tanh({a})"),
        }
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(b'-') => {
                    self.pos += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut lhs = self.factor()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.factor()?));
                }
                Some(b'/') => {
                    self.pos += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.factor()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    // power binds tighter than a leading unary minus: -x^2 = -(x^2)
    fn factor(&mut self) -> Result<Expr, ParseError> {
        if self.peek() == Some(b'-') {
            self.pos += 1;
            return Ok(Expr::Neg(Box::new(self.factor()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.primary()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            // right-associative; the exponent may itself be signed
            let exp = self.factor()?;
            return Ok(Expr::Pow(Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            None => Err(ParseError::UnexpectedEnd),
            Some(b'(') => {
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ParseError::UnexpectedEnd);
                }
                self.pos += 1;
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(c) => Err(ParseError::UnexpectedChar(c as char, self.pos)),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() {
            let c = self.src[self.pos];
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E')
                && self.pos + 1 < self.src.len()
                && (self.src[self.pos + 1].is_ascii_digit()
                    || self.src[self.pos + 1] == b'+'
                    || self.src[self.pos + 1] == b'-')
            {
                self.pos += 2;
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::BadNumber(text.to_string()))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_alphabetic() {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii");
        match name {
            "t" => Ok(Expr::T),
            "x" => Ok(Expr::X),
            "exp" | "tanh" => {
                if self.peek() != Some(b'(') {
                    return Err(ParseError::UnexpectedEnd);
                }
                self.pos += 1;
                let inner = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(ParseError::UnexpectedEnd);
                }
                self.pos += 1;
                Ok(match name {
                    "exp" => Expr::Exp(Box::new(inner)),
                    _ => Expr::Tanh(Box::new(inner)),
                })
            }
            other => Err(ParseError::UnknownFunction(other.to_string())),
        }
    }
}

pub fn parse(src: &str) -> Result<Expr, ParseError> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(ParseError::TrailingInput(p.pos));
    }
    Ok(e.fold())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_and_evaluates() {
        let e = parse("1 + 0.1*t*x").unwrap();
        assert_relative_eq!(e.eval(2.0f64, 3.0), 1.6, max_relative = 1e-15);

        let e = parse("exp(-x^2/2) * tanh(t)").unwrap();
        assert_relative_eq!(
            e.eval(1.0f64, 1.5),
            (-1.5f64 * 1.5 / 2.0).exp() * 1.0f64.tanh(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn folds_constant_subtrees() {
        assert_eq!(parse("2^3 + 1").unwrap(), Expr::Const(9.0));
        assert!(matches!(parse("1 + x").unwrap(), Expr::Add(_, _)));
    }

    #[test]
    fn precedence_and_unary_minus() {
        assert_eq!(parse("2 + 3 * 4").unwrap(), Expr::Const(14.0));
        assert_eq!(parse("-2^2").unwrap(), Expr::Const(-4.0));
        assert_eq!(parse("(1+1)^3").unwrap(), Expr::Const(8.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("sin(x)").is_err());
        assert!(parse("1 +").is_err());
        assert!(parse("(1").is_err());
        assert!(parse("1 2").is_err());
        assert!(parse("x$").is_err());
    }
}
