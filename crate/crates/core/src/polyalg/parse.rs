//! Infix syntax for polynomials and linear expressions.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*        division by constants only
//! unary  := ('-' | '+') unary | power
//! power  := atom ('^' integer)?
//! atom   := number | name | name '[' i, j, ... ']' | '(' expr ')'
//! ```
//!
//! Numbers may be integers or decimals (read exactly). A name followed by a
//! bracketed multi-index, such as `u1[2,0]`, is a single symbol.

use num_bigint::BigInt;
use num_traits::{One, Zero};

use super::poly::{index_of, Monomial, Poly, Vars};
use crate::error::{Error, Result};
use crate::exactlin::Rational;

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Num(Rational),
    Name(String),
    Op(char),
}

fn tokenize(src: &str) -> Result<Vec<Token>> {
    let chars: Vec<char> = src.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        if c.is_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || (c == '.' && chars.get(i + 1).is_some_and(char::is_ascii_digit)) {
            let start = i;
            while i < chars.len() && (chars[i].is_ascii_digit() || chars[i] == '.') {
                i += 1;
            }
            let text: String = chars[start..i].iter().collect();
            out.push(Token::Num(parse_decimal(&text)?));
        } else if c.is_alphabetic() || c == '_' {
            let start = i;
            while i < chars.len() && (chars[i].is_alphanumeric() || chars[i] == '_') {
                i += 1;
            }
            let mut name: String = chars[start..i].iter().collect();
            if chars.get(i) == Some(&'[') {
                let close = chars[i..]
                    .iter()
                    .position(|&ch| ch == ']')
                    .ok_or_else(|| Error::parse(format!("unclosed `[` after `{name}`")))?;
                let inner: String = chars[i + 1..i + close]
                    .iter()
                    .filter(|ch| !ch.is_whitespace())
                    .collect();
                if inner.is_empty() || !inner.split(',').all(|p| !p.is_empty() && p.chars().all(|d| d.is_ascii_digit())) {
                    return Err(Error::parse(format!("bad multi-index `[{inner}]`")));
                }
                name.push('[');
                name.push_str(&inner);
                name.push(']');
                i += close + 1;
            }
            out.push(Token::Name(name));
        } else if "+-*/^()".contains(c) {
            out.push(Token::Op(c));
            i += 1;
        } else {
            return Err(Error::parse(format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

fn parse_decimal(text: &str) -> Result<Rational> {
    let bad = || Error::parse(format!("bad number `{text}`"));
    match text.split_once('.') {
        None => Ok(Rational::from_integer(text.parse::<BigInt>().map_err(|_| bad())?)),
        Some((int, frac)) => {
            if frac.contains('.') {
                return Err(bad());
            }
            let digits = format!("{int}{frac}");
            let num = digits.parse::<BigInt>().map_err(|_| bad())?;
            let den = num_traits::pow(BigInt::from(10), frac.len());
            Ok(Rational::new(num, den))
        }
    }
}

struct Parser<'a> {
    tokens: Vec<Token>,
    pos: usize,
    vars: &'a Vars,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos)
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek() == Some(&Token::Op(op)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = &acc + &self.term()?;
            } else if self.eat('-') {
                acc = &acc - &self.term()?;
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.unary()?;
        loop {
            if self.eat('*') {
                acc = &acc * &self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                let c = d
                    .as_constant()
                    .ok_or_else(|| Error::parse("division by a non-constant"))?;
                if c.is_zero() {
                    return Err(Error::parse("division by zero"));
                }
                acc = acc.scale(&c.recip());
            } else {
                return Ok(acc);
            }
        }
    }

    fn unary(&mut self) -> Result<Poly> {
        if self.eat('-') {
            Ok(-&self.unary()?)
        } else if self.eat('+') {
            self.unary()
        } else {
            self.power()
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.eat('^') {
            match self.tokens.get(self.pos).cloned() {
                Some(Token::Num(n)) if n.is_integer() && n >= Rational::zero() => {
                    self.pos += 1;
                    let e: u32 = n
                        .to_integer()
                        .try_into()
                        .map_err(|_| Error::parse("exponent too large"))?;
                    Ok(base.pow(e))
                }
                _ => Err(Error::parse("exponent must be a non-negative integer")),
            }
        } else {
            Ok(base)
        }
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.tokens.get(self.pos).cloned() {
            Some(Token::Num(n)) => {
                self.pos += 1;
                Ok(Poly::constant(self.vars, n))
            }
            Some(Token::Name(name)) => {
                self.pos += 1;
                let i = index_of(self.vars, &name)?;
                Ok(Poly::var(self.vars, i))
            }
            Some(Token::Op('(')) => {
                self.pos += 1;
                let e = self.expr()?;
                if !self.eat(')') {
                    return Err(Error::parse("expected `)`"));
                }
                Ok(e)
            }
            Some(t) => Err(Error::parse(format!("unexpected token {t:?}"))),
            None => Err(Error::parse("unexpected end of expression")),
        }
    }
}

/// Parses a polynomial over the given variables.
pub fn parse_poly(src: &str, vars: &Vars) -> Result<Poly> {
    let tokens = tokenize(src)?;
    if tokens.is_empty() {
        return Err(Error::parse("empty expression"));
    }
    let mut p = Parser {
        tokens,
        pos: 0,
        vars,
    };
    let out = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(Error::parse(format!(
            "trailing input starting at {:?}",
            p.tokens[p.pos]
        )));
    }
    Ok(out)
}

/// Parses an expression that is linear and homogeneous in `symbols`, with
/// polynomial coefficients in `vars`. Returns one coefficient per symbol.
///
/// This is the shared reader for `dy - y1*dx` style forms, PDE equations
/// such as `u1[2,0] + u1[0,2]`, and lift coefficients such as
/// `-y1*xi1[1]`.
pub fn parse_linear(src: &str, vars: &Vars, symbols: &[String]) -> Result<Vec<Poly>> {
    let mut all: Vec<String> = vars.to_vec();
    for s in symbols {
        if all.contains(s) {
            return Err(Error::parse(format!("symbol `{s}` clashes with a variable")));
        }
        all.push(s.clone());
    }
    let ext: Vars = all.into();
    let p = parse_poly(src, &ext)?;
    let nv = vars.len();
    let mut coeffs: Vec<Poly> = symbols.iter().map(|_| Poly::zero(vars)).collect();
    for (m, c) in p.terms() {
        let sym: Vec<usize> = (0..symbols.len()).filter(|&j| m.0[nv + j] > 0).collect();
        let total: u32 = m.0[nv..].iter().sum();
        if total != 1 {
            return Err(Error::parse(format!(
                "expression `{src}` is not linear and homogeneous in {}",
                symbols.join(", ")
            )));
        }
        let base = Monomial(m.0[..nv].to_vec());
        coeffs[sym[0]].add_scaled(&Poly::monomial(vars, base, Rational::one()), c);
    }
    Ok(coeffs)
}

/// Parses a 1-form such as `dx2 - x3*dx1`: differentials are written `d`
/// followed by a variable name.
pub fn parse_one_form(src: &str, vs: &Vars) -> Result<super::DiffForm> {
    let symbols: Vec<String> = vs.iter().map(|v| format!("d{v}")).collect();
    let coeffs = parse_linear(src, vs, &symbols)?;
    Ok(super::DiffForm::one_form(vs, coeffs))
}
