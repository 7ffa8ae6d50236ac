//! Text form of rational maps.
//!
//! ```text
//! map    := expr | expr '/' expr
//! expr   := ['-'] term (('+' | '-') term)*
//! term   := factor ('*' factor)*
//! factor := base ('^' uint)?
//! base   := 'z' | 'i' | number | '(' expr ')'
//! ```
//!
//! Numbers are decimal with an optional exponent. A leading minus is only
//! accepted at the start of an `expr`, so `-z^2` and `(-1)` parse while
//! `z^2 + + 1` does not.

use num_complex::Complex;

use crate::config::NumericConfig;
use crate::error::{Error, Result};
use crate::poly::Polynomial;
use crate::ratmap::RationalMap;
use crate::scalar::Scalar;

/// Largest exponent and largest expanded degree the parser accepts.
pub const MAX_PARSED_DEGREE: usize = 1024;

#[derive(Clone, Debug, PartialEq)]
pub struct MapExpression<F> {
    pub source: String,
    pub numerator: Polynomial<Complex<F>>,
    pub denominator: Polynomial<Complex<F>>,
}

impl<F: Scalar> MapExpression<F> {
    pub fn into_map(self, config: NumericConfig<F>) -> Result<RationalMap<F>> {
        RationalMap::new(self.numerator, self.denominator, config)
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

type Poly<F> = Polynomial<Complex<F>>;

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

    fn error<T>(&self, message: impl Into<String>) -> Result<T> {
        Err(Error::Syntax { offset: self.pos, message: message.into() })
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        if self.peek() == Some(c) {
            self.pos += 1;
            Ok(())
        } else {
            self.error(format!("expected '{}'", c as char))
        }
    }

    fn expr<F: Scalar>(&mut self) -> Result<Poly<F>> {
        let negate = if self.peek() == Some(b'-') {
            self.pos += 1;
            true
        } else {
            false
        };
        let mut acc = self.term()?;
        if negate {
            acc = -&acc;
        }
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = &acc + &self.term()?;
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = &acc - &self.term()?;
                }
                _ => return Ok(acc),
            }
            check_degree(&acc, self.pos)?;
        }
    }

    fn term<F: Scalar>(&mut self) -> Result<Poly<F>> {
        let mut acc = self.factor()?;
        while self.peek() == Some(b'*') {
            self.pos += 1;
            acc = &acc * &self.factor()?;
            check_degree(&acc, self.pos)?;
        }
        Ok(acc)
    }

    fn factor<F: Scalar>(&mut self) -> Result<Poly<F>> {
        let base = self.base()?;
        if self.peek() != Some(b'^') {
            return Ok(base);
        }
        self.pos += 1;
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return self.error("expected an unsigned integer exponent");
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii digits");
        let e: usize = match text.parse() {
            Ok(e) if e <= MAX_PARSED_DEGREE => e,
            _ => {
                self.pos = start;
                return self.error(format!("exponent exceeds {MAX_PARSED_DEGREE}"));
            }
        };
        let out = base.pow(e as u32);
        check_degree(&out, start)?;
        Ok(out)
    }

    fn base<F: Scalar>(&mut self) -> Result<Poly<F>> {
        let zero = F::zero();
        match self.peek() {
            Some(b'z') => {
                self.pos += 1;
                Ok(Polynomial::x())
            }
            Some(b'i') => {
                self.pos += 1;
                Ok(Polynomial::constant(Complex::new(zero, F::one())))
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => {
                let v = self.number()?;
                Ok(Polynomial::constant(Complex::new(F::lit(v), zero)))
            }
            Some(c) => self.error(format!("unexpected '{}'", c as char)),
            None => self.error("unexpected end of input"),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let digits = |p: &mut Self| {
            let s = p.pos;
            while p.pos < p.src.len() && p.src[p.pos].is_ascii_digit() {
                p.pos += 1;
            }
            p.pos - s
        };
        let mut n = digits(self);
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            n += digits(self);
        }
        if n == 0 {
            self.pos = start;
            return self.error("malformed number");
        }
        if matches!(self.src.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.src.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if digits(self) == 0 {
                self.pos = save;
                return self.error("malformed exponent");
            }
        }
        let text = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii number");
        match text.parse::<f64>() {
            Ok(v) if v.is_finite() => Ok(v),
            _ => {
                self.pos = start;
                self.error("number out of range")
            }
        }
    }
}

fn check_degree<F: Scalar>(p: &Poly<F>, offset: usize) -> Result<()> {
    match p.degree() {
        Some(d) if d > MAX_PARSED_DEGREE => {
            Err(Error::Syntax { offset, message: format!("expanded degree {d} exceeds {MAX_PARSED_DEGREE}") })
        }
        _ => Ok(()),
    }
}

/// Parses `text` into numerator and denominator coefficient lists.
pub fn parse_expression<F: Scalar>(text: &str) -> Result<MapExpression<F>> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let numerator = p.expr()?;
    let denominator = if p.peek() == Some(b'/') {
        p.pos += 1;
        p.expr()?
    } else {
        Polynomial::constant(Complex::new(F::one(), F::zero()))
    };
    if p.peek().is_some() {
        return p.error("unexpected trailing input");
    }
    Ok(MapExpression { source: text.to_string(), numerator, denominator })
}

pub fn parse_map<F: Scalar>(text: &str, config: NumericConfig<F>) -> Result<RationalMap<F>> {
    parse_expression(text)?.into_map(config)
}

fn format_coefficient<F: Scalar>(c: Complex<F>) -> String {
    let sign = if c.im.is_sign_negative() { '-' } else { '+' };
    format!("({} {sign} {}*i)", c.re, c.im.abs())
}

/// Prints a polynomial in the grammar above with round-trip exact numbers.
pub fn format_polynomial<F: Scalar>(p: &Poly<F>) -> String {
    let terms: Vec<String> = p
        .coeffs()
        .iter()
        .enumerate()
        .rev()
        .filter(|(_, c)| !(c.re.is_zero() && c.im.is_zero()))
        .map(|(k, &c)| match k {
            0 => format_coefficient(c),
            1 => format!("{}*z", format_coefficient(c)),
            _ => format!("{}*z^{k}", format_coefficient(c)),
        })
        .collect();
    if terms.is_empty() {
        "0".into()
    } else {
        terms.join(" + ")
    }
}

pub fn format_map<F: Scalar>(map: &RationalMap<F>) -> String {
    format!("({}) / ({})", format_polynomial(map.numerator()), format_polynomial(map.denominator()))
}
