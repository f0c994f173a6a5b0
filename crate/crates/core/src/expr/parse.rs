//! Infix grammar:
//!
//! ```text
//! sum     := product (('+' | '-') product)*
//! product := unary (('*' | '/') unary)*
//! unary   := ('-' | '+') unary | power
//! power   := atom ('^' unary)?
//! atom    := number | 'i' | variable | name '(' args ')' | name | '(' sum ')'
//! ```
//!
//! Numbers are exact (`0.25` is `1/4`). Functions are `re`, `im`, `exp`,
//! `log`, `atan`, `conj` and the two-argument `pow`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Pow};

use super::{simplify, Expr};
use crate::error::ParseError;
use crate::scalar::Scalar;

const FUNCTIONS: [&str; 7] = ["re", "im", "exp", "log", "atan", "pow", "conj"];

/// Parses and simplifies.
pub fn parse(text: &str) -> Result<Expr, ParseError> {
    Ok(simplify(&parse_raw(text)?))
}

/// Parses without simplifying.
pub fn parse_raw(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { src: text.as_bytes(), pos: 0 };
    let e = p.sum()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(p.error("unexpected trailing input"));
    }
    Ok(e)
}

/// Whether `name` is usable as a parameter identifier.
pub(crate) fn is_parameter_name(name: &str) -> bool {
    let mut chars = name.chars();
    let first_ok = chars.next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_');
    first_ok
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
        && name != "i"
        && variable(name).is_none()
        && !FUNCTIONS.contains(&name)
}

fn variable(name: &str) -> Option<Expr> {
    match name {
        "z1" => Some(Expr::z(0)),
        "z2" => Some(Expr::z(1)),
        "z3" => Some(Expr::z(2)),
        "cz1" => Some(Expr::cz(0)),
        "cz2" => Some(Expr::cz(1)),
        "cz3" => Some(Expr::cz(2)),
        _ => None,
    }
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ParseError {
        ParseError { position: self.pos, message: message.to_string() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{}`", c as char)))
        }
    }

    fn sum(&mut self) -> Result<Expr, ParseError> {
        let mut terms = vec![self.product()?];
        loop {
            if self.eat(b'+') {
                terms.push(self.product()?);
            } else if self.eat(b'-') {
                terms.push(-self.product()?);
            } else {
                break;
            }
        }
        Ok(if terms.len() == 1 { terms.pop().unwrap() } else { Expr::Add(terms) })
    }

    fn product(&mut self) -> Result<Expr, ParseError> {
        let mut factors = vec![self.unary()?];
        loop {
            if self.eat(b'*') {
                factors.push(self.unary()?);
            } else if self.eat(b'/') {
                factors.push(self.unary()?.recip());
            } else {
                break;
            }
        }
        Ok(if factors.len() == 1 { factors.pop().unwrap() } else { Expr::Mul(factors) })
    }

    fn unary(&mut self) -> Result<Expr, ParseError> {
        if self.eat(b'-') {
            return Ok(-self.unary()?);
        }
        if self.eat(b'+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ParseError> {
        let base = self.atom()?;
        if self.eat(b'^') {
            let ex = self.unary()?;
            return Ok(base.pow(ex));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr, ParseError> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(b')')?;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => self.name(),
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        let int_part = &self.src[start..self.pos];
        let mut frac_part: &[u8] = &[];
        if self.pos < self.src.len() && self.src[self.pos] == b'.' {
            self.pos += 1;
            let fs = self.pos;
            while self.pos < self.src.len() && self.src[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            frac_part = &self.src[fs..self.pos];
        }
        if int_part.is_empty() && frac_part.is_empty() {
            return Err(self.error("malformed number"));
        }
        let digits: String = int_part.iter().chain(frac_part).map(|&b| b as char).collect();
        let numer: BigInt = digits.parse().map_err(|_| self.error("malformed number"))?;
        let denom = BigInt::from(10u32).pow(frac_part.len() as u32);
        let value = BigRational::new(numer, if frac_part.is_empty() { BigInt::one() } else { denom });
        Ok(Expr::Const(Scalar::real(value)))
    }

    fn name(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while self.pos < self.src.len() && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos]).expect("ascii identifier");
        if name == "i" {
            return Ok(Expr::i());
        }
        if let Some(v) = variable(name) {
            return Ok(v);
        }
        if FUNCTIONS.contains(&name) {
            self.expect(b'(')?;
            let arg = self.sum()?;
            let e = match name {
                "re" => arg.re(),
                "im" => arg.im(),
                "exp" => arg.exp(),
                "log" => arg.log(),
                "atan" => arg.atan(),
                "conj" => arg.conj(),
                "pow" => {
                    self.expect(b',')?;
                    let ex = self.sum()?;
                    arg.pow(ex)
                }
                _ => unreachable!(),
            };
            self.expect(b')')?;
            return Ok(e);
        }
        Ok(Expr::param(name))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence() {
        assert_eq!(parse("1 + 2*3^2").unwrap(), Expr::int(19));
        assert_eq!(parse("-2^2").unwrap(), Expr::int(-4));
        assert_eq!(parse("2^-1").unwrap(), Expr::ratio(1, 2));
        assert_eq!(parse("2/3/4").unwrap(), Expr::ratio(1, 6));
    }

    #[test]
    fn exact_decimals() {
        assert_eq!(parse("0.25").unwrap(), Expr::ratio(1, 4));
        assert_eq!(parse("1.5*2").unwrap(), Expr::int(3));
    }

    #[test]
    fn names() {
        assert_eq!(parse_raw("alpha").unwrap(), Expr::param("alpha"));
        assert_eq!(parse_raw("cz2").unwrap(), Expr::cz(1));
        assert_eq!(parse("conj(i*z1)").unwrap(), parse("-i*cz1").unwrap());
        assert_eq!(parse("pow(z1, 2)").unwrap(), parse("z1*z1").unwrap());
        assert!(is_parameter_name("eps"));
        assert!(!is_parameter_name("z1"));
        assert!(!is_parameter_name("re"));
    }

    #[test]
    fn errors_report_position() {
        let err = parse("1 + * 2").unwrap_err();
        assert_eq!(err.position, 4);
        assert!(parse("re z1").is_err());
        assert!(parse("(1 + z1").is_err());
        assert!(parse("1 2").is_err());
    }
}
