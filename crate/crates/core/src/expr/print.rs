use std::fmt;

use super::Expr;
use crate::scalar::Scalar;

const SUM: u8 = 1;
const PRODUCT: u8 = 2;
const POWER: u8 = 4;
const ATOM: u8 = 5;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self).0)
    }
}

fn wrap(e: &Expr, min: u8) -> String {
    let (s, p) = render(e);
    if p < min {
        format!("({s})")
    } else {
        s
    }
}

/// A term printed without its leading minus sign, when it has one.
fn negated(e: &Expr) -> Option<Expr> {
    match e {
        Expr::Neg(x) => Some((**x).clone()),
        Expr::Const(c) if leads_negative(c) => Some(Expr::Const(-c)),
        Expr::Mul(xs) => match xs.first() {
            Some(Expr::Const(c)) if leads_negative(c) => {
                let mut rest = xs.clone();
                let m = -c;
                if m.is_one() {
                    rest.remove(0);
                } else {
                    rest[0] = Expr::Const(m);
                }
                Some(if rest.len() == 1 { rest.pop().unwrap() } else { Expr::Mul(rest) })
            }
            _ => None,
        },
        _ => None,
    }
}

/// Negative reals and negative imaginary multiples print with a leading minus.
fn leads_negative(c: &Scalar) -> bool {
    c.is_negative_real() || (c.real_part().is_zero() && c.imag_part().is_negative_real())
}

fn scalar_prec(c: &Scalar) -> u8 {
    let s = c.to_string();
    if s.starts_with('(') {
        ATOM
    } else if s.starts_with('-') {
        SUM
    } else if s.contains('/') || s.contains('*') {
        PRODUCT
    } else {
        ATOM
    }
}

fn render(e: &Expr) -> (String, u8) {
    match e {
        Expr::Const(c) => (c.to_string(), scalar_prec(c)),
        Expr::Var(v) => (v.name(), ATOM),
        Expr::Param(p) => (p.clone(), ATOM),
        Expr::Add(xs) => {
            if xs.is_empty() {
                return ("0".into(), ATOM);
            }
            let mut s = render(&xs[0]).0;
            for x in &xs[1..] {
                match negated(x) {
                    Some(m) => {
                        s.push_str(" - ");
                        s.push_str(&wrap(&m, PRODUCT));
                    }
                    None => {
                        s.push_str(" + ");
                        s.push_str(&render(x).0);
                    }
                }
            }
            (s, SUM)
        }
        Expr::Mul(xs) => {
            if xs.is_empty() {
                return ("1".into(), ATOM);
            }
            if let Some(m) = negated(e) {
                return (format!("-{}", wrap(&m, PRODUCT)), SUM);
            }
            let parts: Vec<String> = xs
                .iter()
                .enumerate()
                .map(|(k, x)| {
                    let need = if k == 0 { PRODUCT } else { POWER };
                    match x {
                        Expr::Recip(_) if k > 0 => format!("({})", render(x).0),
                        _ => wrap(x, need),
                    }
                })
                .collect();
            (parts.join("*"), PRODUCT)
        }
        Expr::Neg(x) => (format!("-{}", wrap(x, PRODUCT)), SUM),
        Expr::Recip(x) => (format!("1/{}", wrap(x, POWER)), PRODUCT),
        Expr::Pow(b, ex) => {
            let base = wrap(b, ATOM);
            let exponent = match ex.as_integer() {
                Some(n) if n >= 0 => n.to_string(),
                _ => format!("({})", render(ex).0),
            };
            (format!("{base}^{exponent}"), POWER)
        }
        Expr::Apply(f, x) => (format!("{}({})", f.name(), render(x).0), ATOM),
    }
}
