//! Real parameters, their constraints, and constraint-respecting sampling.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use rand::Rng;

use crate::error::ParamError;
use crate::expr::{eval, simplify, Assumptions, Binding, Expr};
use crate::scalar::{format_rational, rational_to_f64, Scalar};

/// Exact parameter values.
pub type ParamValues = BTreeMap<String, BigRational>;

const SAMPLE_ATTEMPTS: usize = 500;
const DENOMINATORS: [i64; 6] = [1, 2, 3, 4, 5, 6];

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Constraint {
    Gt(BigRational),
    Ge(BigRational),
    Lt(BigRational),
    Le(BigRational),
    Ne(BigRational),
    OneOf(Vec<BigRational>),
}

impl Constraint {
    pub fn holds(&self, v: &BigRational) -> bool {
        match self {
            Constraint::Gt(b) => v > b,
            Constraint::Ge(b) => v >= b,
            Constraint::Lt(b) => v < b,
            Constraint::Le(b) => v <= b,
            Constraint::Ne(b) => v != b,
            Constraint::OneOf(set) => set.contains(v),
        }
    }

    /// Parses `>0`, `>=1/2`, `<-8/9`, `<=3`, `!=1` or `in{-1,1}`.
    pub fn parse(text: &str) -> Result<Constraint, String> {
        let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let num = |s: &str| parse_rational(s).ok_or_else(|| format!("bad number `{s}` in constraint `{text}`"));
        if let Some(rest) = t.strip_prefix("in{") {
            let body = rest.strip_suffix('}').ok_or_else(|| format!("unterminated set in `{text}`"))?;
            let vals = body.split(',').map(num).collect::<Result<Vec<_>, _>>()?;
            return Ok(Constraint::OneOf(vals));
        }
        for (op, make) in [
            (">=", Constraint::Ge as fn(BigRational) -> Constraint),
            ("<=", Constraint::Le),
            ("!=", Constraint::Ne),
            (">", Constraint::Gt),
            ("<", Constraint::Lt),
        ] {
            if let Some(rest) = t.strip_prefix(op) {
                return Ok(make(num(rest)?));
            }
        }
        Err(format!("unknown constraint `{text}`"))
    }
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::Gt(b) => write!(f, ">{}", format_rational(b)),
            Constraint::Ge(b) => write!(f, ">={}", format_rational(b)),
            Constraint::Lt(b) => write!(f, "<{}", format_rational(b)),
            Constraint::Le(b) => write!(f, "<={}", format_rational(b)),
            Constraint::Ne(b) => write!(f, "!={}", format_rational(b)),
            Constraint::OneOf(set) => {
                let items: Vec<String> = set.iter().map(format_rational).collect();
                write!(f, "in {{{}}}", items.join(", "))
            }
        }
    }
}

/// Parses `n`, `-n`, `n/d` or a decimal into an exact rational.
pub fn parse_rational(text: &str) -> Option<BigRational> {
    let t = text.trim();
    if let Some((n, d)) = t.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    let e = crate::expr::parse(t).ok()?;
    match e.as_const() {
        Some(c) if c.is_real() => Some(c.re().clone()),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamDecl {
    pub name: String,
    pub constraints: Vec<Constraint>,
}

impl ParamDecl {
    pub fn free(name: &str) -> ParamDecl {
        ParamDecl { name: name.to_string(), constraints: vec![] }
    }

    pub fn new(name: &str, constraints: Vec<Constraint>) -> ParamDecl {
        ParamDecl { name: name.to_string(), constraints }
    }

    pub fn check(&self, v: &BigRational) -> Result<(), ParamError> {
        for c in &self.constraints {
            if !c.holds(v) {
                return Err(ParamError::Violation {
                    name: self.name.clone(),
                    value: format_rational(v),
                    constraint: c.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Candidate value window used by the sampler.
    fn window(&self) -> (BigRational, BigRational) {
        let span = BigRational::from_integer(4.into());
        let mut lo: Option<BigRational> = None;
        let mut hi: Option<BigRational> = None;
        for c in &self.constraints {
            match c {
                Constraint::Gt(b) | Constraint::Ge(b) => {
                    if lo.as_ref().is_none_or(|l| b > l) {
                        lo = Some(b.clone());
                    }
                }
                Constraint::Lt(b) | Constraint::Le(b) => {
                    if hi.as_ref().is_none_or(|h| b < h) {
                        hi = Some(b.clone());
                    }
                }
                _ => {}
            }
        }
        match (lo, hi) {
            (Some(l), Some(h)) => (l, h),
            (Some(l), None) => (l.clone(), l + span),
            (None, Some(h)) => (h.clone() - span, h),
            (None, None) => (-span.clone(), span),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> BigRational {
        for c in &self.constraints {
            if let Constraint::OneOf(set) = c {
                return set[rng.gen_range(0..set.len())].clone();
            }
        }
        let (lo, hi) = self.window();
        let d = DENOMINATORS[rng.gen_range(0..DENOMINATORS.len())];
        let dq = BigRational::from_integer(d.into());
        let a = (&lo * &dq).ceil().to_integer();
        let b = (&hi * &dq).floor().to_integer();
        if a > b {
            return lo;
        }
        let width: i64 = (&b - &a).try_into().unwrap_or(i64::MAX / 2);
        let k = rng.gen_range(0..=width);
        BigRational::new(a + BigInt::from(k), d.into())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Gt,
    Ge,
    Ne,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Gt => ">",
            Relation::Ge => ">=",
            Relation::Ne => "!=",
        }
    }
}

/// A joint condition `expr (>|>=|!=) 0` on several parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Requirement {
    pub expr: Expr,
    pub relation: Relation,
}

impl Requirement {
    /// Parses `expr > 0`, `expr >= 0` or `expr != 0`.
    pub fn parse(text: &str) -> Result<Requirement, String> {
        for (op, relation) in [(">=", Relation::Ge), ("!=", Relation::Ne), (">", Relation::Gt)] {
            if let Some((lhs, rhs)) = text.split_once(op) {
                if rhs.trim() != "0" {
                    return Err(format!("requirement `{text}` must compare with 0"));
                }
                let expr = crate::expr::parse(lhs).map_err(|e| e.to_string())?;
                return Ok(Requirement { expr, relation });
            }
        }
        Err(format!("requirement `{text}` needs >, >= or !="))
    }

    pub fn holds(&self, values: &ParamValues) -> bool {
        let v = substitute(&self.expr, values);
        let x = match v.as_const() {
            Some(c) if c.is_real() => rational_to_f64(c.re()),
            _ => match eval(&v, &Binding::new().with_params(values)) {
                Ok(z) => z.re,
                Err(_) => return false,
            },
        };
        match self.relation {
            Relation::Gt => x > 0.0,
            Relation::Ge => x >= 0.0,
            Relation::Ne => x != 0.0,
        }
    }
}

impl fmt::Display for Requirement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} 0", self.expr, self.relation.symbol())
    }
}

/// Substitutes exact values for parameters and simplifies.
pub fn substitute(e: &Expr, values: &ParamValues) -> Expr {
    let replaced = e.map_leaves(&|x| match x {
        Expr::Param(p) => values.get(p).map(|v| Expr::Const(Scalar::real(v.clone()))),
        _ => None,
    });
    simplify(&replaced)
}

/// Declared parameters of a catalog entry together with joint requirements.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ParamSpace {
    pub decls: Vec<ParamDecl>,
    pub requires: Vec<Requirement>,
}

impl ParamSpace {
    pub fn new(decls: Vec<ParamDecl>) -> ParamSpace {
        ParamSpace { decls, requires: vec![] }
    }

    pub fn is_empty(&self) -> bool {
        self.decls.is_empty()
    }

    pub fn names(&self) -> Vec<&str> {
        self.decls.iter().map(|d| d.name.as_str()).collect()
    }

    pub fn decl(&self, name: &str) -> Option<&ParamDecl> {
        self.decls.iter().find(|d| d.name == name)
    }

    pub fn check(&self, values: &ParamValues) -> Result<(), ParamError> {
        for name in values.keys() {
            if self.decl(name).is_none() {
                return Err(ParamError::Undeclared(name.clone()));
            }
        }
        for d in &self.decls {
            let v = values.get(&d.name).ok_or_else(|| ParamError::Missing(d.name.clone()))?;
            d.check(v)?;
        }
        for r in &self.requires {
            if !r.holds(values) {
                return Err(ParamError::Requirement(r.to_string()));
            }
        }
        Ok(())
    }

    /// Draws a value for every declared parameter, keeping `fixed` ones.
    pub fn sample<R: Rng>(&self, rng: &mut R, fixed: &ParamValues) -> Result<ParamValues, ParamError> {
        for _ in 0..SAMPLE_ATTEMPTS {
            let mut values = fixed.clone();
            for d in &self.decls {
                if !values.contains_key(&d.name) {
                    values.insert(d.name.clone(), d.draw(rng));
                }
            }
            if self.check(&values).is_ok() {
                return Ok(values);
            }
        }
        Err(ParamError::Exhausted(SAMPLE_ATTEMPTS))
    }

    /// Parameters known positive from their constraints.
    pub fn assumptions(&self) -> Assumptions {
        let zero = BigRational::zero();
        let mut a = Assumptions::new();
        for d in &self.decls {
            let positive = d.constraints.iter().any(|c| match c {
                Constraint::Gt(b) => *b >= zero,
                Constraint::Ge(b) => *b > zero,
                Constraint::OneOf(set) => set.iter().all(|v| v.is_positive()),
                _ => false,
            });
            if positive {
                a.assume_positive(&d.name);
            }
        }
        a
    }
}

/// Parses `name=value` pairs, as given on a command line.
pub fn parse_assignment(text: &str) -> Result<(String, BigRational), String> {
    let (k, v) = text.split_once('=').ok_or_else(|| format!("expected name=value, got `{text}`"))?;
    let value = parse_rational(v).ok_or_else(|| format!("value of `{}` is not an exact rational", k.trim()))?;
    Ok((k.trim().to_string(), value))
}

pub fn format_values(values: &ParamValues) -> String {
    let items: Vec<String> = values.iter().map(|(k, v)| format!("{k}={}", format_rational(v))).collect();
    items.join(",")
}
