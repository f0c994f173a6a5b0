//! Canonical form: an expanded sum of monomials with exact coefficients.
//!
//! A monomial maps atoms to exponents. Atoms are variables, parameters,
//! function applications, and (under non-integer or out-of-range exponents)
//! constants, sums and single-term products that cannot be expanded without
//! choosing a branch. Exponents are themselves canonical parameter
//! expressions.

use std::collections::{BTreeMap, BTreeSet};

use super::{Expr, Func, Var};
use crate::scalar::Scalar;

/// Largest positive integer power of a sum that is expanded.
const MAX_EXPANDED_POWER: i64 = 8;

/// Facts about parameters that enable extra rewrites.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Assumptions {
    positive: BTreeSet<String>,
}

impl Assumptions {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_positive<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Assumptions { positive: names.into_iter().map(Into::into).collect() }
    }

    pub fn assume_positive(&mut self, name: &str) {
        self.positive.insert(name.to_string());
    }

    pub fn is_positive_param(&self, name: &str) -> bool {
        self.positive.contains(name)
    }
}

pub fn simplify(e: &Expr) -> Expr {
    simplify_with(e, &Assumptions::default())
}

pub fn simplify_with(e: &Expr, a: &Assumptions) -> Expr {
    normalize(e, a).to_expr()
}

/// True when the expression equals its own conjugate after simplification.
pub fn is_real(e: &Expr) -> bool {
    is_real_with(e, &Assumptions::default())
}

fn is_real_with(e: &Expr, a: &Assumptions) -> bool {
    let s = simplify_with(e, a);
    simplify_with(&s.conj(), a) == s
}

/// Splits `e` as `sum_k c_k * symbols[k]` with coefficients free of the
/// symbols (which are parameter names). Fails when `e` is not linear and
/// homogeneous in them.
pub fn linear_coefficients(e: &Expr, symbols: &[&str]) -> Result<Vec<Expr>, String> {
    let a = Assumptions::default();
    let p = normalize(e, &a);
    let mut parts = vec![Poly::zero(); symbols.len()];
    for (m, c) in &p.terms {
        let hits: Vec<usize> = symbols
            .iter()
            .enumerate()
            .filter(|(_, s)| m.keys().any(|k| k.any(&|x| matches!(x, Expr::Param(p) if p == **s))))
            .map(|(i, _)| i)
            .collect();
        if hits.len() != 1 {
            return Err(format!("term `{}` is not linear in {:?}", term_expr(m, c), symbols));
        }
        let key = Expr::Param(symbols[hits[0]].to_string());
        if m.get(&key).map(Expr::is_one) != Some(true) {
            return Err(format!("term `{}` is not linear in {}", term_expr(m, c), symbols[hits[0]]));
        }
        let mut rest = m.clone();
        rest.remove(&key);
        parts[hits[0]].add_term(rest, c.clone());
    }
    Ok(parts.into_iter().map(|p| p.to_expr()).collect())
}

/// Terms of a polynomial in the six variables with exact coefficients, or
/// `None` when the expression is not such a polynomial.
pub(crate) fn polynomial_terms(e: &Expr) -> Option<Vec<([u32; 6], Scalar)>> {
    let p = normalize(e, &Assumptions::default());
    let mut out = Vec::with_capacity(p.terms.len());
    for (m, c) in &p.terms {
        let mut exps = [0u32; 6];
        for (k, ex) in m {
            let Expr::Var(v) = k else { return None };
            let n = ex.as_integer()?;
            if n < 0 {
                return None;
            }
            exps[slot(*v)] = n as u32;
        }
        out.push((exps, c.clone()));
    }
    Some(out)
}

/// Canonical terms as (monomial without coefficient, coefficient) pairs.
pub fn monomial_terms(e: &Expr) -> Vec<(Expr, Scalar)> {
    let p = normalize(e, &Assumptions::default());
    p.terms.iter().map(|(m, c)| (term_expr(m, &Scalar::one()), c.clone())).collect()
}

pub(crate) fn slot(v: Var) -> usize {
    v.index() + if v.is_conj() { 3 } else { 0 }
}

type Monomial = BTreeMap<Expr, Expr>;

#[derive(Clone, Debug, Default, PartialEq, Eq)]
struct Poly {
    terms: BTreeMap<Monomial, Scalar>,
}

impl Poly {
    fn zero() -> Poly {
        Poly::default()
    }

    fn constant(c: Scalar) -> Poly {
        let mut p = Poly::zero();
        p.add_term(Monomial::new(), c);
        p
    }

    fn factor(k: Expr, ex: Expr) -> Poly {
        let mut m = Monomial::new();
        m.insert(k, ex);
        let mut p = Poly::zero();
        p.add_term(m, Scalar::one());
        p
    }

    fn atom(k: Expr) -> Poly {
        Poly::factor(k, Expr::one())
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn add_term(&mut self, m: Monomial, c: Scalar) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&m) {
            Some(old) => {
                let s = &*old + &c;
                if s.is_zero() {
                    self.terms.remove(&m);
                } else {
                    *old = s;
                }
            }
            None => {
                self.terms.insert(m, c);
            }
        }
    }

    fn add_poly(&mut self, o: Poly) {
        for (m, c) in o.terms {
            self.add_term(m, c);
        }
    }

    fn scale(mut self, c: &Scalar) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        for v in self.terms.values_mut() {
            *v = &*v * c;
        }
        self
    }

    fn mul(&self, o: &Poly, a: &Assumptions) -> Poly {
        let mut out = Poly::zero();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &o.terms {
                let prod = mul_monomials(m1, m2, a);
                out.add_poly(prod.scale(&(c1 * c2)));
            }
        }
        out
    }

    fn as_constant(&self) -> Option<Scalar> {
        match self.terms.len() {
            0 => Some(Scalar::zero()),
            1 => {
                let (m, c) = self.terms.iter().next().unwrap();
                m.is_empty().then(|| c.clone())
            }
            _ => None,
        }
    }

    fn single_term(&self) -> Option<(&Monomial, &Scalar)> {
        if self.terms.len() == 1 {
            self.terms.iter().next()
        } else {
            None
        }
    }

    fn to_expr(&self) -> Expr {
        let mut terms: Vec<Expr> = self.terms.iter().map(|(m, c)| term_expr(m, c)).collect();
        match terms.len() {
            0 => Expr::zero(),
            1 => terms.pop().unwrap(),
            _ => Expr::Add(terms),
        }
    }
}

fn monomial_expr(m: &Monomial) -> Expr {
    term_expr(m, &Scalar::one())
}

fn term_expr(m: &Monomial, c: &Scalar) -> Expr {
    if m.is_empty() {
        return Expr::Const(c.clone());
    }
    let mut factors = Vec::with_capacity(m.len() + 1);
    if !c.is_one() {
        factors.push(Expr::Const(c.clone()));
    }
    for (k, ex) in m {
        if ex.is_one() {
            factors.push(k.clone());
        } else {
            factors.push(Expr::Pow(Box::new(k.clone()), Box::new(ex.clone())));
        }
    }
    if factors.len() == 1 {
        factors.pop().unwrap()
    } else {
        Expr::Mul(factors)
    }
}

fn add_exponents(e1: &Expr, e2: &Expr, a: &Assumptions) -> Expr {
    match (e1, e2) {
        (Expr::Const(c1), Expr::Const(c2)) => Expr::Const(c1 + c2),
        _ => simplify_with(&Expr::Add(vec![e1.clone(), e2.clone()]), a),
    }
}

fn scale_exponent(e: &Expr, n: i64, a: &Assumptions) -> Expr {
    match e {
        Expr::Const(c) => Expr::Const(c * &Scalar::int(n)),
        _ => simplify_with(&Expr::Mul(vec![e.clone(), Expr::int(n)]), a),
    }
}

fn mul_monomials(m1: &Monomial, m2: &Monomial, a: &Assumptions) -> Poly {
    let mut merged = m1.clone();
    let mut touched = false;
    for (k, ex) in m2 {
        match merged.get(k) {
            Some(old) => {
                let s = add_exponents(old, ex, a);
                touched = true;
                if s.is_zero() {
                    merged.remove(k);
                } else {
                    merged.insert(k.clone(), s);
                }
            }
            None => {
                merged.insert(k.clone(), ex.clone());
            }
        }
    }
    if touched {
        stabilize(merged, a)
    } else {
        let mut p = Poly::zero();
        p.add_term(merged, Scalar::one());
        p
    }
}

/// Whether `k^ex` may stay as a factor of a canonical monomial.
fn is_stable(k: &Expr, ex: &Expr) -> bool {
    let n = ex.as_const().and_then(|c| c.as_integer());
    match k {
        Expr::Var(_) | Expr::Param(_) | Expr::Apply(..) => true,
        Expr::Const(c) => match n {
            None => true,
            Some(n) => c.is_zero() && n < 0.into(),
        },
        Expr::Add(_) => match n {
            None => true,
            Some(n) => n < 0.into() || n > MAX_EXPANDED_POWER.into(),
        },
        _ => n.is_none(),
    }
}

/// Expands factors that became unstable after exponents were combined.
fn stabilize(m: Monomial, a: &Assumptions) -> Poly {
    let (stable, unstable): (Vec<_>, Vec<_>) = m.into_iter().partition(|(k, ex)| is_stable(k, ex));
    let mut p = Poly::zero();
    p.add_term(stable.into_iter().collect(), Scalar::one());
    for (k, ex) in unstable {
        let n = ex.as_integer().expect("unstable factors carry integer exponents");
        p = p.mul(&pow_int(normalize(&k, a), n, a), a);
    }
    p
}

fn pow_int(p: Poly, n: i64, a: &Assumptions) -> Poly {
    if n == 0 {
        return Poly::constant(Scalar::one());
    }
    if p.is_zero() {
        return if n > 0 { Poly::zero() } else { Poly::factor(Expr::zero(), Expr::int(n)) };
    }
    if let Some((m, c)) = p.single_term() {
        let coeff = c.powi(n).expect("nonzero coefficient");
        let raised: Monomial = m.iter().map(|(k, ex)| (k.clone(), scale_exponent(ex, n, a))).collect();
        return stabilize(raised, a).scale(&coeff);
    }
    if (1..=MAX_EXPANDED_POWER).contains(&n) {
        let mut acc = p.clone();
        for _ in 1..n {
            acc = acc.mul(&p, a);
        }
        return acc;
    }
    Poly::factor(p.to_expr(), Expr::int(n))
}

fn pow_symbolic(p: Poly, ex: Expr) -> Poly {
    if let Some(c) = p.as_constant() {
        return if c.is_one() { p } else { Poly::factor(Expr::Const(c), ex) };
    }
    if let Some((m, c)) = p.single_term() {
        if c.is_one() && m.len() == 1 {
            let (k, e0) = m.iter().next().unwrap();
            if e0.is_one() {
                return Poly::factor(k.clone(), ex);
            }
        }
    }
    Poly::factor(p.to_expr(), ex)
}

fn normalize(e: &Expr, a: &Assumptions) -> Poly {
    match e {
        Expr::Const(c) => Poly::constant(c.clone()),
        Expr::Var(_) | Expr::Param(_) => Poly::atom(e.clone()),
        Expr::Add(xs) => {
            let mut p = Poly::zero();
            for x in xs {
                p.add_poly(normalize(x, a));
            }
            p
        }
        Expr::Mul(xs) => {
            let mut p = Poly::constant(Scalar::one());
            for x in xs {
                if p.is_zero() {
                    break;
                }
                p = p.mul(&normalize(x, a), a);
            }
            p
        }
        Expr::Neg(x) => normalize(x, a).scale(&Scalar::int(-1)),
        Expr::Recip(x) => pow_int(normalize(x, a), -1, a),
        Expr::Pow(b, ex) => {
            let ex = simplify_with(ex, a);
            let base = normalize(b, a);
            match ex.as_integer() {
                Some(n) => pow_int(base, n, a),
                None if ex.is_zero() => Poly::constant(Scalar::one()),
                None => pow_symbolic(base, ex),
            }
        }
        Expr::Apply(f, x) => apply(*f, normalize(x, a), a),
    }
}

fn apply(f: Func, px: Poly, a: &Assumptions) -> Poly {
    match f {
        Func::Re => return real_part(&px, a),
        Func::Im => return imag_part(&px, a),
        _ => {}
    }
    let x = px.to_expr();
    match f {
        Func::Exp => {
            if px.is_zero() {
                return Poly::constant(Scalar::one());
            }
            if let Expr::Apply(Func::Log, y) = &x {
                if is_positive(y, a) {
                    return normalize(y, a);
                }
            }
        }
        Func::Log => {
            if px.as_constant().map(|c| c.is_one()) == Some(true) {
                return Poly::zero();
            }
            if let Expr::Apply(Func::Exp, y) = &x {
                if is_real_with(y, a) {
                    return normalize(y, a);
                }
            }
        }
        Func::Atan => {
            if px.is_zero() {
                return Poly::zero();
            }
        }
        Func::Re | Func::Im => unreachable!(),
    }
    Poly::atom(Expr::Apply(f, Box::new(x)))
}

/// Splits a monomial into its structurally real factors and the rest.
fn split_real(m: &Monomial, a: &Assumptions) -> (Monomial, Monomial) {
    if is_real_with(&monomial_expr(m), a) {
        return (m.clone(), Monomial::new());
    }
    m.iter()
        .map(|(k, ex)| (k.clone(), ex.clone()))
        .partition(|(k, ex)| {
            let mut single = Monomial::new();
            single.insert(k.clone(), ex.clone());
            is_real_with(&monomial_expr(&single), a)
        })
}

fn real_part(px: &Poly, a: &Assumptions) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &px.terms {
        let (real, rest) = split_real(m, a);
        let mut scale = Poly::zero();
        scale.add_term(real, Scalar::one());
        let inner = if rest.is_empty() {
            Poly::constant(c.real_part())
        } else {
            let n = monomial_expr(&rest);
            let mut p = Poly::atom(Expr::apply(Func::Re, n.clone())).scale(&c.real_part());
            p.add_poly(Poly::atom(Expr::apply(Func::Im, n)).scale(&-c.imag_part()));
            p
        };
        out.add_poly(scale.mul(&inner, a));
    }
    out
}

fn imag_part(px: &Poly, a: &Assumptions) -> Poly {
    let mut out = Poly::zero();
    for (m, c) in &px.terms {
        let (real, rest) = split_real(m, a);
        let mut scale = Poly::zero();
        scale.add_term(real, Scalar::one());
        let inner = if rest.is_empty() {
            Poly::constant(c.imag_part())
        } else {
            let n = monomial_expr(&rest);
            let mut p = Poly::atom(Expr::apply(Func::Im, n.clone())).scale(&c.real_part());
            p.add_poly(Poly::atom(Expr::apply(Func::Re, n)).scale(&c.imag_part()));
            p
        };
        out.add_poly(scale.mul(&inner, a));
    }
    out
}

/// Conservative structural positivity of a canonical expression.
fn is_positive(e: &Expr, a: &Assumptions) -> bool {
    match e {
        Expr::Const(c) => c.is_real() && c.re() > &num_rational::BigRational::from_integer(0.into()),
        Expr::Param(p) => a.is_positive_param(p),
        Expr::Mul(xs) | Expr::Add(xs) => xs.iter().all(|x| is_positive(x, a)),
        Expr::Pow(b, ex) => is_positive(b, a) && is_real_with(ex, a),
        Expr::Apply(Func::Exp, x) => is_real_with(x, a),
        _ => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::parse;

    fn s(text: &str) -> Expr {
        parse(text).unwrap()
    }

    #[test]
    fn additive_identity() {
        assert_eq!(simplify(&(Expr::z(0) + Expr::zero() * Expr::z(1))), Expr::z(0));
    }

    #[test]
    fn commutativity_fold() {
        let e = Expr::z(0) * Expr::cz(0) - Expr::cz(0) * Expr::z(0);
        assert_eq!(simplify(&e), Expr::zero());
    }

    #[test]
    fn exp_log_needs_positivity() {
        let e = Expr::param("a").log().exp();
        assert_eq!(simplify(&e), e);
        let pos = Assumptions::with_positive(["a"]);
        assert_eq!(simplify_with(&e, &pos), Expr::param("a"));
    }

    #[test]
    fn neg_and_recip_collapse() {
        let x = Expr::z(1);
        assert_eq!(simplify(&-(-x.clone())), x);
        assert_eq!(simplify(&x.clone().recip().recip()), x);
        assert_eq!(simplify(&(x.clone() * x.clone().recip())), Expr::one());
    }

    #[test]
    fn powers_combine() {
        assert_eq!(s("z1^(1/2)*z1^(1/2)"), Expr::z(0));
        assert_eq!(s("re(z1)^alpha*re(z1)"), s("re(z1)^(alpha + 1)"));
        assert_eq!(s("(1 + z1)^(1/2)*(1 + z1)^(1/2)"), s("1 + z1"));
        assert_eq!(s("2^(1/2)*2^(1/2)"), Expr::int(2));
        assert_eq!(s("(z1*z2)^2"), s("z1^2*z2^2"));
    }

    #[test]
    fn real_and_imaginary_parts() {
        assert_eq!(s("re(2*z1 + i*z2)"), s("2*re(z1) - im(z2)"));
        assert_eq!(s("re(z1*cz1)"), s("z1*cz1"));
        assert_eq!(s("im(alpha)"), Expr::zero());
        assert_eq!(s("re(re(z1)*z2)"), s("re(z1)*re(z2)"));
        assert_eq!(s("(z1 + cz1)/2"), s("(z1 + cz1)/2"));
        assert!(is_real(&s("z1*cz2 + cz1*z2")));
        assert!(!is_real(&s("z1*cz2")));
    }

    #[test]
    fn log_of_exp_of_real() {
        assert_eq!(s("log(exp(re(z1)))"), s("re(z1)"));
        assert_eq!(s("log(exp(z1))"), Expr::z(0).exp().log());
    }

    #[test]
    fn linear_split() {
        let e = s("p*e3 - s*e4 + e3");
        let c = linear_coefficients(&e, &["e1", "e2", "e3", "e4", "e5"]).unwrap();
        assert_eq!(c[2], s("p + 1"));
        assert_eq!(c[3], s("-s"));
        assert!(c[0].is_zero());
        assert!(linear_coefficients(&s("e1*e2"), &["e1", "e2"]).is_err());
        assert!(linear_coefficients(&s("e1 + 1"), &["e1"]).is_err());
    }

    #[test]
    fn polynomial_detection() {
        assert!(polynomial_terms(&s("z1^2 + 3*i*z2*z3")).is_some());
        assert!(polynomial_terms(&s("exp(z3)")).is_none());
        assert!(polynomial_terms(&s("z1^(-1)")).is_none());
    }
}
