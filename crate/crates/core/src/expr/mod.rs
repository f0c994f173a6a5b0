//! Symbolic expressions in `z1..z3`, their conjugates and real parameters.

mod diff;
mod eval;
mod parse;
mod print;
mod simplify;

use std::collections::BTreeSet;
use std::ops;

pub use diff::{wirtinger, wirtinger_fd, wirtinger_gradient};
pub use eval::{eval, Binding};
pub use parse::{parse, parse_raw};
pub(crate) use parse::is_parameter_name;
pub use simplify::{is_real, linear_coefficients, monomial_terms, simplify, simplify_with, Assumptions};
pub(crate) use simplify::polynomial_terms;

use crate::scalar::Scalar;

/// One of the six Wirtinger variables `z1, z2, z3, cz1, cz2, cz3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var {
    index: u8,
    conj: bool,
}

impl Var {
    /// `z_{j+1}` for `j` in `0..3`.
    pub fn z(j: usize) -> Var {
        assert!(j < 3, "variable index out of range");
        Var { index: j as u8, conj: false }
    }

    /// `conj(z_{j+1})` for `j` in `0..3`.
    pub fn cz(j: usize) -> Var {
        assert!(j < 3, "variable index out of range");
        Var { index: j as u8, conj: true }
    }

    pub fn all() -> [Var; 6] {
        [Var::z(0), Var::z(1), Var::z(2), Var::cz(0), Var::cz(1), Var::cz(2)]
    }

    pub fn index(self) -> usize {
        self.index as usize
    }

    pub fn is_conj(self) -> bool {
        self.conj
    }

    pub fn conjugate(self) -> Var {
        Var { index: self.index, conj: !self.conj }
    }

    pub fn name(self) -> String {
        format!("{}z{}", if self.conj { "c" } else { "" }, self.index + 1)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Func {
    Exp,
    Log,
    Atan,
    Re,
    Im,
}

impl Func {
    pub fn name(self) -> &'static str {
        match self {
            Func::Exp => "exp",
            Func::Log => "log",
            Func::Atan => "atan",
            Func::Re => "re",
            Func::Im => "im",
        }
    }
}

/// Expression tree. The derived ordering is the canonical child order used
/// by [`simplify`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Expr {
    Const(Scalar),
    Var(Var),
    Param(String),
    Add(Vec<Expr>),
    Mul(Vec<Expr>),
    Neg(Box<Expr>),
    Recip(Box<Expr>),
    Pow(Box<Expr>, Box<Expr>),
    Apply(Func, Box<Expr>),
}

impl Expr {
    pub fn constant(c: Scalar) -> Expr {
        Expr::Const(c)
    }

    pub fn int(n: i64) -> Expr {
        Expr::Const(Scalar::int(n))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        Expr::Const(Scalar::ratio(n, d))
    }

    pub fn zero() -> Expr {
        Expr::int(0)
    }

    pub fn one() -> Expr {
        Expr::int(1)
    }

    pub fn i() -> Expr {
        Expr::Const(Scalar::i())
    }

    pub fn z(j: usize) -> Expr {
        Expr::Var(Var::z(j))
    }

    pub fn cz(j: usize) -> Expr {
        Expr::Var(Var::cz(j))
    }

    pub fn param(name: &str) -> Expr {
        Expr::Param(name.to_string())
    }

    pub fn pow(self, exponent: Expr) -> Expr {
        Expr::Pow(Box::new(self), Box::new(exponent))
    }

    pub fn powi(self, n: i64) -> Expr {
        self.pow(Expr::int(n))
    }

    pub fn recip(self) -> Expr {
        Expr::Recip(Box::new(self))
    }

    pub fn apply(f: Func, arg: Expr) -> Expr {
        Expr::Apply(f, Box::new(arg))
    }

    pub fn exp(self) -> Expr {
        Expr::apply(Func::Exp, self)
    }

    pub fn log(self) -> Expr {
        Expr::apply(Func::Log, self)
    }

    pub fn atan(self) -> Expr {
        Expr::apply(Func::Atan, self)
    }

    pub fn re(self) -> Expr {
        Expr::apply(Func::Re, self)
    }

    pub fn im(self) -> Expr {
        Expr::apply(Func::Im, self)
    }

    pub fn as_const(&self) -> Option<&Scalar> {
        match self {
            Expr::Const(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self, Expr::Const(c) if c.is_one())
    }

    /// Integer value of a real integer constant.
    pub fn as_integer(&self) -> Option<i64> {
        self.as_const().and_then(|c| c.as_i64())
    }

    pub fn children(&self) -> Vec<&Expr> {
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => vec![],
            Expr::Add(xs) | Expr::Mul(xs) => xs.iter().collect(),
            Expr::Neg(x) | Expr::Recip(x) | Expr::Apply(_, x) => vec![x],
            Expr::Pow(b, e) => vec![b, e],
        }
    }

    pub fn any(&self, pred: &dyn Fn(&Expr) -> bool) -> bool {
        pred(self) || self.children().into_iter().any(|c| c.any(pred))
    }

    pub fn has_vars(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Var(_)))
    }

    pub fn has_conj_vars(&self) -> bool {
        self.any(&|e| matches!(e, Expr::Var(v) if v.is_conj()))
    }

    /// Structural holomorphy: no conjugate variables, and `re`, `im`, `atan`
    /// only applied to variable-free arguments.
    pub fn is_holomorphic(&self) -> bool {
        !self.any(&|e| match e {
            Expr::Var(v) => v.is_conj(),
            Expr::Apply(Func::Re | Func::Im | Func::Atan, x) => x.has_vars(),
            _ => false,
        })
    }

    pub fn params(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        self.collect_params(&mut out);
        out
    }

    fn collect_params(&self, out: &mut BTreeSet<String>) {
        if let Expr::Param(p) = self {
            out.insert(p.clone());
        }
        for c in self.children() {
            c.collect_params(out);
        }
    }

    /// Structural complex conjugate, treating parameters as real.
    pub fn conj(&self) -> Expr {
        match self {
            Expr::Const(c) => Expr::Const(c.conj()),
            Expr::Var(v) => Expr::Var(v.conjugate()),
            Expr::Param(_) => self.clone(),
            Expr::Add(xs) => Expr::Add(xs.iter().map(Expr::conj).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(Expr::conj).collect()),
            Expr::Neg(x) => Expr::Neg(Box::new(x.conj())),
            Expr::Recip(x) => Expr::Recip(Box::new(x.conj())),
            Expr::Pow(b, e) => Expr::Pow(Box::new(b.conj()), Box::new(e.conj())),
            Expr::Apply(f @ (Func::Re | Func::Im), x) => Expr::Apply(*f, x.clone()),
            Expr::Apply(f, x) => Expr::Apply(*f, Box::new(x.conj())),
        }
    }

    /// Replaces every occurrence of `name` by `with`.
    pub fn substitute_param(&self, name: &str, with: &Expr) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Param(p) if p == name => Some(with.clone()),
            _ => None,
        })
    }

    pub fn substitute_var(&self, v: Var, with: &Expr) -> Expr {
        self.map_leaves(&|e| match e {
            Expr::Var(w) if *w == v => Some(with.clone()),
            _ => None,
        })
    }

    /// Rebuilds the tree, replacing nodes for which `f` returns a value.
    pub fn map_leaves(&self, f: &dyn Fn(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = f(self) {
            return r;
        }
        let m = |x: &Expr| Box::new(x.map_leaves(f));
        match self {
            Expr::Const(_) | Expr::Var(_) | Expr::Param(_) => self.clone(),
            Expr::Add(xs) => Expr::Add(xs.iter().map(|x| x.map_leaves(f)).collect()),
            Expr::Mul(xs) => Expr::Mul(xs.iter().map(|x| x.map_leaves(f)).collect()),
            Expr::Neg(x) => Expr::Neg(m(x)),
            Expr::Recip(x) => Expr::Recip(m(x)),
            Expr::Pow(b, e) => Expr::Pow(m(b), m(e)),
            Expr::Apply(g, x) => Expr::Apply(*g, m(x)),
        }
    }

    pub fn size(&self) -> usize {
        1 + self.children().into_iter().map(Expr::size).sum::<usize>()
    }
}

impl From<Scalar> for Expr {
    fn from(c: Scalar) -> Self {
        Expr::Const(c)
    }
}

impl From<i64> for Expr {
    fn from(n: i64) -> Self {
        Expr::int(n)
    }
}

impl From<Var> for Expr {
    fn from(v: Var) -> Self {
        Expr::Var(v)
    }
}

impl ops::Add for Expr {
    type Output = Expr;
    fn add(self, o: Expr) -> Expr {
        Expr::Add(vec![self, o])
    }
}

impl ops::Sub for Expr {
    type Output = Expr;
    fn sub(self, o: Expr) -> Expr {
        Expr::Add(vec![self, Expr::Neg(Box::new(o))])
    }
}

impl ops::Mul for Expr {
    type Output = Expr;
    fn mul(self, o: Expr) -> Expr {
        Expr::Mul(vec![self, o])
    }
}

impl ops::Div for Expr {
    type Output = Expr;
    fn div(self, o: Expr) -> Expr {
        Expr::Mul(vec![self, o.recip()])
    }
}

impl ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::Neg(Box::new(self))
    }
}
