use std::collections::BTreeMap;

use num_complex::Complex64;
use num_rational::BigRational;

use super::{Expr, Func};
use crate::error::EvalError;
use crate::scalar::rational_to_f64;

/// Relative size of an imaginary part tolerated where a real value is needed.
const REAL_TOL: f64 = 1e-10;

/// Values for parameters and for `z1..z3`. Conjugate variables evaluate to
/// the conjugate of the bound point unless overridden.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Binding {
    params: BTreeMap<String, f64>,
    point: [Option<Complex64>; 3],
    conj_override: [Option<Complex64>; 3],
}

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_point(mut self, z: [Complex64; 3]) -> Self {
        self.set_point(z);
        self
    }

    pub fn with_param(mut self, name: &str, value: f64) -> Self {
        self.params.insert(name.to_string(), value);
        self
    }

    pub fn with_params(mut self, params: &BTreeMap<String, BigRational>) -> Self {
        for (k, v) in params {
            self.params.insert(k.clone(), rational_to_f64(v));
        }
        self
    }

    pub fn set_point(&mut self, z: [Complex64; 3]) {
        self.point = z.map(Some);
    }

    pub fn set_z(&mut self, j: usize, value: Complex64) {
        self.point[j] = Some(value);
    }

    pub fn set_param(&mut self, name: &str, value: f64) {
        self.params.insert(name.to_string(), value);
    }

    /// Binds `cz_{j+1}` independently of `z_{j+1}`; meant for tests.
    pub fn override_conj(&mut self, j: usize, value: Complex64) {
        self.conj_override[j] = Some(value);
    }

    pub fn point(&self) -> Option<[Complex64; 3]> {
        Some([self.point[0]?, self.point[1]?, self.point[2]?])
    }

    pub fn param(&self, name: &str) -> Option<f64> {
        self.params.get(name).copied()
    }

    /// The binding at the conjugate point, with overrides conjugated too.
    pub fn conjugated(&self) -> Binding {
        Binding {
            params: self.params.clone(),
            point: self.point.map(|z| z.map(|w| w.conj())),
            conj_override: self.conj_override.map(|z| z.map(|w| w.conj())),
        }
    }
}

fn domain(e: &Expr, reason: &str) -> EvalError {
    EvalError::Domain { expr: e.to_string(), reason: reason.to_string() }
}

fn as_real(v: Complex64) -> Option<f64> {
    (v.im.abs() <= REAL_TOL * v.re.abs().max(1.0)).then_some(v.re)
}

/// Evaluates `e` in double precision.
pub fn eval(e: &Expr, b: &Binding) -> Result<Complex64, EvalError> {
    Ok(match e {
        Expr::Const(c) => c.to_complex64(),
        Expr::Var(v) => {
            let j = v.index();
            let z = b.point[j].ok_or_else(|| EvalError::Unbound(v.name()))?;
            if v.is_conj() {
                b.conj_override[j].unwrap_or(z.conj())
            } else {
                z
            }
        }
        Expr::Param(p) => Complex64::new(b.param(p).ok_or_else(|| EvalError::Unbound(p.clone()))?, 0.0),
        Expr::Add(xs) => {
            let mut s = Complex64::new(0.0, 0.0);
            for x in xs {
                s += eval(x, b)?;
            }
            s
        }
        Expr::Mul(xs) => {
            let mut s = Complex64::new(1.0, 0.0);
            for x in xs {
                s *= eval(x, b)?;
            }
            s
        }
        Expr::Neg(x) => -eval(x, b)?,
        Expr::Recip(x) => {
            let v = eval(x, b)?;
            if v == Complex64::new(0.0, 0.0) {
                return Err(domain(e, "division by zero"));
            }
            v.inv()
        }
        Expr::Pow(base, ex) => {
            let w = eval(base, b)?;
            if let Some(n) = ex.as_integer() {
                if n < 0 && w == Complex64::new(0.0, 0.0) {
                    return Err(domain(e, "negative power of zero"));
                }
                return Ok(w.powi(n as i32));
            }
            let a = eval(ex, b)?;
            let a = as_real(a).ok_or_else(|| domain(e, "exponent is not real"))?;
            if a.fract() == 0.0 && a.abs() < i32::MAX as f64 {
                if a < 0.0 && w == Complex64::new(0.0, 0.0) {
                    return Err(domain(e, "negative power of zero"));
                }
                return Ok(w.powi(a as i32));
            }
            match as_real(w) {
                Some(r) if r > 0.0 => Complex64::new(r.powf(a), 0.0),
                _ => return Err(domain(e, "non-integer power of a non-positive base")),
            }
        }
        Expr::Apply(f, x) => {
            let v = eval(x, b)?;
            match f {
                Func::Exp => v.exp(),
                Func::Log => match as_real(v) {
                    Some(r) if r > 0.0 => Complex64::new(r.ln(), 0.0),
                    _ => return Err(domain(e, "logarithm of a non-positive argument")),
                },
                Func::Atan => match as_real(v) {
                    Some(r) => Complex64::new(r.atan(), 0.0),
                    None => return Err(domain(e, "atan of a non-real argument")),
                },
                Func::Re => Complex64::new(v.re, 0.0),
                Func::Im => Complex64::new(v.im, 0.0),
            }
        }
    })
}
