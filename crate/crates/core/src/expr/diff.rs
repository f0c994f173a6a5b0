use num_complex::Complex64;

use super::{eval, is_real, simplify, Binding, Expr, Func, Var};
use crate::error::{DiffError, EvalError};
use crate::scalar::Scalar;

/// Formal partial derivative in `v`, treating `z_j` and `cz_j` as
/// independent. The result is simplified.
pub fn wirtinger(e: &Expr, v: Var) -> Result<Expr, DiffError> {
    Ok(simplify(&d(e, v)?))
}

/// `(d/dz1, d/dz2, d/dz3)` of `e`.
pub fn wirtinger_gradient(e: &Expr) -> Result<[Expr; 3], DiffError> {
    Ok([wirtinger(e, Var::z(0))?, wirtinger(e, Var::z(1))?, wirtinger(e, Var::z(2))?])
}

/// Fourth-order central difference of a real-coordinate direction at the bound point.
fn directional_fd(e: &Expr, b: &Binding, j: usize, imaginary: bool) -> Result<Complex64, EvalError> {
    let z = b.point().ok_or_else(|| EvalError::Unbound(format!("z{}", j + 1)))?;
    let base = if imaginary { z[j].im } else { z[j].re };
    let h = 1e-3 * base.abs().max(1.0);
    let at = |t: f64| {
        let mut p = z;
        if imaginary {
            p[j].im = base + t;
        } else {
            p[j].re = base + t;
        }
        eval(e, &b.clone().with_point(p))
    };
    Ok((at(-2.0 * h)? - at(2.0 * h)? + (at(h)? - at(-h)?) * 8.0) / (12.0 * h))
}

/// Finite-difference Wirtinger derivative: `(d/dx - i d/dy) / 2` for `z_j`,
/// `(d/dx + i d/dy) / 2` for `cz_j`.
pub fn wirtinger_fd(e: &Expr, b: &Binding, v: Var) -> Result<Complex64, EvalError> {
    let dx = directional_fd(e, b, v.index(), false)?;
    let dy = directional_fd(e, b, v.index(), true)?;
    let i = Complex64::new(0.0, 1.0);
    Ok(if v.is_conj() { (dx + i * dy) * 0.5 } else { (dx - i * dy) * 0.5 })
}

fn domain(e: &Expr, reason: &str) -> DiffError {
    DiffError { expr: e.to_string(), reason: reason.to_string() }
}

fn d(e: &Expr, v: Var) -> Result<Expr, DiffError> {
    Ok(match e {
        Expr::Const(_) | Expr::Param(_) => Expr::zero(),
        Expr::Var(w) => Expr::int(if *w == v { 1 } else { 0 }),
        Expr::Add(xs) => Expr::Add(xs.iter().map(|x| d(x, v)).collect::<Result<_, _>>()?),
        Expr::Mul(xs) => {
            let mut terms = Vec::with_capacity(xs.len());
            for (i, x) in xs.iter().enumerate() {
                let dx = d(x, v)?;
                if dx.is_zero() {
                    continue;
                }
                let mut factors: Vec<Expr> = xs
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| *j != i)
                    .map(|(_, y)| y.clone())
                    .collect();
                factors.push(dx);
                terms.push(Expr::Mul(factors));
            }
            Expr::Add(terms)
        }
        Expr::Neg(x) => -d(x, v)?,
        Expr::Recip(x) => -(d(x, v)? * (**x).clone().powi(-2)),
        Expr::Pow(b, ex) => {
            if ex.has_vars() {
                return Err(domain(e, "exponent depends on the variables"));
            }
            let db = d(b, v)?;
            if db.is_zero() {
                return Ok(Expr::zero());
            }
            let integral = simplify(ex).as_integer().is_some();
            if !integral && !is_real(b) {
                return Err(domain(e, "non-integer power of a base that is not real"));
            }
            let lowered = (**ex).clone() - Expr::one();
            (**ex).clone() * (**b).clone().pow(lowered) * db
        }
        Expr::Apply(f, x) => {
            let x = &**x;
            match f {
                Func::Exp => e.clone() * d(x, v)?,
                Func::Log => d(x, v)? * x.clone().recip(),
                Func::Atan => {
                    if !is_real(x) {
                        return Err(domain(e, "atan of an argument that is not real"));
                    }
                    d(x, v)? * (Expr::one() + x.clone().powi(2)).recip()
                }
                Func::Re => {
                    let direct = d(x, v)?;
                    let swapped = d(x, v.conjugate())?.conj();
                    Expr::ratio(1, 2) * (direct + swapped)
                }
                Func::Im => {
                    let direct = d(x, v)?;
                    let swapped = d(x, v.conjugate())?.conj();
                    Expr::Const(Scalar::ratio(-1, 2) * Scalar::i()) * (direct - swapped)
                }
            }
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{eval, parse, Binding};
    use num_complex::Complex64;

    #[test]
    fn product_rule() {
        let e = parse("z1*cz1").unwrap();
        assert_eq!(wirtinger(&e, Var::z(0)).unwrap(), Expr::cz(0));
    }

    #[test]
    fn holomorphic_has_zero_antiderivative() {
        let e = parse("exp(z3)").unwrap();
        assert_eq!(wirtinger(&e, Var::cz(2)).unwrap(), Expr::zero());
    }

    #[test]
    fn real_power_of_real_part() {
        let e = parse("re(z1)^alpha").unwrap();
        let de = wirtinger(&e, Var::z(0)).unwrap();
        let b = Binding::new()
            .with_point([Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])
            .with_param("alpha", 3.0);
        let got = eval(&de, &b).unwrap();
        assert!((got - Complex64::new(1.5, 0.0)).norm() < 1e-12);
        // central difference in x1, halved, as d/dz1 = (d/dx1 - i d/dy1)/2 on a real function of x1
        let h = 1e-6;
        let f = |x: f64| {
            let b = Binding::new()
                .with_point([Complex64::new(x, 0.0), Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)])
                .with_param("alpha", 3.0);
            eval(&e, &b).unwrap().re
        };
        let fd = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h) / 2.0;
        assert!((fd - 1.5).abs() / 1.5 < 1e-6);
    }

    #[test]
    fn real_and_imaginary_parts() {
        let re = parse("re(z1)").unwrap();
        assert_eq!(wirtinger(&re, Var::z(0)).unwrap(), Expr::ratio(1, 2));
        assert_eq!(wirtinger(&re, Var::cz(0)).unwrap(), Expr::ratio(1, 2));
        let im = parse("im(z1)").unwrap();
        assert_eq!(wirtinger(&im, Var::z(0)).unwrap(), Expr::Const(Scalar::ratio(-1, 2) * Scalar::i()));
    }

    #[test]
    fn invalid_arguments_are_domain_errors() {
        assert!(wirtinger(&parse("z1^alpha").unwrap(), Var::z(0)).is_err());
        assert!(wirtinger(&parse("atan(z1)").unwrap(), Var::z(0)).is_err());
        assert!(wirtinger(&parse("pow(z1, z2)").unwrap(), Var::z(0)).is_err());
        assert!(wirtinger(&parse("z1^3").unwrap(), Var::z(0)).is_ok());
    }
}
