//! Holomorphic vector fields on C^3, brackets, pointwise values and ranks.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::Zero;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{EvalError, FieldError};
use crate::expr::{eval, linear_coefficients, monomial_terms, parse, polynomial_terms, simplify, wirtinger, Binding, Expr, Var};
use crate::linalg::{numeric_rank, singular_values, singular_values_c, QMatrix, Q};
use crate::params::{substitute, ParamValues};
use crate::scalar::Scalar;

/// Relative singular-value cutoff for pointwise ranks.
pub const RANK_TOL: f64 = 1e-8;
const SUBALGEBRA_POINTS: usize = 20;
const SUBALGEBRA_TOL: f64 = 1e-8;

pub type C64 = Complex64;

/// `f1 d/dz1 + f2 d/dz2 + f3 d/dz3` with holomorphic components.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    pub name: String,
    components: [Expr; 3],
}

impl VectorField {
    pub fn new(name: &str, components: [Expr; 3]) -> Result<VectorField, FieldError> {
        let components = components.map(|c| simplify(&c));
        for (k, c) in components.iter().enumerate() {
            if !c.is_holomorphic() {
                return Err(FieldError::NotHolomorphic { field: name.to_string(), component: k + 1, expr: c.to_string() });
            }
        }
        Ok(VectorField { name: name.to_string(), components })
    }

    /// The coordinate field d/dz_{j+1}.
    pub fn coordinate(j: usize) -> VectorField {
        let mut c = [Expr::zero(), Expr::zero(), Expr::zero()];
        c[j] = Expr::one();
        VectorField { name: format!("d{}", j + 1), components: c }
    }

    pub fn zero(name: &str) -> VectorField {
        VectorField { name: name.to_string(), components: [Expr::zero(), Expr::zero(), Expr::zero()] }
    }

    /// Parses `f1*d1 + f2*d2 + f3*d3`, where `d1..d3` stand for d/dz_j.
    pub fn parse(name: &str, text: &str) -> Result<VectorField, String> {
        let e = parse(text).map_err(|e| e.to_string())?;
        let parts = linear_coefficients(&e, &["d1", "d2", "d3"])?;
        let components = [parts[0].clone(), parts[1].clone(), parts[2].clone()];
        VectorField::new(name, components).map_err(|e| e.to_string())
    }

    pub fn components(&self) -> &[Expr; 3] {
        &self.components
    }

    pub fn component(&self, j: usize) -> &Expr {
        &self.components[j]
    }

    pub fn is_zero(&self) -> bool {
        self.components.iter().all(Expr::is_zero)
    }

    pub fn renamed(&self, name: &str) -> VectorField {
        VectorField { name: name.to_string(), components: self.components.clone() }
    }

    pub fn scale(&self, c: &Expr) -> VectorField {
        VectorField {
            name: self.name.clone(),
            components: [0, 1, 2].map(|j| simplify(&(c.clone() * self.components[j].clone()))),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            name: self.name.clone(),
            components: [0, 1, 2].map(|j| simplify(&(self.components[j].clone() + other.components[j].clone()))),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        VectorField {
            name: self.name.clone(),
            components: [0, 1, 2].map(|j| simplify(&(self.components[j].clone() - other.components[j].clone()))),
        }
    }

    /// `sum_k coeffs[k] * fields[k]`.
    pub fn combination(name: &str, coeffs: &[Expr], fields: &[VectorField]) -> VectorField {
        let mut acc = VectorField::zero(name);
        for (c, f) in coeffs.iter().zip(fields) {
            if !c.is_zero() {
                acc = acc.add(&f.scale(c));
            }
        }
        acc.renamed(name)
    }

    pub fn with_params(&self, values: &ParamValues) -> VectorField {
        VectorField { name: self.name.clone(), components: self.components.clone().map(|c| substitute(&c, values)) }
    }

    pub fn params(&self) -> std::collections::BTreeSet<String> {
        self.components.iter().flat_map(Expr::params).collect()
    }

    /// The derivative `X(f) = sum_j f_j df/dz_j`.
    pub fn apply(&self, f: &Expr) -> Result<Expr, FieldError> {
        let mut terms = Vec::with_capacity(3);
        for j in 0..3 {
            if self.components[j].is_zero() {
                continue;
            }
            terms.push(self.components[j].clone() * wirtinger(f, Var::z(j))?);
        }
        Ok(simplify(&Expr::Add(terms)))
    }

    pub fn eval_at(&self, b: &Binding) -> Result<[C64; 3], EvalError> {
        Ok([eval(&self.components[0], b)?, eval(&self.components[1], b)?, eval(&self.components[2], b)?])
    }
}

impl fmt::Display for VectorField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (j, c) in self.components.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                f.write_str(" + ")?;
            }
            first = false;
            if c.is_one() {
                write!(f, "d{}", j + 1)?;
            } else if matches!(c, Expr::Add(_)) {
                write!(f, "({c})*d{}", j + 1)?;
            } else {
                write!(f, "{c}*d{}", j + 1)?;
            }
        }
        if first {
            f.write_str("0")?;
        }
        Ok(())
    }
}

/// Component j of `[X,Y]` is `sum_k (X_k dY_j/dz_k - Y_k dX_j/dz_k)`.
pub fn bracket(x: &VectorField, y: &VectorField) -> Result<VectorField, FieldError> {
    let mut comps = [Expr::zero(), Expr::zero(), Expr::zero()];
    for (j, slot) in comps.iter_mut().enumerate() {
        let mut terms = Vec::new();
        for k in 0..3 {
            let v = Var::z(k);
            if !x.components[k].is_zero() {
                terms.push(x.components[k].clone() * wirtinger(&y.components[j], v)?);
            }
            if !y.components[k].is_zero() {
                terms.push(-(y.components[k].clone() * wirtinger(&x.components[j], v)?));
            }
        }
        *slot = simplify(&Expr::Add(terms));
    }
    Ok(VectorField { name: format!("[{},{}]", x.name, y.name), components: comps })
}

/// An ordered list of fields sharing one chart.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldFrame {
    pub label: String,
    pub fields: Vec<VectorField>,
}

impl FieldFrame {
    pub fn new(label: &str, fields: Vec<VectorField>) -> FieldFrame {
        FieldFrame { label: label.to_string(), fields }
    }

    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn subframe(&self, indices: &[usize]) -> FieldFrame {
        FieldFrame {
            label: format!("{}{:?}", self.label, indices),
            fields: indices.iter().map(|&k| self.fields[k].clone()).collect(),
        }
    }

    pub fn with_params(&self, values: &ParamValues) -> FieldFrame {
        FieldFrame { label: self.label.clone(), fields: self.fields.iter().map(|f| f.with_params(values)).collect() }
    }

    pub fn field(&self, name: &str) -> Option<&VectorField> {
        self.fields.iter().find(|f| f.name == name)
    }
}

/// Row k holds the value of field k at the point.
pub fn evaluate_frame(frame: &FieldFrame, point: [C64; 3], b: &Binding) -> Result<DMatrix<C64>, EvalError> {
    let mut bind = b.clone();
    bind.set_point(point);
    let mut m = DMatrix::<C64>::zeros(frame.len(), 3);
    for (k, f) in frame.fields.iter().enumerate() {
        let v = f.eval_at(&bind)?;
        for j in 0..3 {
            m[(k, j)] = v[j];
        }
    }
    Ok(m)
}

/// Each row as a vector of R^6: (Re f1, Im f1, Re f2, ...).
pub fn realify(m: &DMatrix<C64>) -> DMatrix<f64> {
    DMatrix::from_fn(m.nrows(), 2 * m.ncols(), |i, j| {
        let z = m[(i, j / 2)];
        if j % 2 == 0 {
            z.re
        } else {
            z.im
        }
    })
}

pub fn real_rank_at(frame: &FieldFrame, point: [C64; 3], b: &Binding) -> Result<usize, EvalError> {
    let m = evaluate_frame(frame, point, b)?;
    Ok(numeric_rank(&singular_values(&realify(&m)), RANK_TOL))
}

pub fn complex_rank_at(frame: &FieldFrame, point: [C64; 3], b: &Binding) -> Result<usize, EvalError> {
    let m = evaluate_frame(frame, point, b)?;
    Ok(numeric_rank(&singular_values_c(&m), RANK_TOL))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMethod {
    Exact,
    Sampled,
}

/// Coefficients of `[X_i, X_j]` in the frame.
#[derive(Clone, Debug, PartialEq)]
pub struct BracketExpansion {
    pub pair: (usize, usize),
    pub coefficients: Vec<f64>,
    pub exact: Option<Vec<Q>>,
    pub method: SolveMethod,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SubalgebraReport {
    pub closed: bool,
    pub witness: Vec<BracketExpansion>,
    pub offending: Option<(usize, usize)>,
    pub note: String,
}

/// Tries to write `target` as a constant real combination of `basis`.
pub fn expand_in_span(target: &VectorField, basis: &[VectorField], seed: u64) -> Result<Option<BracketExpansion>, FieldError> {
    if let Some(exact) = exact_expansion(target, basis) {
        return Ok(Some(match exact {
            Some(c) => BracketExpansion {
                pair: (0, 0),
                coefficients: c.iter().map(crate::scalar::rational_to_f64).collect(),
                exact: Some(c),
                method: SolveMethod::Exact,
                residual: 0.0,
            },
            None => return Ok(None),
        }));
    }
    sampled_expansion(target, basis, seed)
}

/// `Some(None)` when certified impossible, `Some(Some(c))` when solved,
/// `None` when the exact path does not apply.
fn exact_expansion(target: &VectorField, basis: &[VectorField]) -> Option<Option<Vec<Q>>> {
    let all = basis.iter().chain(std::iter::once(target));
    let params_free = all.clone().all(|f| f.params().is_empty());
    if !params_free {
        return None;
    }
    let polynomial = all.clone().all(|f| f.components.iter().all(|c| polynomial_terms(c).is_some()));
    // keys are (component, monomial); each contributes real and imaginary equations
    let mut keys: Vec<(usize, Expr)> = Vec::new();
    let mut table: Vec<Vec<(usize, Scalar)>> = Vec::new();
    for f in all {
        let mut entries = Vec::new();
        for j in 0..3 {
            for (m, c) in monomial_terms(&f.components[j]) {
                let key = (j, m);
                let idx = match keys.iter().position(|k| *k == key) {
                    Some(i) => i,
                    None => {
                        keys.push(key);
                        keys.len() - 1
                    }
                };
                entries.push((idx, c));
            }
        }
        table.push(entries);
    }
    let n = basis.len();
    let mut a = QMatrix::zeros(2 * keys.len(), n);
    let mut rhs = vec![Q::zero(); 2 * keys.len()];
    for (col, entries) in table.iter().enumerate() {
        for (idx, c) in entries {
            if col < n {
                a[(2 * idx, col)] = c.re().clone();
                a[(2 * idx + 1, col)] = c.im().clone();
            } else {
                rhs[2 * idx] = c.re().clone();
                rhs[2 * idx + 1] = c.im().clone();
            }
        }
    }
    match a.solve(&rhs) {
        Some(c) => Some(Some(c)),
        None if polynomial => Some(None),
        None => None,
    }
}

fn sample_point<R: Rng>(rng: &mut R) -> [C64; 3] {
    [0, 1, 2].map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
}

fn sampled_expansion(target: &VectorField, basis: &[VectorField], seed: u64) -> Result<Option<BracketExpansion>, FieldError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = basis.len();
    let mut rows: Vec<(Vec<f64>, f64)> = Vec::new();
    let mut found = 0;
    let mut attempts = 0;
    let mut last_err = None;
    while found < SUBALGEBRA_POINTS && attempts < 50 * SUBALGEBRA_POINTS {
        attempts += 1;
        let b = Binding::new().with_point(sample_point(&mut rng));
        let vals: Result<Vec<[C64; 3]>, EvalError> = basis.iter().map(|f| f.eval_at(&b)).collect();
        let (vals, t) = match (vals, target.eval_at(&b)) {
            (Ok(v), Ok(t)) => (v, t),
            (Err(e), _) | (_, Err(e)) => {
                last_err = Some(e);
                continue;
            }
        };
        if t.iter().chain(vals.iter().flatten()).any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            continue;
        }
        found += 1;
        for j in 0..3 {
            rows.push(((0..n).map(|k| vals[k][j].re).collect(), t[j].re));
            rows.push(((0..n).map(|k| vals[k][j].im).collect(), t[j].im));
        }
    }
    if found < SUBALGEBRA_POINTS {
        return Err(last_err.map(FieldError::Eval).unwrap_or_else(|| {
            FieldError::Eval(EvalError::Domain { expr: target.to_string(), reason: "no valid sample points".into() })
        }));
    }
    let a = DMatrix::from_fn(rows.len(), n, |i, k| rows[i].0[k]);
    let b = DVector::from_iterator(rows.len(), rows.iter().map(|r| r.1));
    let c = if n == 0 {
        DVector::zeros(0)
    } else {
        a.clone().svd(true, true).solve(&b, 1e-12).map_err(|e| {
            FieldError::Eval(EvalError::Domain { expr: target.to_string(), reason: e.to_string() })
        })?
    };
    let res = if n == 0 { b.norm() } else { (&a * &c - &b).norm() };
    let scale = b.norm().max(a.norm()).max(1.0);
    let residual = res / scale;
    if residual >= SUBALGEBRA_TOL {
        return Ok(None);
    }
    Ok(Some(BracketExpansion {
        pair: (0, 0),
        coefficients: c.iter().copied().collect(),
        exact: None,
        method: SolveMethod::Sampled,
        residual,
    }))
}

/// Checks that every pairwise bracket is a constant real combination of the frame.
pub fn is_subalgebra(frame: &FieldFrame, values: &ParamValues, seed: u64) -> Result<SubalgebraReport, FieldError> {
    let bound = frame.with_params(values);
    let mut witness = Vec::new();
    for i in 0..bound.len() {
        for j in i + 1..bound.len() {
            let br = bracket(&bound.fields[i], &bound.fields[j])?;
            match expand_in_span(&br, &bound.fields, seed ^ ((i * 31 + j) as u64))? {
                Some(mut e) => {
                    e.pair = (i, j);
                    witness.push(e);
                }
                None => {
                    return Ok(SubalgebraReport {
                        closed: false,
                        witness,
                        offending: Some((i, j)),
                        note: format!(
                            "[{},{}] = {} is not in the real span",
                            bound.fields[i].name, bound.fields[j].name, br
                        ),
                    })
                }
            }
        }
    }
    Ok(SubalgebraReport { closed: true, witness, offending: None, note: String::new() })
}

/// Finds `count` points where the full frame has maximal real rank among the draws.
pub fn generic_points<R: Rng>(
    frame: &FieldFrame,
    b: &Binding,
    count: usize,
    rng: &mut R,
    draw: &dyn Fn(&mut R) -> Option<[C64; 3]>,
) -> Vec<[C64; 3]> {
    let mut best = 0;
    let mut pts: Vec<([C64; 3], usize)> = Vec::new();
    let mut tries = 0;
    while pts.iter().filter(|p| p.1 == best).count() < count && tries < 40 * count.max(1) {
        tries += 1;
        let Some(p) = draw(rng) else { continue };
        let Ok(r) = real_rank_at(frame, p, b) else { continue };
        best = best.max(r);
        pts.push((p, r));
    }
    pts.into_iter().filter(|p| p.1 == best).map(|p| p.0).take(count).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn field(name: &str, text: &str) -> VectorField {
        VectorField::parse(name, text).unwrap()
    }

    fn m26_frame() -> FieldFrame {
        FieldFrame::new(
            "m26",
            vec![
                field("X1", "d1"),
                field("X2", "-i*z2*d1 + 1/2*d2"),
                field("X3", "z2*d1 + 1/(2*i)*d2"),
                field("X4", "2*q*z1*d1 + (q + i)*z2*d2 + d*d3"),
                field("X5", "d3"),
            ],
        )
    }

    #[test]
    fn bracket_of_translation_pair() {
        let f = m26_frame();
        let br = bracket(&f.fields[1], &f.fields[2]).unwrap();
        assert_eq!(br.components(), VectorField::coordinate(0).components());
        assert!(bracket(&f.fields[1], &f.fields[1]).unwrap().is_zero());
    }

    #[test]
    fn rotation_exchanges_pair() {
        let f = m26_frame();
        let y = field("Y", "i*z2*d2");
        assert_eq!(bracket(&y, &f.fields[1]).unwrap().components(), f.fields[2].components());
        let minus_x2 = f.fields[1].scale(&Expr::int(-1));
        assert_eq!(bracket(&y, &f.fields[2]).unwrap().components(), minus_x2.components());
    }

    #[test]
    fn conjugate_components_are_rejected() {
        assert!(matches!(
            VectorField::new("bad", [Expr::cz(0), Expr::zero(), Expr::zero()]),
            Err(FieldError::NotHolomorphic { component: 1, .. })
        ));
    }

    #[test]
    fn display_round_trips() {
        for text in ["(1/2 + 1/2*z1^2)*d1 + C*z3*d2 + z1*z3*d3", "d3", "-i*z2*d1 + 1/2*d2"] {
            let f = field("X", text);
            assert_eq!(field("X", &f.to_string()), f);
        }
    }

    #[test]
    fn identity_frame_values() {
        let frame = FieldFrame::new("std", (0..3).map(VectorField::coordinate).collect());
        let p = [C64::new(0.3, 1.0), C64::new(-2.0, 0.5), C64::new(0.0, 0.0)];
        let m = evaluate_frame(&frame, p, &Binding::new()).unwrap();
        assert_eq!(m, DMatrix::<C64>::identity(3, 3));
        assert_eq!(complex_rank_at(&frame, p, &Binding::new()).unwrap(), 3);
    }

    #[test]
    fn real_versus_complex_rank() {
        let frame = FieldFrame::new("pair", vec![field("A", "d1"), field("B", "i*d1")]);
        let p = [C64::new(0.0, 0.0); 3];
        assert_eq!(real_rank_at(&frame, p, &Binding::new()).unwrap(), 2);
        assert_eq!(complex_rank_at(&frame, p, &Binding::new()).unwrap(), 1);
    }

    #[test]
    fn affine_line_is_closed() {
        let frame = FieldFrame::new("aff", vec![field("A", "d1"), field("B", "z1*d1")]);
        let r = is_subalgebra(&frame, &ParamValues::new(), 1).unwrap();
        assert!(r.closed);
        assert_eq!(r.witness[0].exact.as_ref().unwrap(), &vec![crate::linalg::q(1), crate::linalg::q(0)]);
        assert_eq!(r.witness[0].method, SolveMethod::Exact);
    }

    #[test]
    fn quadratic_line_is_not_closed() {
        let frame = FieldFrame::new("quad", vec![field("A", "d1"), field("B", "z1^2*d1")]);
        let r = is_subalgebra(&frame, &ParamValues::new(), 1).unwrap();
        assert!(!r.closed);
        assert_eq!(r.offending, Some((0, 1)));
    }

    #[test]
    fn transcendental_coefficients_close() {
        let frame = FieldFrame::new("exp", vec![field("A", "d3"), field("B", "exp(z3)*d1"), field("C", "z1*d1")]);
        let r = is_subalgebra(&frame, &ParamValues::new(), 3).unwrap();
        assert!(r.closed, "{}", r.note);
    }
}
