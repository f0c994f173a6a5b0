//! Checks that a realization reproduces its commutation table and that
//! its extra fields and invariant surfaces behave as claimed.

use std::fmt;

use num_traits::Zero;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{Catalog, Realization};
use crate::expr::{Binding, Expr};
use crate::fields::{bracket, expand_in_span, generic_points, is_subalgebra, FieldFrame, VectorField, C64};
use crate::lie::StructureConstants;
use crate::linalg::rationalize;
use crate::params::{format_values, substitute, ParamValues};
use crate::scalar::Scalar;
use crate::surface::{stream_seed, Hypersurface};

#[derive(Clone, Debug, PartialEq)]
pub struct PairResidual {
    /// 1-based frame indices.
    pub pair: (usize, usize),
    pub residual: f64,
    pub point: [C64; 3],
}

impl fmt::Display for PairResidual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.point.iter().map(|z| format!("{:.6}{:+.6}i", z.re, z.im)).collect();
        write!(f, "pair=({},{}) residual={:.3e} point=({})", self.pair.0, self.pair.1, self.residual, p.join(","))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExtraCheck {
    pub field: String,
    pub claim: String,
    pub residual: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RealizationReport {
    pub name: String,
    pub values: ParamValues,
    pub points: usize,
    pub tol: f64,
    pub max_residual: f64,
    pub worst: Option<PairResidual>,
    /// First pair, in lexicographic order, whose residual reaches `tol`.
    pub failure: Option<PairResidual>,
    pub extras: Vec<ExtraCheck>,
    pub constants: Option<StructureConstants>,
    pub error: Option<String>,
}

impl RealizationReport {
    pub fn passed(&self) -> bool {
        self.error.is_none() && self.failure.is_none() && self.extras.iter().all(|e| e.passed)
    }

    fn failed(name: &str, values: &ParamValues, tol: f64, error: String) -> RealizationReport {
        RealizationReport {
            name: name.to_string(),
            values: values.clone(),
            points: 0,
            tol,
            max_residual: f64::INFINITY,
            worst: None,
            failure: None,
            extras: vec![],
            constants: None,
            error: Some(error),
        }
    }
}

impl fmt::Display for RealizationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = if self.values.is_empty() { "-".to_string() } else { format_values(&self.values) };
        write!(f, "realization={} params={} points={} max_residual={:.3e}", self.name, v, self.points, self.max_residual)?;
        if let Some(e) = &self.error {
            write!(f, " error=\"{e}\"")?;
        }
        if let Some(p) = &self.failure {
            write!(f, " failure: {p}")?;
        }
        for x in &self.extras {
            write!(f, " extra[{} {}]={:.3e}", x.field, x.claim, x.residual)?;
        }
        Ok(())
    }
}

fn draw_box<R: Rng>(rng: &mut R) -> Option<[C64; 3]> {
    Some([0, 1, 2].map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))))
}

fn norm(v: &[C64; 3]) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `max_p |D(p)| / max(1, |scale fields at p|)` over the points.
fn residual_over(d: &VectorField, scale: &[&VectorField], points: &[[C64; 3]]) -> (f64, [C64; 3]) {
    let mut worst = (0.0, [C64::new(0.0, 0.0); 3]);
    if d.is_zero() {
        return worst;
    }
    for p in points {
        let b = Binding::new().with_point(*p);
        let r = match d.eval_at(&b) {
            Ok(v) => {
                let s = scale.iter().filter_map(|f| f.eval_at(&b).ok()).map(|v| norm(&v)).fold(1.0, f64::max);
                norm(&v) / s
            }
            Err(_) => f64::INFINITY,
        };
        if !(r <= worst.0) {
            worst = (r, *p);
        }
    }
    worst
}

/// Structure constants of the named algebra at the realization's binding.
fn target_constants(cat: &Catalog, r: &Realization, values: &ParamValues) -> Result<StructureConstants, String> {
    let name = r.algebra.as_deref().ok_or("no target algebra")?;
    let alg = cat.algebra(name).ok_or_else(|| format!("unknown algebra `{name}`"))?;
    let mut av = ParamValues::new();
    for p in alg.params.names() {
        let e = match r.bind.iter().find(|(k, _)| k == p) {
            Some((_, e)) => substitute(e, values),
            None => substitute(&Expr::param(p), values),
        };
        let c = e.as_const().filter(|c| c.is_real()).ok_or_else(|| format!("algebra parameter `{p}` is not determined"))?;
        av.insert(p.to_string(), c.re().clone());
    }
    alg.bind(&av).map_err(|e| e.to_string())
}

/// Constants read off the frame's own brackets.
fn recovered_constants(frame: &FieldFrame, values: &ParamValues, seed: u64) -> Result<StructureConstants, String> {
    let rep = is_subalgebra(frame, values, seed).map_err(|e| e.to_string())?;
    if !rep.closed {
        return Err(rep.note);
    }
    let mut sc = StructureConstants::zero(frame.len());
    for w in &rep.witness {
        let (i, j) = w.pair;
        for k in 0..frame.len() {
            let c = match &w.exact {
                Some(e) => e[k].clone(),
                None => rationalize(w.coefficients[k], 1000).ok_or("irrational bracket coefficient")?,
            };
            if !c.is_zero() {
                sc.set(i, j, k, c);
            }
        }
    }
    Ok(sc)
}

fn expected(sc: &StructureConstants, frame: &FieldFrame, i: usize, j: usize) -> VectorField {
    let coeffs: Vec<Expr> = (0..frame.len()).map(|k| Expr::constant(Scalar::real(sc.get(i, j, k).clone()))).collect();
    VectorField::combination("expected", &coeffs, &frame.fields)
}

pub fn verify_realization_at(
    cat: &Catalog,
    r: &Realization,
    values: &ParamValues,
    seed: u64,
    points: usize,
    tol: f64,
) -> RealizationReport {
    if let Err(e) = r.params.check(values) {
        return RealizationReport::failed(&r.name, values, tol, e.to_string());
    }
    let frame = r.frame.with_params(values);
    let sc = match r.algebra {
        Some(_) => target_constants(cat, r, values),
        None => recovered_constants(&r.frame, values, seed),
    };
    let sc = match sc {
        Ok(sc) => sc,
        Err(e) => return RealizationReport::failed(&r.name, values, tol, e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pts = generic_points(&frame, &Binding::new(), points, &mut rng, &draw_box);
    let mut report = RealizationReport {
        name: r.name.clone(),
        values: values.clone(),
        points: pts.len(),
        tol,
        max_residual: 0.0,
        worst: None,
        failure: None,
        extras: vec![],
        constants: Some(sc.clone()),
        error: None,
    };
    if pts.len() < points {
        report.error = Some(format!("only {} of {points} evaluation points found", pts.len()));
    }
    let n = frame.len();
    for i in 0..n {
        for j in i + 1..n {
            let br = match bracket(&frame.fields[i], &frame.fields[j]) {
                Ok(b) => b,
                Err(e) => {
                    report.error = Some(e.to_string());
                    return report;
                }
            };
            let d = br.sub(&expected(&sc, &frame, i, j));
            let scale: Vec<&VectorField> = frame.fields.iter().chain(std::iter::once(&br)).collect();
            let (res, p) = residual_over(&d, &scale, &pts);
            let pr = PairResidual { pair: (i + 1, j + 1), residual: res, point: p };
            if !(res <= report.max_residual) {
                report.max_residual = res;
                report.worst = Some(pr.clone());
            }
            if report.failure.is_none() && !(res < tol) {
                report.failure = Some(pr);
            }
        }
    }
    for x in &r.extras {
        let y = x.field.with_params(values);
        if x.claims.is_empty() {
            report.extras.push(normalizer_check(&y, &frame, seed, tol));
        }
        for c in &x.claims {
            let target = r.field(&c.target).expect("claim targets are validated at load").with_params(values);
            let rhs = c.rhs.with_params(values);
            let residual = match bracket(&y, &target) {
                Ok(br) => {
                    let d = br.sub(&rhs);
                    residual_over(&d, &[&br, &rhs, &target], &pts).0
                }
                Err(_) => f64::INFINITY,
            };
            report.extras.push(ExtraCheck { field: y.name.clone(), claim: c.text.clone(), residual, passed: residual < tol });
        }
    }
    report
}

/// `[Y, X_k]` lies in the complex span of the frame and `Y` for every `k`.
fn normalizer_check(y: &VectorField, frame: &FieldFrame, seed: u64, tol: f64) -> ExtraCheck {
    let i = Expr::i();
    let mut basis: Vec<VectorField> = frame.fields.clone();
    basis.push(y.clone());
    let rotated: Vec<VectorField> = basis.iter().map(|f| f.scale(&i)).collect();
    basis.extend(rotated);
    let mut worst: f64 = 0.0;
    for (k, x) in frame.fields.iter().enumerate() {
        let r = match bracket(y, x) {
            Ok(br) => match expand_in_span(&br, &basis, stream_seed(seed, k as u64)) {
                Ok(Some(e)) => e.residual,
                _ => f64::INFINITY,
            },
            Err(_) => f64::INFINITY,
        };
        worst = worst.max(r);
    }
    ExtraCheck { field: y.name.clone(), claim: format!("[{},g] in g + C{}", y.name, y.name), residual: worst, passed: worst < tol }
}

/// One report per bundled sample.
pub fn verify_realization(cat: &Catalog, r: &Realization, seed: u64, points: usize, tol: f64) -> Vec<RealizationReport> {
    r.bindings()
        .iter()
        .enumerate()
        .map(|(k, v)| verify_realization_at(cat, r, v, stream_seed(seed, k as u64), points, tol))
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct TangencyReport {
    pub realization: String,
    pub surface: String,
    pub values: ParamValues,
    pub points: usize,
    pub max_residual: f64,
    /// Frame field with the largest residual.
    pub worst_field: Option<String>,
    pub errors: Vec<String>,
    pub tol: f64,
}

impl TangencyReport {
    pub fn passed(&self) -> bool {
        self.errors.is_empty() && self.points > 0 && self.max_residual < self.tol
    }
}

impl fmt::Display for TangencyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = if self.values.is_empty() { "-".to_string() } else { format_values(&self.values) };
        write!(
            f,
            "realization={} surface={} params={} points={} max_residual={:.3e} worst_field={} errors={}",
            self.realization,
            self.surface,
            v,
            self.points,
            self.max_residual,
            self.worst_field.as_deref().unwrap_or("-"),
            self.errors.len()
        )
    }
}

/// Tangency of every frame field to `surface` at sampled surface points.
/// Realization parameters are taken from `values` by name.
pub fn tangency_report(r: &Realization, surface: &Hypersurface, values: &ParamValues, seed: u64, points: usize, tol: f64) -> TangencyReport {
    let mut rep = TangencyReport {
        realization: r.name.clone(),
        surface: surface.name.clone(),
        values: values.clone(),
        points: 0,
        max_residual: 0.0,
        worst_field: None,
        errors: vec![],
        tol,
    };
    let names = r.params.names();
    let rv = super::restrict(values, &names);
    let sv = super::restrict(values, &surface.params.names());
    if let Err(e) = r.params.check(&rv) {
        rep.errors.push(e.to_string());
        return rep;
    }
    let bound = match surface.bind(&sv) {
        Ok(b) => b,
        Err(e) => {
            rep.errors.push(e.to_string());
            return rep;
        }
    };
    let frame = r.frame.with_params(&rv);
    for p in bound.sample_points(seed, points) {
        let p = match p {
            Ok(p) => p,
            Err(e) => {
                rep.errors.push(e.to_string());
                continue;
            }
        };
        rep.points += 1;
        for x in &frame.fields {
            match bound.tangency_residual(x, &p) {
                Ok(v) => {
                    if !(v <= rep.max_residual) {
                        rep.max_residual = v;
                        rep.worst_field = Some(x.name.clone());
                    }
                }
                Err(e) => rep.errors.push(e.to_string()),
            }
        }
    }
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Q;

    fn cat() -> Catalog {
        Catalog::bundled().unwrap()
    }

    #[test]
    fn g25_reproduces_its_table() {
        let c = cat();
        let r = c.realization("g25").unwrap();
        let mut v = ParamValues::new();
        v.insert("q".into(), Q::from_integer(1.into()));
        let rep = verify_realization_at(&c, r, &v, 1, 20, 1e-8);
        assert!(rep.passed(), "{rep}");
        assert_eq!(rep.extras.len(), 5);
    }

    #[test]
    fn scaled_field_fails_at_its_pair() {
        let c = cat();
        let r = c.realization("m16").unwrap().corrupted(4, Expr::int(2));
        let rep = &verify_realization(&c, &r, 3, 20, 1e-8)[0];
        assert!(!rep.passed());
        assert_eq!(rep.failure.as_ref().unwrap().pair, (4, 5));
    }
}
