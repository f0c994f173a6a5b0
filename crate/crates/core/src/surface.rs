//! Real hypersurfaces `{rho = 0}` in C^3: sampling, complex tangents, Levi forms
//! and tangency of holomorphic fields.

use std::fmt;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{EvalError, SurfaceError};
use crate::expr::{eval, simplify, wirtinger, wirtinger_fd, Binding, Expr, Var};
use crate::fields::{VectorField, C64};
use crate::linalg::null_space_c;
use crate::params::{format_values, substitute, ParamSpace, ParamValues};

pub const ON_SURFACE_TOL: f64 = 1e-10;
pub const DEGENERACY_TOL: f64 = 1e-6;
const NEWTON_ITERATIONS: usize = 50;
const SAMPLE_ATTEMPTS: usize = 200;

/// One of the six real coordinates `x1, x2, x3, y1, y2, y3` with `z_j = x_j + i y_j`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RealCoord(pub usize);

impl RealCoord {
    pub fn parse(s: &str) -> Option<RealCoord> {
        let (kind, idx) = s.split_at(1);
        let j: usize = idx.parse().ok()?;
        if !(1..=3).contains(&j) {
            return None;
        }
        match kind {
            "x" => Some(RealCoord(j - 1)),
            "y" => Some(RealCoord(j + 2)),
            _ => None,
        }
    }

    pub fn variable(self) -> usize {
        self.0 % 3
    }

    pub fn is_imaginary(self) -> bool {
        self.0 >= 3
    }
}

impl fmt::Display for RealCoord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{}", if self.is_imaginary() { "y" } else { "x" }, self.variable() + 1)
    }
}

pub fn to_point(r: &[f64; 6]) -> [C64; 3] {
    [0, 1, 2].map(|j| C64::new(r[j], r[j + 3]))
}

pub fn to_real(p: &[C64; 3]) -> [f64; 6] {
    [p[0].re, p[1].re, p[2].re, p[0].im, p[1].im, p[2].im]
}

/// A seed point, optionally tied to a parameter binding.
#[derive(Clone, Debug, PartialEq)]
pub struct Seed {
    pub when: ParamValues,
    pub coords: [f64; 6],
}

/// Where points are drawn: coordinate boxes plus positivity conditions.
#[derive(Clone, Debug, PartialEq)]
pub struct Chart {
    pub bounds: [(f64, f64); 6],
    pub positive: Vec<Expr>,
    /// Half-width of the perturbation around a seed.
    pub radius: f64,
}

impl Default for Chart {
    fn default() -> Self {
        Chart { bounds: [(-1.0, 1.0); 6], positive: vec![], radius: 0.3 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Hypersurface {
    pub name: String,
    pub rho: Expr,
    pub params: ParamSpace,
    pub chart: Chart,
    pub solve: RealCoord,
    pub seeds: Vec<Seed>,
    pub grid: Vec<ParamValues>,
    pub note: String,
}

impl Hypersurface {
    pub fn new(name: &str, rho: Expr, params: ParamSpace, solve: RealCoord) -> Hypersurface {
        Hypersurface {
            name: name.to_string(),
            rho: simplify(&rho),
            params,
            chart: Chart::default(),
            solve,
            seeds: vec![],
            grid: vec![],
            note: String::new(),
        }
    }

    /// Exact parameter substitution and symbolic derivatives.
    pub fn bind(&self, values: &ParamValues) -> Result<BoundSurface, SurfaceError> {
        self.params.check(values)?;
        let rho = substitute(&self.rho, values);
        let grad = [0, 1, 2].map(|j| wirtinger(&rho, Var::z(j)));
        let grad = [grad[0].clone()?, grad[1].clone()?, grad[2].clone()?];
        let mut hess = Vec::with_capacity(9);
        for g in &grad {
            for k in 0..3 {
                hess.push(wirtinger(g, Var::cz(k))?);
            }
        }
        let seed = self
            .seeds
            .iter()
            .find(|s| !s.when.is_empty() && s.when.iter().all(|(k, v)| values.get(k) == Some(v)))
            .or_else(|| self.seeds.iter().find(|s| s.when.is_empty()))
            .map(|s| s.coords);
        Ok(BoundSurface {
            name: self.name.clone(),
            values: values.clone(),
            rho,
            grad,
            hess,
            chart: Chart {
                bounds: self.chart.bounds,
                positive: self.chart.positive.iter().map(|e| substitute(e, values)).collect(),
                radius: self.chart.radius,
            },
            solve: self.solve,
            seed,
        })
    }

    /// The same surface with `rho` replaced by `factor * rho`.
    pub fn rescaled(&self, factor: &Expr) -> Hypersurface {
        let mut h = self.clone();
        h.rho = simplify(&(factor.clone() * self.rho.clone()));
        h
    }
}

/// A hypersurface at fixed parameter values with cached derivatives.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundSurface {
    pub name: String,
    pub values: ParamValues,
    pub rho: Expr,
    /// `d rho / dz_j`.
    pub grad: [Expr; 3],
    /// `d^2 rho / dz_j dcz_k`, row-major.
    pub hess: Vec<Expr>,
    pub chart: Chart,
    pub solve: RealCoord,
    pub seed: Option<[f64; 6]>,
}

fn binding(p: &[C64; 3]) -> Binding {
    Binding::new().with_point(*p)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LeviClass {
    StrictlyPseudoconvex,
    Indefinite,
    Degenerate,
}

impl LeviClass {
    pub fn as_str(self) -> &'static str {
        match self {
            LeviClass::StrictlyPseudoconvex => "StrictlyPseudoconvex",
            LeviClass::Indefinite => "Indefinite",
            LeviClass::Degenerate => "Degenerate",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LeviReport {
    pub point: [C64; 3],
    pub unit_gradient: [C64; 3],
    pub matrix: [[C64; 2]; 2],
    /// `(lambda1, lambda2)` with `lambda1 >= lambda2`.
    pub eigenvalues: (f64, f64),
    pub classification: LeviClass,
    pub tolerance: f64,
}

fn fmt_c(z: C64) -> String {
    format!("{:.12e}{:+.12e}i", z.re, z.im)
}

impl fmt::Display for LeviReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p: Vec<String> = self.point.iter().map(|z| fmt_c(*z)).collect();
        write!(
            f,
            "point=({}) eigenvalues=({:.9e},{:.9e}) classification={}",
            p.join(","),
            self.eigenvalues.0,
            self.eigenvalues.1,
            self.classification.as_str()
        )
    }
}

/// Classification of a Hermitian 2x2 form from its eigenvalues.
pub fn classify(l1: f64, l2: f64) -> LeviClass {
    let scale = l1.abs().max(l2.abs()).max(1.0);
    if l1.abs().min(l2.abs()) < DEGENERACY_TOL * scale {
        LeviClass::Degenerate
    } else if l1 * l2 > 0.0 {
        LeviClass::StrictlyPseudoconvex
    } else {
        LeviClass::Indefinite
    }
}

fn hermitian_eigenvalues(m: &[[C64; 2]; 2]) -> (f64, f64) {
    let a = m[0][0].re;
    let d = m[1][1].re;
    let b = m[0][1];
    let mean = 0.5 * (a + d);
    let disc = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
    (mean + disc, mean - disc)
}

impl BoundSurface {
    pub fn rho_at(&self, p: &[C64; 3]) -> Result<f64, EvalError> {
        Ok(eval(&self.rho, &binding(p))?.re)
    }

    pub fn gradient_at(&self, p: &[C64; 3]) -> Result<[C64; 3], EvalError> {
        let b = binding(p);
        Ok([eval(&self.grad[0], &b)?, eval(&self.grad[1], &b)?, eval(&self.grad[2], &b)?])
    }

    /// Norm of the real gradient, `2 |d rho|`.
    pub fn gradient_norm(&self, g: &[C64; 3]) -> f64 {
        2.0 * g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Derivative of rho along a real coordinate.
    fn partial(&self, p: &[C64; 3], c: RealCoord) -> Result<f64, EvalError> {
        let g = eval(&self.grad[c.variable()], &binding(p))?;
        Ok(if c.is_imaginary() { -2.0 * g.im } else { 2.0 * g.re })
    }

    fn in_chart(&self, p: &[C64; 3]) -> bool {
        let r = to_real(p);
        if r.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let b = binding(p);
        self.chart.positive.iter().all(|e| matches!(eval(e, &b), Ok(v) if v.re > 0.0))
    }

    /// Newton iteration in the solve coordinate, starting from `r`.
    pub fn project(&self, mut r: [f64; 6]) -> Result<[C64; 3], SurfaceError> {
        let c = self.solve.0;
        let mut last = f64::NAN;
        for _ in 0..NEWTON_ITERATIONS {
            let p = to_point(&r);
            let v = self.rho_at(&p)?;
            last = v;
            if v.abs() < 1e-13 * (1.0 + r[c].abs()) {
                break;
            }
            let d = self.partial(&p, self.solve)?;
            if d == 0.0 || !d.is_finite() {
                return Err(SurfaceError::Sampling(format!("zero derivative in {} at {:?}", self.solve, r)));
            }
            let step = v / d;
            let cap = 0.5 * (1.0 + r[c].abs());
            r[c] -= step.clamp(-cap, cap);
        }
        let p = to_point(&r);
        let v = self.rho_at(&p)?;
        if !(v.abs() < ON_SURFACE_TOL) {
            return Err(SurfaceError::Sampling(format!(
                "Newton in {} did not converge after {NEWTON_ITERATIONS} iterations: |rho| = {:e} (previous {:e}) at {:?}",
                self.solve,
                v.abs(),
                last.abs(),
                r
            )));
        }
        Ok(p)
    }

    /// Draws one smooth chart point on the surface.
    pub fn sample_point<R: Rng>(&self, rng: &mut R) -> Result<[C64; 3], SurfaceError> {
        let mut last_err = None;
        for _ in 0..SAMPLE_ATTEMPTS {
            let mut r = [0.0; 6];
            for k in 0..6 {
                let (lo, hi) = self.chart.bounds[k];
                r[k] = match self.seed {
                    Some(s) => s[k] + rng.gen_range(-self.chart.radius..=self.chart.radius),
                    None => rng.gen_range(lo..=hi),
                };
            }
            if let Some(s) = self.seed {
                r[self.solve.0] = s[self.solve.0];
            } else {
                let (lo, hi) = self.chart.bounds[self.solve.0];
                r[self.solve.0] = 0.5 * (lo + hi);
            }
            match self.project(r) {
                Ok(p) if self.in_chart(&p) => match self.gradient_at(&p) {
                    Ok(g) if self.gradient_norm(&g) > 1e-8 => return Ok(p),
                    Ok(_) => last_err = Some(SurfaceError::DegenerateGradient(format!("{p:?}"))),
                    Err(e) => last_err = Some(e.into()),
                },
                Ok(_) => last_err = Some(SurfaceError::Sampling("point left the chart".into())),
                Err(e) => last_err = Some(e),
            }
        }
        Err(last_err.unwrap_or_else(|| SurfaceError::Sampling("no attempts".into())))
    }

    /// `count` points, point k drawn from its own stream derived from `seed`.
    pub fn sample_points(&self, seed: u64, count: usize) -> Vec<Result<[C64; 3], SurfaceError>> {
        (0..count)
            .into_par_iter()
            .map(|k| {
                let mut rng = ChaCha8Rng::seed_from_u64(stream_seed(seed, k as u64));
                self.sample_point(&mut rng)
            })
            .collect()
    }

    /// Orthonormal basis of `{w : sum_j w_j d rho/dz_j = 0}`.
    pub fn complex_tangent_basis(&self, p: &[C64; 3]) -> Result<[[C64; 3]; 2], SurfaceError> {
        let g = self.gradient_at(p)?;
        if self.gradient_norm(&g) < 1e-12 {
            return Err(SurfaceError::DegenerateGradient(format!("{p:?}")));
        }
        let row = DMatrix::from_row_slice(1, 3, &g);
        let ns = null_space_c(&row, 1e-12);
        if ns.len() != 2 {
            return Err(SurfaceError::DegenerateGradient(format!("{p:?}")));
        }
        Ok([[ns[0][0], ns[0][1], ns[0][2]], [ns[1][0], ns[1][1], ns[1][2]]])
    }

    pub fn hessian_at(&self, p: &[C64; 3]) -> Result<[[C64; 3]; 3], EvalError> {
        let b = binding(p);
        let mut h = [[C64::new(0.0, 0.0); 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                h[j][k] = eval(&self.hess[3 * j + k], &b)?;
            }
        }
        Ok(h)
    }

    pub fn levi_with_basis(&self, p: &[C64; 3], w: &[[C64; 3]; 2], h: &[[C64; 3]; 3]) -> Result<LeviReport, SurfaceError> {
        let g = self.gradient_at(p)?;
        let gn = g.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        let mut m = [[C64::new(0.0, 0.0); 2]; 2];
        for a in 0..2 {
            for b in 0..2 {
                let mut s = C64::new(0.0, 0.0);
                for j in 0..3 {
                    for k in 0..3 {
                        s += h[j][k] * w[a][j] * w[b][k].conj();
                    }
                }
                m[a][b] = s;
            }
        }
        let (l1, l2) = hermitian_eigenvalues(&m);
        Ok(LeviReport {
            point: *p,
            unit_gradient: g.map(|z| z / gn),
            matrix: m,
            eigenvalues: (l1, l2),
            classification: classify(l1, l2),
            tolerance: DEGENERACY_TOL,
        })
    }

    pub fn levi_form(&self, p: &[C64; 3]) -> Result<LeviReport, SurfaceError> {
        let w = self.complex_tangent_basis(p)?;
        let h = self.hessian_at(p)?;
        self.levi_with_basis(p, &w, &h)
    }

    /// Complex Hessian by finite differences of the symbolic first derivatives.
    pub fn hessian_fd(&self, p: &[C64; 3]) -> Result<[[C64; 3]; 3], EvalError> {
        let b = binding(p);
        let mut h = [[C64::new(0.0, 0.0); 3]; 3];
        for j in 0..3 {
            for k in 0..3 {
                h[j][k] = wirtinger_fd(&self.grad[j], &b, Var::cz(k))?;
            }
        }
        Ok(h)
    }

    /// `|2 Re sum_j f_j d rho/dz_j| / (|grad rho| max(1, |X|))`.
    pub fn tangency_residual(&self, x: &VectorField, p: &[C64; 3]) -> Result<f64, SurfaceError> {
        let v = self.rho_at(p)?;
        if !(v.abs() < ON_SURFACE_TOL) {
            return Err(SurfaceError::OffSurface(v.abs()));
        }
        let g = self.gradient_at(p)?;
        let f = x.eval_at(&binding(p).with_params(&self.values))?;
        let s: C64 = (0..3).map(|j| f[j] * g[j]).sum();
        let xn = f.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        Ok((2.0 * s.re).abs() / (self.gradient_norm(&g) * xn.max(1.0)))
    }
}

/// A deterministic stream seed for item `k` under master seed `seed`.
pub fn stream_seed(seed: u64, k: u64) -> u64 {
    let mut z = seed ^ k.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn sample_point<R: Rng>(m: &Hypersurface, values: &ParamValues, rng: &mut R) -> Result<[C64; 3], SurfaceError> {
    m.bind(values)?.sample_point(rng)
}

pub fn complex_tangent_basis(m: &Hypersurface, p: &[C64; 3], values: &ParamValues) -> Result<[[C64; 3]; 2], SurfaceError> {
    m.bind(values)?.complex_tangent_basis(p)
}

pub fn levi_form(m: &Hypersurface, p: &[C64; 3], values: &ParamValues) -> Result<LeviReport, SurfaceError> {
    m.bind(values)?.levi_form(p)
}

pub fn tangency_residual(x: &VectorField, m: &Hypersurface, p: &[C64; 3], values: &ParamValues) -> Result<f64, SurfaceError> {
    m.bind(values)?.tangency_residual(&x.with_params(values), p)
}

/// Classification counts for one parameter binding.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Census {
    pub values: ParamValues,
    pub pseudoconvex: usize,
    pub indefinite: usize,
    pub degenerate: usize,
    pub failures: Vec<String>,
}

impl Census {
    pub fn total(&self) -> usize {
        self.pseudoconvex + self.indefinite + self.degenerate
    }

    /// Every sampled smooth point is strictly pseudoconvex.
    pub fn passes_spc(&self) -> bool {
        self.failures.is_empty() && self.total() > 0 && self.pseudoconvex == self.total()
    }

    pub fn all_indefinite(&self) -> bool {
        self.failures.is_empty() && self.total() > 0 && self.indefinite == self.total()
    }
}

impl fmt::Display for Census {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "params={} spc={} indefinite={} degenerate={} failures={}",
            if self.values.is_empty() { "-".into() } else { format_values(&self.values) },
            self.pseudoconvex,
            self.indefinite,
            self.degenerate,
            self.failures.len()
        )
    }
}

pub fn census(m: &Hypersurface, values: &ParamValues, seed: u64, points: usize) -> Census {
    let mut c = Census { values: values.clone(), pseudoconvex: 0, indefinite: 0, degenerate: 0, failures: vec![] };
    let bound = match m.bind(values) {
        Ok(b) => b,
        Err(e) => {
            c.failures.push(e.to_string());
            return c;
        }
    };
    let reports: Vec<Result<LeviReport, SurfaceError>> =
        bound.sample_points(seed, points).into_par_iter().map(|p| p.and_then(|p| bound.levi_form(&p))).collect();
    for r in reports {
        match r {
            Ok(r) => match r.classification {
                LeviClass::StrictlyPseudoconvex => c.pseudoconvex += 1,
                LeviClass::Indefinite => c.indefinite += 1,
                LeviClass::Degenerate => c.degenerate += 1,
            },
            Err(e) => c.failures.push(e.to_string()),
        }
    }
    c
}

/// Per-binding classification census over a parameter grid.
pub fn classify_family(m: &Hypersurface, grid: &[ParamValues], seed: u64, points: usize) -> Vec<Census> {
    grid.par_iter().enumerate().map(|(k, v)| census(m, v, stream_seed(seed, 1000 + k as u64), points)).collect()
}
