//! Real Lie algebras given by structure constants.
//!
//! Constants are stored for `i < j` only, as expressions in the algebra's
//! parameters. Binding exact rational parameter values yields a
//! [`StructureConstants`] table on which every invariant is computed with
//! exact rational linear algebra.

use std::collections::BTreeMap;
use std::fmt;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::LieError;
use crate::expr::{simplify_with, Expr};
use crate::linalg::{null_space_c, q, rationalize, singular_values, QMatrix, QPoly, Subspace, Q};
use crate::params::{substitute, ParamSpace, ParamValues};
use crate::scalar::rational_to_f64;

const IDEAL_TRIALS: usize = 25;
const PATTERN_TRIALS: usize = 8;
const PATTERN_SEED: u64 = 0x5eed_f00d;
const EIGEN_TOL: f64 = 1e-9;
const RATIONAL_DEN: i64 = 1000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum AlgebraKind {
    Decomposable,
    Solvable,
    Nonsolvable,
}

impl AlgebraKind {
    pub fn as_str(self) -> &'static str {
        match self {
            AlgebraKind::Decomposable => "decomposable",
            AlgebraKind::Solvable => "solvable",
            AlgebraKind::Nonsolvable => "nonsolvable",
        }
    }

    pub fn parse(s: &str) -> Option<AlgebraKind> {
        match s {
            "decomposable" => Some(AlgebraKind::Decomposable),
            "solvable" => Some(AlgebraKind::Solvable),
            "nonsolvable" => Some(AlgebraKind::Nonsolvable),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LieAlgebra {
    pub name: String,
    pub dim: usize,
    pub kind: AlgebraKind,
    pub params: ParamSpace,
    /// Nonzero brackets `[e_i, e_j]`, `i < j`, 0-based, as coefficient vectors.
    brackets: BTreeMap<(usize, usize), Vec<Expr>>,
}

impl LieAlgebra {
    /// Builds the algebra and validates the Jacobi identity symbolically.
    pub fn new(
        name: &str,
        dim: usize,
        kind: AlgebraKind,
        params: ParamSpace,
        entries: Vec<((usize, usize), Vec<Expr>)>,
    ) -> Result<LieAlgebra, LieError> {
        let assumptions = params.assumptions();
        let mut brackets = BTreeMap::new();
        for ((i, j), coeffs) in entries {
            assert!(i != j && i < dim && j < dim && coeffs.len() == dim, "malformed bracket entry");
            let (key, sign) = if i < j { ((i, j), 1) } else { ((j, i), -1) };
            let coeffs: Vec<Expr> = coeffs.into_iter().map(|c| simplify_with(&(Expr::int(sign) * c), &assumptions)).collect();
            if coeffs.iter().any(|c| !c.is_zero()) {
                brackets.insert(key, coeffs);
            }
        }
        let alg = LieAlgebra { name: name.to_string(), dim, kind, params, brackets };
        alg.check_jacobi_symbolic()?;
        Ok(alg)
    }

    /// `c_ij^k` for all `i, j`, using antisymmetry.
    pub fn constant(&self, i: usize, j: usize, k: usize) -> Expr {
        match i.cmp(&j) {
            std::cmp::Ordering::Equal => Expr::zero(),
            std::cmp::Ordering::Less => self.brackets.get(&(i, j)).map_or_else(Expr::zero, |v| v[k].clone()),
            std::cmp::Ordering::Greater => self.brackets.get(&(j, i)).map_or_else(Expr::zero, |v| crate::expr::simplify(&-v[k].clone())),
        }
    }

    pub fn brackets(&self) -> impl Iterator<Item = (&(usize, usize), &Vec<Expr>)> {
        self.brackets.iter()
    }

    fn check_jacobi_symbolic(&self) -> Result<(), LieError> {
        let n = self.dim;
        let a = self.params.assumptions();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in 0..n {
                        let mut terms = Vec::new();
                        for m in 0..n {
                            for (x, y, z) in [(i, j, k), (j, k, i), (k, i, j)] {
                                let c1 = self.constant(x, y, m);
                                if c1.is_zero() {
                                    continue;
                                }
                                let c2 = self.constant(m, z, l);
                                if !c2.is_zero() {
                                    terms.push(c1 * c2);
                                }
                            }
                        }
                        let r = simplify_with(&Expr::Add(terms), &a);
                        if !r.is_zero() {
                            return Err(LieError::Jacobi {
                                name: self.name.clone(),
                                indices: (i + 1, j + 1, k + 1, l + 1),
                                residual: r.to_string(),
                            });
                        }
                    }
                }
            }
        }
        Ok(())
    }

    /// Exact constants at a constraint-satisfying binding.
    pub fn bind(&self, values: &ParamValues) -> Result<StructureConstants, LieError> {
        self.params.check(values)?;
        let n = self.dim;
        let mut sc = StructureConstants::zero(n);
        for (&(i, j), coeffs) in &self.brackets {
            for (k, c) in coeffs.iter().enumerate() {
                let v = substitute(c, values);
                let r = match v.as_const() {
                    Some(s) if s.is_real() => s.re().clone(),
                    _ => return Err(LieError::NotRational(self.name.clone())),
                };
                sc.set(i, j, k, r);
            }
        }
        Ok(sc)
    }

    /// Table of nonzero brackets in the catalog notation.
    pub fn describe(&self) -> Vec<String> {
        self.brackets
            .iter()
            .map(|(&(i, j), coeffs)| format!("[{},{}] = {}", i + 1, j + 1, format_combination(coeffs)))
            .collect()
    }
}

/// Renders `sum_k c_k e_k` with symbolic coefficients.
pub fn format_combination(coeffs: &[Expr]) -> String {
    let mut parts: Vec<String> = Vec::new();
    for (k, c) in coeffs.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let basis = format!("e{}", k + 1);
        let term = if c.is_one() {
            basis
        } else if matches!(c, Expr::Add(_)) {
            format!("({c})*{basis}")
        } else {
            format!("{c}*{basis}")
        };
        parts.push(term);
    }
    if parts.is_empty() {
        return "0".into();
    }
    let mut s = parts[0].clone();
    for p in &parts[1..] {
        match p.strip_prefix('-') {
            Some(rest) => {
                s.push_str(" - ");
                s.push_str(rest);
            }
            None => {
                s.push_str(" + ");
                s.push_str(p);
            }
        }
    }
    s
}

/// Exact rational structure constants, full antisymmetric table.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StructureConstants {
    pub dim: usize,
    c: Vec<Q>,
}

impl StructureConstants {
    pub fn zero(dim: usize) -> StructureConstants {
        StructureConstants { dim, c: vec![Q::zero(); dim * dim * dim] }
    }

    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        (i * self.dim + j) * self.dim + k
    }

    pub fn get(&self, i: usize, j: usize, k: usize) -> &Q {
        &self.c[self.idx(i, j, k)]
    }

    /// Sets `c_ij^k` and `c_ji^k = -c_ij^k`.
    pub fn set(&mut self, i: usize, j: usize, k: usize, v: Q) {
        let a = self.idx(i, j, k);
        let b = self.idx(j, i, k);
        self.c[b] = -v.clone();
        self.c[a] = v;
    }

    pub fn unit(&self, k: usize) -> Vec<Q> {
        (0..self.dim).map(|j| if j == k { Q::one() } else { Q::zero() }).collect()
    }

    pub fn bracket(&self, x: &[Q], y: &[Q]) -> Vec<Q> {
        let n = self.dim;
        let mut out = vec![Q::zero(); n];
        for i in 0..n {
            if x[i].is_zero() {
                continue;
            }
            for j in 0..n {
                if y[j].is_zero() || i == j {
                    continue;
                }
                let f = &x[i] * &y[j];
                for (k, o) in out.iter_mut().enumerate() {
                    let c = self.get(i, j, k);
                    if !c.is_zero() {
                        *o += &f * c;
                    }
                }
            }
        }
        out
    }

    /// Matrix of `ad(x)`: column j is `[x, e_j]`.
    pub fn ad(&self, x: &[Q]) -> QMatrix {
        let n = self.dim;
        let mut m = QMatrix::zeros(n, n);
        for j in 0..n {
            let col = self.bracket(x, &self.unit(j));
            for k in 0..n {
                m[(k, j)] = col[k].clone();
            }
        }
        m
    }

    pub fn is_abelian(&self) -> bool {
        self.c.iter().all(Zero::is_zero)
    }

    /// Largest absolute Jacobi residual over `i < j < k` and all `l`.
    pub fn jacobi_residual(&self) -> Q {
        let n = self.dim;
        let mut worst = Q::zero();
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    for l in 0..n {
                        let mut s = Q::zero();
                        for m in 0..n {
                            s += self.get(i, j, m) * self.get(m, k, l);
                            s += self.get(j, k, m) * self.get(m, i, l);
                            s += self.get(k, i, m) * self.get(m, j, l);
                        }
                        let a = s.abs();
                        if a > worst {
                            worst = a;
                        }
                    }
                }
            }
        }
        worst
    }

    /// The span of all brackets `[a, b]` with `a` in `u`, `b` in `v`.
    pub fn bracket_span(&self, u: &Subspace, v: &Subspace) -> Subspace {
        let mut vecs = Vec::new();
        for a in &u.basis {
            for b in &v.basis {
                let w = self.bracket(a, b);
                if w.iter().any(|x| !x.is_zero()) {
                    vecs.push(w);
                }
            }
        }
        Subspace::span(self.dim, &vecs)
    }

    pub fn whole(&self) -> Subspace {
        Subspace::coordinate(self.dim, &(0..self.dim).collect::<Vec<_>>())
    }

    /// Dimensions of `g, [g,g], [[g,g],[g,g]], ...` until the series stabilizes.
    pub fn derived_series(&self) -> Vec<usize> {
        let mut s = self.whole();
        let mut dims = vec![s.dim()];
        loop {
            let next = self.bracket_span(&s, &s);
            if next.dim() == s.dim() {
                break;
            }
            dims.push(next.dim());
            if next.dim() == 0 {
                break;
            }
            s = next;
        }
        dims
    }

    /// Dimensions of `g, [g,g], [g,[g,g]], ...` until the series stabilizes.
    pub fn lower_central_series(&self) -> Vec<usize> {
        let g = self.whole();
        let mut s = g.clone();
        let mut dims = vec![s.dim()];
        loop {
            let next = self.bracket_span(&g, &s);
            if next.dim() == s.dim() {
                break;
            }
            dims.push(next.dim());
            if next.dim() == 0 {
                break;
            }
            s = next;
        }
        dims
    }

    pub fn center(&self) -> Subspace {
        let n = self.dim;
        // x is central iff sum_i x_i c_ij^k = 0 for all j, k
        let mut a = QMatrix::zeros(n * n, n);
        for j in 0..n {
            for k in 0..n {
                for i in 0..n {
                    a[(j * n + k, i)] = self.get(i, j, k).clone();
                }
            }
        }
        Subspace::span(n, &a.nullspace())
    }

    pub fn killing(&self) -> QMatrix {
        let n = self.dim;
        let ads: Vec<QMatrix> = (0..n).map(|i| self.ad(&self.unit(i))).collect();
        let mut k = QMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let t = ads[i].mul(&ads[j]).trace();
                k[(i, j)] = t.clone();
                k[(j, i)] = t;
            }
        }
        k
    }

    /// Dimension of the derivation algebra.
    pub fn derivation_dim(&self) -> usize {
        let n = self.dim;
        // unknown D_{ak} (D e_a = sum_k D_ak e_k) at column a*n + k
        let var = |a: usize, k: usize| a * n + k;
        let mut rows = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                for l in 0..n {
                    // D[e_i,e_j] - [D e_i, e_j] - [e_i, D e_j] = 0, component l
                    let mut row = vec![Q::zero(); n * n];
                    for m in 0..n {
                        let c = self.get(i, j, m);
                        if !c.is_zero() {
                            row[var(m, l)] += c;
                        }
                        let c = self.get(m, j, l);
                        if !c.is_zero() {
                            row[var(i, m)] -= c;
                        }
                        let c = self.get(i, m, l);
                        if !c.is_zero() {
                            row[var(j, m)] -= c;
                        }
                    }
                    if row.iter().any(|x| !x.is_zero()) {
                        rows.push(row);
                    }
                }
            }
        }
        if rows.is_empty() {
            return n * n;
        }
        n * n - QMatrix::from_rows(&rows).rank()
    }

    /// Constants in the basis `f_a = e_{perm[a]}`.
    pub fn permuted(&self, perm: &[usize]) -> StructureConstants {
        let n = self.dim;
        let mut inv = vec![0; n];
        for (a, &p) in perm.iter().enumerate() {
            inv[p] = a;
        }
        let mut out = StructureConstants::zero(n);
        for a in 0..n {
            for b in 0..n {
                for k in 0..n {
                    let v = self.get(perm[a], perm[b], k);
                    if !v.is_zero() {
                        out.c[(a * n + b) * n + inv[k]] = v.clone();
                    }
                }
            }
        }
        out
    }

    pub fn to_f64_ad(&self, x: &[Q]) -> DMatrix<f64> {
        self.ad(x).to_f64()
    }
}

pub fn jacobi_residual(alg: &LieAlgebra, values: &ParamValues) -> Result<f64, LieError> {
    Ok(rational_to_f64(&alg.bind(values)?.jacobi_residual()))
}

/// Outcome of checking a candidate abelian ideal.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealCertificate {
    pub subspace: Subspace,
    pub abelian: bool,
    pub invariant: bool,
    /// `(i, j, coords)`: `[e_i, s_j]` in the basis of the subspace, or `None` when outside.
    pub expansions: Vec<(usize, usize, Option<Vec<Q>>)>,
    pub failure: Option<String>,
}

impl IdealCertificate {
    pub fn holds(&self) -> bool {
        self.abelian && self.invariant
    }
}

pub fn check_abelian_ideal(sc: &StructureConstants, s: &Subspace) -> IdealCertificate {
    let mut failure = None;
    let mut abelian = true;
    'outer: for a in 0..s.dim() {
        for b in a + 1..s.dim() {
            let w = sc.bracket(&s.basis[a], &s.basis[b]);
            if w.iter().any(|x| !x.is_zero()) {
                abelian = false;
                failure = Some(format!(
                    "[{}, {}] = {} is nonzero",
                    crate::linalg::describe_vector(&s.basis[a]),
                    crate::linalg::describe_vector(&s.basis[b]),
                    crate::linalg::describe_vector(&w)
                ));
                break 'outer;
            }
        }
    }
    let basis_t = QMatrix::from_rows(&s.basis).transpose();
    let mut invariant = true;
    let mut expansions = Vec::new();
    for i in 0..sc.dim {
        for (j, v) in s.basis.iter().enumerate() {
            let w = sc.bracket(&sc.unit(i), v);
            let coords = if s.dim() == 0 { None } else { basis_t.solve(&w) };
            if coords.is_none() && w.iter().any(|x| !x.is_zero()) {
                invariant = false;
                if failure.is_none() {
                    failure = Some(format!(
                        "[e{}, {}] = {} leaves the subspace",
                        i + 1,
                        crate::linalg::describe_vector(v),
                        crate::linalg::describe_vector(&w)
                    ));
                }
            }
            let coords = coords.or_else(|| w.iter().all(Zero::is_zero).then(|| vec![Q::zero(); s.dim()]));
            expansions.push((i, j, coords));
        }
    }
    IdealCertificate { subspace: s.clone(), abelian, invariant, expansions, failure }
}

pub fn verify_abelian_ideal(alg: &LieAlgebra, s: &Subspace, values: &ParamValues) -> Result<IdealCertificate, LieError> {
    Ok(check_abelian_ideal(&alg.bind(values)?, s))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SearchStatus {
    Complete,
    Inconclusive,
}

impl SearchStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            SearchStatus::Complete => "complete",
            SearchStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdealSearch {
    pub ideals: Vec<Subspace>,
    pub status: SearchStatus,
    pub note: String,
    pub trials: usize,
}

/// One generalized eigenspace of `ad(x)`, or a conjugate pair of them.
struct Block {
    mult: usize,
    /// Complex shape: chain (one Jordan block), semisimple, or mixed.
    shape: Shape,
    /// Invariant subspaces of `ad(x)` indexed by complex dimension `d`, when unique.
    chain: Vec<DMatrix<Complex64>>,
    /// Real basis of the eigenspace when the eigenvalue is real.
    kernel: Option<DMatrix<f64>>,
    paired: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Shape {
    Chain,
    Semisimple,
    Mixed,
}

enum TrialOutcome {
    /// Every allocation resolved; the candidates were all tested.
    Complete(Vec<Subspace>),
    Unresolved { found: Vec<Subspace>, continuum: bool, irrational: bool },
}

fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real orthonormal basis of the span of the real and imaginary parts.
fn real_span(vectors: &DMatrix<Complex64>) -> DMatrix<f64> {
    let n = vectors.nrows();
    let mut cols: Vec<DVector<f64>> = Vec::new();
    for c in vectors.column_iter() {
        cols.push(c.map(|z| z.re));
        cols.push(c.map(|z| z.im));
    }
    orthonormal(n, &cols)
}

fn orthonormal(n: usize, cols: &[DVector<f64>]) -> DMatrix<f64> {
    if cols.is_empty() {
        return DMatrix::zeros(n, 0);
    }
    let m = DMatrix::from_columns(cols);
    let svd = m.svd(true, false);
    let u = svd.u.expect("left singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let keep: Vec<usize> = (0..svd.singular_values.len()).filter(|&k| svd.singular_values[k] > EIGEN_TOL * top.max(1.0)).collect();
    DMatrix::from_columns(&keep.iter().map(|&k| u.column(k).into_owned()).collect::<Vec<_>>())
}

fn mat_pow(m: &DMatrix<Complex64>, k: usize) -> DMatrix<Complex64> {
    let mut r = DMatrix::<Complex64>::identity(m.nrows(), m.ncols());
    for _ in 0..k {
        r = &r * m;
    }
    r
}

/// Decomposes `ad(x)` into generalized eigenspace blocks.
fn blocks(m: &QMatrix) -> Option<Vec<Block>> {
    let n = m.rows;
    let mf = to_complex(&m.to_f64());
    let mut roots: Vec<(Complex64, usize)> = Vec::new();
    for (k, s) in m.charpoly().squarefree() {
        for r in s.roots() {
            roots.push((r, k));
        }
    }
    for a in 0..roots.len() {
        for b in a + 1..roots.len() {
            if (roots[a].0 - roots[b].0).norm() < 1e-6 {
                return None;
            }
        }
    }
    let scale = mf.norm().max(1.0);
    let mut out = Vec::new();
    for &(lam, k) in &roots {
        if lam.im < -1e-9 * scale {
            continue;
        }
        let real = lam.im.abs() <= 1e-9 * scale;
        let lam = if real { Complex64::new(lam.re, 0.0) } else { lam };
        let shifted = &mf - DMatrix::<Complex64>::identity(n, n) * lam;
        let mut chain = vec![DMatrix::<Complex64>::zeros(n, 0)];
        let mut dims = vec![0];
        for d in 1..=k {
            let ns = null_space_c(&mat_pow(&shifted, d), 1e-7);
            dims.push(ns.len());
            chain.push(if ns.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&ns) });
        }
        if dims[k] != k {
            return None;
        }
        let geo = dims[1];
        let shape = if geo == 1 {
            Shape::Chain
        } else if geo == k {
            Shape::Semisimple
        } else {
            Shape::Mixed
        };
        let kernel = real.then(|| real_span(&chain[1]));
        if let Some(kr) = &kernel {
            if kr.ncols() != geo {
                return None;
            }
        }
        out.push(Block { mult: k, shape, chain, kernel, paired: !real });
    }
    Some(out)
}

/// All ways to pick complex dimensions per block with total real dimension 3.
fn allocations(blocks: &[Block]) -> Vec<Vec<usize>> {
    fn rec(blocks: &[Block], k: usize, left: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if k == blocks.len() {
            if left == 0 {
                out.push(cur.clone());
            }
            return;
        }
        let w = if blocks[k].paired { 2 } else { 1 };
        for d in 0..=blocks[k].mult {
            if d * w > left {
                break;
            }
            cur.push(d);
            rec(blocks, k + 1, left - d * w, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(blocks, 0, 3, &mut Vec::new(), &mut out);
    out
}

/// Numeric `[e_i, .]` maps.
fn numeric_ads(sc: &StructureConstants) -> Vec<DMatrix<f64>> {
    (0..sc.dim).map(|i| sc.ad(&sc.unit(i)).to_f64()).collect()
}

fn numeric_ideal_residual(ads: &[DMatrix<f64>], basis: &DMatrix<f64>) -> f64 {
    let n = basis.nrows();
    let proj = DMatrix::<f64>::identity(n, n) - basis * basis.transpose();
    let mut worst: f64 = 0.0;
    for a in ads {
        worst = worst.max((&proj * a * basis).norm());
    }
    for a in 0..basis.ncols() {
        for b in a + 1..basis.ncols() {
            let x = basis.column(a);
            let ax: DMatrix<f64> = ads.iter().enumerate().fold(DMatrix::zeros(n, n), |acc, (i, m)| acc + m * x[i]);
            worst = worst.max((ax * basis.column(b)).norm());
        }
    }
    worst
}

/// Exact subspace from a numeric basis, when its reduced echelon form is rational.
fn rationalize_subspace(basis: &DMatrix<f64>) -> Option<Subspace> {
    let n = basis.nrows();
    let d = basis.ncols();
    let mut m = basis.transpose();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        if r == d {
            break;
        }
        let (p, best) = (r..d).map(|i| (i, m[(i, c)].abs())).fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best < 1e-7 {
            continue;
        }
        m.swap_rows(r, p);
        let piv = m[(r, c)];
        for j in 0..n {
            m[(r, j)] /= piv;
        }
        for i in 0..d {
            if i != r {
                let f = m[(i, c)];
                for j in 0..n {
                    let v = m[(r, j)] * f;
                    m[(i, j)] -= v;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    if r != d {
        return None;
    }
    let mut rows = Vec::new();
    for i in 0..d {
        let mut row = Vec::with_capacity(n);
        for j in 0..n {
            let x = m[(i, j)];
            let v = rationalize(x, RATIONAL_DEN)?;
            if (rational_to_f64(&v) - x).abs() > 1e-9 * x.abs().max(1.0) {
                return None;
            }
            row.push(v);
        }
        rows.push(row);
    }
    Some(Subspace::span(n, &rows))
}

/// Lines `w` in a semisimple real block with `span(rest, w)` an abelian ideal.
fn resolve_line(ads: &[DMatrix<f64>], kernel: &DMatrix<f64>, rest: &DMatrix<f64>) -> Result<Vec<DMatrix<f64>>, bool> {
    let n = kernel.nrows();
    let proj = DMatrix::<f64>::identity(n, n) - rest * rest.transpose();
    let v = &proj * kernel;
    let v_pinv = v.clone().pseudo_inverse(1e-12).map_err(|_| false)?;
    let mut k_basis = DMatrix::<f64>::identity(kernel.ncols(), kernel.ncols());
    // repeatedly impose the linear part of the invariance and abelian conditions
    for _ in 0..kernel.ncols() + 1 {
        if k_basis.ncols() == 0 {
            return Ok(vec![]);
        }
        let mut constraints: Vec<DMatrix<f64>> = Vec::new();
        let mut bs: Vec<DMatrix<f64>> = Vec::new();
        for a in ads {
            let t = &proj * a * kernel * &k_basis;
            let b = &v_pinv * &t;
            constraints.push(&t - &v * &b);
            let kp = k_basis.clone().pseudo_inverse(1e-12).map_err(|_| false)?;
            let c = &kp * &b;
            constraints.push(&b - &k_basis * &c);
            bs.push(c);
        }
        for r in rest.column_iter() {
            let ar: DMatrix<f64> = ads.iter().enumerate().fold(DMatrix::zeros(n, n), |acc, (i, m)| acc + m * r[i]);
            constraints.push(ar * kernel * &k_basis);
        }
        let stacked = DMatrix::from_rows(
            &constraints.iter().flat_map(|c| c.row_iter().map(|r| r.into_owned()).collect::<Vec<_>>()).collect::<Vec<_>>(),
        );
        let sv = singular_values(&stacked);
        let top = sv.first().copied().unwrap_or(0.0);
        let rank = sv.iter().filter(|&&s| s > 1e-8 * top.max(1.0)).count();
        if rank == 0 {
            let k = k_basis.ncols();
            if k == 1 {
                return Ok(vec![kernel * &k_basis]);
            }
            // all conditions left are eigenvector conditions for the maps in `bs`
            let mut rng = ChaCha8Rng::seed_from_u64(k as u64 + 17);
            let mut comb = DMatrix::<f64>::zeros(k, k);
            for b in &bs {
                comb += b * rng.gen_range(-1.0..1.0);
            }
            if bs.iter().all(|b| (b - DMatrix::<f64>::identity(k, k) * b[(0, 0)]).norm() < 1e-8) {
                return Err(true);
            }
            let eig = comb.complex_eigenvalues();
            let mut lines = Vec::new();
            for a in 0..k {
                let lam = eig[a];
                if lam.im.abs() > 1e-9 {
                    continue;
                }
                if (0..k).any(|b| b != a && (eig[b] - lam).norm() < 1e-6) {
                    return Err(false);
                }
                let shifted = &comb - DMatrix::<f64>::identity(k, k) * lam.re;
                let ns = null_space_c(&to_complex(&shifted), 1e-8);
                if ns.len() != 1 {
                    return Err(false);
                }
                let bvec = ns[0].map(|z| z.re);
                lines.push(kernel * &k_basis * bvec);
            }
            return Ok(lines.into_iter().map(|l| DMatrix::from_columns(&[l.column(0).into_owned()])).collect());
        }
        let svd = stacked.svd(false, true);
        let v_t = svd.v_t.expect("right singular vectors");
        let cols = k_basis.ncols();
        let null: Vec<DVector<f64>> =
            (0..cols).filter(|&i| svd.singular_values[i] <= 1e-8 * top.max(1.0)).map(|i| v_t.row(i).transpose()).collect();
        if null.is_empty() {
            return Ok(vec![]);
        }
        k_basis = &k_basis * DMatrix::from_columns(&null);
    }
    Err(false)
}

fn trial(sc: &StructureConstants, x: &[Q]) -> TrialOutcome {
    let n = sc.dim;
    let ads = numeric_ads(sc);
    let unresolved = |found| TrialOutcome::Unresolved { found, continuum: false, irrational: false };
    let Some(bl) = blocks(&sc.ad(x)) else {
        return unresolved(vec![]);
    };
    let mut complete = true;
    let mut continuum = false;
    let mut irrational = false;
    let mut candidates: Vec<DMatrix<f64>> = Vec::new();
    for alloc in allocations(&bl) {
        let mut fixed: Vec<DVector<f64>> = Vec::new();
        let mut family: Option<usize> = None;
        let mut ok = true;
        for (k, &d) in alloc.iter().enumerate() {
            let b = &bl[k];
            if d == 0 {
                continue;
            }
            if d == b.mult || b.shape == Shape::Chain {
                let sp = real_span(&b.chain[d]);
                fixed.extend(sp.column_iter().map(|c| c.into_owned()));
            } else if b.shape == Shape::Semisimple && d == 1 && !b.paired && family.is_none() {
                family = Some(k);
            } else {
                ok = false;
            }
        }
        if !ok {
            complete = false;
            continue;
        }
        let rest = orthonormal(n, &fixed);
        match family {
            None => candidates.push(rest),
            Some(k) => match resolve_line(&ads, bl[k].kernel.as_ref().expect("real block"), &rest) {
                Ok(lines) => {
                    for l in lines {
                        let mut cols = fixed.clone();
                        cols.push(l.column(0).into_owned());
                        candidates.push(orthonormal(n, &cols));
                    }
                }
                Err(c) => {
                    continuum |= c;
                    complete = false;
                }
            },
        }
    }
    let mut found = Vec::new();
    for c in candidates {
        if c.ncols() != 3 || numeric_ideal_residual(&ads, &c) > 1e-7 {
            continue;
        }
        match rationalize_subspace(&c) {
            Some(s) if check_abelian_ideal(sc, &s).holds() => found.push(s),
            _ => {
                irrational = true;
                complete = false;
            }
        }
    }
    if complete {
        TrialOutcome::Complete(found)
    } else {
        TrialOutcome::Unresolved { found, continuum, irrational }
    }
}

/// Searches for 3-dimensional abelian ideals at exact parameter values.
pub fn find_abelian_ideals_3d(alg: &LieAlgebra, values: &ParamValues, seed: u64) -> Result<IdealSearch, LieError> {
    let sc = alg.bind(values)?;
    Ok(search_ideals(&sc, seed))
}

pub fn search_ideals(sc: &StructureConstants, seed: u64) -> IdealSearch {
    let n = sc.dim;
    let mut ideals: Vec<Subspace> = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let s = Subspace::coordinate(n, &[a, b, c]);
                if check_abelian_ideal(sc, &s).holds() {
                    ideals.push(s);
                }
            }
        }
    }
    if sc.is_abelian() {
        return IdealSearch {
            ideals,
            status: SearchStatus::Inconclusive,
            note: "continuum: the algebra is abelian, so every 3-dimensional subspace is an abelian ideal".into(),
            trials: 0,
        };
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut continuum = false;
    let mut irrational = false;
    for t in 1..=IDEAL_TRIALS {
        let x: Vec<Q> = (0..n).map(|_| q(rng.gen_range(-5..=5))).collect();
        match trial(sc, &x) {
            TrialOutcome::Complete(found) => {
                for s in found {
                    if !ideals.contains(&s) {
                        ideals.push(s);
                    }
                }
                ideals.sort();
                return IdealSearch { ideals, status: SearchStatus::Complete, note: String::new(), trials: t };
            }
            TrialOutcome::Unresolved { found, continuum: c, irrational: i } => {
                continuum |= c;
                irrational |= i;
                for s in found {
                    if !ideals.contains(&s) {
                        ideals.push(s);
                    }
                }
            }
        }
    }
    ideals.sort();
    let note = if continuum {
        "continuum: a positive-dimensional family of invariant subspaces satisfies every linear condition".to_string()
    } else if irrational {
        "a numerically valid candidate has no rational basis and was not certified".to_string()
    } else {
        format!("degenerate ad-spectrum left a family of invariant subspaces unresolved in all {IDEAL_TRIALS} trials")
    };
    IdealSearch { ideals, status: SearchStatus::Inconclusive, note, trials: IDEAL_TRIALS }
}

/// Isomorphism invariants computed from exact structure constants.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Fingerprint {
    pub derived_series: Vec<usize>,
    pub lower_central_series: Vec<usize>,
    pub center_dim: usize,
    pub derived_dim: usize,
    pub killing_signature: (usize, usize, usize),
    pub solvable: bool,
    pub nilpotent: bool,
    pub derivation_dim: usize,
    /// For generic `x`: (multiplicity, number of distinct eigenvalues, summed geometric multiplicity).
    pub ad_pattern: Vec<(usize, usize, usize)>,
}

impl fmt::Display for Fingerprint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let (p, z, m) = self.killing_signature;
        write!(
            f,
            "derived={:?} lower_central={:?} center={} dim_derived={} killing=({p},{z},{m}) solvable={} nilpotent={} der={} ad_pattern={:?}",
            self.derived_series,
            self.lower_central_series,
            self.center_dim,
            self.derived_dim,
            self.solvable,
            self.nilpotent,
            self.derivation_dim,
            self.ad_pattern
        )
    }
}

fn ad_pattern(sc: &StructureConstants) -> Vec<(usize, usize, usize)> {
    let n = sc.dim;
    let mut rng = ChaCha8Rng::seed_from_u64(PATTERN_SEED);
    let mut best: Option<(usize, usize, Vec<(usize, usize, usize)>)> = None;
    for _ in 0..PATTERN_TRIALS {
        let x: Vec<Q> = (0..n).map(|_| q(rng.gen_range(-5..=5))).collect();
        let m = sc.ad(&x);
        let pattern: Vec<(usize, usize, usize)> = m
            .charpoly()
            .squarefree()
            .into_iter()
            .map(|(k, s): (usize, QPoly)| {
                let deg = s.degree().unwrap_or(0);
                let ker = n - s.eval_matrix(&m).rank();
                (k, deg, ker)
            })
            .collect();
        let distinct: usize = pattern.iter().map(|p| p.1).sum();
        let geo: usize = pattern.iter().map(|p| p.2).sum();
        let candidate = (distinct, geo, pattern);
        let better = match &best {
            None => true,
            Some((d, g, p)) => (candidate.0, std::cmp::Reverse(candidate.1), std::cmp::Reverse(&candidate.2)) > (*d, std::cmp::Reverse(*g), std::cmp::Reverse(p)),
        };
        if better {
            best = Some(candidate);
        }
    }
    best.map(|b| b.2).unwrap_or_default()
}

pub fn fingerprint_of(sc: &StructureConstants) -> Fingerprint {
    let derived_series = sc.derived_series();
    let lower_central_series = sc.lower_central_series();
    let (p, z, m) = sc.killing().inertia();
    Fingerprint {
        solvable: derived_series.last() == Some(&0),
        nilpotent: lower_central_series.last() == Some(&0),
        derived_dim: derived_series.get(1).copied().unwrap_or(sc.dim),
        derived_series,
        lower_central_series,
        center_dim: sc.center().dim(),
        killing_signature: (p, z, m),
        derivation_dim: sc.derivation_dim(),
        ad_pattern: ad_pattern(sc),
    }
}

pub fn fingerprint(alg: &LieAlgebra, values: &ParamValues) -> Result<Fingerprint, LieError> {
    Ok(fingerprint_of(&alg.bind(values)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{Constraint, ParamDecl};

    fn e(k: usize, dim: usize, c: Expr) -> Vec<Expr> {
        (0..dim).map(|j| if j == k { c.clone() } else { Expr::zero() }).collect()
    }

    fn qv(v: &[i64]) -> Vec<Q> {
        v.iter().map(|&x| q(x)).collect()
    }

    fn m9() -> LieAlgebra {
        let one = Expr::one();
        LieAlgebra::new(
            "m9",
            5,
            AlgebraKind::Decomposable,
            ParamSpace::default(),
            vec![((0, 1), e(0, 5, one.clone())), ((0, 2), e(1, 5, Expr::int(2))), ((1, 2), e(2, 5, one))],
        )
        .unwrap()
    }

    fn m26() -> LieAlgebra {
        let qp = Expr::param("q");
        let mut e24 = e(1, 5, qp.clone());
        e24[2] = Expr::int(-1);
        let mut e34 = e(1, 5, Expr::one());
        e34[2] = qp.clone();
        LieAlgebra::new(
            "m26",
            5,
            AlgebraKind::Decomposable,
            ParamSpace::new(vec![ParamDecl::new("q", vec![Constraint::Ge(q(0))])]),
            vec![
                ((0, 3), e(0, 5, Expr::int(2) * qp)),
                ((1, 2), e(0, 5, Expr::one())),
                ((1, 3), e24),
                ((2, 3), e34),
            ],
        )
        .unwrap()
    }

    #[test]
    fn jacobi_failure_is_reported() {
        // [e1,e2]=e3, [e2,e3]=e1, [e1,e3]=e1 violates Jacobi
        let err = LieAlgebra::new(
            "bad",
            3,
            AlgebraKind::Solvable,
            ParamSpace::default(),
            vec![((0, 1), e(2, 3, Expr::one())), ((1, 2), e(0, 3, Expr::one())), ((0, 2), e(0, 3, Expr::one()))],
        )
        .unwrap_err();
        assert!(matches!(err, LieError::Jacobi { indices: (1, 2, 3, _), .. }));
    }

    #[test]
    fn antisymmetry_is_structural() {
        let a = m9();
        assert_eq!(a.constant(1, 0, 0), Expr::int(-1));
        assert_eq!(a.constant(2, 0, 1), Expr::int(-2));
        assert!(a.constant(3, 3, 3).is_zero());
    }

    #[test]
    fn sl2_plus_abelian_invariants() {
        let f = fingerprint(&m9(), &ParamValues::new()).unwrap();
        assert_eq!(f.derived_dim, 3);
        assert_eq!(f.killing_signature, (2, 2, 1));
        assert!(!f.solvable);
        assert_eq!(f.center_dim, 2);
    }

    #[test]
    fn m26_has_no_abelian_triple() {
        let mut v = ParamValues::new();
        v.insert("q".into(), q(1));
        let alg = m26();
        assert_eq!(jacobi_residual(&alg, &v).unwrap(), 0.0);
        let cert = verify_abelian_ideal(&alg, &Subspace::coordinate(5, &[0, 1, 2]), &v).unwrap();
        assert!(!cert.abelian);
        let search = find_abelian_ideals_3d(&alg, &v, 42).unwrap();
        assert!(search.ideals.is_empty(), "{:?}", search.ideals);
        assert_eq!(search.status, SearchStatus::Complete, "{}", search.note);
    }

    #[test]
    fn m26_rejects_negative_parameter() {
        let mut v = ParamValues::new();
        v.insert("q".into(), q(-1));
        assert!(matches!(m26().bind(&v), Err(LieError::Param(_))));
    }

    #[test]
    fn abelian_algebra_reports_continuum() {
        let a = LieAlgebra::new("m1", 5, AlgebraKind::Decomposable, ParamSpace::default(), vec![]).unwrap();
        let s = find_abelian_ideals_3d(&a, &ParamValues::new(), 42).unwrap();
        assert_eq!(s.ideals.len(), 10);
        assert_eq!(s.status, SearchStatus::Inconclusive);
        assert!(s.note.starts_with("continuum"));
        let f = fingerprint(&a, &ParamValues::new()).unwrap();
        assert_eq!(f.derived_series, vec![5, 0]);
        assert_eq!(f.center_dim, 5);
        assert_eq!(f.killing_signature, (0, 5, 0));
        assert_eq!(f.derivation_dim, 25);
    }

    #[test]
    fn non_coordinate_ideal_is_found() {
        // e4 acts on span{e1, e2} with eigenvector e1 + e2, on e3 and on e5
        let mut sc = StructureConstants::zero(5);
        sc.set(3, 0, 0, q(1));
        sc.set(3, 0, 1, q(1));
        sc.set(3, 1, 0, q(1));
        sc.set(3, 1, 1, q(1));
        sc.set(3, 2, 2, q(3));
        sc.set(3, 4, 4, q(-2));
        assert_eq!(sc.jacobi_residual(), Q::zero());
        let target = Subspace::span(5, &[qv(&[1, 1, 0, 0, 0]), qv(&[0, 0, 1, 0, 0]), qv(&[0, 0, 0, 0, 1])]);
        assert!(check_abelian_ideal(&sc, &target).holds());
        let s = search_ideals(&sc, 42);
        assert!(s.ideals.contains(&target), "{:?} {}", s.ideals, s.note);
    }

    #[test]
    fn permutation_preserves_fingerprint() {
        let mut v = ParamValues::new();
        v.insert("q".into(), q(1));
        let sc = m26().bind(&v).unwrap();
        let f = fingerprint_of(&sc);
        for perm in [[4, 3, 2, 1, 0], [1, 0, 3, 2, 4], [2, 4, 0, 1, 3]] {
            let p = sc.permuted(&perm);
            assert_eq!(p.jacobi_residual(), Q::zero());
            assert_eq!(fingerprint_of(&p), f);
        }
    }

    #[test]
    fn certificate_expands_brackets() {
        let a = m9();
        let s = Subspace::coordinate(5, &[0, 1, 2]);
        let c = verify_abelian_ideal(&a, &s, &ParamValues::new()).unwrap();
        assert!(c.invariant);
        assert!(!c.abelian);
        let s = Subspace::coordinate(5, &[0, 3, 4]);
        let c = verify_abelian_ideal(&a, &s, &ParamValues::new()).unwrap();
        assert!(c.abelian && !c.invariant);
        assert!(c.failure.unwrap().contains("leaves"));
    }
}
