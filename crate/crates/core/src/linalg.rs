//! Exact linear algebra over Q, rational polynomials, and SVD-based numeric rank.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

pub type Q = BigRational;

pub fn q(n: i64) -> Q {
    Q::from_integer(n.into())
}

/// Row-major dense rational matrix.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Q>,
}

impl QMatrix {
    pub fn zeros(rows: usize, cols: usize) -> QMatrix {
        QMatrix { rows, cols, data: vec![Q::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> QMatrix {
        let mut m = QMatrix::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = Q::one();
        }
        m
    }

    pub fn from_rows(rows: &[Vec<Q>]) -> QMatrix {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            assert_eq!(r.len(), cols, "ragged rows");
            data.extend(r.iter().cloned());
        }
        QMatrix { rows: rows.len(), cols, data }
    }

    pub fn row(&self, i: usize) -> Vec<Q> {
        self.data[i * self.cols..(i + 1) * self.cols].to_vec()
    }

    pub fn column(&self, j: usize) -> Vec<Q> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> QMatrix {
        let mut t = QMatrix::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t[(j, i)] = self[(i, j)].clone();
            }
        }
        t
    }

    pub fn mul(&self, other: &QMatrix) -> QMatrix {
        assert_eq!(self.cols, other.rows);
        let mut out = QMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = &other[(k, j)];
                    if !b.is_zero() {
                        out[(i, j)] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[Q]) -> Vec<Q> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).fold(Q::zero(), |acc, j| acc + &self[(i, j)] * &v[j]))
            .collect()
    }

    pub fn trace(&self) -> Q {
        (0..self.rows.min(self.cols)).fold(Q::zero(), |acc, i| acc + &self[(i, i)])
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(Zero::is_zero)
    }

    /// Reduced row echelon form; returns the pivot columns.
    pub fn rref(&mut self) -> Vec<usize> {
        let mut pivots = Vec::new();
        let mut r = 0;
        for c in 0..self.cols {
            if r == self.rows {
                break;
            }
            let Some(p) = (r..self.rows).find(|&i| !self[(i, c)].is_zero()) else {
                continue;
            };
            self.swap_rows(r, p);
            let inv = self[(r, c)].recip();
            for j in c..self.cols {
                let v = &self[(r, j)] * &inv;
                self[(r, j)] = v;
            }
            for i in 0..self.rows {
                if i == r || self[(i, c)].is_zero() {
                    continue;
                }
                let f = self[(i, c)].clone();
                for j in c..self.cols {
                    let v = &self[(r, j)] * &f;
                    self[(i, j)] -= v;
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots
    }

    fn swap_rows(&mut self, a: usize, b: usize) {
        if a == b {
            return;
        }
        for j in 0..self.cols {
            self.data.swap(a * self.cols + j, b * self.cols + j);
        }
    }

    pub fn rank(&self) -> usize {
        self.clone().rref().len()
    }

    /// Basis of the right null space.
    pub fn nullspace(&self) -> Vec<Vec<Q>> {
        let mut m = self.clone();
        let pivots = m.rref();
        let free: Vec<usize> = (0..self.cols).filter(|c| !pivots.contains(c)).collect();
        free.iter()
            .map(|&f| {
                let mut v = vec![Q::zero(); self.cols];
                v[f] = Q::one();
                for (r, &p) in pivots.iter().enumerate() {
                    v[p] = -m[(r, f)].clone();
                }
                v
            })
            .collect()
    }

    /// A solution of `self * x = b`, if one exists.
    pub fn solve(&self, b: &[Q]) -> Option<Vec<Q>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = QMatrix::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, self.cols)] = b[i].clone();
        }
        let pivots = aug.rref();
        if pivots.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![Q::zero(); self.cols];
        for (r, &p) in pivots.iter().enumerate() {
            x[p] = aug[(r, self.cols)].clone();
        }
        Some(x)
    }

    /// Exact characteristic polynomial det(tI - A) via Faddeev-LeVerrier.
    pub fn charpoly(&self) -> QPoly {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut coeffs = vec![Q::zero(); n + 1];
        coeffs[n] = Q::one();
        let mut m = QMatrix::zeros(n, n);
        for k in 1..=n {
            let mut next = self.mul(&m);
            let c_prev = coeffs[n - k + 1].clone();
            for i in 0..n {
                next[(i, i)] += &c_prev;
            }
            m = next;
            let am = self.mul(&m);
            coeffs[n - k] = -am.trace() / q(k as i64);
        }
        QPoly::new(coeffs)
    }

    /// Counts of positive, zero and negative entries of a congruent diagonal form.
    pub fn inertia(&self) -> (usize, usize, usize) {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut a = self.clone();
        let mut diag = Vec::with_capacity(n);
        let mut k = 0;
        while k < n {
            let Some(p) = (k..n).find(|&i| !a[(i, i)].is_zero()) else {
                let pair = (k..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).find(|&(i, j)| !a[(i, j)].is_zero());
                match pair {
                    Some((i, j)) => {
                        // e_i += e_j makes the diagonal entry 2 a_ij nonzero
                        for c in 0..n {
                            let v = a[(j, c)].clone();
                            a[(i, c)] += v;
                        }
                        for r in 0..n {
                            let v = a[(r, j)].clone();
                            a[(r, i)] += v;
                        }
                        continue;
                    }
                    None => {
                        diag.extend(std::iter::repeat_n(Q::zero(), n - k));
                        break;
                    }
                }
            };
            a.swap_rows(k, p);
            for r in 0..n {
                a.data.swap(r * n + k, r * n + p);
            }
            let d = a[(k, k)].clone();
            for i in k + 1..n {
                if a[(i, k)].is_zero() {
                    continue;
                }
                let f = &a[(i, k)] / &d;
                for c in k..n {
                    let v = &a[(k, c)] * &f;
                    a[(i, c)] -= v;
                }
                for r in k..n {
                    let v = &a[(r, k)] * &f;
                    a[(r, i)] -= v;
                }
            }
            diag.push(d);
            k += 1;
        }
        let pos = diag.iter().filter(|d| d.is_positive()).count();
        let neg = diag.iter().filter(|d| d.is_negative()).count();
        (pos, n - pos - neg, neg)
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.rows, self.cols, |i, j| crate::scalar::rational_to_f64(&self[(i, j)]))
    }
}

impl std::ops::Index<(usize, usize)> for QMatrix {
    type Output = Q;
    fn index(&self, (i, j): (usize, usize)) -> &Q {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for QMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Q {
        &mut self.data[i * self.cols + j]
    }
}

/// Exact subspace of Q^n stored as a reduced row echelon basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Subspace {
    pub ambient: usize,
    pub basis: Vec<Vec<Q>>,
}

impl Subspace {
    pub fn span(ambient: usize, vectors: &[Vec<Q>]) -> Subspace {
        if vectors.is_empty() {
            return Subspace { ambient, basis: vec![] };
        }
        let mut m = QMatrix::from_rows(vectors);
        let r = m.rref().len();
        Subspace { ambient, basis: (0..r).map(|i| m.row(i)).collect() }
    }

    /// Span of the listed coordinate vectors (0-based).
    pub fn coordinate(ambient: usize, indices: &[usize]) -> Subspace {
        let vectors: Vec<Vec<Q>> = indices
            .iter()
            .map(|&k| (0..ambient).map(|j| if j == k { Q::one() } else { Q::zero() }).collect())
            .collect();
        Subspace::span(ambient, &vectors)
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        if v.iter().all(Zero::is_zero) {
            return true;
        }
        let mut rows = self.basis.clone();
        rows.push(v.to_vec());
        QMatrix::from_rows(&rows).rank() == self.dim()
    }

    /// The coordinate indices when this is a coordinate subspace.
    pub fn coordinate_indices(&self) -> Option<Vec<usize>> {
        let mut idx = Vec::new();
        for row in &self.basis {
            let nz: Vec<usize> = (0..row.len()).filter(|&j| !row[j].is_zero()).collect();
            if nz.len() != 1 {
                return None;
            }
            idx.push(nz[0]);
        }
        Some(idx)
    }

    pub fn describe(&self) -> String {
        let names: Vec<String> = self.basis.iter().map(|v| describe_vector(v)).collect();
        format!("span{{{}}}", names.join(", "))
    }
}

/// Renders a coefficient vector as a combination of `e1..en`.
pub fn describe_vector(v: &[Q]) -> String {
    let mut s = String::new();
    for (k, c) in v.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        let mag = c.abs();
        let coef = if mag.is_one() { String::new() } else { format!("{}*", crate::scalar::format_rational(&mag)) };
        if s.is_empty() {
            if c.is_negative() {
                s.push('-');
            }
        } else {
            s.push_str(if c.is_negative() { " - " } else { " + " });
        }
        s.push_str(&format!("{coef}e{}", k + 1));
    }
    if s.is_empty() {
        s.push('0');
    }
    s
}

/// Dense univariate polynomial with rational coefficients, lowest degree first.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QPoly {
    pub coeffs: Vec<Q>,
}

impl QPoly {
    pub fn new(mut coeffs: Vec<Q>) -> QPoly {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        QPoly { coeffs }
    }

    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    fn lead(&self) -> &Q {
        self.coeffs.last().expect("nonzero polynomial")
    }

    pub fn monic(&self) -> QPoly {
        if self.is_zero() {
            return self.clone();
        }
        let l = self.lead().clone();
        QPoly::new(self.coeffs.iter().map(|c| c / &l).collect())
    }

    pub fn derivative(&self) -> QPoly {
        QPoly::new(self.coeffs.iter().enumerate().skip(1).map(|(k, c)| c * q(k as i64)).collect())
    }

    pub fn sub(&self, other: &QPoly) -> QPoly {
        let n = self.coeffs.len().max(other.coeffs.len());
        QPoly::new(
            (0..n)
                .map(|k| {
                    self.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
                        - other.coeffs.get(k).cloned().unwrap_or_else(Q::zero)
                })
                .collect(),
        )
    }

    pub fn mul(&self, other: &QPoly) -> QPoly {
        if self.is_zero() || other.is_zero() {
            return QPoly::new(vec![]);
        }
        let mut out = vec![Q::zero(); self.coeffs.len() + other.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in other.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        QPoly::new(out)
    }

    /// Quotient and remainder.
    pub fn divrem(&self, d: &QPoly) -> (QPoly, QPoly) {
        assert!(!d.is_zero(), "polynomial division by zero");
        let mut r = self.coeffs.clone();
        let dd = d.coeffs.len() - 1;
        if r.len() <= dd {
            return (QPoly::new(vec![]), self.clone());
        }
        let mut quot = vec![Q::zero(); r.len() - dd];
        let l = d.lead().clone();
        for k in (0..quot.len()).rev() {
            let c = &r[k + dd] / &l;
            if !c.is_zero() {
                for (j, dc) in d.coeffs.iter().enumerate() {
                    r[k + j] -= &c * dc;
                }
            }
            quot[k] = c;
        }
        r.truncate(dd);
        (QPoly::new(quot), QPoly::new(r))
    }

    pub fn gcd(&self, other: &QPoly) -> QPoly {
        let (mut a, mut b) = (self.clone(), other.clone());
        while !b.is_zero() {
            let r = a.divrem(&b).1;
            a = b;
            b = r;
        }
        a.monic()
    }

    /// Yun's algorithm: monic squarefree `s_k` with self ~ prod s_k^k.
    pub fn squarefree(&self) -> Vec<(usize, QPoly)> {
        let f = self.monic();
        let mut out = Vec::new();
        if f.degree().unwrap_or(0) == 0 {
            return out;
        }
        let fp = f.derivative();
        let mut a = f.gcd(&fp);
        let mut b = f.divrem(&a).0;
        let mut c = fp.divrem(&a).0;
        let mut d = c.sub(&b.derivative());
        let mut k = 1;
        while b.degree().unwrap_or(0) > 0 {
            a = b.gcd(&d);
            if a.degree().unwrap_or(0) > 0 {
                out.push((k, a.clone()));
            }
            b = b.divrem(&a).0;
            c = d.divrem(&a).0;
            d = c.sub(&b.derivative());
            k += 1;
        }
        out
    }

    /// Evaluates at a square matrix.
    pub fn eval_matrix(&self, m: &QMatrix) -> QMatrix {
        let n = m.rows;
        let mut acc = QMatrix::zeros(n, n);
        for c in self.coeffs.iter().rev() {
            acc = acc.mul(m);
            for i in 0..n {
                acc[(i, i)] += c;
            }
        }
        acc
    }

    /// Numeric roots from the companion matrix, refined by Newton steps.
    pub fn roots(&self) -> Vec<Complex64> {
        let p = self.monic();
        let Some(n) = p.degree() else { return vec![] };
        if n == 0 {
            return vec![];
        }
        let c: Vec<f64> = p.coeffs.iter().map(crate::scalar::rational_to_f64).collect();
        let companion = DMatrix::from_fn(n, n, |i, j| {
            if j == n - 1 {
                -c[i]
            } else if i == j + 1 {
                1.0
            } else {
                0.0
            }
        });
        let dp: Vec<f64> = p.derivative().coeffs.iter().map(crate::scalar::rational_to_f64).collect();
        let horner = |cs: &[f64], z: Complex64| cs.iter().rev().fold(Complex64::new(0.0, 0.0), |acc, &a| acc * z + a);
        companion
            .complex_eigenvalues()
            .iter()
            .map(|&z0| {
                let mut z = z0;
                for _ in 0..8 {
                    let d = horner(&dp, z);
                    if d.norm() == 0.0 {
                        break;
                    }
                    let step = horner(&c, z) / d;
                    z -= step;
                    if step.norm() <= 1e-16 * z.norm().max(1.0) {
                        break;
                    }
                }
                z
            })
            .collect()
    }
}

/// Singular values of a real matrix, largest first.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

pub fn singular_values_c(m: &DMatrix<Complex64>) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return vec![];
    }
    let mut s: Vec<f64> = m.clone().svd(false, false).singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Number of singular values above `tol` relative to the largest.
pub fn numeric_rank(singular: &[f64], tol: f64) -> usize {
    let top = singular.first().copied().unwrap_or(0.0);
    if top == 0.0 {
        return 0;
    }
    singular.iter().filter(|&&s| s > tol * top.max(1.0)).count()
}

/// Orthonormal basis of the numeric null space of a complex matrix.
pub fn null_space_c(m: &DMatrix<Complex64>, tol: f64) -> Vec<DVector<Complex64>> {
    let n = m.ncols();
    // pad to a square matrix so the SVD returns a full set of right singular vectors
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::<Complex64>::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("right singular vectors");
    let top = svd.singular_values.iter().copied().fold(0.0f64, f64::max).max(1.0);
    (0..n)
        .filter(|&k| svd.singular_values[k] <= tol * top)
        .map(|k| v_t.row(k).adjoint().into_owned())
        .collect()
}

/// Best rational approximation with denominator at most `max_den`.
pub fn rationalize(x: f64, max_den: i64) -> Option<Q> {
    if !x.is_finite() {
        return None;
    }
    let (mut p0, mut q0, mut p1, mut q1) = (0i128, 1i128, 1i128, 0i128);
    let mut v = x;
    for _ in 0..64 {
        let a = v.floor();
        if a.abs() > 1e15 {
            break;
        }
        let ai = a as i128;
        let (p2, q2) = (ai * p1 + p0, ai * q1 + q0);
        if q2 > max_den as i128 {
            break;
        }
        (p0, q0, p1, q1) = (p1, q1, p2, q2);
        let frac = v - a;
        if frac.abs() < 1e-12 {
            break;
        }
        v = 1.0 / frac;
    }
    if q1 == 0 {
        return None;
    }
    Some(Q::new(p1.into(), q1.into()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[&[i64]]) -> QMatrix {
        QMatrix::from_rows(&rows.iter().map(|r| r.iter().map(|&x| q(x)).collect()).collect::<Vec<_>>())
    }

    #[test]
    fn rank_and_nullspace() {
        let a = m(&[&[1, 2, 3], &[2, 4, 6], &[1, 0, 1]]);
        assert_eq!(a.rank(), 2);
        let ns = a.nullspace();
        assert_eq!(ns.len(), 1);
        assert!(a.mul_vec(&ns[0]).iter().all(Zero::is_zero));
    }

    #[test]
    fn solve_detects_inconsistency() {
        let a = m(&[&[1, 1], &[2, 2]]);
        assert!(a.solve(&[q(1), q(3)]).is_none());
        assert_eq!(a.solve(&[q(1), q(2)]).unwrap(), vec![q(1), q(0)]);
    }

    #[test]
    fn charpoly_of_companion() {
        let a = m(&[&[0, 0, 6], &[1, 0, -11], &[0, 1, 6]]);
        assert_eq!(a.charpoly(), QPoly::new(vec![q(-6), q(11), q(-6), q(1)]));
    }

    #[test]
    fn squarefree_decomposition() {
        // (t - 1)^2 (t + 2)^3 t
        let lin = |r: i64| QPoly::new(vec![q(-r), q(1)]);
        let mut p = lin(0);
        for _ in 0..2 {
            p = p.mul(&lin(1));
        }
        for _ in 0..3 {
            p = p.mul(&lin(-2));
        }
        let sf = p.squarefree();
        assert_eq!(sf, vec![(1, lin(0)), (2, lin(1)), (3, lin(-2))]);
    }

    #[test]
    fn roots_of_cubic() {
        let p = QPoly::new(vec![q(-6), q(11), q(-6), q(1)]);
        let mut r: Vec<f64> = p.roots().iter().map(|z| z.re).collect();
        r.sort_by(f64::total_cmp);
        for (a, b) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inertia_handles_zero_diagonal() {
        assert_eq!(m(&[&[0, 1], &[1, 0]]).inertia(), (1, 0, 1));
        assert_eq!(m(&[&[-2, 0, 0], &[0, 0, 0], &[0, 0, 3]]).inertia(), (1, 1, 1));
    }

    #[test]
    fn subspaces() {
        let s = Subspace::span(3, &[vec![q(1), q(1), q(0)], vec![q(0), q(1), q(0)]]);
        assert_eq!(s, Subspace::coordinate(3, &[0, 1]));
        assert!(s.contains(&[q(3), q(-1), q(0)]));
        assert!(!s.contains(&[q(0), q(0), q(1)]));
        assert_eq!(s.describe(), "span{e1, e2}");
    }

    #[test]
    fn continued_fractions() {
        assert_eq!(rationalize(0.75, 100), Some(Q::new(3.into(), 4.into())));
        assert_eq!(rationalize(-1.0 / 3.0, 100), Some(Q::new((-1).into(), 3.into())));
    }

    #[test]
    fn numeric_null_space() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]).map(|x| Complex64::new(x, 0.0));
        let ns = null_space_c(&a, 1e-10);
        assert_eq!(ns.len(), 1);
        assert!((ns[0][2].norm() - 1.0).abs() < 1e-12);
    }
}
