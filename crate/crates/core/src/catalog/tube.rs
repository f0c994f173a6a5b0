//! Tubes `M = B + iR^3` over affinely homogeneous bases.

use std::fmt;

use super::{realization::verify_realization_at, Catalog, Expectation, Realization};
use crate::expr::{Binding, Expr};
use crate::fields::{complex_rank_at, real_rank_at, FieldFrame, VectorField};
use crate::lie::{check_abelian_ideal, fingerprint_of, search_ideals, Fingerprint, SearchStatus};
use crate::linalg::Subspace;
use crate::params::{format_values, ParamSpace, ParamValues};
use crate::surface::{stream_seed, Chart, Hypersurface, RealCoord, Seed};

/// A base surface `g(x) = 0` in R^3 with two affine fields `L_j(x) d/dx`.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeBase {
    pub name: String,
    pub item: Option<usize>,
    pub expect: Expectation,
    /// Written in the real coordinates `x1, x2, x3`.
    pub base: Expr,
    pub params: ParamSpace,
    /// Components are affine in `x1, x2, x3`; `d_j` means `d/dx_j`.
    pub affine: [VectorField; 2],
    pub chart: Chart,
    pub solve: RealCoord,
    pub seeds: Vec<Seed>,
    pub grid: Vec<ParamValues>,
    pub note: String,
}

fn complexify(f: &VectorField) -> VectorField {
    let comps = f.components().clone().map(|c| {
        let mut c = c;
        for j in 0..3 {
            c = c.substitute_param(&format!("x{}", j + 1), &Expr::z(j));
        }
        c
    });
    VectorField::new(&f.name, comps).expect("affine coefficients are polynomial in z")
}

/// `rho(z) = g(Re z)` with frame `{i d/dz_j} + {L_j(z) d/dz}`.
pub fn make_tube(t: &TubeBase) -> (Hypersurface, Realization) {
    let rho = super::real_coordinates(&t.base);
    let mut h = Hypersurface::new(&t.name, rho, t.params.clone(), t.solve);
    h.chart = t.chart.clone();
    h.seeds = t.seeds.clone();
    h.grid = t.grid.clone();
    h.note = t.note.clone();
    let mut fields: Vec<VectorField> = (0..3)
        .map(|j| {
            let mut c = [Expr::zero(), Expr::zero(), Expr::zero()];
            c[j] = Expr::i();
            VectorField::new(&format!("S{}", j + 1), c).expect("constant field")
        })
        .collect();
    fields.extend(t.affine.iter().map(complexify));
    let r = Realization {
        name: format!("{}-tube", t.name),
        algebra: None,
        params: t.params.clone(),
        bind: vec![],
        fields: fields.clone(),
        frame: FieldFrame::new(&t.name, fields),
        extras: vec![],
        surfaces: vec![t.name.clone()],
        samples: t.grid.clone(),
    };
    (h, r)
}

/// Outcome of the tube pipeline at one parameter binding.
#[derive(Clone, Debug, PartialEq)]
pub struct TubeCheck {
    pub name: String,
    pub values: ParamValues,
    pub points: usize,
    pub closed: bool,
    pub bracket_residual: f64,
    /// Points where the frame has real rank 5.
    pub rank5_points: usize,
    /// Points where the shift triple has complex rank 3.
    pub shift_rank3_points: usize,
    pub shift_ideal: bool,
    pub tangency: f64,
    pub fingerprint: Option<Fingerprint>,
    /// Number of 3-dimensional abelian ideals found, with the search status.
    pub ideal_count: usize,
    pub ideal_status: Option<SearchStatus>,
    pub errors: Vec<String>,
    pub tol: f64,
}

impl TubeCheck {
    pub fn passed(&self) -> bool {
        self.errors.is_empty()
            && self.points > 0
            && self.closed
            && self.rank5_points == self.points
            && self.shift_rank3_points == self.points
            && self.shift_ideal
            && self.tangency < self.tol
    }
}

impl fmt::Display for TubeCheck {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = if self.values.is_empty() { "-".to_string() } else { format_values(&self.values) };
        write!(
            f,
            "tube={} params={} points={} closed={} bracket_residual={:.3e} rank5={}/{} shift_rank3={}/{} shift_ideal={} tangency={:.3e} ideals={} ({})",
            self.name,
            v,
            self.points,
            self.closed,
            self.bracket_residual,
            self.rank5_points,
            self.points,
            self.shift_rank3_points,
            self.points,
            self.shift_ideal,
            self.tangency,
            self.ideal_count,
            self.ideal_status.map_or("-", |s| s.as_str())
        )
    }
}

impl TubeBase {
    pub fn check(&self, cat: &Catalog, values: &ParamValues, seed: u64, points: usize, tol: f64) -> TubeCheck {
        let (surface, real) = make_tube(self);
        let mut c = TubeCheck {
            name: self.name.clone(),
            values: values.clone(),
            points: 0,
            closed: false,
            bracket_residual: f64::INFINITY,
            rank5_points: 0,
            shift_rank3_points: 0,
            shift_ideal: false,
            tangency: 0.0,
            fingerprint: None,
            ideal_count: 0,
            ideal_status: None,
            errors: vec![],
            tol,
        };
        let rep = verify_realization_at(cat, &real, values, stream_seed(seed, 1), points, tol);
        c.bracket_residual = rep.max_residual;
        c.closed = rep.passed();
        if let Some(e) = rep.error {
            c.errors.push(e);
        }
        if let Some(sc) = &rep.constants {
            c.shift_ideal = check_abelian_ideal(sc, &Subspace::coordinate(5, &[0, 1, 2])).holds();
            c.fingerprint = Some(fingerprint_of(sc));
            let s = search_ideals(sc, stream_seed(seed, 2));
            c.ideal_count = s.ideals.len();
            c.ideal_status = Some(s.status);
        }
        let bound = match surface.bind(values) {
            Ok(b) => b,
            Err(e) => {
                c.errors.push(e.to_string());
                return c;
            }
        };
        let frame = real.frame.with_params(values);
        let shifts = frame.subframe(&[0, 1, 2]);
        for p in bound.sample_points(stream_seed(seed, 3), points) {
            let p = match p {
                Ok(p) => p,
                Err(e) => {
                    c.errors.push(e.to_string());
                    continue;
                }
            };
            c.points += 1;
            let b = Binding::new();
            match (real_rank_at(&frame, p, &b), complex_rank_at(&shifts, p, &b)) {
                (Ok(r5), Ok(r3)) => {
                    c.rank5_points += usize::from(r5 == 5);
                    c.shift_rank3_points += usize::from(r3 == 3);
                }
                (Err(e), _) | (_, Err(e)) => c.errors.push(e.to_string()),
            }
            for x in &frame.fields {
                match bound.tangency_residual(x, &p) {
                    Ok(v) => c.tangency = c.tangency.max(v),
                    Err(e) => c.errors.push(e.to_string()),
                }
            }
        }
        c
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Q;

    #[test]
    fn paraboloid_tube() {
        let t = TubeBase {
            name: "paraboloid".into(),
            item: None,
            expect: Expectation::StrictlyPseudoconvex,
            base: crate::expr::parse("x3 - x1^2 - x2^2").unwrap(),
            params: ParamSpace::default(),
            affine: [
                VectorField::parse("L1", "d1 + 2*x1*d3").unwrap(),
                VectorField::parse("L2", "d2 + 2*x2*d3").unwrap(),
            ],
            chart: Chart::default(),
            solve: RealCoord(2),
            seeds: vec![],
            grid: vec![],
            note: String::new(),
        };
        let c = t.check(&Catalog::default(), &ParamValues::new(), 5, 10, 1e-8);
        assert!(c.passed(), "{c} {:?}", c.errors);
        assert_eq!(c.tangency, 0.0);
    }

    #[test]
    fn item12_tube_pipeline() {
        let cat = Catalog::bundled().unwrap();
        let t = cat.tube("item12").unwrap();
        let mut v = ParamValues::new();
        v.insert("alpha".into(), Q::new(1.into(), 3.into()));
        v.insert("beta".into(), Q::new(1.into(), 2.into()));
        let c = t.check(&cat, &v, 7, 10, 1e-8);
        assert!(c.passed(), "{c} {:?}", c.errors);
        assert_eq!(c.fingerprint.unwrap().solvable, true);
    }

    #[test]
    fn item15_at_alpha4_shares_the_item16_algebra() {
        let cat = Catalog::bundled().unwrap();
        let constants = |name: &str, v: ParamValues| {
            let (_, r) = make_tube(cat.tube(name).unwrap());
            verify_realization_at(&cat, &r, &v, 3, 10, 1e-8).constants.unwrap()
        };
        let mut a = ParamValues::new();
        a.insert("s".into(), Q::from_integer(1.into()));
        a.insert("alpha".into(), Q::from_integer(4.into()));
        let mut b = ParamValues::new();
        b.insert("alpha".into(), Q::from_integer((-2).into()));
        assert_eq!(fingerprint_of(&constants("item15", a.clone())), fingerprint_of(&constants("item16", b)));
        a.insert("alpha".into(), Q::from_integer(5.into()));
        let mut c = ParamValues::new();
        c.insert("alpha".into(), Q::from_integer((-2).into()));
        assert_ne!(fingerprint_of(&constants("item15", a)), fingerprint_of(&constants("item16", c)));
    }
}
