//! Bundled data: the 5-dimensional algebras, hypersurfaces, holomorphic
//! realizations and affinely homogeneous tube bases.

mod format;
mod realization;
mod tube;

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use crate::error::CatalogError;
use crate::expr::{linear_coefficients, parse, Expr};
use crate::fields::{FieldFrame, VectorField};
use crate::lie::{AlgebraKind, LieAlgebra};
use crate::linalg::Subspace;
use crate::params::{parse_assignment, parse_rational, Constraint, ParamDecl, ParamSpace, ParamValues, Requirement};
use crate::scalar::rational_to_f64;
use crate::surface::{Chart, Hypersurface, LeviClass, RealCoord, Seed};

pub use format::{format_file, parse_file, RawEntry, RawFile, RawRecord};
pub use realization::{
    tangency_report, verify_realization, verify_realization_at, ExtraCheck, PairResidual, RealizationReport,
    TangencyReport,
};
pub use tube::{make_tube, TubeBase, TubeCheck};

pub const BUNDLED: [(&str, &str); 4] = [
    ("algebras.cat", include_str!("../../data/algebras.cat")),
    ("hypersurfaces.cat", include_str!("../../data/hypersurfaces.cat")),
    ("realizations.cat", include_str!("../../data/realizations.cat")),
    ("tubes.cat", include_str!("../../data/tubes.cat")),
];

/// What the catalog records about 3-dimensional abelian ideals.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum IdealClaim {
    Unstated,
    None,
    Span(Subspace),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgebraEntry {
    pub algebra: LieAlgebra,
    pub ideal: IdealClaim,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expectation {
    StrictlyPseudoconvex,
    Indefinite,
    Unspecified,
}

impl Expectation {
    pub fn matches(self, c: LeviClass) -> bool {
        match self {
            Expectation::StrictlyPseudoconvex => c == LeviClass::StrictlyPseudoconvex,
            Expectation::Indefinite => c == LeviClass::Indefinite,
            Expectation::Unspecified => true,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Expectation::StrictlyPseudoconvex => "spc",
            Expectation::Indefinite => "indefinite",
            Expectation::Unspecified => "none",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SurfaceEntry {
    pub surface: Hypersurface,
    /// Position in the classification list, when it is one of its items.
    pub item: Option<usize>,
    pub expect: Expectation,
    /// Name of the tube base it was generated from.
    pub tube: Option<String>,
}

/// `[Y, target] = rhs` for an extra field `Y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Claim {
    pub target: String,
    pub rhs: VectorField,
    pub text: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extra {
    pub field: VectorField,
    pub claims: Vec<Claim>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Realization {
    pub name: String,
    /// Catalog algebra whose constants the frame must reproduce; `None` when
    /// the constants are recovered from the frame itself.
    pub algebra: Option<String>,
    pub params: ParamSpace,
    /// Algebra parameters as expressions in the realization's parameters.
    pub bind: Vec<(String, Expr)>,
    pub fields: Vec<VectorField>,
    /// The algebra basis `e1..en` in terms of `fields`.
    pub frame: FieldFrame,
    pub extras: Vec<Extra>,
    pub surfaces: Vec<String>,
    pub samples: Vec<ParamValues>,
}

impl Realization {
    pub fn field(&self, name: &str) -> Option<&VectorField> {
        self.fields.iter().find(|f| f.name == name)
    }

    /// Parameter bindings to verify: the bundled samples, or the empty binding.
    pub fn bindings(&self) -> Vec<ParamValues> {
        if self.samples.is_empty() {
            vec![ParamValues::new()]
        } else {
            self.samples.clone()
        }
    }

    /// A copy with frame element `k` (0-based) multiplied by `factor`.
    pub fn corrupted(&self, k: usize, factor: Expr) -> Realization {
        let mut r = self.clone();
        r.frame.fields[k] = r.frame.fields[k].scale(&factor);
        r
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum EntryKind {
    Algebras,
    Hypersurfaces,
    Realizations,
    Tubes,
}

impl EntryKind {
    pub fn parse(s: &str) -> Option<EntryKind> {
        match s {
            "algebras" => Some(EntryKind::Algebras),
            "hypersurfaces" | "surfaces" => Some(EntryKind::Hypersurfaces),
            "realizations" => Some(EntryKind::Realizations),
            "tubes" => Some(EntryKind::Tubes),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EntrySummary {
    pub name: String,
    pub detail: String,
}

impl fmt::Display for EntrySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}\t{}", self.name, self.detail)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Catalog {
    pub algebras: Vec<AlgebraEntry>,
    pub surfaces: Vec<SurfaceEntry>,
    pub realizations: Vec<Realization>,
    pub tubes: Vec<TubeBase>,
}

impl Catalog {
    pub fn bundled() -> Result<Catalog, CatalogError> {
        Catalog::from_sources(BUNDLED.iter().map(|(n, t)| (n.to_string(), t.to_string())).collect())
    }

    /// Loads every `*.cat` file of a directory in lexicographic order.
    pub fn load_dir(dir: &Path) -> Result<Catalog, CatalogError> {
        let io = |message: String| CatalogError { file: dir.display().to_string(), line: 0, message };
        let mut paths: Vec<_> = std::fs::read_dir(dir)
            .map_err(|e| io(e.to_string()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "cat"))
            .collect();
        paths.sort();
        let mut sources = Vec::new();
        for p in paths {
            let text = std::fs::read_to_string(&p).map_err(|e| io(e.to_string()))?;
            sources.push((p.display().to_string(), text));
        }
        Catalog::from_sources(sources)
    }

    pub fn from_sources(sources: Vec<(String, String)>) -> Result<Catalog, CatalogError> {
        let mut c = Catalog::default();
        let mut plain = Vec::new();
        for (file, text) in &sources {
            let raw = parse_file(file, text)?;
            for r in &raw.records {
                let ctx = Ctx { file, record: r };
                match r.kind.as_str() {
                    "algebra" => c.algebras.push(ctx.algebra()?),
                    "surface" => plain.push(ctx.surface()?),
                    "realization" => c.realizations.push(ctx.realization()?),
                    "tube" => c.tubes.push(ctx.tube()?),
                    other => return Err(ctx.err(r.line, format!("unknown record kind `{other}`"))),
                }
            }
        }
        let mut items: Vec<SurfaceEntry> = plain.iter().filter(|s| s.item.is_some()).cloned().collect();
        for t in &c.tubes {
            let (surface, real) = make_tube(t);
            items.push(SurfaceEntry { surface, item: t.item, expect: t.expect, tube: Some(t.name.clone()) });
            c.realizations.push(real);
        }
        items.sort_by_key(|s| s.item);
        items.extend(plain.into_iter().filter(|s| s.item.is_none()));
        c.surfaces = items;
        c.check_names()?;
        Ok(c)
    }

    fn check_names(&self) -> Result<(), CatalogError> {
        let dup = |kind: &str, names: Vec<&str>| -> Result<(), CatalogError> {
            let mut seen = std::collections::BTreeSet::new();
            for n in names {
                if !seen.insert(n) {
                    return Err(CatalogError { file: kind.into(), line: 0, message: format!("duplicate {kind} `{n}`") });
                }
            }
            Ok(())
        };
        dup("algebra", self.algebras.iter().map(|a| a.algebra.name.as_str()).collect())?;
        dup("surface", self.surfaces.iter().map(|s| s.surface.name.as_str()).collect())?;
        dup("realization", self.realizations.iter().map(|r| r.name.as_str()).collect())?;
        for r in &self.realizations {
            let missing = |what: &str, n: &str| CatalogError {
                file: "realization".into(),
                line: 0,
                message: format!("realization `{}` names unknown {what} `{n}`", r.name),
            };
            if let Some(a) = &r.algebra {
                let alg = self.algebra(a).ok_or_else(|| missing("algebra", a))?;
                if alg.dim != r.frame.len() {
                    return Err(missing("frame length for algebra", a));
                }
            }
            for s in &r.surfaces {
                self.surface(s).ok_or_else(|| missing("surface", s))?;
            }
        }
        Ok(())
    }

    /// Looks an algebra up by name; `g25` is accepted for `g5.25`.
    pub fn algebra(&self, name: &str) -> Option<&LieAlgebra> {
        self.algebra_entry(name).map(|e| &e.algebra)
    }

    pub fn algebra_entry(&self, name: &str) -> Option<&AlgebraEntry> {
        let find = |n: &str| self.algebras.iter().find(|a| a.algebra.name == n);
        find(name).or_else(|| {
            let rest = name.strip_prefix('g')?;
            if rest.len() >= 2 && rest.chars().all(|c| c.is_ascii_digit()) {
                find(&format!("g5.{rest}"))
            } else {
                None
            }
        })
    }

    pub fn surface(&self, name: &str) -> Option<&SurfaceEntry> {
        self.surfaces.iter().find(|s| s.surface.name == name)
    }

    pub fn item(&self, n: usize) -> Option<&SurfaceEntry> {
        self.surfaces.iter().find(|s| s.item == Some(n))
    }

    pub fn realization(&self, name: &str) -> Option<&Realization> {
        self.realizations.iter().find(|r| r.name == name)
    }

    pub fn tube(&self, name: &str) -> Option<&TubeBase> {
        self.tubes.iter().find(|t| t.name == name)
    }

    /// Names with one-line metadata, in catalog order.
    pub fn list_entries(&self, kind: EntryKind) -> Vec<EntrySummary> {
        match kind {
            EntryKind::Algebras => self
                .algebras
                .iter()
                .map(|a| {
                    let p = a.algebra.params.names().join(",");
                    EntrySummary {
                        name: a.algebra.name.clone(),
                        detail: format!(
                            "kind={} params={} ideal={}",
                            a.algebra.kind.as_str(),
                            if p.is_empty() { "-" } else { &p },
                            match &a.ideal {
                                IdealClaim::Unstated => "-".to_string(),
                                IdealClaim::None => "none".to_string(),
                                IdealClaim::Span(s) => s.describe(),
                            }
                        ),
                    }
                })
                .collect(),
            EntryKind::Hypersurfaces => self
                .surfaces
                .iter()
                .map(|s| EntrySummary {
                    name: s.surface.name.clone(),
                    detail: format!(
                        "item={} expect={} bindings={} rho={}",
                        s.item.map_or("-".to_string(), |i| i.to_string()),
                        s.expect.as_str(),
                        s.surface.grid.len().max(1),
                        s.surface.rho
                    ),
                })
                .collect(),
            EntryKind::Realizations => self
                .realizations
                .iter()
                .map(|r| EntrySummary {
                    name: r.name.clone(),
                    detail: format!(
                        "algebra={} fields={} extras={} samples={}",
                        r.algebra.as_deref().unwrap_or("recovered"),
                        r.frame.len(),
                        r.extras.len(),
                        r.samples.len()
                    ),
                })
                .collect(),
            EntryKind::Tubes => self
                .tubes
                .iter()
                .map(|t| EntrySummary { name: t.name.clone(), detail: format!("base={}", t.base) })
                .collect(),
        }
    }
}

/// Replaces the real coordinates `x_j`, `y_j` by `re(z_j)`, `im(z_j)`.
pub fn real_coordinates(e: &Expr) -> Expr {
    let mut out = e.clone();
    for j in 0..3 {
        out = out.substitute_param(&format!("x{}", j + 1), &Expr::z(j).re());
        out = out.substitute_param(&format!("y{}", j + 1), &Expr::z(j).im());
    }
    crate::expr::simplify(&out)
}

fn parse_number(s: &str) -> Option<f64> {
    parse_rational(s).map(|q| rational_to_f64(&q)).or_else(|| s.parse().ok())
}

fn parse_values(text: &str) -> Result<ParamValues, String> {
    let mut v = ParamValues::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, x) = parse_assignment(part)?;
        v.insert(k, x);
    }
    Ok(v)
}

struct Ctx<'a> {
    file: &'a str,
    record: &'a RawRecord,
}

impl Ctx<'_> {
    fn err(&self, line: usize, message: String) -> CatalogError {
        CatalogError { file: self.file.to_string(), line, message: format!("{}: {message}", self.record.name) }
    }

    fn required(&self, key: &str) -> Result<&RawEntry, CatalogError> {
        self.record.get(key).ok_or_else(|| self.err(self.record.line, format!("missing `{key}`")))
    }

    fn expr(&self, e: &RawEntry, text: &str) -> Result<Expr, CatalogError> {
        parse(text).map_err(|x| self.err(e.line, x.to_string()))
    }

    fn check_keys(&self, allowed: &[&str]) -> Result<(), CatalogError> {
        for e in &self.record.entries {
            let ok = e.key == "#" || allowed.contains(&e.key.as_str()) || (allowed.contains(&"[") && e.key.starts_with('['));
            if !ok {
                return Err(self.err(e.line, format!("unexpected key `{}`", e.key)));
            }
        }
        Ok(())
    }

    fn params(&self) -> Result<ParamSpace, CatalogError> {
        let mut decls = Vec::new();
        for e in self.record.all("param") {
            let (name, cons) = match e.value.split_once(':') {
                Some((n, c)) => (n.trim(), c.trim()),
                None => (e.value.trim(), ""),
            };
            if !crate::expr::is_parameter_name(name) {
                return Err(self.err(e.line, format!("`{name}` is not a valid parameter name")));
            }
            let constraints = cons
                .split(';')
                .map(str::trim)
                .filter(|c| !c.is_empty())
                .map(Constraint::parse)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|m| self.err(e.line, m))?;
            decls.push(ParamDecl::new(name, constraints));
        }
        let mut space = ParamSpace::new(decls);
        for e in self.record.all("require") {
            space.requires.push(Requirement::parse(&e.value).map_err(|m| self.err(e.line, m))?);
        }
        Ok(space)
    }

    fn check_declared(&self, space: &ParamSpace, e: &Expr, line: usize, extra: &[&str]) -> Result<(), CatalogError> {
        for p in e.params() {
            if space.decl(&p).is_none() && !extra.contains(&p.as_str()) {
                return Err(self.err(line, format!("undeclared parameter `{p}`")));
            }
        }
        Ok(())
    }

    fn grid(&self, key: &str, space: &ParamSpace) -> Result<Vec<ParamValues>, CatalogError> {
        let mut out = Vec::new();
        for e in self.record.all(key) {
            let v = parse_values(&e.value).map_err(|m| self.err(e.line, m))?;
            space.check(&v).map_err(|x| self.err(e.line, x.to_string()))?;
            out.push(v);
        }
        Ok(out)
    }

    fn algebra(&self) -> Result<AlgebraEntry, CatalogError> {
        self.check_keys(&["kind", "dim", "param", "require", "[", "ideal"])?;
        let r = self.record;
        let ke = self.required("kind")?;
        let kind = AlgebraKind::parse(&ke.value).ok_or_else(|| self.err(ke.line, format!("unknown kind `{}`", ke.value)))?;
        let dim = match r.get("dim") {
            Some(e) => e.value.parse().map_err(|_| self.err(e.line, "bad dimension".into()))?,
            None => 5,
        };
        let basis: Vec<String> = (1..=dim).map(|k| format!("e{k}")).collect();
        let symbols: Vec<&str> = basis.iter().map(String::as_str).collect();
        let params = self.params()?;
        let mut entries = Vec::new();
        for e in r.entries.iter().filter(|e| e.key.starts_with('[')) {
            let pair = e.key.trim_start_matches('[').trim_end_matches(']');
            let (i, j) = pair
                .split_once(',')
                .and_then(|(a, b)| Some((a.trim().parse::<usize>().ok()?, b.trim().parse::<usize>().ok()?)))
                .filter(|(i, j)| *i >= 1 && *j >= 1 && *i <= dim && *j <= dim && i != j)
                .ok_or_else(|| self.err(e.line, format!("bad bracket `{}`", e.key)))?;
            let rhs = e.value.strip_prefix('=').ok_or_else(|| self.err(e.line, "expected `= ...`".into()))?;
            let ex = self.expr(e, rhs)?;
            let coeffs = linear_coefficients(&ex, &symbols).map_err(|m| self.err(e.line, m))?;
            for c in &coeffs {
                self.check_declared(&params, c, e.line, &[])?;
            }
            entries.push(((i - 1, j - 1), coeffs));
        }
        let algebra = LieAlgebra::new(&r.name, dim, kind, params, entries).map_err(|x| self.err(r.line, x.to_string()))?;
        let ideal = match r.get("ideal") {
            None => IdealClaim::Unstated,
            Some(e) if e.value == "none" => IdealClaim::None,
            Some(e) => {
                let idx = e
                    .value
                    .split(',')
                    .map(|s| s.trim().strip_prefix('e').and_then(|k| k.parse::<usize>().ok()).filter(|k| (1..=dim).contains(k)))
                    .collect::<Option<Vec<usize>>>()
                    .ok_or_else(|| self.err(e.line, format!("bad ideal `{}`", e.value)))?;
                IdealClaim::Span(Subspace::coordinate(dim, &idx.iter().map(|k| k - 1).collect::<Vec<_>>()))
            }
        };
        Ok(AlgebraEntry { algebra, ideal })
    }

    fn chart(&self, space: &ParamSpace, real: bool) -> Result<(Chart, RealCoord, Vec<Seed>), CatalogError> {
        let r = self.record;
        let mut chart = Chart::default();
        for e in r.all("box") {
            let parts: Vec<&str> = e.value.split_whitespace().collect();
            let parsed = match parts.as_slice() {
                [c, lo, hi] => RealCoord::parse(c).zip(parse_number(lo)).zip(parse_number(hi)).map(|((c, l), h)| (c, l, h)),
                _ => None,
            };
            let (c, lo, hi) = parsed.ok_or_else(|| self.err(e.line, format!("expected `box <coord> <lo> <hi>`, got `{}`", e.value)))?;
            chart.bounds[c.0] = (lo, hi);
        }
        for e in r.all("positive") {
            let ex = self.expr(e, &e.value)?;
            self.check_declared(space, &ex, e.line, &["x1", "x2", "x3", "y1", "y2", "y3"])?;
            chart.positive.push(if real { real_coordinates(&ex) } else { ex });
        }
        if let Some(e) = r.get("radius") {
            chart.radius = parse_number(&e.value).ok_or_else(|| self.err(e.line, "bad radius".into()))?;
        }
        let se = self.required("solve")?;
        let solve = RealCoord::parse(&se.value).ok_or_else(|| self.err(se.line, format!("bad coordinate `{}`", se.value)))?;
        let mut seeds = Vec::new();
        for e in r.all("seed") {
            let (coords, when) = match e.value.split_once("when") {
                Some((c, w)) => (c, parse_values(w).map_err(|m| self.err(e.line, m))?),
                None => (e.value.as_str(), ParamValues::new()),
            };
            let xs: Vec<f64> = coords
                .split_whitespace()
                .map(parse_number)
                .collect::<Option<Vec<_>>>()
                .filter(|v| v.len() == 6)
                .ok_or_else(|| self.err(e.line, "seed needs six coordinates".into()))?;
            seeds.push(Seed { when, coords: [xs[0], xs[1], xs[2], xs[3], xs[4], xs[5]] });
        }
        Ok((chart, solve, seeds))
    }

    fn expectation(&self) -> Result<(Option<usize>, Expectation), CatalogError> {
        let item = match self.record.get("item") {
            Some(e) => Some(e.value.parse().map_err(|_| self.err(e.line, "bad item number".into()))?),
            None => None,
        };
        let expect = match self.record.get("expect") {
            None => Expectation::Unspecified,
            Some(e) => match e.value.as_str() {
                "spc" => Expectation::StrictlyPseudoconvex,
                "indefinite" => Expectation::Indefinite,
                "none" => Expectation::Unspecified,
                v => return Err(self.err(e.line, format!("unknown expectation `{v}`"))),
            },
        };
        Ok((item, expect))
    }

    fn surface(&self) -> Result<SurfaceEntry, CatalogError> {
        self.check_keys(&["item", "expect", "rho", "param", "require", "solve", "box", "positive", "radius", "seed", "grid", "note"])?;
        let params = self.params()?;
        let re = self.required("rho")?;
        let raw = self.expr(re, &re.value)?;
        self.check_declared(&params, &raw, re.line, &["x1", "x2", "x3", "y1", "y2", "y3"])?;
        let (chart, solve, seeds) = self.chart(&params, true)?;
        let grid = self.grid("grid", &params)?;
        let (item, expect) = self.expectation()?;
        let mut s = Hypersurface::new(&self.record.name, real_coordinates(&raw), params, solve);
        s.chart = chart;
        s.seeds = seeds;
        s.grid = grid;
        s.note = self.record.get("note").map(|e| e.value.clone()).unwrap_or_default();
        Ok(SurfaceEntry { surface: s, item, expect, tube: None })
    }

    fn named_field(&self, e: &RawEntry, declared: &ParamSpace, extra: &[&str]) -> Result<VectorField, CatalogError> {
        let (name, body) = e
            .value
            .split_once('=')
            .map(|(n, b)| (n.trim(), b.trim()))
            .ok_or_else(|| self.err(e.line, "expected `NAME = field`".into()))?;
        let f = VectorField::parse(name, body).map_err(|m| self.err(e.line, m))?;
        for c in f.components() {
            self.check_declared(declared, c, e.line, extra)?;
        }
        Ok(f)
    }

    fn combination(&self, line: usize, text: &str, fields: &[VectorField], name: &str) -> Result<VectorField, CatalogError> {
        let ex = parse(text).map_err(|x| self.err(line, x.to_string()))?;
        if ex.is_zero() {
            return Ok(VectorField::zero(name));
        }
        let names: Vec<&str> = fields.iter().map(|f| f.name.as_str()).collect();
        let coeffs = linear_coefficients(&ex, &names).map_err(|m| self.err(line, m))?;
        Ok(VectorField::combination(name, &coeffs, fields))
    }

    fn realization(&self) -> Result<Realization, CatalogError> {
        self.check_keys(&["algebra", "param", "require", "bind", "field", "frame", "extra", "claim", "surface", "sample"])?;
        let r = self.record;
        let params = self.params()?;
        let algebra = r.get("algebra").map(|e| e.value.clone());
        let mut bind = Vec::new();
        for e in r.all("bind") {
            let (k, v) = e.value.split_once('=').ok_or_else(|| self.err(e.line, "expected `name = expr`".into()))?;
            let ex = self.expr(e, v)?;
            self.check_declared(&params, &ex, e.line, &[])?;
            bind.push((k.trim().to_string(), ex));
        }
        let fields = r.all("field").map(|e| self.named_field(e, &params, &[])).collect::<Result<Vec<_>, _>>()?;
        let frame_fields = match r.get("frame") {
            None => fields.clone(),
            Some(e) => e
                .value
                .split(',')
                .enumerate()
                .map(|(k, t)| self.combination(e.line, t, &fields, &format!("e{}", k + 1)))
                .collect::<Result<Vec<_>, _>>()?,
        };
        let mut extras: Vec<Extra> = Vec::new();
        for e in &r.entries {
            match e.key.as_str() {
                "extra" => extras.push(Extra { field: self.named_field(e, &params, &[])?, claims: vec![] }),
                "claim" => {
                    let x = extras.last_mut().ok_or_else(|| self.err(e.line, "`claim` before any `extra`".into()))?;
                    let (lhs, rhs) = e.value.split_once('=').ok_or_else(|| self.err(e.line, "expected `[Y,X] = ...`".into()))?;
                    let inner = lhs.trim().trim_start_matches('[').trim_end_matches(']');
                    let (y, target) = inner.split_once(',').ok_or_else(|| self.err(e.line, "expected `[Y,X]`".into()))?;
                    if y.trim() != x.field.name || !fields.iter().any(|f| f.name == target.trim()) {
                        return Err(self.err(e.line, format!("claim `{}` does not match its fields", e.value)));
                    }
                    let rhs_field = self.combination(e.line, rhs, &fields, rhs.trim())?;
                    x.claims.push(Claim { target: target.trim().to_string(), rhs: rhs_field, text: e.value.clone() });
                }
                _ => {}
            }
        }
        let samples = self.grid("sample", &params)?;
        Ok(Realization {
            name: r.name.clone(),
            algebra,
            params,
            bind,
            fields,
            frame: FieldFrame::new(&r.name, frame_fields),
            extras,
            surfaces: r.all("surface").map(|e| e.value.clone()).collect(),
            samples,
        })
    }

    fn tube(&self) -> Result<TubeBase, CatalogError> {
        self.check_keys(&["item", "expect", "base", "param", "require", "affine", "solve", "box", "positive", "radius", "seed", "grid", "note"])?;
        let params = self.params()?;
        let be = self.required("base")?;
        let base = self.expr(be, &be.value)?;
        self.check_declared(&params, &base, be.line, &["x1", "x2", "x3"])?;
        let affine = self
            .record
            .all("affine")
            .map(|e| self.named_field(e, &params, &["x1", "x2", "x3"]))
            .collect::<Result<Vec<_>, _>>()?;
        if affine.len() != 2 {
            return Err(self.err(self.record.line, "a tube base needs exactly two affine fields".into()));
        }
        let (chart, solve, seeds) = self.chart(&params, true)?;
        let grid = self.grid("grid", &params)?;
        let (item, expect) = self.expectation()?;
        Ok(TubeBase {
            name: self.record.name.clone(),
            item,
            expect,
            base,
            params,
            affine: [affine[0].clone(), affine[1].clone()],
            chart,
            solve,
            seeds,
            grid,
            note: self.record.get("note").map(|e| e.value.clone()).unwrap_or_default(),
        })
    }
}

/// Reformats catalog text; returns the canonical text.
pub fn format_source(file: &str, text: &str) -> Result<String, CatalogError> {
    Ok(format_file(&parse_file(file, text)?))
}

/// Every parameter binding of a family: its grid, or the empty binding.
pub fn bindings(s: &Hypersurface) -> Vec<ParamValues> {
    if s.grid.is_empty() {
        vec![ParamValues::new()]
    } else {
        s.grid.clone()
    }
}

/// Groups bindings by the values of the given parameter names.
pub fn restrict(values: &ParamValues, names: &[&str]) -> ParamValues {
    values.iter().filter(|(k, _)| names.contains(&k.as_str())).map(|(k, v)| (k.clone(), v.clone())).collect::<BTreeMap<_, _>>()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_catalog_loads() {
        let c = Catalog::bundled().unwrap();
        assert_eq!(c.list_entries(EntryKind::Algebras).len(), 67);
        assert!(c.list_entries(EntryKind::Hypersurfaces).len() >= 18);
        assert!(c.list_entries(EntryKind::Realizations).len() >= 6);
        for n in 1..=17 {
            assert!(c.item(n).is_some(), "item {n}");
        }
        assert_eq!(c.algebra("g25").unwrap().name, "g5.25");
        assert!(c.algebra("g5").is_some());
        assert!(c.algebra("nosuch").is_none());
    }

    #[test]
    fn bundled_files_are_formatted() {
        for (name, text) in BUNDLED {
            assert_eq!(format_source(name, text).unwrap(), text, "{name} is not in canonical layout");
        }
    }

    #[test]
    fn real_coordinates_expand() {
        let e = real_coordinates(&parse("x1 - y2").unwrap());
        let b = crate::expr::Binding::new().with_point([crate::fields::C64::new(2.0, 5.0), crate::fields::C64::new(1.0, 3.0), Default::default()]);
        assert!((crate::expr::eval(&e, &b).unwrap().re + 1.0).abs() < 1e-14);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let src = "algebra bad\n  kind solvable\n  [1,2] = e1 + zz*e2\nend\n";
        let e = Catalog::from_sources(vec![("x.cat".into(), src.into())]).unwrap_err();
        assert_eq!(e.line, 3);
        assert!(e.message.contains("zz"));
        let src = "algebra bad\n  kind solvable\n  [1,2] = e1\n  [1,3] = e3\n  [2,3] = e2\nend\n";
        let e = Catalog::from_sources(vec![("x.cat".into(), src.into())]).unwrap_err();
        assert!(e.message.contains("Jacobi"), "{e}");
    }
}
