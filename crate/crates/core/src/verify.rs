//! Check suites over the catalog, reported as deterministic line records.

use std::fmt::{self, Write as _};
use std::time::{Duration, Instant};

use num_traits::{Signed, ToPrimitive, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::catalog::{bindings, restrict, tangency_report, verify_realization, Catalog, Expectation, IdealClaim, Realization};
use crate::error::VerifyError;
use crate::expr::Binding;
use crate::fields::{bracket, complex_rank_at, FieldFrame};
use crate::lie::{check_abelian_ideal, search_ideals, Fingerprint, LieAlgebra, SearchStatus};
use crate::params::{format_values, ParamSpace, ParamValues};
use crate::fields::C64;
use crate::surface::{census, stream_seed, BoundSurface, LeviReport};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Status {
    Pass,
    Inconclusive,
    Fail,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Inconclusive => "inconclusive",
            Status::Fail => "fail",
        }
    }

    fn of(ok: bool) -> Status {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }
}

impl fmt::Display for Status {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub check: String,
    pub subject: String,
    pub params: ParamValues,
    pub status: Status,
    pub metric: f64,
    pub tol: f64,
    pub seed: u64,
    pub detail: String,
    pub elapsed: Duration,
}

impl CheckResult {
    fn new(check: &str, subject: &str, params: &ParamValues, status: Status, metric: f64, tol: f64, seed: u64) -> CheckResult {
        CheckResult {
            check: check.into(),
            subject: subject.into(),
            params: params.clone(),
            status,
            metric,
            tol,
            seed,
            detail: String::new(),
            elapsed: Duration::ZERO,
        }
    }

    fn detail(mut self, d: impl Into<String>) -> CheckResult {
        self.detail = d.into();
        self
    }

    fn timed(mut self, start: Instant) -> CheckResult {
        self.elapsed = start.elapsed();
        self
    }

    /// One `key=value` line; timing is left out so reruns compare equal.
    pub fn record(&self) -> String {
        let params = if self.params.is_empty() { "-".to_string() } else { format_values(&self.params) };
        format!(
            "check={} subject={} params={} status={} metric={:.3e} tol={:.0e} seed={} detail={:?}",
            self.check, self.subject, params, self.status, self.metric, self.tol, self.seed, self.detail
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Section {
    pub title: String,
    pub results: Vec<CheckResult>,
}

impl Section {
    pub fn status(&self) -> Status {
        self.results.iter().map(|r| r.status).max().unwrap_or(Status::Pass)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub sections: Vec<Section>,
}

impl Report {
    pub fn results(&self) -> impl Iterator<Item = &CheckResult> {
        self.sections.iter().flat_map(|s| s.results.iter())
    }

    pub fn passed(&self) -> bool {
        self.results().all(|r| r.status != Status::Fail)
    }

    pub fn first_failure(&self) -> Option<&CheckResult> {
        self.results().find(|r| r.status == Status::Fail)
    }

    pub fn elapsed(&self) -> Duration {
        self.results().map(|r| r.elapsed).sum()
    }

    /// Section headers and record lines, with the first failure repeated on top.
    pub fn body(&self) -> String {
        let mut s = String::new();
        if let Some(f) = self.first_failure() {
            let _ = writeln!(s, "# first failure\n{}", f.record());
        }
        for sec in &self.sections {
            let _ = writeln!(s, "# section {} {}", sec.title, sec.status());
            for r in &sec.results {
                let _ = writeln!(s, "{}", r.record());
            }
        }
        s
    }

    pub fn summary(&self) -> String {
        let width = self.sections.iter().map(|s| s.title.len()).max().unwrap_or(7).max(7);
        let mut s = format!("{:<width$}  {:>6}  {:>6}  {:>6}  status\n", "section", "pass", "fail", "incon");
        let mut tot = [0usize; 3];
        for sec in &self.sections {
            let mut c = [0usize; 3];
            for r in &sec.results {
                c[match r.status {
                    Status::Pass => 0,
                    Status::Fail => 1,
                    Status::Inconclusive => 2,
                }] += 1;
            }
            for k in 0..3 {
                tot[k] += c[k];
            }
            let _ = writeln!(s, "{:<width$}  {:>6}  {:>6}  {:>6}  {}", sec.title, c[0], c[1], c[2], sec.status());
        }
        let overall = if self.passed() { "pass" } else { "fail" };
        let _ = writeln!(s, "{:<width$}  {:>6}  {:>6}  {:>6}  {}", "total", tot[0], tot[1], tot[2], overall);
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub tol: f64,
    pub points: usize,
}

impl Default for Settings {
    fn default() -> Settings {
        Settings { seed: 42, tol: 1e-8, points: 50 }
    }
}

/// Seed for one check, fixed by the master seed, the check id and its subject.
pub fn derive_seed(seed: u64, check: &str, subject: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in check.bytes().chain([0u8]).chain(subject.bytes()) {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    stream_seed(seed, h)
}

fn check_fixed(space: &ParamSpace, fixed: &ParamValues) -> Result<(), VerifyError> {
    for (k, v) in fixed {
        let d = space.decl(k).ok_or_else(|| crate::error::ParamError::Undeclared(k.clone()))?;
        d.check(v)?;
    }
    Ok(())
}

/// `count` constraint-respecting bindings extending `fixed`, or just `fixed`
/// when nothing is left to draw.
pub fn sample_bindings(space: &ParamSpace, fixed: &ParamValues, count: usize, seed: u64) -> Result<Vec<ParamValues>, VerifyError> {
    check_fixed(space, fixed)?;
    if space.names().iter().all(|n| fixed.contains_key(*n)) {
        space.check(fixed)?;
        return Ok(vec![fixed.clone()]);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count).map(|_| space.sample(&mut rng, fixed).map_err(VerifyError::from)).collect()
}

/// Number of bindings when every parameter ranges over a finite set.
pub fn finite_size(space: &ParamSpace) -> Option<usize> {
    use crate::params::Constraint;
    let mut n = 1usize;
    for name in space.names() {
        let d = space.decl(name)?;
        let k = d.constraints.iter().find_map(|c| match c {
            Constraint::OneOf(v) => Some(v.len()),
            _ => None,
        })?;
        n *= k;
    }
    Some(n)
}

fn algebra<'a>(cat: &'a Catalog, name: &str) -> Result<&'a LieAlgebra, VerifyError> {
    cat.algebra(name).ok_or_else(|| VerifyError::Unknown { kind: "algebra", name: name.into() })
}

/// Exact Jacobi and antisymmetry residual at sampled bindings.
pub fn jacobi_check(cat: &Catalog, name: &str, fixed: &ParamValues, samples: usize, s: &Settings) -> Result<CheckResult, VerifyError> {
    let start = Instant::now();
    let alg = algebra(cat, name)?;
    let seed = derive_seed(s.seed, "jacobi", &alg.name);
    let grid = sample_bindings(&alg.params, fixed, samples, seed)?;
    let mut worst = 0.0f64;
    let mut culprit = None;
    for v in &grid {
        let sc = alg.bind(v)?;
        let mut r = sc.jacobi_residual().abs().to_f64().unwrap_or(f64::INFINITY);
        for i in 0..sc.dim {
            for j in 0..sc.dim {
                for k in 0..sc.dim {
                    let a = sc.get(i, j, k) + sc.get(j, i, k);
                    if !a.is_zero() {
                        r = r.max(a.abs().to_f64().unwrap_or(f64::INFINITY));
                    }
                }
            }
        }
        if r > worst {
            worst = r;
            culprit = Some(v.clone());
        }
    }
    let mut detail = format!("bindings={}", grid.len());
    if let Some(v) = culprit {
        let _ = write!(detail, " worst at {}", format_values(&v));
    }
    Ok(CheckResult::new("jacobi", &alg.name, fixed, Status::of(worst == 0.0), worst, 0.0, s.seed).detail(detail).timed(start))
}

/// The recorded 3-dimensional abelian ideal claim, checked exactly, and the
/// outcome of the ideal search at each sampled binding.
pub fn ideal_check(cat: &Catalog, name: &str, fixed: &ParamValues, samples: usize, s: &Settings) -> Result<CheckResult, VerifyError> {
    let start = Instant::now();
    let entry = cat.algebra_entry(name).ok_or_else(|| VerifyError::Unknown { kind: "algebra", name: name.into() })?;
    let alg = &entry.algebra;
    let seed = derive_seed(s.seed, "ideals", &alg.name);
    let grid = sample_bindings(&alg.params, fixed, samples, seed)?;
    let mut failures = 0usize;
    let mut status = Status::Pass;
    let mut notes: Vec<String> = Vec::new();
    let mut found: Vec<String> = Vec::new();
    for (k, v) in grid.iter().enumerate() {
        let sc = alg.bind(v)?;
        let search = search_ideals(&sc, stream_seed(seed, k as u64));
        for i in &search.ideals {
            let d = i.describe();
            if !found.contains(&d) {
                found.push(d);
            }
        }
        let at = if v.is_empty() { String::new() } else { format!(" at {}", format_values(v)) };
        match &entry.ideal {
            IdealClaim::Span(claim) => {
                let cert = check_abelian_ideal(&sc, claim);
                if !cert.holds() {
                    failures += 1;
                    if notes.len() < 2 {
                        notes.push(format!("{} fails{at}: {}", claim.describe(), cert.failure.unwrap_or_default()));
                    }
                }
            }
            IdealClaim::None => {
                if !search.ideals.is_empty() {
                    failures += 1;
                } else if search.status == SearchStatus::Inconclusive {
                    status = status.max(Status::Inconclusive);
                    if !notes.contains(&search.note) {
                        notes.push(search.note.clone());
                    }
                }
            }
            IdealClaim::Unstated => {
                if search.status == SearchStatus::Inconclusive {
                    status = status.max(Status::Inconclusive);
                    if !notes.contains(&search.note) {
                        notes.push(search.note.clone());
                    }
                }
            }
        }
    }
    if failures > 0 {
        status = Status::Fail;
    }
    found.sort();
    let claim = match &entry.ideal {
        IdealClaim::Span(c) => format!("claim={}", c.describe()),
        IdealClaim::None => "claim=none".into(),
        IdealClaim::Unstated => "claim=unstated".into(),
    };
    let mut detail = format!("{claim} bindings={} found=[{}]", grid.len(), found.join("; "));
    for n in notes {
        let _ = write!(detail, "; {n}");
    }
    Ok(CheckResult::new("ideals", &alg.name, fixed, status, failures as f64, 0.0, s.seed).detail(detail).timed(start))
}

pub fn fingerprint_check(cat: &Catalog, name: &str, fixed: &ParamValues, s: &Settings) -> Result<Fingerprint, VerifyError> {
    let alg = algebra(cat, name)?;
    let grid = sample_bindings(&alg.params, fixed, 1, derive_seed(s.seed, "fingerprint", &alg.name))?;
    Ok(crate::lie::fingerprint(alg, &grid[0])?)
}

fn bound_surface(cat: &Catalog, name: &str, values: &ParamValues) -> Result<BoundSurface, VerifyError> {
    let e = cat.surface(name).ok_or_else(|| VerifyError::Unknown { kind: "hypersurface", name: name.into() })?;
    check_fixed(&e.surface.params, values)?;
    Ok(e.surface.bind(values)?)
}

/// Levi reports at `points` sampled points of a bound hypersurface.
pub fn levi_reports(cat: &Catalog, name: &str, values: &ParamValues, s: &Settings) -> Result<Vec<Result<LeviReport, String>>, VerifyError> {
    let b = bound_surface(cat, name, values)?;
    let seed = derive_seed(s.seed, "levi", name);
    Ok(b.sample_points(seed, s.points)
        .into_par_iter()
        .map(|p| p.and_then(|p| b.levi_form(&p)).map_err(|e| e.to_string()))
        .collect())
}

pub fn tangency_check(cat: &Catalog, realization: &str, surface: &str, values: &ParamValues, s: &Settings) -> Result<CheckResult, VerifyError> {
    let r = cat.realization(realization).ok_or_else(|| VerifyError::Unknown { kind: "realization", name: realization.into() })?;
    let e = cat.surface(surface).ok_or_else(|| VerifyError::Unknown { kind: "hypersurface", name: surface.into() })?;
    let names: Vec<&str> = r.params.names().into_iter().chain(e.surface.params.names()).collect();
    if let Some(k) = values.keys().find(|k| !names.contains(&k.as_str())) {
        return Err(crate::error::ParamError::Undeclared(k.clone()).into());
    }
    check_fixed(&r.params, &restrict(values, &r.params.names()))?;
    check_fixed(&e.surface.params, &restrict(values, &e.surface.params.names()))?;
    Ok(tangency_result(r, &e.surface, values, s))
}

fn tangency_result(r: &Realization, m: &crate::surface::Hypersurface, values: &ParamValues, s: &Settings) -> CheckResult {
    let start = Instant::now();
    let subject = format!("{}/{}", r.name, m.name);
    let seed = derive_seed(s.seed, "tangency", &format!("{subject} {}", format_values(values)));
    let t = tangency_report(r, m, values, seed, s.points, s.tol);
    let mut detail = format!("points={}", t.points);
    if let Some(w) = &t.worst_field {
        let _ = write!(detail, " worst_field={w}");
    }
    if let Some(e) = t.errors.first() {
        let _ = write!(detail, " errors={} first: {e}", t.errors.len());
    }
    CheckResult::new("tangency", &subject, values, Status::of(t.passed()), t.max_residual, s.tol, s.seed).detail(detail).timed(start)
}

fn census_result(subject: &str, m: &crate::surface::Hypersurface, expect: Expectation, values: &ParamValues, s: &Settings) -> CheckResult {
    let start = Instant::now();
    let seed = derive_seed(s.seed, "levi-census", &format!("{subject} {}", format_values(values)));
    let c = census(m, values, seed, s.points);
    let matching = match expect {
        Expectation::StrictlyPseudoconvex => c.pseudoconvex,
        Expectation::Indefinite => c.indefinite,
        Expectation::Unspecified => c.total(),
    };
    let bad = c.total() - matching + c.failures.len() + s.points.saturating_sub(c.total() + c.failures.len());
    let mut detail = format!(
        "expect={} spc={} indefinite={} degenerate={} sampling_failures={}",
        expect.as_str(),
        c.pseudoconvex,
        c.indefinite,
        c.degenerate,
        c.failures.len()
    );
    if let Some(e) = c.failures.first() {
        let _ = write!(detail, " first: {e}");
    }
    let ok = bad == 0 && c.total() > 0;
    CheckResult::new("levi-census", subject, values, Status::of(ok), bad as f64, 0.0, s.seed).detail(detail).timed(start)
}

fn realization_results(cat: &Catalog, r: &Realization, s: &Settings) -> Vec<CheckResult> {
    let start = Instant::now();
    let seed = derive_seed(s.seed, "brackets", &r.name);
    let mut out = Vec::new();
    for rep in verify_realization(cat, r, seed, s.points, s.tol) {
        let mut detail = format!("points={}", rep.points);
        if let Some(f) = rep.failure.as_ref().or(rep.worst.as_ref()) {
            let _ = write!(detail, " worst_pair=({},{})", f.pair.0, f.pair.1);
        }
        if let Some(f) = &rep.failure {
            let _ = write!(detail, " failing {f}");
        }
        if let Some(e) = &rep.error {
            let _ = write!(detail, " error: {e}");
        }
        let metric = if rep.error.is_some() { f64::INFINITY } else { rep.max_residual };
        out.push(CheckResult::new("brackets", &r.name, &rep.values, Status::of(rep.passed()), metric, s.tol, s.seed).detail(detail).timed(start));
        for x in &rep.extras {
            out.push(
                CheckResult::new("extra-symmetry", &format!("{}:{}", r.name, x.field), &rep.values, Status::of(x.passed), x.residual, s.tol, s.seed)
                    .detail(x.claim.clone())
                    .timed(start),
            );
        }
    }
    out
}

/// Complex rank of a commuting pair along the line `z1 = z2 = 0`.
pub fn line_rank_check(r: &Realization, pair: (&str, &str), values: &ParamValues, points: usize, s: &Settings) -> CheckResult {
    let start = Instant::now();
    let subject = format!("{}:{}+{}", r.name, pair.0, pair.1);
    let seed = derive_seed(s.seed, "line-rank", &format!("{subject} {}", format_values(values)));
    let (Some(a), Some(b)) = (r.field(pair.0), r.field(pair.1)) else {
        return CheckResult::new("line-rank", &subject, values, Status::Fail, f64::INFINITY, s.tol, s.seed).detail("field not in realization");
    };
    let (a, b) = (a.with_params(values), b.with_params(values));
    let commutator = bracket(&a, &b).map(|c| c.is_zero());
    let frame = FieldFrame::new(&subject, vec![a, b]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut off = 0usize;
    let mut ranks = std::collections::BTreeSet::new();
    for _ in 0..points {
        let z3 = C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let p = [C64::new(0.0, 0.0), C64::new(0.0, 0.0), z3];
        match complex_rank_at(&frame, p, &Binding::new()) {
            Ok(1) => {
                ranks.insert(1);
            }
            Ok(k) => {
                ranks.insert(k);
                off += 1;
            }
            Err(_) => off += 1,
        }
    }
    let commute = matches!(commutator, Ok(true));
    let detail = format!("points={points} ranks={ranks:?} commute={commute}");
    let metric = off as f64 + if commute { 0.0 } else { 1.0 };
    CheckResult::new("line-rank", &subject, values, Status::of(metric == 0.0), metric, 0.0, s.seed).detail(detail).timed(start)
}

enum Job<'a> {
    Item(usize),
    Fingerprints(Vec<usize>),
    Realization(&'a Realization),
}

fn item_section(cat: &Catalog, n: usize, s: &Settings) -> (Section, Vec<(usize, ParamValues, Fingerprint)>) {
    let mut results = Vec::new();
    let mut prints = Vec::new();
    let Some(e) = cat.item(n) else {
        let r = CheckResult::new("catalog", &format!("item{n}"), &ParamValues::new(), Status::Fail, 1.0, 0.0, s.seed).detail("item not in catalog");
        return (Section { title: format!("item {n}"), results: vec![r] }, prints);
    };
    let m = &e.surface;
    let grid = bindings(m);
    if !m.params.is_empty() {
        let need = finite_size(&m.params).map_or(3, |k| k.min(3));
        let ok = grid.len() >= need;
        results.push(
            CheckResult::new("grid", &m.name, &ParamValues::new(), Status::of(ok), grid.len() as f64, need as f64, s.seed)
                .detail(format!("bindings={} required={need}", grid.len())),
        );
    }
    results.extend(grid.par_iter().map(|v| census_result(&m.name, m, e.expect, v, s)).collect::<Vec<_>>());
    if let Some(t) = e.tube.as_ref().and_then(|t| cat.tube(t)) {
        for v in &grid {
            let start = Instant::now();
            let seed = derive_seed(s.seed, "tube", &format!("{} {}", t.name, format_values(v)));
            let c = t.check(cat, v, seed, s.points, s.tol);
            let err = c.errors.first().map(|e| format!(" error: {e}")).unwrap_or_default();
            let ideals = format!(
                "abelian 3-ideals found={} search={}{}",
                c.ideal_count,
                c.ideal_status.map_or("-", |x| x.as_str()),
                if c.ideal_count == 1 && c.ideal_status == Some(SearchStatus::Complete) { " unique" } else { "" }
            );
            results.push(
                CheckResult::new("tube-brackets", &t.name, v, Status::of(c.closed), c.bracket_residual, s.tol, s.seed)
                    .detail(format!("points={}{err}", c.points))
                    .timed(start),
            );
            let rank_bad = (c.points - c.rank5_points) as f64;
            results.push(
                CheckResult::new("tube-rank5", &t.name, v, Status::of(c.points > 0 && rank_bad == 0.0), rank_bad, 0.0, s.seed)
                    .detail(format!("rank5={}/{}", c.rank5_points, c.points)),
            );
            results.push(
                CheckResult::new("shift-ideal", &t.name, v, Status::of(c.shift_ideal), if c.shift_ideal { 0.0 } else { 1.0 }, 0.0, s.seed)
                    .detail(ideals),
            );
            let shift_bad = (c.points - c.shift_rank3_points) as f64;
            results.push(
                CheckResult::new("shift-rank3", &t.name, v, Status::of(c.points > 0 && shift_bad == 0.0), shift_bad, 0.0, s.seed)
                    .detail(format!("rank3={}/{}", c.shift_rank3_points, c.points)),
            );
            results.push(
                CheckResult::new("tube-tangency", &t.name, v, Status::of(c.errors.is_empty() && c.tangency < s.tol), c.tangency, s.tol, s.seed)
                    .detail(format!("fields=5 points={}", c.points)),
            );
            if let Some(f) = c.fingerprint {
                prints.push((n, v.clone(), f));
            }
        }
    }
    (Section { title: format!("item {n}"), results }, prints)
}

fn fingerprint_section(prints: &[(usize, ParamValues, Fingerprint)], items: &[usize], s: &Settings) -> Section {
    let mut clashes = Vec::new();
    for (a, x) in prints.iter().enumerate() {
        for y in &prints[a + 1..] {
            if x.0 != y.0 && x.2 == y.2 {
                clashes.push(format!("item{}({}) = item{}({})", x.0, format_values(&x.1), y.0, format_values(&y.1)));
            }
        }
    }
    let covered: std::collections::BTreeSet<usize> = prints.iter().map(|p| p.0).collect();
    let missing: Vec<usize> = items.iter().copied().filter(|i| !covered.contains(i)).collect();
    let bad = clashes.len() + missing.len();
    let mut detail = format!("fingerprints={} items={:?}", prints.len(), covered);
    if !missing.is_empty() {
        let _ = write!(detail, " missing={missing:?}");
    }
    for c in &clashes {
        let _ = write!(detail, "; {c}");
    }
    let r = CheckResult::new("fingerprint-distinct", "tubes", &ParamValues::new(), Status::of(bad == 0), bad as f64, 0.0, s.seed).detail(detail);
    Section { title: "tube fingerprints".into(), results: vec![r] }
}

fn realization_section(cat: &Catalog, r: &Realization, s: &Settings) -> Section {
    let mut results = realization_results(cat, r, s);
    for name in &r.surfaces {
        let Some(e) = cat.surface(name) else {
            results.push(CheckResult::new("tangency", &format!("{}/{name}", r.name), &ParamValues::new(), Status::Fail, f64::INFINITY, s.tol, s.seed).detail("unknown surface"));
            continue;
        };
        let grid = if e.surface.grid.is_empty() { r.bindings() } else { bindings(&e.surface) };
        results.extend(grid.par_iter().map(|v| tangency_result(r, &e.surface, v, s)).collect::<Vec<_>>());
        if e.expect != Expectation::Unspecified && e.item.is_none() {
            let g2 = bindings(&e.surface);
            results.extend(g2.par_iter().map(|v| census_result(&e.surface.name, &e.surface, e.expect, v, s)).collect::<Vec<_>>());
        }
    }
    if r.algebra.as_deref() == Some("m17") && r.name == "m17" {
        for v in r.bindings() {
            results.push(line_rank_check(r, ("X2", "X5"), &v, 10, s));
        }
    }
    Section { title: format!("realization {}", r.name), results }
}

/// Realizations checked by the theorem suite: every catalog realization not
/// generated from a tube base.
pub fn suite_realizations(cat: &Catalog) -> Vec<&Realization> {
    cat.realizations.iter().filter(|r| !cat.tubes.iter().any(|t| r.name == format!("{}-tube", t.name))).collect()
}

/// The classification suite: item sections, the tube fingerprint comparison,
/// and (for a full run) one section per realization.
pub fn theorem2(cat: &Catalog, item: Option<usize>, s: &Settings) -> Result<Report, VerifyError> {
    let items: Vec<usize> = match item {
        Some(n) if !(1..=17).contains(&n) => return Err(VerifyError::NoSuchItem(n)),
        Some(n) => vec![n],
        None => (1..=17).collect(),
    };
    let tube_items: Vec<usize> = items.iter().copied().filter(|&n| cat.item(n).is_some_and(|e| e.tube.is_some())).collect();
    let mut jobs: Vec<Job> = items.iter().map(|&n| Job::Item(n)).collect();
    if tube_items.len() > 1 {
        jobs.push(Job::Fingerprints(tube_items));
    }
    if item.is_none() {
        jobs.extend(suite_realizations(cat).into_iter().map(Job::Realization));
    }
    let item_runs: Vec<(Section, Vec<(usize, ParamValues, Fingerprint)>)> = jobs
        .par_iter()
        .filter_map(|j| match j {
            Job::Item(n) => Some(item_section(cat, *n, s)),
            _ => None,
        })
        .collect();
    let prints: Vec<(usize, ParamValues, Fingerprint)> = item_runs.iter().flat_map(|r| r.1.iter().cloned()).collect();
    let others: Vec<Section> = jobs
        .par_iter()
        .filter_map(|j| match j {
            Job::Fingerprints(items) => Some(fingerprint_section(&prints, items, s)),
            Job::Realization(r) => Some(realization_section(cat, r, s)),
            Job::Item(_) => None,
        })
        .collect();
    let mut sections: Vec<Section> = item_runs.into_iter().map(|r| r.0).collect();
    sections.extend(others);
    Ok(Report { sections })
}

/// Every catalog invariant beyond what loading checks: realizations at their
/// samples and the tube pipeline at each tube binding.
pub fn validate(cat: &Catalog, s: &Settings) -> Report {
    let mut sections: Vec<Section> = cat
        .realizations
        .par_iter()
        .map(|r| Section { title: format!("realization {}", r.name), results: realization_results(cat, r, s) })
        .collect();
    let tubes: Vec<Section> = cat
        .tubes
        .par_iter()
        .map(|t| {
            let results = bindings(&crate::catalog::make_tube(t).0)
                .iter()
                .map(|v| {
                    let start = Instant::now();
                    let c = t.check(cat, v, derive_seed(s.seed, "tube", &format!("{} {}", t.name, format_values(v))), s.points, s.tol);
                    CheckResult::new("tube", &t.name, v, Status::of(c.passed()), c.bracket_residual.max(c.tangency), s.tol, s.seed)
                        .detail(c.to_string())
                        .timed(start)
                })
                .collect();
            Section { title: format!("tube {}", t.name), results }
        })
        .collect();
    sections.extend(tubes);
    Report { sections }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::parse_assignment;

    fn vals(items: &[&str]) -> ParamValues {
        items.iter().map(|s| parse_assignment(s).unwrap()).collect()
    }

    #[test]
    fn jacobi_passes_on_bundled_rows() {
        let cat = Catalog::bundled().unwrap();
        let s = Settings::default();
        assert_eq!(jacobi_check(&cat, "m9", &ParamValues::new(), 20, &s).unwrap().status, Status::Pass);
        let r = jacobi_check(&cat, "g5.13", &vals(&["p=2", "s=1", "gamma=3"]), 20, &s).unwrap();
        assert_eq!(r.status, Status::Pass);
        assert!(matches!(jacobi_check(&cat, "nosuch", &ParamValues::new(), 20, &s), Err(VerifyError::Unknown { .. })));
    }

    #[test]
    fn ideal_statuses() {
        let cat = Catalog::bundled().unwrap();
        let s = Settings::default();
        let g51 = ideal_check(&cat, "g5.1", &ParamValues::new(), 5, &s).unwrap();
        assert_eq!(g51.status, Status::Pass);
        assert!(g51.detail.contains("span{e1, e2, e3}"), "{}", g51.detail);
        let m26 = ideal_check(&cat, "m26", &vals(&["q=1"]), 5, &s).unwrap();
        assert_ne!(m26.status, Status::Fail, "{}", m26.detail);
        assert!(m26.detail.contains("found=[]"));
        let m1 = ideal_check(&cat, "m1", &ParamValues::new(), 5, &s).unwrap();
        assert_eq!(m1.status, Status::Inconclusive);
        assert!(m1.detail.contains("continuum"));
        assert!(ideal_check(&cat, "m26", &vals(&["q=-1"]), 5, &s).is_err());
    }

    #[test]
    fn records_are_deterministic() {
        let cat = Catalog::bundled().unwrap();
        let s = Settings { points: 10, ..Settings::default() };
        let a = theorem2(&cat, Some(1), &s).unwrap();
        let b = theorem2(&cat, Some(1), &s).unwrap();
        assert!(a.passed(), "{}", a.body());
        assert_eq!(a.body(), b.body());
    }

    #[test]
    fn derived_seeds_separate_subjects() {
        assert_ne!(derive_seed(42, "jacobi", "m1"), derive_seed(42, "jacobi", "m2"));
        assert_eq!(derive_seed(42, "jacobi", "m1"), derive_seed(42, "jacobi", "m1"));
    }

    #[test]
    fn finite_spaces_have_sizes() {
        let cat = Catalog::bundled().unwrap();
        assert_eq!(finite_size(&cat.item(5).unwrap().surface.params), Some(2));
        assert_eq!(finite_size(&cat.item(2).unwrap().surface.params), None);
    }
}
