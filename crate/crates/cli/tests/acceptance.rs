use homsurf::catalog::{bindings, verify_realization, Catalog, IdealClaim};
use homsurf::expr::{eval, parse, wirtinger, wirtinger_fd, Binding, Var};
use homsurf::fields::C64;
use homsurf::params::{parse_assignment, ParamValues};
use homsurf::surface::{classify_family, stream_seed, BoundSurface};
use homsurf::verify::{ideal_check, jacobi_check, line_rank_check, tangency_check, theorem2, Report, Settings, Status};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use std::io::Write;
use std::process::Command;
use std::time::Instant;

/// Criteria that fail on the bundled data; the README explains both.
const KNOWN_FAILURES: [usize; 2] = [2, 5];

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn values(items: &[&str]) -> ParamValues {
    items.iter().map(|s| parse_assignment(s).unwrap()).collect()
}

fn failing_subjects(results: &[(String, bool)]) -> String {
    let bad: Vec<&str> = results.iter().filter(|r| !r.1).map(|r| r.0.as_str()).collect();
    format!("{}/{} pass; failing [{}]", results.len() - bad.len(), results.len(), bad.join(", "))
}

fn algebra_tables(cat: &Catalog, s: &Settings) -> Outcome {
    let r: Vec<(String, bool)> = cat
        .algebras
        .iter()
        .map(|e| {
            let c = jacobi_check(cat, &e.algebra.name, &ParamValues::new(), 20, s).unwrap();
            (e.algebra.name.clone(), c.status == Status::Pass)
        })
        .collect();
    outcome(r.len() == 67 && r.iter().all(|x| x.1), failing_subjects(&r))
}

fn ideal_split(cat: &Catalog, s: &Settings) -> Outcome {
    let mut r = Vec::new();
    let mut inconclusive = 0;
    for e in cat.algebras.iter().filter(|e| e.ideal != IdealClaim::Unstated) {
        let c = ideal_check(cat, &e.algebra.name, &ParamValues::new(), 5, s).unwrap();
        if c.status == Status::Inconclusive {
            inconclusive += 1;
        }
        let noted = c.status != Status::Inconclusive || c.detail.contains("; ");
        r.push((e.algebra.name.clone(), c.status != Status::Fail && noted));
    }
    let pass = r.iter().all(|x| x.1);
    outcome(pass, format!("{}; inconclusive {inconclusive}", failing_subjects(&r)))
}

fn realizations(cat: &Catalog, s: &Settings) -> Outcome {
    let mut r = Vec::new();
    let mut worst = 0.0f64;
    for name in ["g25", "g26", "g37", "m16", "m16-c0", "m17", "m17-c0", "g5-normal-form", "m26"] {
        let real = cat.realization(name).unwrap();
        let reps = verify_realization(cat, real, s.seed, 50, 1e-8);
        for rep in &reps {
            worst = worst.max(rep.max_residual);
            worst = rep.extras.iter().map(|x| x.residual).fold(worst, f64::max);
        }
        r.push((name.to_string(), !reps.is_empty() && reps.iter().all(|x| x.passed())));
    }
    outcome(r.iter().all(|x| x.1), format!("{}; max residual {worst:.2e}", failing_subjects(&r)))
}

fn normal_form_orbit(cat: &Catalog, s: &Settings) -> Outcome {
    let hundred = Settings { points: 100, ..*s };
    let grid: Vec<ParamValues> = ["alpha=-1", "alpha=1", "alpha=2"].iter().map(|a| values(&[a])).collect();
    let mut r = Vec::new();
    for v in &grid {
        let t = tangency_check(cat, "g5-normal-form", "g5-orbit", v, &hundred).unwrap();
        r.push((format!("tangency {}", t.metric), t.status == Status::Pass));
    }
    let m = &cat.surface("g5-orbit").unwrap().surface;
    for c in classify_family(m, &grid, s.seed, 100) {
        r.push((format!("{c}"), c.all_indefinite()));
    }
    outcome(r.iter().all(|x| x.1), failing_subjects(&r))
}

fn quadric_family(cat: &Catalog, s: &Settings, surface: &str) -> (bool, String) {
    let m = &cat.surface(surface).unwrap().surface;
    let mut r = Vec::new();
    let mut worst = 0.0f64;
    for v in &m.grid {
        let t = tangency_check(cat, "g37", surface, v, s).unwrap();
        worst = worst.max(t.metric);
        r.push((format!("{} {}", homsurf::params::format_values(v), t.detail), t.status == Status::Pass));
    }
    let pass = r.len() == 9 && r.iter().all(|x| x.1);
    (pass, format!("{}: {}/9 triples, max residual {worst:.2e}", surface, r.iter().filter(|x| x.1).count()))
}

fn g37_quadrics(cat: &Catalog, s: &Settings) -> Outcome {
    let (stated, a) = quadric_family(cat, s, "g37-quadric-ay2");
    let (_, b) = quadric_family(cat, s, "g37-quadric");
    outcome(stated, format!("{a}; with -a*y3 in place of -a*y2, {b}"))
}

fn m17_line(cat: &Catalog, s: &Settings) -> Outcome {
    let r = cat.realization("m17").unwrap();
    let checks: Vec<_> = r.bindings().iter().map(|v| line_rank_check(r, ("X2", "X5"), v, 10, s)).collect();
    let pass = !checks.is_empty() && checks.iter().all(|c| c.status == Status::Pass);
    outcome(pass, checks.iter().map(|c| c.detail.clone()).collect::<Vec<_>>().join("; "))
}

fn census(report: &Report) -> Outcome {
    let items: Vec<_> = report.sections.iter().filter(|x| x.title.starts_with("item ")).collect();
    let r: Vec<(String, bool)> = items.iter().map(|x| (x.title.clone(), x.status() == Status::Pass)).collect();
    let points: usize = items
        .iter()
        .flat_map(|x| &x.results)
        .filter(|c| c.check == "levi-census")
        .map(|c| c.detail.split_whitespace().find_map(|w| w.strip_prefix("spc=")).and_then(|n| n.parse::<usize>().ok()).unwrap_or(0))
        .sum();
    outcome(r.len() == 17 && r.iter().all(|x| x.1), format!("{}; {points} pseudoconvex points", failing_subjects(&r)))
}

fn tube_pipeline(report: &Report) -> Outcome {
    let wanted: BTreeSet<&str> = ["tube-rank5", "tube-brackets", "shift-ideal", "shift-rank3", "tube-tangency"].into();
    let mut r = Vec::new();
    for n in 12..=17 {
        let title = format!("item {n}");
        let sec = report.sections.iter().find(|x| x.title == title).unwrap();
        let seen: BTreeSet<&str> = sec.results.iter().map(|c| c.check.as_str()).filter(|c| wanted.contains(c)).collect();
        let ok = seen == wanted && sec.results.iter().filter(|c| wanted.contains(c.check.as_str())).all(|c| c.status == Status::Pass);
        r.push((title, ok));
    }
    let fp = report.sections.iter().find(|x| x.title == "tube fingerprints").unwrap();
    r.push(("fingerprints".into(), fp.status() == Status::Pass));
    outcome(r.iter().all(|x| x.1), failing_subjects(&r))
}

fn corpus(cat: &Catalog) -> Vec<BoundSurface> {
    cat.surfaces.iter().flat_map(|e| bindings(&e.surface).into_iter().map(move |v| e.surface.bind(&v).unwrap())).collect()
}

fn numerical_kernels(cat: &Catalog) -> Outcome {
    let rel = |a: C64, b: C64| (a - b).norm() / a.norm().max(1.0);
    let vars: Vec<Var> = (0..3).flat_map(|j| [Var::z(j), Var::cz(j)]).collect();
    let (mut wirt, mut levi, mut flips) = (0.0f64, 0.0f64, 0usize);
    let factors = ["2", "-1", "1/3", "1 + z1*cz1"].map(|f| parse(f).unwrap());
    let list = corpus(cat);
    for (k, b) in list.iter().enumerate() {
        let derivs: Vec<_> = vars.iter().map(|&v| (v, wirtinger(&b.rho, v).unwrap())).collect();
        let scaled: Vec<_> = cat
            .surfaces
            .iter()
            .find(|e| e.surface.name == b.name)
            .map(|e| factors.iter().map(|f| e.surface.rescaled(f).bind(&b.values).unwrap()).collect())
            .unwrap_or_default();
        for p in b.sample_points(stream_seed(77, k as u64), 50) {
            let p = p.unwrap();
            let at = Binding::new().with_point(p);
            for (v, d) in &derivs {
                wirt = wirt.max(rel(eval(d, &at).unwrap(), wirtinger_fd(&b.rho, &at, *v).unwrap()));
            }
            let (h, fd) = (b.hessian_at(&p).unwrap(), b.hessian_fd(&p).unwrap());
            for j in 0..3 {
                for l in 0..3 {
                    levi = levi.max(rel(h[j][l], fd[j][l]));
                }
            }
            let class = b.levi_form(&p).unwrap().classification;
            flips += scaled.iter().filter(|s: &&BoundSurface| s.levi_form(&p).unwrap().classification != class).count();
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    for r in &cat.realizations {
        for v in r.bindings() {
            for f in &r.fields {
                for e in f.with_params(&v).components() {
                    for _ in 0..20 {
                        let p = [0; 3].map(|_| C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)));
                        let at = Binding::new().with_point(p);
                        for &var in &vars {
                            let d = eval(&wirtinger(e, var).unwrap(), &at).unwrap();
                            wirt = wirt.max(rel(d, wirtinger_fd(e, &at, var).unwrap()));
                        }
                    }
                }
            }
        }
    }
    let pass = wirt < 1e-6 && levi < 1e-5 && flips == 0;
    outcome(pass, format!("{} surfaces; wirtinger rel {wirt:.2e}; levi rel {levi:.2e}; class changes under rescaling {flips}", list.len()))
}

fn run(args: &[&str], catalog: Option<&std::path::Path>) -> (i32, Vec<u8>) {
    let mut c = Command::new(env!("CARGO_BIN_EXE_homsurf"));
    c.args(args).env_remove("HOMSURF_SEED").env_remove("HOMSURF_TOL").env_remove("HOMSURF_CATALOG");
    if let Some(d) = catalog {
        c.env("HOMSURF_CATALOG", d);
    }
    let o = c.output().unwrap();
    (o.status.code().unwrap(), o.stdout)
}

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    let (ca, sa) = run(&["--seed", "42", "--out", a.to_str().unwrap(), "verify", "theorem2"], None);
    let (cb, sb) = run(&["--seed", "42", "--out", b.to_str().unwrap(), "verify", "theorem2"], None);
    let same = std::fs::read(&a).unwrap() == std::fs::read(&b).unwrap() && sa == sb;
    let bad = tempfile::tempdir().unwrap();
    let data = std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../core/data"));
    for e in std::fs::read_dir(data).unwrap() {
        let e = e.unwrap();
        std::fs::copy(e.path(), bad.path().join(e.file_name())).unwrap();
    }
    let path = bad.path().join("realizations.cat");
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("field X5 = z2*d2 + z3*d3", "field X5 = 2*z2*d2 + z3*d3")).unwrap();
    let (cbad, _) = run(&["verify", "theorem2"], Some(bad.path()));
    let (cusage, _) = run(&["verify", "theorem2", "--item", "0"], None);
    let (cunknown, _) = run(&["check", "jacobi", "--algebra", "nosuch"], None);
    let codes = (ca, cb, cbad, cusage, cunknown);
    outcome(same && codes == (0, 0, 1, 2, 2), format!("byte-identical={same}; exit codes clean/clean/corrupted/bad-item/unknown = {codes:?}"))
}

#[test]
fn acceptance_criteria() {
    let cat = Catalog::bundled().unwrap();
    let s = Settings::default();
    let start = Instant::now();
    let report = theorem2(&cat, None, &s).unwrap();
    let criteria: Vec<(usize, &str, Outcome)> = vec![
        (1, "algebra tables satisfy Jacobi", algebra_tables(&cat, &s)),
        (2, "abelian ideal case split", ideal_split(&cat, &s)),
        (3, "realization commutation tables", realizations(&cat, &s)),
        (4, "normal-form orbit tangency and indefiniteness", normal_form_orbit(&cat, &s)),
        (5, "g37 quadric family tangency", g37_quadrics(&cat, &s)),
        (6, "m17 commuting pair has rank 1 on the line", m17_line(&cat, &s)),
        (7, "items 1-17 strictly pseudoconvex", census(&report)),
        (8, "tube pipeline", tube_pipeline(&report)),
        (9, "numerical kernels against finite differences", numerical_kernels(&cat)),
        (10, "determinism and exit codes", determinism()),
    ];
    let mut failed = Vec::new();
    // Written past the harness capture so the lines show in every run.
    let mut out = std::io::stdout().lock();
    for (n, title, o) in &criteria {
        writeln!(out, "criterion {n:>2} {} {title}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail).unwrap();
        if !o.pass {
            failed.push(*n);
        }
    }
    writeln!(out, "acceptance elapsed {:.1}s", start.elapsed().as_secs_f64()).unwrap();
    assert_eq!(failed, KNOWN_FAILURES.to_vec(), "unexpected set of failing criteria");
}
