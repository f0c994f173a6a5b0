use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use homsurf::catalog::{format_source, Catalog, EntryKind};
use homsurf::params::{parse_assignment, ParamValues};
use homsurf::surface::LeviClass;
use homsurf::verify::{self, Report, Section, Settings};

#[derive(Parser)]
#[command(name = "homsurf", version, about = "Verification harness for homogeneous hypersurfaces in C^3 and their symmetry algebras")]
struct Cli {
    /// Master seed for every sampled quantity
    #[arg(long, global = true, env = "HOMSURF_SEED", default_value_t = 42)]
    seed: u64,
    /// Numerical tolerance for residual checks
    #[arg(long, global = true, env = "HOMSURF_TOL", default_value_t = 1e-8)]
    tol: f64,
    /// Sample points per check
    #[arg(long, global = true, default_value_t = 50)]
    points: usize,
    /// Write the record lines to this file
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Load `*.cat` files from this directory instead of the bundled catalog
    #[arg(long, global = true, env = "HOMSURF_CATALOG")]
    catalog: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact checks on one catalog algebra
    #[command(subcommand)]
    Check(CheckCmd),
    /// Run a verification suite
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// Levi form and classification at sampled points
    Levi {
        #[arg(long)]
        hypersurface: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Tangency of a realization's frame to a hypersurface
    Tangency {
        #[arg(long)]
        realization: String,
        #[arg(long)]
        surface: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Isomorphism invariants of an algebra
    Fingerprint {
        #[arg(long)]
        algebra: String,
        #[command(flatten)]
        params: ParamArgs,
    },
    /// Inspect and maintain catalog files
    #[command(subcommand)]
    Catalog(CatalogCmd),
}

#[derive(Subcommand)]
enum CheckCmd {
    /// Antisymmetry and the Jacobi identity at sampled bindings
    Jacobi {
        #[arg(long)]
        algebra: String,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 20)]
        samples: usize,
    },
    /// 3-dimensional abelian ideals
    Ideals {
        #[arg(long)]
        algebra: String,
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 5)]
        samples: usize,
    },
}

#[derive(Subcommand)]
enum VerifyCmd {
    /// Classification items 1-17 and the bundled realizations
    Theorem2 {
        #[arg(long)]
        item: Option<usize>,
    },
}

#[derive(Subcommand)]
enum CatalogCmd {
    /// List entries of one kind, or of every kind
    List { kind: Option<String> },
    /// Re-run every catalog invariant
    Validate,
    /// Rewrite catalog files in canonical layout
    Fmt {
        /// Report files that would change and exit 1 instead of writing
        #[arg(long)]
        check: bool,
    },
}

#[derive(Args)]
struct ParamArgs {
    /// Parameter value `name=rational`; repeatable
    #[arg(long = "param", value_parser = parse_param)]
    param: Vec<(String, homsurf::linalg::Q)>,
}

impl ParamArgs {
    fn values(&self) -> ParamValues {
        self.param.iter().cloned().collect()
    }
}

fn parse_param(s: &str) -> Result<(String, homsurf::linalg::Q), String> {
    parse_assignment(s)
}

struct Failure(String);

impl<E: std::fmt::Display> From<E> for Failure {
    fn from(e: E) -> Failure {
        Failure(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn load(cli: &Cli) -> Result<Catalog, Failure> {
    Ok(match &cli.catalog {
        Some(dir) => Catalog::load_dir(dir)?,
        None => Catalog::bundled()?,
    })
}

/// Writes to stdout, treating a closed pipe as the reader being done.
fn out(text: &str) -> Result<(), Failure> {
    match std::io::stdout().lock().write_all(text.as_bytes()) {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(e.into()),
        _ => Ok(()),
    }
}

fn emit(cli: &Cli, report: &Report) -> Result<bool, Failure> {
    let body = report.body();
    out(&format!("{body}\n{}", report.summary()))?;
    eprintln!("elapsed {:.2}s", report.elapsed().as_secs_f64());
    if let Some(path) = &cli.out {
        std::fs::write(path, &body)?;
    }
    Ok(report.passed())
}

fn single(title: &str, r: verify::CheckResult) -> Report {
    Report { sections: vec![Section { title: title.into(), results: vec![r] }] }
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if !(cli.tol > 0.0) {
        return Err(Failure(format!("tolerance must be positive, got {}", cli.tol)));
    }
    let s = Settings { seed: cli.seed, tol: cli.tol, points: cli.points };
    let cat = load(cli)?;
    match &cli.command {
        Command::Check(CheckCmd::Jacobi { algebra, params, samples }) => {
            let r = verify::jacobi_check(&cat, algebra, &params.values(), *samples, &s)?;
            emit(cli, &single("jacobi", r))
        }
        Command::Check(CheckCmd::Ideals { algebra, params, samples }) => {
            let r = verify::ideal_check(&cat, algebra, &params.values(), *samples, &s)?;
            emit(cli, &single("ideals", r))
        }
        Command::Verify(VerifyCmd::Theorem2 { item }) => emit(cli, &verify::theorem2(&cat, *item, &s)?),
        Command::Levi { hypersurface, params } => {
            let values = params.values();
            let reports = verify::levi_reports(&cat, hypersurface, &values, &s)?;
            let expect = cat.surface(hypersurface).map(|e| e.expect);
            let mut counts = [0usize; 4];
            let mut lines = String::new();
            let mut ok = true;
            for r in &reports {
                match r {
                    Ok(r) => {
                        lines.push_str(&format!("{r}\n"));
                        counts[match r.classification {
                            LeviClass::StrictlyPseudoconvex => 0,
                            LeviClass::Indefinite => 1,
                            LeviClass::Degenerate => 2,
                        }] += 1;
                        ok &= expect.is_none_or(|e| e.matches(r.classification));
                    }
                    Err(e) => {
                        lines.push_str(&format!("error={e:?}\n"));
                        counts[3] += 1;
                        ok = false;
                    }
                }
            }
            out(&format!(
                "{lines}summary spc={} indefinite={} degenerate={} failures={}\n",
                counts[0], counts[1], counts[2], counts[3]
            ))?;
            if let Some(path) = &cli.out {
                std::fs::write(path, &lines)?;
            }
            Ok(ok)
        }
        Command::Tangency { realization, surface, params } => {
            let r = verify::tangency_check(&cat, realization, surface, &params.values(), &s)?;
            emit(cli, &single("tangency", r))
        }
        Command::Fingerprint { algebra, params } => {
            let f = verify::fingerprint_check(&cat, algebra, &params.values(), &s)?;
            let line = format!("algebra={} {f}\n", cat.algebra(algebra).map_or(algebra.as_str(), |a| a.name.as_str()));
            out(&line)?;
            if let Some(path) = &cli.out {
                std::fs::write(path, &line)?;
            }
            Ok(true)
        }
        Command::Catalog(CatalogCmd::List { kind }) => {
            let kinds = match kind {
                Some(k) => vec![EntryKind::parse(k).ok_or_else(|| Failure(format!("unknown entry kind `{k}`")))?],
                None => vec![EntryKind::Algebras, EntryKind::Hypersurfaces, EntryKind::Realizations, EntryKind::Tubes],
            };
            let mut text = String::new();
            for k in kinds {
                for e in cat.list_entries(k) {
                    text.push_str(&format!("{e}\n"));
                }
            }
            out(&text)?;
            Ok(true)
        }
        Command::Catalog(CatalogCmd::Validate) => emit(cli, &verify::validate(&cat, &s)),
        Command::Catalog(CatalogCmd::Fmt { check }) => fmt_catalog(cli, *check),
    }
}

fn fmt_catalog(cli: &Cli, check: bool) -> Result<bool, Failure> {
    let files: Vec<(PathBuf, String)> = match &cli.catalog {
        Some(dir) => {
            let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "cat"))
                .collect();
            paths.sort();
            paths.into_iter().map(|p| std::fs::read_to_string(&p).map(|t| (p, t))).collect::<Result<_, _>>()?
        }
        None if check => homsurf::catalog::BUNDLED.iter().map(|(n, t)| (PathBuf::from(n), t.to_string())).collect(),
        None => return Err(Failure("catalog fmt rewrites files; pass --catalog DIR".into())),
    };
    let mut clean = true;
    for (path, text) in files {
        let formatted = format_source(&path.display().to_string(), &text)?;
        if formatted == text {
            continue;
        }
        if check {
            clean = false;
            println!("would reformat {}", path.display());
        } else {
            std::fs::write(&path, formatted)?;
            println!("reformatted {}", path.display());
        }
    }
    Ok(clean)
}
