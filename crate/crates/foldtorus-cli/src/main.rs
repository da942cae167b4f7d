// SPDX-License-Identifier: MIT OR Apache-2.0

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use foldtorus::cohomology_cone::{pair_with_e0, CohomologyClass, H1Basis};
use foldtorus::folding::{build_delta, fold_sequence};
use foldtorus::graph_maps::GraphMap;
use foldtorus::mapping_torus::{build_torus, TrapezoidComplex};
use foldtorus::rational::{self, Q};
use foldtorus::report::{check_map, TorusSummary};
use foldtorus::section_dynamics::{analyze_class, sweep, ClassOptions};
use foldtorus::text::parse_map;
use foldtorus::Error;
use serde_json::json;

#[derive(Parser)]
#[command(name = "foldtorus", version, about = "Train tracks, folded mapping tori and fibered classes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Certify a graph map: train track, transition data, gates, Whitehead graphs.
    Check(Common),
    /// Build the folded mapping torus and dump its trapezoid complex.
    Torus(Common),
    /// Integral basis of the first cohomology and the canonical class.
    ConeBasis(Common),
    /// Section graph and monodromy for one class.
    Class {
        #[command(flatten)]
        common: Common,
        /// Coordinates in the cohomology basis, e.g. `2,1`.
        #[arg(long, value_parser = parse_coords, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        class: Vec<Q>,
    },
    /// Classes `base + k * dir` for k in a range.
    Sweep {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_parser = parse_coords, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        base: Vec<Q>,
        #[arg(long, value_parser = parse_coords, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        dir: Vec<Q>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        from: i64,
        #[arg(long, default_value_t = 5, allow_hyphen_values = true)]
        to: i64,
    },
}

#[derive(Args)]
struct Common {
    /// Graph map file.
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = Metric::Simplicial)]
    metric: Metric,
    /// The automorphism is known to be hyperbolic.
    #[arg(long)]
    hyperbolic: bool,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long, default_value_t = 256)]
    depth_cap: usize,
    #[arg(long, default_value_t = 64)]
    max_rounds: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Metric {
    /// Every edge has length one.
    Simplicial,
    /// Lengths given in the file.
    Explicit,
    /// Rational approximation of the eigenmetric.
    Eigen,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn parse_coords(s: &str) -> Result<Q, String> {
    rational::parse(s.trim()).ok_or_else(|| format!("not a rational number: {s}"))
}

enum Failure {
    Lib(Error),
    Io(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

fn load(c: &Common) -> Result<GraphMap, Failure> {
    let src = std::fs::read_to_string(&c.input).map_err(|e| Failure::Io(format!("{}: {e}", c.input.display())))?;
    let m = parse_map(&src)?;
    Ok(match c.metric {
        Metric::Explicit => {
            if m.graph.lengths.is_none() {
                return Err(Error::Invalid("--metric explicit needs `len` lines".into()).into());
            }
            m
        }
        Metric::Simplicial => {
            let mut m = m;
            m.graph.lengths = None;
            m
        }
        Metric::Eigen => {
            let l = m.eigenmetric_lengths(&rational::qr(1, 1_000_000))?;
            m.with_lengths(&l)?
        }
    })
}

fn torus(m: &GraphMap) -> Result<(TrapezoidComplex, usize), Failure> {
    let d = build_delta(m)?;
    let fs = fold_sequence(&d, &m.graph)?;
    Ok((build_torus(m, &fs)?, fs.len()))
}

fn coords(u: &CohomologyClass) -> Vec<String> {
    u.coords.iter().map(rational::fmt).collect()
}

fn class_of(basis: &H1Basis, coords: &[Q]) -> Result<CohomologyClass, Failure> {
    if coords.len() != basis.dim() {
        return Err(Error::Invalid(format!("class needs {} coordinates, got {}", basis.dim(), coords.len())).into());
    }
    Ok(CohomologyClass::from_coords(coords.to_vec()))
}

fn run(cli: Cli) -> Result<(String, Option<PathBuf>), Failure> {
    let pretty = |v: &serde_json::Value| serde_json::to_string_pretty(v).expect("serializable") + "\n";
    match cli.command {
        Command::Check(c) => {
            let m = load(&c)?;
            let r = check_map(&m, c.hyperbolic)?;
            Ok((pretty(&serde_json::to_value(&r).expect("serializable")), c.out))
        }
        Command::Torus(c) => {
            let m = load(&c)?;
            let (x, folds) = torus(&m)?;
            let v = json!({ "summary": TorusSummary::new(&x, folds)?, "complex": x });
            Ok((pretty(&v), c.out))
        }
        Command::ConeBasis(c) => {
            let m = load(&c)?;
            let (x, _) = torus(&m)?;
            let basis = H1Basis::compute(&x)?;
            let z0 = x.canonical_cocycle();
            let u0 = basis.coordinates(&x, &z0)?;
            let pairings: Vec<String> = (0..basis.dim())
                .map(|i| {
                    let mut e = vec![rational::zero(); basis.dim()];
                    e[i] = rational::one();
                    rational::fmt(&pair_with_e0(&x, &basis.representative(&CohomologyClass::from_coords(e))))
                })
                .collect();
            let cochains: Vec<Vec<String>> =
                basis.basis.iter().map(|b| b.iter().map(|v| v.to_string()).collect()).collect();
            let v = json!({
                "dim": basis.dim(),
                "basis": cochains,
                "basis_pairings": pairings,
                "canonical_class": coords(&u0),
            });
            Ok((pretty(&v), c.out))
        }
        Command::Class { common: c, class } => {
            let m = load(&c)?;
            let (x, _) = torus(&m)?;
            let basis = H1Basis::compute(&x)?;
            let u = class_of(&basis, &class)?;
            let opts = ClassOptions {
                max_rounds: c.max_rounds,
                depth_cap: c.depth_cap,
                hyperbolic: c.hyperbolic,
                ..Default::default()
            };
            let r = analyze_class(&x, &basis, &u, opts)?;
            let text = pretty(&serde_json::to_value(&r).expect("serializable"));
            if !r.cone.is_inside() {
                emit(&text, c.out.as_deref()).map_err(Failure::Io)?;
                return Err(Error::Precondition("class is outside the positive cone".into()).into());
            }
            Ok((text, c.out))
        }
        Command::Sweep { common: c, base, dir, from, to } => {
            let m = load(&c)?;
            let (x, _) = torus(&m)?;
            let basis = H1Basis::compute(&x)?;
            let (b, d) = (class_of(&basis, &base)?, class_of(&basis, &dir)?);
            let opts = ClassOptions {
                max_rounds: c.max_rounds,
                depth_cap: c.depth_cap,
                hyperbolic: c.hyperbolic,
                ..Default::default()
            };
            let rows = sweep(&x, &basis, &b, &d, from..=to, opts)?;
            let text = if c.format == Format::Csv {
                let mut s = String::new();
                let dim = basis.dim();
                let head: Vec<String> = (0..dim).map(|i| format!("u{i}")).collect();
                s.push_str(&format!("k,{},rank,lambda_lo,lambda_hi,n_log_lambda,closed\n", head.join(",")));
                for r in &rows {
                    let cs: Vec<String> = r.coords.iter().map(rational::fmt).collect();
                    s.push_str(&format!(
                        "{},{},{},{:.12},{:.12},{:.12},{}\n",
                        r.k,
                        cs.join(","),
                        r.rank,
                        r.lambda_lo,
                        r.lambda_hi,
                        r.n_log_lambda,
                        r.closed
                    ));
                }
                s
            } else {
                pretty(&serde_json::to_value(&rows).expect("serializable"))
            };
            Ok((text, c.out))
        }
    }
}

/// Writes to `out` through a temporary file and a rename, or to stdout.
fn emit(text: &str, out: Option<&Path>) -> Result<(), String> {
    match out {
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string()),
        Some(p) => {
            let tmp = p.with_extension("partial");
            std::fs::write(&tmp, text).map_err(|e| format!("{}: {e}", tmp.display()))?;
            std::fs::rename(&tmp, p).map_err(|e| format!("{}: {e}", p.display()))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse { .. } | Error::Invalid(_) => 2,
        Error::Precondition(_) => 3,
        Error::CapExceeded(_) => 4,
        Error::Internal(_) => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((text, out)) => match emit(&text, out.as_deref()) {
            Ok(()) => ExitCode::SUCCESS,
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::from(1)
            }
        },
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
