//! The `normmin` command line.
//!
//! Exit codes: 0 success, 1 usage or input error, 2 solver budget exhausted,
//! 3 certificate rejected or not recoverable, 4 reproduction mismatch.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bundle::{self, summary_table, Tolerances};
use crate::certificate::{check_certificate, recover_certificate, Certificate, Recovery, Theorem, DEFAULT_CHECK_TOL, DEFAULT_RECOVERY_TOL};
use crate::error::Error;
use crate::problem::ProblemInstance;
use crate::psi::PsiGenerator;
use crate::render::{region_csv, region_svg};
use crate::solution_set::{sample_solution_region, SampleBox, SolutionSetDescription};
use crate::solver::{self, Method, SolverConfig, DEFAULT_MAX_ITERS, DEFAULT_STOP_TOL};
use crate::vector::Vector;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_BUDGET: i32 = 2;
pub const EXIT_REJECTED: i32 = 3;
pub const EXIT_MISMATCH: i32 = 4;

const DEFAULT_SAMPLE_GRID: usize = 201;
const DEFAULT_VALIDATION_SAMPLES: usize = 10_000;

#[derive(Debug, Parser)]
#[command(name = "normmin", version, about = "Minimize product norms of distances to anchor points")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Subgradient,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TheoremArg {
    Auto,
    General,
    Ft,
    Chebyshev,
    Pft,
}

impl TheoremArg {
    fn theorem(self) -> Option<Theorem> {
        match self {
            TheoremArg::Auto => None,
            TheoremArg::General => Some(Theorem::General),
            TheoremArg::Ft => Some(Theorem::FermatTorricelli),
            TheoremArg::Chebyshev => Some(Theorem::Chebyshev),
            TheoremArg::Pft => Some(Theorem::PFermat),
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the objective of an instance.
    Solve {
        problem: PathBuf,
        #[arg(long, value_enum, default_value = "subgradient")]
        method: MethodArg,
        /// Stopping tolerance.
        #[arg(long, default_value_t = DEFAULT_STOP_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
        max_iters: usize,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Check an optimality certificate.
    Certify {
        problem: PathBuf,
        certificate: PathBuf,
        #[arg(long, value_enum, default_value = "auto")]
        theorem: TheoremArg,
        #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Recover dual vectors for a candidate solution: a JSON array of
    /// coordinates or a solve result.
    Recover {
        problem: PathBuf,
        point: PathBuf,
        #[arg(long, default_value_t = DEFAULT_RECOVERY_TOL)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Describe the solution set determined by a certificate.
    Describe {
        problem: PathBuf,
        certificate: PathBuf,
        #[arg(long, default_value_t = DEFAULT_CHECK_TOL)]
        tol: f64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample the solution set on a lattice; CSV of accepted points.
    Sample {
        problem: PathBuf,
        certificate: PathBuf,
        /// Comma-separated bounds lo,hi per coordinate; defaults to the
        /// solve-bound box.
        #[arg(long = "box", value_name = "x0,x1,y0,y1", allow_hyphen_values = true)]
        bounds: Option<String>,
        #[arg(long, default_value_t = DEFAULT_SAMPLE_GRID)]
        grid: usize,
        #[arg(long, default_value_t = bundle::DEFAULT_SAMPLE_TOL)]
        tol: f64,
        #[arg(long)]
        svg: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Sample the generator axioms; the built-in family at arities 2 to 4
    /// without an input file.
    ValidatePsi {
        generator: Option<PathBuf>,
        #[arg(long)]
        arity: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_VALIDATION_SAMPLES)]
        grid: usize,
        #[arg(long, default_value_t = 1e-9)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Run every bundled example end to end and write its artifacts.
    ReproduceExamples {
        /// Example id prefix.
        #[arg(long)]
        only: Option<String>,
        /// Overrides the check, recovery and sampling tolerances.
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, default_value = "reproduction")]
        output: PathBuf,
    },
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

fn fail(message: impl Into<String>) -> Failure {
    Failure { code: EXIT_ERROR, message: message.into() }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        fail(e.to_string())
    }
}

type CmdResult = Result<i32, Failure>;

fn positive(name: &str, v: f64) -> Result<(), Failure> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(fail(format!("--{name} must be positive, got {v}")))
    }
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = fs::read_to_string(path).map_err(|e| fail(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| fail(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(|e| fail(e.to_string()))
}

fn emit(output: Option<&Path>, text: &str, out: &mut dyn Write) -> Result<(), Failure> {
    match output {
        Some(p) => fs::write(p, text).map_err(|e| fail(format!("{}: {e}", p.display()))),
        None => out.write_all(text.as_bytes()).map_err(|e| fail(e.to_string())),
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum PointInput {
    Coordinates(Vector),
    Result { point: Vector },
}

fn parse_box(spec: &str, dim: usize) -> Result<SampleBox, Failure> {
    let vals = spec
        .split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| fail(format!("--box: cannot parse {s:?}"))))
        .collect::<Result<Vec<_>, _>>()?;
    if vals.len() != 2 * dim {
        return Err(fail(format!("--box: expected {} values for d = {dim}, got {}", 2 * dim, vals.len())));
    }
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(fail("--box: bounds must be finite"));
    }
    Ok(SampleBox(vals.chunks(2).map(|c| (c[0], c[1])).collect()))
}

/// Parses `args` (program name first) and runs the command.
pub fn run<I, S>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match execute(cli.command, out, err) {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CmdResult {
    match cmd {
        Command::Solve { problem, method, tol, seed, max_iters, output } => {
            positive("tol", tol)?;
            let prob: ProblemInstance = read_json(&problem)?;
            let cfg = SolverConfig { max_iters, seed, stop_tol: tol, ..Default::default() };
            let method = match method {
                MethodArg::Subgradient => Method::Subgradient,
                MethodArg::Pattern => Method::Pattern,
            };
            let res = solver::solve(&prob, &cfg, method)?;
            emit(output.as_deref(), &to_json(&res)?, out)?;
            if res.converged {
                Ok(EXIT_OK)
            } else {
                let _ = writeln!(err, "warning: iteration budget exhausted; best iterate written");
                Ok(EXIT_BUDGET)
            }
        }
        Command::Certify { problem, certificate, theorem, tol, output } => {
            positive("tol", tol)?;
            let prob: ProblemInstance = read_json(&problem)?;
            let cert: Certificate = read_json(&certificate)?;
            let rep = check_certificate(&prob, &cert, theorem.theorem(), tol)?;
            emit(output.as_deref(), &to_json(&rep)?, out)?;
            if rep.verdict {
                Ok(EXIT_OK)
            } else {
                let _ = writeln!(err, "certificate rejected: {}", rep.violations().join(", "));
                Ok(EXIT_REJECTED)
            }
        }
        Command::Recover { problem, point, tol, output } => {
            positive("tol", tol)?;
            let prob: ProblemInstance = read_json(&problem)?;
            let u = match read_json::<PointInput>(&point)? {
                PointInput::Coordinates(v) | PointInput::Result { point: v } => v,
            };
            let rec = recover_certificate(&prob, &u, tol)?;
            match &rec {
                Recovery::Certified { certificate, .. } => {
                    emit(output.as_deref(), &to_json(certificate)?, out)?;
                    Ok(EXIT_OK)
                }
                Recovery::Infeasible { reason } => {
                    emit(output.as_deref(), &to_json(&rec)?, out)?;
                    let _ = writeln!(err, "no certificate: {reason}");
                    Ok(EXIT_REJECTED)
                }
            }
        }
        Command::Describe { problem, certificate, tol, output } => {
            positive("tol", tol)?;
            let prob: ProblemInstance = read_json(&problem)?;
            let cert: Certificate = read_json(&certificate)?;
            let desc = SolutionSetDescription::new(prob, cert, tol)?;
            emit(output.as_deref(), &to_json(&desc.describe(tol))?, out)?;
            Ok(EXIT_OK)
        }
        Command::Sample { problem, certificate, bounds, grid, tol, svg, output } => {
            positive("tol", tol)?;
            let prob: ProblemInstance = read_json(&problem)?;
            if svg.is_some() && prob.dim() != 2 {
                return Err(fail(format!("--svg needs a planar instance (d = 2), got d = {}", prob.dim())));
            }
            let cert: Certificate = read_json(&certificate)?;
            let bx = match bounds {
                Some(s) => parse_box(&s, prob.dim())?,
                None => {
                    let r = prob.solve_bound().radius;
                    SampleBox::square(-r, r, prob.dim())
                }
            };
            let desc = SolutionSetDescription::new(prob.clone(), cert, DEFAULT_CHECK_TOL)?;
            let pts = sample_solution_region(&desc, &bx, grid, tol)?;
            emit(output.as_deref(), &region_csv(prob.dim(), &pts), out)?;
            if let Some(path) = svg {
                let text = region_svg(prob.anchors(), &pts, &bx, grid)?;
                fs::write(&path, text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
            }
            Ok(EXIT_OK)
        }
        Command::ValidatePsi { generator, arity, grid, tol, seed, output } => {
            positive("tol", tol)?;
            let cases: Vec<(PsiGenerator, usize)> = match generator {
                Some(path) => {
                    let gen: PsiGenerator = read_json(&path)?;
                    let n = arity.or(gen.arity()).unwrap_or(2);
                    vec![(gen, n)]
                }
                None => {
                    let arities: Vec<usize> = arity.map_or_else(|| (2..=4).collect(), |n| vec![n]);
                    let family = [PsiGenerator::sum(), PsiGenerator::P(1.5), PsiGenerator::P(2.0), PsiGenerator::P(3.0), PsiGenerator::max()];
                    family.iter().flat_map(|g| arities.iter().map(move |&n| (g.clone(), n))).collect()
                }
            };
            let mut reports = Vec::new();
            let mut failed = Vec::new();
            for (gen, n) in &cases {
                let rep = gen.validate_seeded(*n, grid, tol, seed)?;
                if !rep.passed() {
                    failed.push(format!("{gen:?} (n = {n}): {}", rep.failures().join(", ")));
                }
                reports.push(rep);
            }
            let body = if reports.len() == 1 { to_json(&reports[0])? } else { to_json(&reports)? };
            emit(output.as_deref(), &body, out)?;
            if failed.is_empty() {
                Ok(EXIT_OK)
            } else {
                for f in failed {
                    let _ = writeln!(err, "generator rejected: {f}");
                }
                Ok(EXIT_REJECTED)
            }
        }
        Command::ReproduceExamples { only, tol, output } => {
            let tols = match tol {
                Some(t) => {
                    positive("tol", t)?;
                    Tolerances::uniform(t)
                }
                None => Tolerances::default(),
            };
            let selected = bundle::select(only.as_deref());
            if selected.is_empty() {
                return Err(fail(format!("--only {:?} matches no example", only.unwrap_or_default())));
            }
            let mut outcomes = Vec::new();
            for ex in &selected {
                let (outcome, art) = bundle::reproduce(ex, tols)?;
                for (rel, text) in &art.files {
                    let path = output.join(rel);
                    if let Some(parent) = path.parent() {
                        fs::create_dir_all(parent).map_err(|e| fail(format!("{}: {e}", parent.display())))?;
                    }
                    fs::write(&path, text).map_err(|e| fail(format!("{}: {e}", path.display())))?;
                }
                outcomes.push(outcome);
            }
            let table = summary_table(&outcomes);
            fs::create_dir_all(&output).map_err(|e| fail(format!("{}: {e}", output.display())))?;
            fs::write(output.join("summary.txt"), &table).map_err(|e| fail(e.to_string()))?;
            fs::write(output.join("summary.json"), to_json(&outcomes)?).map_err(|e| fail(e.to_string()))?;
            out.write_all(table.as_bytes()).map_err(|e| fail(e.to_string()))?;
            let bad: Vec<&str> = outcomes.iter().filter(|o| !o.passed).map(|o| o.id.as_str()).collect();
            if bad.is_empty() {
                Ok(EXIT_OK)
            } else {
                let _ = writeln!(err, "examples failed: {}", bad.join(", "));
                Ok(EXIT_MISMATCH)
            }
        }
    }
}
