//! `frugal-split`: validate representations, compute minimal liftings,
//! certify convergence, and run or compare splitting methods.
//!
//! Exit codes:
//!
//! | code | meaning |
//! |------|---------|
//! | 0 | success: valid, satisfied, or converged to tolerance |
//! | 1 | invalid representation, certificate not satisfied, or incompatible inputs |
//! | 2 | usage, parse or input error |
//! | 3 | run stopped by the divergence guard |
//! | 4 | run stopped at the iteration limit |
//! | 5 | certificate search refused because `U` is rank deficient |
//!
//! Operator indices are 1-based on the command line and in files.

use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use frugal_split::blocks::LiftedVector;
use frugal_split::convergence::{self, Certificate, SearchOptions};
use frugal_split::io::{matrix_from_json, CertificateDoc, ProblemDoc, RepresentationDoc};
use frugal_split::linalg::{self, Matrix, Tolerance};
use frugal_split::representation::{factorize, minimal_kernel, minimal_lifting, validate, Representation};
use frugal_split::runner::{self, gen_affine_problem, gen_lasso_problem, Monitor, Problem, RunOptions, Termination};
use frugal_split::zoo::{Betas, Params, Registry, ZooEntry};
use frugal_split::Error;

const SEED_VAR: &str = "FRUGAL_SPLIT_SEED";

#[derive(Parser)]
#[command(name = "frugal-split", version, about = "Frugal splitting operators: representations, liftings, certificates and runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the built-in methods.
    Methods,
    /// Check a representation file.
    Validate {
        file: PathBuf,
    },
    /// Print the minimal lifting for n operators with forward set F.
    Lift {
        #[arg(long)]
        n: usize,
        /// Comma-separated 1-based indices, e.g. "2,3".
        #[arg(long, default_value = "")]
        forward_set: String,
        /// Primal index of the emitted kernel; defaults to the first index outside F.
        #[arg(long)]
        p: Option<usize>,
        /// Write a kernel of minimal rank as a representation file.
        #[arg(long)]
        emit_kernel: Option<PathBuf>,
    },
    /// Check or find a convergence certificate.
    Certify {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: MethodParams,
        /// Cocoercivity constant as INDEX=VALUE; repeatable.
        #[arg(long = "beta", value_name = "INDEX=VALUE")]
        betas: Vec<String>,
        /// Take cocoercivity constants from a problem file.
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Check this Q instead of the closed form or the search.
        #[arg(long)]
        q: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write the certificate report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Iterate a method on a problem.
    Run {
        #[command(flatten)]
        source: Source,
        #[command(flatten)]
        params: MethodParams,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Trace CSV output.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Summary JSON output; printed to stdout when absent.
        #[arg(long)]
        summary: Option<PathBuf>,
    },
    /// Run several methods on one problem.
    Compare {
        /// Comma-separated method names.
        #[arg(long, value_delimiter = ',', required = true)]
        methods: Vec<String>,
        #[command(flatten)]
        params: MethodParams,
        #[command(flatten)]
        problem: ProblemArgs,
        #[command(flatten)]
        run: RunArgs,
        /// Table CSV output; printed to stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Built-in method name.
    #[arg(long)]
    method: Option<String>,
    /// Representation file.
    #[arg(long)]
    representation: Option<PathBuf>,
}

#[derive(Args, Default)]
struct MethodParams {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    f: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Comma-separated step sizes for projective splitting.
    #[arg(long, value_delimiter = ',')]
    taus: Vec<f64>,
    /// Any other parameter as NAME=VALUE; repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    extra: Vec<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Generator {
    Affine,
    Lasso,
}

#[derive(Args)]
struct ProblemArgs {
    /// Problem file.
    #[arg(long, conflicts_with = "generator")]
    problem: Option<PathBuf>,
    /// Random test problem matching the method's operator count and forward set.
    #[arg(long, value_enum, default_value = "affine")]
    generator: Generator,
    /// Dimension of the generated problem.
    #[arg(long, default_value_t = 3)]
    dim: usize,
    /// Strong monotonicity (affine) or l1 weight (lasso) of the generated problem.
    #[arg(long, default_value_t = 0.5)]
    mu: f64,
    /// Box half-width of the lasso problem.
    #[arg(long, default_value_t = 1.0)]
    bound: f64,
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, default_value_t = 10_000)]
    max_iter: usize,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Seed of generators and the certificate search; FRUGAL_SPLIT_SEED overrides it.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn new(code: u8, message: impl fmt::Display) -> Self {
        Failure { code, message: message.to_string() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::RankDeficientU { .. } => 5,
            Error::Incompatible(_) => 1,
            _ => 2,
        };
        Failure::new(code, e)
    }
}

type CmdResult = Result<u8, Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Methods => cmd_methods(),
        Command::Validate { file } => cmd_validate(&file),
        Command::Lift { n, forward_set, p, emit_kernel } => cmd_lift(n, &forward_set, p, emit_kernel.as_deref()),
        Command::Certify { source, params, betas, problem, q, seed, out } => {
            cmd_certify(&source, &params, &betas, problem.as_deref(), q.as_deref(), seed.unwrap_or(0), out.as_deref())
        }
        Command::Run { source, params, problem, run, trace, summary } => cmd_run(&source, &params, &problem, &run, trace.as_deref(), summary.as_deref()),
        Command::Compare { methods, params, problem, run, out } => cmd_compare(&methods, &params, &problem, &run, out.as_deref()),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn tol() -> Tolerance {
    Tolerance::default()
}

fn seed_override(seed: u64) -> Result<u64, Failure> {
    match std::env::var(SEED_VAR) {
        Ok(s) => s.trim().parse().map_err(|_| Failure::new(2, format!("{SEED_VAR}={s:?} is not an unsigned integer"))),
        Err(_) => Ok(seed),
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure::new(2, format!("{}: {e}", path.display())))
}

fn emit(path: Option<&Path>, contents: &str) -> Result<(), Failure> {
    match path {
        Some(p) => write(p, contents),
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

fn index_list(s: &str, what: &str) -> Result<BTreeSet<usize>, Failure> {
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let i: usize = part.parse().map_err(|_| Failure::new(2, format!("{what}: {part:?} is not an index")))?;
        if i == 0 {
            return Err(Failure::new(2, format!("{what}: indices are 1-based")));
        }
        out.insert(i - 1);
    }
    Ok(out)
}

fn key_value(s: &str, what: &str) -> Result<(String, f64), Failure> {
    let (k, v) = s.split_once('=').ok_or_else(|| Failure::new(2, format!("{what}: expected NAME=VALUE, got {s:?}")))?;
    let v: f64 = v.trim().parse().map_err(|_| Failure::new(2, format!("{what}: {v:?} is not a number")))?;
    Ok((k.trim().to_string(), v))
}

impl MethodParams {
    fn to_params(&self) -> Result<Params, Failure> {
        let mut p = Params::new();
        let counts = [("n", self.n), ("f", self.f)];
        for (name, v) in counts {
            if let Some(v) = v {
                p.set(name, v as f64);
            }
        }
        let scalars = [("gamma", self.gamma), ("theta", self.theta), ("tau", self.tau), ("sigma", self.sigma), ("lambda", self.lambda)];
        for (name, v) in scalars {
            if let Some(v) = v {
                p.set(name, v);
            }
        }
        if !self.taus.is_empty() {
            p.set_vector("taus", self.taus.clone());
        }
        for kv in &self.extra {
            let (k, v) = key_value(kv, "--param")?;
            p.set(&k, v);
        }
        Ok(p)
    }
}

/// A method from the registry or a representation file.
enum Method {
    Zoo(ZooEntry),
    File { name: String, rep: Representation },
}

impl Method {
    fn load(source: &Source, params: &MethodParams) -> Result<Method, Failure> {
        match (&source.method, &source.representation) {
            (Some(name), None) => Ok(Method::Zoo(Registry::builtin().entry(name, &params.to_params()?, &tol())?)),
            (None, Some(path)) => {
                let doc = RepresentationDoc::from_json(&read(path)?)?;
                let rep = doc.to_representation(&tol())?;
                Ok(Method::File { name: path.display().to_string(), rep })
            }
            _ => Err(Failure::new(2, "exactly one of --method and --representation is required")),
        }
    }

    fn name(&self) -> &str {
        match self {
            Method::Zoo(e) => e.name(),
            Method::File { name, .. } => name,
        }
    }

    fn representation(&self) -> &Representation {
        match self {
            Method::Zoo(e) => e.representation(),
            Method::File { rep, .. } => rep,
        }
    }

    fn closed_form_q(&self, betas: &Betas) -> Result<Option<Matrix>, Failure> {
        match self {
            Method::Zoo(e) => Ok(e.closed_form_q(betas)?),
            Method::File { .. } => Ok(None),
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum CertSource {
    File,
    ClosedForm,
    Search,
}

impl CertSource {
    fn as_str(self) -> &'static str {
        match self {
            CertSource::File => "file",
            CertSource::ClosedForm => "closed_form",
            CertSource::Search => "search",
        }
    }
}

/// The closed form if satisfied, otherwise the search result, otherwise the
/// unsatisfied closed form. Rank-deficient `U` is an error unless the closed
/// form already certifies.
fn find_certificate(method: &Method, betas: &Betas, seed: u64) -> Result<Option<(Certificate, CertSource)>, Failure> {
    let fact = factorize(method.representation(), &tol())?;
    let closed = match method.closed_form_q(betas)? {
        Some(q) => Some(convergence::check(&fact, &q, betas, &tol())?),
        None => None,
    };
    if let Some(c) = closed.as_ref().filter(|c| c.satisfied) {
        return Ok(Some((c.clone(), CertSource::ClosedForm)));
    }
    let opts = SearchOptions { seed, ..SearchOptions::default() };
    match convergence::search_q(&fact, betas, &tol(), &opts)? {
        Some(c) => Ok(Some((c, CertSource::Search))),
        None => Ok(closed.map(|c| (c, CertSource::ClosedForm))),
    }
}

fn cmd_methods() -> CmdResult {
    let reg = Registry::builtin();
    for name in reg.names() {
        println!("{name:<18} {}", reg.summary(name).unwrap_or_default());
    }
    Ok(0)
}

/// `‖A - A B⁺ B‖`: zero iff the rows of `A` lie in the row space of `B`.
fn row_space_residual(a: &Matrix, b: &Matrix) -> f64 {
    (a - a * linalg::pinv(b, &tol()) * b).norm()
}

fn hstack(a: &Matrix, b: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(a.nrows(), a.ncols() + b.ncols());
    out.columns_mut(0, a.ncols()).copy_from(a);
    out.columns_mut(a.ncols(), b.ncols()).copy_from(b);
    out
}

fn status(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "FAILED"
    }
}

fn cmd_validate(file: &Path) -> CmdResult {
    let doc = RepresentationDoc::from_json(&read(file)?)?;
    let parts = match doc.to_parts(&tol()) {
        Ok(parts) => parts,
        Err(e @ Error::Parse(_)) => return Err(e.into()),
        Err(e) => {
            println!("invalid: {e}");
            return Ok(1);
        }
    };
    let report = match validate(&parts, &tol()) {
        Ok(r) => r,
        Err(e) => {
            println!("invalid: {e}");
            return Ok(1);
        }
    };
    let kernel_ok = report.kernel.as_ref().is_some_and(|k| k.is_kernel());
    let kernel_res = row_space_residual(&hstack(&parts.n, &-&parts.m), &hstack(&parts.u, &-&parts.v));
    let range_res = (&parts.v - &parts.u * linalg::pinv(&parts.u, &tol()) * &parts.v).norm();
    println!("n = {}, d = {}, p = {}, F = {:?}", parts.m.nrows(), parts.u.nrows(), parts.p + 1, parts.forward.iter().map(|i| i + 1).collect::<Vec<_>>());
    println!("(i)   p-kernel: {}", status(kernel_ok));
    println!("(ii)  ker [N -M] contains ker [U -V]: {} (residual {kernel_res:e})", status(report.kernel_containment));
    println!("(iii) ran U contains ran V: {} (residual {range_res:e})", status(report.range_containment));
    for reason in &report.reasons {
        println!("  - {reason}");
    }
    if report.is_valid() {
        println!("valid");
        Ok(0)
    } else {
        println!("invalid");
        Ok(1)
    }
}

fn cmd_lift(n: usize, forward_set: &str, p: Option<usize>, emit_kernel: Option<&Path>) -> CmdResult {
    let forward = index_list(forward_set, "--forward-set")?;
    let d = minimal_lifting(n, &forward)?;
    println!("{d}");
    if let Some(path) = emit_kernel {
        let p = match p {
            Some(0) => return Err(Failure::new(2, "--p: indices are 1-based")),
            Some(p) => p - 1,
            None => (0..n).find(|i| !forward.contains(i)).ok_or(Error::ForwardSetTooLarge)?,
        };
        let m = minimal_kernel(n, &forward, p)?;
        write(path, &RepresentationDoc::kernel(&m, p, &forward).to_json())?;
    }
    Ok(0)
}

fn cmd_certify(
    source: &Source,
    params: &MethodParams,
    beta_args: &[String],
    problem: Option<&Path>,
    q: Option<&Path>,
    seed: u64,
    out: Option<&Path>,
) -> CmdResult {
    let seed = seed_override(seed)?;
    let method = Method::load(source, params)?;
    let mut betas = Betas::new();
    if let Some(path) = problem {
        betas.extend(ProblemDoc::from_json(&read(path)?)?.to_tuple()?.betas().clone());
    }
    for kv in beta_args {
        let (k, v) = key_value(kv, "--beta")?;
        let i = index_list(&k, "--beta")?.into_iter().next().ok_or_else(|| Failure::new(2, "--beta: missing index"))?;
        betas.insert(i, v);
    }
    let found = match q {
        Some(path) => {
            let q = matrix_from_json(&read(path)?)?;
            let fact = factorize(method.representation(), &tol())?;
            Some((convergence::check(&fact, &q, &betas, &tol())?, CertSource::File))
        }
        None => find_certificate(&method, &betas, seed)?,
    };
    let satisfied = found.as_ref().is_some_and(|(c, _)| c.satisfied);
    let report = serde_json::json!({
        "method": method.name(),
        "satisfied": satisfied,
        "source": found.as_ref().map(|(_, s)| s.as_str()),
        "certificate": found.as_ref().map(|(c, _)| CertificateDoc::from(c)),
    });
    emit(out, &format!("{}\n", serde_json::to_string_pretty(&report).expect("report serializes")))?;
    match &found {
        Some((c, _)) => eprintln!(
            "{}: min_eig_Q = {:e}, min_eig_W = {:e}, structural residual = {:e}",
            if c.satisfied { "satisfied" } else { "not satisfied" },
            c.min_eig_q,
            c.min_eig_w,
            c.structural_residual
        ),
        None => eprintln!("not satisfied: no certificate found"),
    }
    Ok(if satisfied { 0 } else { 1 })
}

fn load_problem(args: &ProblemArgs, rep: &Representation, seed: u64) -> Result<Problem, Failure> {
    if let Some(path) = &args.problem {
        let tuple = ProblemDoc::from_json(&read(path)?)?.to_tuple()?;
        return match Problem::solve(tuple.clone(), seed) {
            Ok(p) => Ok(p),
            Err(e) => {
                eprintln!("warning: no reference solution: {e}");
                Ok(Problem { tuple, solution: None, seed })
            }
        };
    }
    let forward = rep.forward_set();
    match args.generator {
        Generator::Affine => Ok(gen_affine_problem(rep.num_operators(), args.dim, forward, args.mu, seed)?),
        Generator::Lasso => {
            if rep.num_operators() != 3 || !forward.is_subset(&BTreeSet::from([1])) {
                return Err(Error::Incompatible("the lasso generator needs 3 operators with forward set {} or {2}".into()).into());
            }
            Ok(gen_lasso_problem(args.dim, args.mu, args.bound, forward.contains(&1), seed)?)
        }
    }
}

fn exit_code(t: Termination) -> u8 {
    match t {
        Termination::Tolerance => 0,
        Termination::DivergenceGuard => 3,
        Termination::MaxIter => 4,
    }
}

fn cmd_run(source: &Source, params: &MethodParams, problem: &ProblemArgs, args: &RunArgs, trace_path: Option<&Path>, summary: Option<&Path>) -> CmdResult {
    let seed = seed_override(args.seed)?;
    let method = Method::load(source, params)?;
    let rep = method.representation();
    let problem = load_problem(problem, rep, seed)?;
    let tuple = &problem.tuple;
    if rep.num_operators() != tuple.n() || rep.forward_set() != tuple.forward_set() {
        return Err(Error::Incompatible(format!("{} does not match the problem's operator count or forward set", method.name())).into());
    }
    let fact = factorize(rep, &tol())?;
    let certificate = match find_certificate(&method, tuple.betas(), seed) {
        Ok(c) => c.filter(|(c, _)| c.satisfied),
        Err(f) => {
            eprintln!("warning: no certificate: {}", f.message);
            None
        }
    };
    let y_star = problem.dual_solution(rep.p());
    let monitor = match (&certificate, &y_star) {
        (Some((c, _)), Some(y)) => Some(Monitor { q: c.q.clone(), w: c.w.clone(), py_star: y.apply(&fact.pp)? }),
        _ => None,
    };
    let opts = RunOptions { max_iter: args.max_iter, tol: args.tol, monitor, ..RunOptions::default() };
    let trace = runner::run(rep, tuple, &LiftedVector::zeros(tuple.m(), rep.lifting()), &opts)?;
    let fejer = match (&certificate, &y_star) {
        (Some((c, _)), Some(y)) => Some(runner::monitor_fejer(&trace, &c.q, &c.w, &fact.pp, y, 1e-9)?),
        _ => None,
    };
    if let Some(path) = trace_path {
        write(path, &runner::trace_csv(&trace))?;
    }
    let mut doc = runner::trace_summary(&trace, method.name(), problem.known_solution(), fejer.as_ref());
    doc["seed"] = seed.into();
    doc["certificate"] = certificate.as_ref().map(|(_, s)| s.as_str()).into();
    emit(summary, &format!("{}\n", serde_json::to_string_pretty(&doc).expect("summary serializes")))?;
    eprintln!("{}: {} after {} iterations, residual {:e}", method.name(), trace.terminated_by, trace.iterations, trace.final_residual);
    Ok(exit_code(trace.terminated_by))
}

fn cmd_compare(methods: &[String], params: &MethodParams, problem: &ProblemArgs, args: &RunArgs, out: Option<&Path>) -> CmdResult {
    let seed = seed_override(args.seed)?;
    let reg = Registry::builtin();
    let p = params.to_params()?;
    let entries = methods.iter().map(|m| reg.entry(m.trim(), &p, &tol())).collect::<Result<Vec<_>, _>>()?;
    let first = entries.first().ok_or_else(|| Failure::new(2, "--methods is empty"))?;
    let problem = load_problem(problem, first.representation(), seed)?;
    let opts = RunOptions { max_iter: args.max_iter, tol: args.tol, ..RunOptions::default() };
    let search = SearchOptions { seed, ..SearchOptions::default() };
    let rows = runner::compare(&entries, &problem, &opts, &search)?;
    emit(out, &runner::compare_csv(&rows))?;
    Ok(0)
}
