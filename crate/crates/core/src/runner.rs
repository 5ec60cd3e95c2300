//! Fixed-point iteration driver, Fejér monitoring, method comparison and test
//! problem generators.

use std::collections::BTreeSet;
use std::fmt::{self, Write as _};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blocks::{DualVector, LiftedVector};
use crate::convergence::{self, Certificate, SearchOptions};
use crate::error::{Error, Result};
use crate::evaluator::Evaluator;
use crate::linalg::{self, Matrix, Tolerance, Vector};
use crate::operators::{zero_of_sum_oracle, Operator, OperatorTuple, OracleOptions, OracleSolution};
use crate::representation::{factorize, Representation};
use crate::zoo::ZooEntry;

/// An operator tuple with an optional certified zero.
#[derive(Debug, Clone)]
pub struct Problem {
    pub tuple: OperatorTuple,
    pub solution: Option<OracleSolution>,
    pub seed: u64,
}

impl Problem {
    /// Wraps a tuple and computes its zero with the oracle.
    pub fn solve(tuple: OperatorTuple, seed: u64) -> Result<Problem> {
        let solution = zero_of_sum_oracle(&tuple, &OracleOptions::default())?;
        Ok(Problem { tuple, solution: Some(solution), seed })
    }

    pub fn known_solution(&self) -> Option<&Vector> {
        self.solution.as_ref().map(|s| &s.x)
    }

    /// The zero `y*` of the primal-dual operator with primal index `p`:
    /// `y*_p = x*` and `y*_i = u_i ∈ A_i x*` otherwise.
    pub fn dual_solution(&self, p: usize) -> Option<DualVector> {
        let sol = self.solution.as_ref()?;
        let blocks: Vec<Vector> = (0..self.tuple.n()).map(|i| if i == p { sol.x.clone() } else { sol.elements[i].clone() }).collect();
        DualVector::from_blocks(&blocks).ok()
    }
}

fn sum_is_invertible(ks: &[Matrix], tol: &Tolerance) -> bool {
    let m = ks[0].nrows();
    let sum = ks.iter().fold(Matrix::zeros(m, m), |acc, k| acc + k);
    linalg::rank(&sum, tol) == m
}

/// A random affine problem: cocoercive quadratic gradients on `forward`,
/// monotone affine maps (symmetric PSD plus skew part) elsewhere, with `μ I`
/// added to the first non-forward operator.
pub fn gen_affine_problem(n: usize, m: usize, forward: &BTreeSet<usize>, mu: f64, seed: u64) -> Result<Problem> {
    if n == 0 || m == 0 {
        return Err(Error::dims("affine problem", "n, m >= 1", format!("n = {n}, m = {m}")));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::param("mu", mu, "must be nonnegative"));
    }
    if let Some(&i) = forward.iter().find(|&&i| i >= n) {
        return Err(Error::IndexOutOfRange { index: i, n });
    }
    let strong = (0..n).find(|i| !forward.contains(i)).ok_or(Error::ForwardSetTooLarge)?;
    let tol = Tolerance::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rand_mat = |rng: &mut ChaCha8Rng| Matrix::from_fn(m, m, |_, _| rng.gen_range(-1.0..1.0));
    for _ in 0..100 {
        let mut ops = Vec::with_capacity(n);
        let mut ks = Vec::with_capacity(n);
        for i in 0..n {
            let b = rand_mat(&mut rng);
            let psd = b.transpose() * &b / m as f64;
            let q = Vector::from_fn(m, |_, _| rng.gen_range(-1.0..1.0));
            if forward.contains(&i) {
                ks.push(psd.clone());
                ops.push(Operator::quadratic(psd, q)?);
            } else {
                let s = rand_mat(&mut rng);
                let mut k = psd + (&s - s.transpose()) * 0.5;
                if i == strong {
                    k += Matrix::identity(m, m) * mu;
                }
                ks.push(k.clone());
                ops.push(Operator::affine(k, q)?);
            }
        }
        if !sum_is_invertible(&ks, &tol) {
            continue;
        }
        let tuple = OperatorTuple::new(m, ops, forward.clone())?.with_computed_betas()?;
        return Problem::solve(tuple, seed);
    }
    Err(Error::param("mu", mu, "no problem with a unique zero found in 100 draws"))
}

/// The triple `(N_box, ∇f, ∂(μ‖·‖₁))` on `R^m` with
/// `f(x) = ½ (x - c)ᵀ P (x - c)`, `P = I + BᵀB/m`, `c_0 = 2` and the other
/// entries of `c` random. For `m = 1` this is `½(x - 2)²`. The quadratic is
/// the forward operator when `forward` is set.
pub fn gen_lasso_problem(m: usize, mu: f64, bound: f64, forward: bool, seed: u64) -> Result<Problem> {
    if m == 0 {
        return Err(Error::dims("lasso problem", "m >= 1", 0));
    }
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::param("mu", mu, "must be nonnegative"));
    }
    if !(bound > 0.0) {
        return Err(Error::param("box", bound, "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = Matrix::from_fn(m - 1, m, |_, _| rng.gen_range(-1.0..1.0));
    let p = Matrix::identity(m, m) + b.transpose() * &b / m as f64;
    let c = Vector::from_fn(m, |i, _| if i == 0 { 2.0 } else { rng.gen_range(-3.0..3.0) });
    let q = -(&p * &c);
    let l1 = if mu > 0.0 { Operator::l1(mu)? } else { Operator::Zero };
    let ops = vec![Operator::boxed(Vector::from_element(m, -bound), Vector::from_element(m, bound))?, Operator::quadratic(p, q)?, l1];
    let f = if forward { BTreeSet::from([1]) } else { BTreeSet::new() };
    let tuple = OperatorTuple::new(m, ops, f)?.with_computed_betas()?;
    Problem::solve(tuple, seed)
}

/// Why a run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    Tolerance,
    MaxIter,
    DivergenceGuard,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::Tolerance => "tolerance",
            Termination::MaxIter => "max_iter",
            Termination::DivergenceGuard => "divergence_guard",
        })
    }
}

/// `Q`, `W` and `P y*` used to fill the Lyapunov columns of a trace.
#[derive(Debug, Clone)]
pub struct Monitor {
    pub q: Matrix,
    pub w: Matrix,
    pub py_star: LiftedVector,
}

/// Options of [`run`].
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub max_iter: usize,
    pub tol: f64,
    pub guard: f64,
    pub trace_cap: usize,
    pub monitor: Option<Monitor>,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions { max_iter: 10_000, tol: 1e-10, guard: 1e12, trace_cap: 10_000, monitor: None }
    }
}

/// One stored iteration.
#[derive(Debug, Clone)]
pub struct IterRecord {
    pub k: usize,
    pub z: LiftedVector,
    pub y: DualVector,
    pub z_next: LiftedVector,
    pub fixed_point_residual: f64,
    pub solution_residual: f64,
    /// `‖z_k - P y*‖²_Q`.
    pub lyapunov_q: Option<f64>,
    /// `‖z_k - P y_k‖²_W`.
    pub correction_w: Option<f64>,
}

/// The stored iterations of a run. Once `trace_cap` records are stored, every
/// other record is dropped and the storage stride doubles.
#[derive(Debug, Clone)]
pub struct Trace {
    pub records: Vec<IterRecord>,
    pub stride: usize,
    pub iterations: usize,
    pub terminated_by: Termination,
    pub final_z: LiftedVector,
    /// `y_p` at the last evaluated iterate.
    pub solution: Vector,
    pub final_residual: f64,
    pub final_solution_residual: f64,
}

impl Trace {
    /// Whether every iteration is stored.
    pub fn is_complete(&self) -> bool {
        self.stride == 1
    }
}

/// Iterates `z_{k+1} = T z_k` from `z0` until `‖z_k - z_{k+1}‖ ≤ tol`, the
/// iteration budget is spent or `‖z_{k+1}‖ > guard`.
pub fn run(rep: &Representation, tuple: &OperatorTuple, z0: &LiftedVector, opts: &RunOptions) -> Result<Trace> {
    let tol = Tolerance::default();
    let ev = Evaluator::new(rep, tuple, &tol)?;
    if opts.max_iter == 0 {
        return Err(Error::param("max_iter", 0.0, "must be positive"));
    }
    if let Some(mon) = &opts.monitor {
        let d = rep.lifting();
        if mon.q.shape() != (d, d) || mon.w.shape() != (d, d) {
            return Err(Error::dims("monitor matrices", format!("{d}x{d}"), format!("{:?} and {:?}", mon.q.shape(), mon.w.shape())));
        }
        if mon.py_star.len() != d || mon.py_star.dim() != tuple.m() {
            return Err(Error::dims("P y*", format!("{d} blocks of size {}", tuple.m()), format!("{} blocks of size {}", mon.py_star.len(), mon.py_star.dim())));
        }
    }
    let cap = opts.trace_cap.max(2);
    let pp = match &opts.monitor {
        Some(_) => Some(factorize(rep, &tol)?.pp),
        None => None,
    };
    let p = rep.p();
    let mut records = Vec::new();
    let mut stride = 1;
    let mut z = z0.clone();
    let mut k = 0;
    loop {
        let (y, next) = ev.evaluate(&z)?;
        let residual = z.sub(&next).norm();
        let x = y.block(p);
        let sol_res = ev.inclusion_residual(&x, &y, &tol);
        if k % stride == 0 {
            let (lyapunov_q, correction_w) = match (&opts.monitor, &pp) {
                (Some(mon), Some(pp)) => {
                    (Some(z.sub(&mon.py_star).weighted_norm_sq(&mon.q)), Some(z.sub(&y.apply(pp)?).weighted_norm_sq(&mon.w)))
                }
                _ => (None, None),
            };
            records.push(IterRecord {
                k,
                z: z.clone(),
                y: y.clone(),
                z_next: next.clone(),
                fixed_point_residual: residual,
                solution_residual: sol_res,
                lyapunov_q,
                correction_w,
            });
            if records.len() >= cap {
                stride *= 2;
                records.retain(|r| r.k % stride == 0);
            }
        }
        let status = if residual <= opts.tol {
            Some(Termination::Tolerance)
        } else if !next.is_finite() || next.norm() > opts.guard {
            Some(Termination::DivergenceGuard)
        } else if k + 1 >= opts.max_iter {
            Some(Termination::MaxIter)
        } else {
            None
        };
        if let Some(terminated_by) = status {
            return Ok(Trace {
                records,
                stride,
                iterations: k + 1,
                terminated_by,
                final_z: next,
                solution: x,
                final_residual: residual,
                final_solution_residual: sol_res,
            });
        }
        z = next;
        k += 1;
    }
}

/// Outcome of [`monitor_fejer`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FejerReport {
    pub holds_all: bool,
    pub checked: usize,
    /// Iteration index of the first violated step.
    pub first_violation: Option<usize>,
    /// Largest `lhs - rhs` over the checked steps.
    pub max_violation: f64,
}

/// Checks `‖z_{k+1} - P y*‖²_Q ≤ ‖z_k - P y*‖²_Q - ‖z_k - P y_k‖²_W + slack` at
/// every stored record.
pub fn monitor_fejer(trace: &Trace, q: &Matrix, w: &Matrix, pp: &Matrix, y_star: &DualVector, slack: f64) -> Result<FejerReport> {
    let mut report = FejerReport { holds_all: true, checked: 0, first_violation: None, max_violation: f64::NEG_INFINITY };
    for r in &trace.records {
        let step = convergence::fejer_step(q, w, pp, y_star, &r.z, &r.z_next, &r.y, slack)?;
        report.checked += 1;
        report.max_violation = report.max_violation.max(step.lhs - step.rhs);
        if !step.holds && report.holds_all {
            report.holds_all = false;
            report.first_violation = Some(r.k);
        }
    }
    if report.checked == 0 {
        report.max_violation = 0.0;
    }
    Ok(report)
}

/// Closed-form certificate if the method has one, otherwise the outcome of
/// the search. `None` when neither yields a certificate.
pub fn certify_entry(entry: &ZooEntry, betas: &crate::zoo::Betas, tol: &Tolerance, search: &SearchOptions) -> Result<Option<Certificate>> {
    let fact = factorize(entry.representation(), tol)?;
    if let Some(q) = entry.closed_form_q(betas)? {
        let cert = convergence::check(&fact, &q, betas, tol)?;
        if cert.satisfied {
            return Ok(Some(cert));
        }
    }
    match convergence::search_q(&fact, betas, tol, search) {
        Ok(c) => Ok(c),
        Err(Error::RankDeficientU { .. }) => Ok(None),
        Err(e) => Err(e),
    }
}

/// One row of [`compare`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompareRow {
    pub name: String,
    pub iterations: usize,
    pub terminated_by: Termination,
    pub final_residual: f64,
    pub solution_error: Option<f64>,
    pub certified: bool,
}

/// Runs every entry on the problem from `z = 0` with the same budget, one
/// thread per entry; rows follow the order of `entries`.
pub fn compare(entries: &[ZooEntry], problem: &Problem, opts: &RunOptions, search: &SearchOptions) -> Result<Vec<CompareRow>> {
    let tuple = &problem.tuple;
    for e in entries {
        let rep = e.representation();
        if rep.num_operators() != tuple.n() || rep.forward_set() != tuple.forward_set() {
            return Err(Error::Incompatible(format!(
                "{} needs {} operators with forward set {:?}, problem has {} with {:?}",
                e.name(),
                rep.num_operators(),
                one_based(rep.forward_set()),
                tuple.n(),
                one_based(tuple.forward_set())
            )));
        }
    }
    let tol = Tolerance::default();
    let opts = RunOptions { monitor: None, ..opts.clone() };
    std::thread::scope(|s| {
        let handles: Vec<_> = entries
            .iter()
            .map(|e| {
                let opts = &opts;
                s.spawn(move || -> Result<CompareRow> {
                    let rep = e.representation();
                    let z0 = LiftedVector::zeros(tuple.m(), rep.lifting());
                    let trace = run(rep, tuple, &z0, opts)?;
                    let certified = certify_entry(e, tuple.betas(), &tol, search)?.is_some();
                    Ok(CompareRow {
                        name: e.name().to_string(),
                        iterations: trace.iterations,
                        terminated_by: trace.terminated_by,
                        final_residual: trace.final_residual,
                        solution_error: problem.known_solution().map(|x| (&trace.solution - x).norm()),
                        certified,
                    })
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("compare worker panicked")).collect()
    })
}

fn one_based(set: &BTreeSet<usize>) -> Vec<usize> {
    set.iter().map(|i| i + 1).collect()
}

/// Shortest round-trip decimal, in exponent form outside `[1e-4, 1e15)`.
pub fn format_number(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || !x.is_finite() || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(format_number).unwrap_or_default()
}

/// The trace as CSV with columns `k, residual_fp, residual_sol, lyapunov_Q,
/// correction_W`. Numbers use the shortest round-trip representation; absent
/// values are empty.
pub fn trace_csv(trace: &Trace) -> String {
    let mut out = String::from("k,residual_fp,residual_sol,lyapunov_Q,correction_W\n");
    for r in &trace.records {
        let _ = writeln!(out, "{},{},{},{},{}", r.k, format_number(r.fixed_point_residual), format_number(r.solution_residual), opt(r.lyapunov_q), opt(r.correction_w));
    }
    out
}

/// Rows of [`compare`] as CSV.
pub fn compare_csv(rows: &[CompareRow]) -> String {
    let mut out = String::from("name,iterations,terminated_by,final_residual,solution_error,certified\n");
    for r in rows {
        let _ = writeln!(out, "{},{},{},{},{},{}", r.name, r.iterations, r.terminated_by, format_number(r.final_residual), opt(r.solution_error), r.certified);
    }
    out
}

/// A JSON summary of a run.
pub fn trace_summary(trace: &Trace, method: &str, known: Option<&Vector>, fejer: Option<&FejerReport>) -> serde_json::Value {
    serde_json::json!({
        "method": method,
        "iterations": trace.iterations,
        "terminated_by": trace.terminated_by,
        "final_residual": trace.final_residual,
        "final_solution_residual": trace.final_solution_residual,
        "solution": trace.solution.as_slice(),
        "solution_error": known.map(|x| (&trace.solution - x).norm()),
        "stored_records": trace.records.len(),
        "stride": trace.stride,
        "fejer": fejer,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::zoo::{Params, Registry};

    fn entry(name: &str, params: Params) -> ZooEntry {
        Registry::builtin().entry(name, &params, &Tolerance::default()).unwrap()
    }

    #[test]
    fn douglas_rachford_on_zero_operators_stops_at_once() {
        let e = entry("douglas-rachford", Params::new());
        let tuple = OperatorTuple::new(1, vec![Operator::Zero, Operator::Zero], BTreeSet::new()).unwrap();
        let z0 = LiftedVector::from_blocks(&[Vector::from_element(1, 3.0)]).unwrap();
        let t = run(e.representation(), &tuple, &z0, &RunOptions::default()).unwrap();
        assert_eq!(t.terminated_by, Termination::Tolerance);
        assert_eq!(t.iterations, 1);
        assert_eq!(t.records[0].k, 0);
        assert_eq!(t.final_residual, 0.0);
    }

    #[test]
    fn forward_backward_scalar_recursion() {
        let gamma = 0.5;
        let e = entry("forward-backward", Params::new().with("gamma", gamma));
        let grad = Operator::quadratic(Matrix::identity(1, 1), Vector::from_element(1, -1.0)).unwrap();
        let tuple = OperatorTuple::new(1, vec![grad, Operator::Zero], BTreeSet::from([0])).unwrap();
        let z0 = LiftedVector::zeros(1, 1);
        let t = run(e.representation(), &tuple, &z0, &RunOptions { max_iter: 5, ..Default::default() }).unwrap();
        assert_eq!(t.terminated_by, Termination::MaxIter);
        for r in &t.records {
            let expected = 1.0 - (1.0 - gamma).powi(r.k as i32);
            assert!((r.z.block(0)[0] - expected).abs() < 1e-15);
        }
    }

    #[test]
    fn divergence_guard_stops_unstable_runs() {
        let e = entry("forward-backward", Params::new().with("gamma", 5.0));
        let grad = Operator::quadratic(Matrix::identity(1, 1), Vector::zeros(1)).unwrap();
        let tuple = OperatorTuple::new(1, vec![grad, Operator::Zero], BTreeSet::from([0])).unwrap();
        let z0 = LiftedVector::from_blocks(&[Vector::from_element(1, 1.0)]).unwrap();
        let t = run(e.representation(), &tuple, &z0, &RunOptions { max_iter: 1000, ..Default::default() }).unwrap();
        assert_eq!(t.terminated_by, Termination::DivergenceGuard);
        assert!(t.iterations < 100);
    }

    #[test]
    fn trace_thinning_keeps_multiples_of_stride() {
        let e = entry("forward-backward", Params::new().with("gamma", 0.01));
        let grad = Operator::quadratic(Matrix::identity(1, 1), Vector::from_element(1, -1.0)).unwrap();
        let tuple = OperatorTuple::new(1, vec![grad, Operator::Zero], BTreeSet::from([0])).unwrap();
        let opts = RunOptions { max_iter: 100, trace_cap: 8, tol: 0.0, ..Default::default() };
        let t = run(e.representation(), &tuple, &LiftedVector::zeros(1, 1), &opts).unwrap();
        assert!(t.records.len() < 8);
        assert!(!t.is_complete());
        assert!(t.records.iter().all(|r| r.k % t.stride == 0));
    }

    #[test]
    fn lasso_generator_scalar_case() {
        let p = gen_lasso_problem(1, 1.0, 10.0, true, 0).unwrap();
        assert!((p.known_solution().unwrap()[0] - 1.0).abs() < 1e-7);
        let p = gen_lasso_problem(1, 0.0, 1.5, true, 0).unwrap();
        assert!((p.known_solution().unwrap()[0] - 1.5).abs() < 1e-7);
    }

    #[test]
    fn affine_generator_is_reproducible() {
        let f = BTreeSet::from([0]);
        let a = gen_affine_problem(2, 3, &f, 0.1, 5).unwrap();
        let b = gen_affine_problem(2, 3, &f, 0.1, 5).unwrap();
        assert_eq!(a.known_solution(), b.known_solution());
        assert!(a.solution.as_ref().unwrap().residual <= 1e-10);
        assert!(a.tuple.betas().contains_key(&0));
    }

    #[test]
    fn compare_rejects_mismatched_forward_sets() {
        let p = gen_affine_problem(3, 2, &BTreeSet::new(), 0.1, 1).unwrap();
        let e = entry("davis-yin", Params::new());
        assert!(matches!(compare(&[e], &p, &RunOptions::default(), &SearchOptions::default()), Err(Error::Incompatible(_))));
    }
}
