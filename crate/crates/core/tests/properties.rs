mod common;

use std::collections::BTreeSet;

use frugal_split::blocks::{DualVector, LiftedVector};
use frugal_split::convergence;
use frugal_split::evaluator::Evaluator;
use frugal_split::linalg::{self, Matrix, Tolerance};
use frugal_split::operators::{Cocoercivity, Operator, OperatorTuple};
use frugal_split::representation::{dependency_stages, factorize, from_kernel, gamma_matrix, is_p_kernel, validate};
use frugal_split::runner::{self, gen_affine_problem, RunOptions};
use frugal_split::zoo::{Params, Registry};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn tol() -> Tolerance {
    Tolerance::default()
}

fn low_rank(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    let k = rng.gen_range(1..=r.min(c));
    common::matrix(rng, r, k) * common::matrix(rng, k, c)
}

fn random_kernel(rng: &mut ChaCha8Rng) -> (Matrix, usize, BTreeSet<usize>) {
    let n = rng.gen_range(1..7);
    let p = rng.gen_range(0..n);
    let forward: BTreeSet<usize> = (0..n).filter(|&i| i != p && rng.gen_bool(0.3)).collect();
    let mut l = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..i {
            if rng.gen_bool(0.6) {
                l[(i, j)] = rng.gen_range(-2.0..2.0);
            }
        }
        if !forward.contains(&i) {
            l[(i, i)] = rng.gen_range(0.2..2.0);
        }
    }
    (l - gamma_matrix(p, n), p, forward)
}

fn zoo_entries(rng: &mut ChaCha8Rng) -> Vec<frugal_split::zoo::ZooEntry> {
    let reg = Registry::builtin();
    reg.names().into_iter().map(|name| reg.entry(name, &common::params(rng, name), &tol()).unwrap()).collect()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn right_factor_recovers_a_factor_in_the_row_space(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (r, c, k) = (rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(1..4));
        let b = low_rank(&mut rng, r, c);
        let a = &b * common::matrix(&mut rng, c, k);
        prop_assert!(linalg::subset_range(&a, &b, &tol()).unwrap());
        let s = linalg::right_factor(&a, &b, &tol()).unwrap();
        prop_assert!((&a - &b * &s).norm() <= 1e-9);
        let proj = linalg::pinv(&b, &tol()) * &b;
        prop_assert!((&s - proj * &s).norm() <= 1e-9);
    }

    #[test]
    fn left_and_right_factors_are_dual(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (r, c, k) = (rng.gen_range(1..6), rng.gen_range(1..6), rng.gen_range(1..4));
        let b = low_rank(&mut rng, r, c);
        let a = common::matrix(&mut rng, k, r) * &b;
        let left = linalg::left_factor(&a, &b, &tol()).unwrap();
        let right = linalg::right_factor(&a.transpose(), &b.transpose(), &tol()).unwrap();
        prop_assert!((left - right.transpose()).norm() <= 1e-9);
    }

    #[test]
    fn appending_columns_never_lowers_rank(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let r = rng.gen_range(1..6);
        let c = rng.gen_range(1..5);
        let b = low_rank(&mut rng, r, c);
        let a = if rng.gen_bool(0.5) { &b * common::matrix(&mut rng, b.ncols(), 2) } else { common::matrix(&mut rng, r, 2) };
        let mut joined = Matrix::zeros(r, b.ncols() + a.ncols());
        joined.columns_mut(0, b.ncols()).copy_from(&b);
        joined.columns_mut(b.ncols(), a.ncols()).copy_from(&a);
        let (rj, rb) = (linalg::rank(&joined, &tol()), linalg::rank(&b, &tol()));
        prop_assert!(rj >= rb);
        prop_assert_eq!(rj == rb, linalg::subset_range(&a, &b, &tol()).unwrap());
    }

    #[test]
    fn min_eig_sign_matches_sampled_quadratic_form(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(1..5);
        let shift = if rng.gen_bool(0.5) { 0.3 } else { -0.3 };
        let a = common::psd(&mut rng, n) + Matrix::identity(n, n) * shift;
        let lam = linalg::min_eig(&a);
        prop_assume!(lam.abs() > 1e-3);
        let (_, v) = linalg::min_eig_pair(&a);
        let mut all_positive = v.dot(&(&a * &v)) > 0.0;
        for _ in 0..1000 {
            let x = common::vector(&mut rng, n, 1.0).normalize();
            all_positive &= x.dot(&(&a * &x)) > 0.0;
        }
        prop_assert_eq!(lam > 0.0, all_positive);
    }

    #[test]
    fn resolvent_output_satisfies_the_defining_inclusion(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = rng.gen_range(1..4);
        let op = common::any_operator(&mut rng, m);
        let gamma = rng.gen_range(0.05..5.0);
        let x = common::vector(&mut rng, m, 3.0);
        let y = op.resolve(gamma, &x);
        prop_assert!(op.dist_to_image(&y, &((&x - &y) / gamma), 1e-12) <= 1e-9);
        let w = op.resolve_inverse_scaled(gamma, &x);
        prop_assert!((&y + &w * gamma - &x).norm() <= 1e-9);
    }

    #[test]
    fn reported_cocoercivity_holds(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let m = rng.gen_range(1..4);
        let op = common::single_valued(&mut rng, m);
        if let Cocoercivity::Bounded(beta) = op.cocoercivity() {
            for _ in 0..1000 {
                let x = common::vector(&mut rng, m, 3.0);
                let y = common::vector(&mut rng, m, 3.0);
                let d = op.forward(&x).unwrap() - op.forward(&y).unwrap();
                prop_assert!(d.dot(&(&x - &y)) >= beta * d.norm_squared() - 1e-9);
            }
        }
    }

    #[test]
    fn csv_numbers_round_trip(x in any::<f64>().prop_filter("finite", |x| x.is_finite())) {
        let s = runner::format_number(x);
        prop_assert_eq!(s.parse::<f64>().unwrap(), x);
    }

    #[test]
    fn gamma_matrix_is_skew(n in 1usize..9, p in 0usize..8) {
        prop_assume!(p < n);
        let g = gamma_matrix(p, n);
        prop_assert_eq!(&g + g.transpose(), Matrix::zeros(n, n));
    }

    #[test]
    fn from_kernel_output_validates(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (m, p, forward) = random_kernel(&mut rng);
        prop_assert!(is_p_kernel(&m, p, &forward, &tol()).unwrap().is_kernel());
        let rep = from_kernel(&m, p, &forward, &tol()).unwrap();
        prop_assert!(validate(rep.parts(), &tol()).unwrap().is_valid());
        prop_assert_eq!(rep.lifting(), linalg::rank(&m, &tol()));
    }

    #[test]
    fn rank_chain_holds_for_zoo_representations(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for e in zoo_entries(&mut rng) {
            let rep = e.representation();
            let r = |a: &Matrix| linalg::rank(a, &tol());
            let (ru, rn, rv, rm) = (r(rep.u()), r(rep.n()), r(rep.v()), r(rep.m()));
            prop_assert!(rep.lifting() >= ru && ru >= rn && rn >= rm, "{}", e.name());
            prop_assert!(ru >= rv && rv >= rm, "{}", e.name());
        }
    }

    #[test]
    fn permuting_stages_does_not_change_the_solve(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (m, p, forward) = random_kernel(&mut rng);
        let rep = from_kernel(&m, p, &forward, &tol()).unwrap();
        let dim = rng.gen_range(1..4);
        let tuple = common::tuple(&mut rng, m.nrows(), dim, &forward);
        let ev = Evaluator::new(&rep, &tuple, &tol()).unwrap();
        let x = DualVector::from_blocks(&(0..m.nrows()).map(|_| common::vector(&mut rng, dim, 2.0)).collect::<Vec<_>>()).unwrap();
        let reference = ev.pd_resolvent_solve(&x).unwrap();
        let mut order = Vec::new();
        for mut stage in dependency_stages(&m, p, &tol()).unwrap() {
            stage.shuffle(&mut rng);
            order.extend(stage);
        }
        let permuted = ev.pd_resolvent_solve_in_order(&x, &order).unwrap();
        prop_assert_eq!(reference, permuted);
    }

    #[test]
    fn solve_output_satisfies_the_primal_dual_inclusion(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let (m, p, forward) = random_kernel(&mut rng);
        let rep = from_kernel(&m, p, &forward, &tol()).unwrap();
        let n = m.nrows();
        let dim = rng.gen_range(1..4);
        let ops = (0..n).map(|_| common::single_valued(&mut rng, dim)).collect();
        let tuple = OperatorTuple::new(dim, ops, forward.clone()).unwrap();
        let ev = Evaluator::new(&rep, &tuple, &tol()).unwrap();
        let x = DualVector::from_blocks(&(0..n).map(|_| common::vector(&mut rng, dim, 2.0)).collect::<Vec<_>>()).unwrap();
        let y = ev.pd_resolvent_solve(&x).unwrap();
        let lower = rep.lower();
        let r = x.sub(&y.apply(&lower).unwrap());
        for i in 0..n {
            let op = tuple.operator(i);
            let dist = if i == p {
                op.dist_to_image(&y.block(i), &r.block(i), 1e-12)
            } else {
                op.dist_to_image(&r.block(i), &y.block(i), 1e-12)
            };
            prop_assert!(dist <= 1e-8, "index {i}: {dist:e}");
        }
    }

    #[test]
    fn w_and_schur_form_agree_on_positivity(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let entries = zoo_entries(&mut rng);
        let e = &entries[rng.gen_range(0..entries.len())];
        let fact = factorize(e.representation(), &tol()).unwrap();
        let betas = e.representation().forward_set().iter().map(|&i| (i, rng.gen_range(0.2..3.0))).collect();
        let d = fact.lifting();
        let base = e.closed_form_q(&betas).unwrap().unwrap_or_else(|| Matrix::identity(d, d));
        let noise = common::matrix(&mut rng, d, d) * rng.gen_range(0.0..0.3);
        let q = base * rng.gen_range(0.5..2.0) + linalg::sym(&noise);
        let w = convergence::build_w(&fact, &q, &betas).unwrap();
        let s = convergence::schur_form(&fact, &q, &betas).unwrap();
        let (lw, ls) = (linalg::min_eig(&w), linalg::min_eig(&s));
        prop_assume!(lw.abs() > 1e-9 && ls.abs() > 1e-9);
        prop_assert_eq!(lw > 0.0, ls > 0.0);
    }

    #[test]
    fn primal_dual_operator_is_strongly_monotone_in_b(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let n = rng.gen_range(2..5);
        let p = rng.gen_range(0..n);
        let forward: BTreeSet<usize> = (0..n).filter(|&i| i != p && rng.gen_bool(0.5)).collect();
        let m = 2;
        let ops: Vec<Operator> = (0..n).map(|_| Operator::quadratic(common::psd(&mut rng, m) + Matrix::identity(m, m) * 0.1, common::vector(&mut rng, m, 1.0)).unwrap()).collect();
        let tuple = OperatorTuple::new(m, ops, forward.clone()).unwrap().with_computed_betas().unwrap();
        let gamma = gamma_matrix(p, n);
        // A pair (y, u) with u in the primal-dual operator applied to y.
        let sample = |rng: &mut ChaCha8Rng| -> (DualVector, DualVector) {
            let mut y = Vec::new();
            let mut d = Vec::new();
            for i in 0..n {
                let w = common::vector(rng, m, 2.0);
                let a = tuple.operator(i).forward(&w).unwrap();
                if i == p {
                    y.push(w);
                    d.push(a);
                } else {
                    y.push(a);
                    d.push(w);
                }
            }
            let y = DualVector::from_blocks(&y).unwrap();
            let u = DualVector::from_blocks(&d).unwrap().add(&y.apply(&gamma).unwrap());
            (y, u)
        };
        let (x, u) = sample(&mut rng);
        let (y, v) = sample(&mut rng);
        let lhs = linalg::block_inner(&Matrix::identity(n, n), u.sub(&v).as_matrix(), x.sub(&y).as_matrix());
        let b = Matrix::from_fn(n, n, |i, j| if i == j && forward.contains(&i) { tuple.betas()[&i] } else { 0.0 });
        prop_assert!(lhs >= x.sub(&y).weighted_norm_sq(&b) - 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 12, ..ProptestConfig::default() })]

    #[test]
    fn oracle_zero_maps_to_a_fixed_point(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        for e in zoo_entries(&mut rng) {
            let rep = e.representation();
            let problem = gen_affine_problem(rep.num_operators(), 2, rep.forward_set(), 0.3, seed).unwrap();
            let fact = factorize(rep, &tol()).unwrap();
            let py = problem.dual_solution(rep.p()).unwrap().apply(&fact.pp).unwrap();
            let ev = Evaluator::new(rep, &problem.tuple, &tol()).unwrap();
            prop_assert!(ev.fixed_point_residual(&py).unwrap() <= 1e-8, "{}", e.name());
        }
    }

    #[test]
    fn runs_are_deterministic(seed in any::<u64>()) {
        let e = Registry::builtin().entry("malitsky-tam", &Params::new().with("n", 4.0), &tol()).unwrap();
        let problem = gen_affine_problem(4, 3, &BTreeSet::new(), 0.3, seed).unwrap();
        let z0 = LiftedVector::zeros(3, 3);
        let opts = RunOptions { max_iter: 200, ..Default::default() };
        let a = runner::run(e.representation(), &problem.tuple, &z0, &opts).unwrap();
        let b = runner::run(e.representation(), &problem.tuple, &z0, &opts).unwrap();
        prop_assert_eq!(runner::trace_csv(&a), runner::trace_csv(&b));
        prop_assert_eq!(a.final_z, b.final_z);
    }
}

#[test]
fn converged_iterates_match_the_oracle() {
    let reg = Registry::builtin();
    for name in ["douglas-rachford", "davis-yin", "ryu", "malitsky-tam", "chambolle-pock"] {
        let e = reg.entry(name, &Params::new(), &tol()).unwrap();
        let rep = e.representation();
        let problem = gen_affine_problem(rep.num_operators(), 3, rep.forward_set(), 0.5, 4).unwrap();
        let params = if name == "davis-yin" { Params::new().with("gamma", problem.tuple.betas()[&1]) } else { Params::new() };
        let e = reg.entry(name, &params, &tol()).unwrap();
        let rep = e.representation();
        let opts = RunOptions { max_iter: 50_000, tol: 1e-12, ..Default::default() };
        let trace = runner::run(rep, &problem.tuple, &LiftedVector::zeros(3, rep.lifting()), &opts).unwrap();
        let x = problem.known_solution().unwrap();
        assert!((&trace.solution - x).norm() <= 1e-9, "{name}");
        // With U of full rank the fixed point is P y*.
        if linalg::rank(rep.u(), &tol()) == rep.lifting() {
            let fact = factorize(rep, &tol()).unwrap();
            let py = problem.dual_solution(rep.p()).unwrap().apply(&fact.pp).unwrap();
            assert!(trace.final_z.max_abs_diff(&py) <= 1e-8, "{name}");
        }
        let ev = Evaluator::new(rep, &problem.tuple, &tol()).unwrap();
        let (y, _) = ev.evaluate(&trace.final_z).unwrap();
        assert!((&y.block(rep.p()) - x).norm() <= 1e-9);
    }
}
