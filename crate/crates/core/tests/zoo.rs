mod common;

use std::collections::BTreeMap;

use frugal_split::convergence;
use frugal_split::evaluator;
use frugal_split::linalg::{self, Matrix, Tolerance};
use frugal_split::representation::{factorize, minimal_lifting};
use frugal_split::zoo::{Betas, Params, Registry};
use rand::Rng;

fn random_betas(rng: &mut rand_chacha::ChaCha8Rng, forward: &std::collections::BTreeSet<usize>) -> Betas {
    forward.iter().map(|&i| (i, rng.gen_range(0.2..3.0))).collect()
}

#[test]
fn representations_match_textbook_updates() {
    let reg = Registry::builtin();
    let tol = Tolerance::default();
    let mut rng = common::rng(11);
    for name in reg.names() {
        let mut worst: f64 = 0.0;
        for _ in 0..100 {
            let entry = reg.entry(name, &common::params(&mut rng, name), &tol).unwrap();
            let rep = entry.representation();
            let m = rng.gen_range(1..4);
            let tuple = common::tuple(&mut rng, rep.num_operators(), m, rep.forward_set());
            let z = common::lifted(&mut rng, m, rep.lifting());
            let (_, next) = evaluator::evaluate(rep, &tuple, &z).unwrap();
            let textbook = entry.textbook_step(&tuple, &z).unwrap();
            worst = worst.max(next.max_abs_diff(&textbook));
        }
        assert!(worst <= 1e-9, "{name}: {worst:e}");
    }
}

#[test]
fn closed_form_certificates_on_parameter_grids() {
    let reg = Registry::builtin();
    let tol = Tolerance::default();
    let mut rng = common::rng(12);
    for name in reg.names() {
        let mut inside = 0;
        for _ in 0..40 {
            let entry = reg.entry(name, &common::params(&mut rng, name), &tol).unwrap();
            let betas = random_betas(&mut rng, entry.representation().forward_set());
            let Some(q) = entry.closed_form_q(&betas).unwrap() else { break };
            let fact = factorize(entry.representation(), &tol).unwrap();
            let cert = convergence::check(&fact, &q, &betas, &tol).unwrap();
            assert!(cert.structural_residual <= 1e-12, "{name}: {:e}", cert.structural_residual);
            if entry.convergence_condition(&betas).unwrap() {
                inside += 1;
                assert!(cert.satisfied, "{name} {:?} {betas:?}: {cert:?}", entry.parameters());
            }
        }
        if name != "malitsky-tam" || inside > 0 {
            assert!(inside > 0, "{name}: no grid point inside the condition");
        }
    }
}

#[test]
fn new_minimal_reduces_to_davis_yin_and_ryu() {
    let reg = Registry::builtin();
    let tol = Tolerance::default();
    let mut rng = common::rng(13);
    for _ in 0..50 {
        let gamma = rng.gen_range(0.1..3.0);
        let nm = reg.entry("new-minimal", &Params::new().with("n", 3.0).with("f", 1.0).with("lambda", gamma).with("theta", 1.0), &tol).unwrap();
        let dy = reg.entry("davis-yin", &Params::new().with("gamma", gamma), &tol).unwrap();
        let tuple = common::tuple(&mut rng, 3, 2, dy.representation().forward_set());
        let z = common::lifted(&mut rng, 2, 1);
        let a = evaluator::evaluate(nm.representation(), &tuple, &z).unwrap().1;
        let b = evaluator::evaluate(dy.representation(), &tuple, &z).unwrap().1;
        assert!(a.max_abs_diff(&b) <= 1e-10);

        let nm = reg.entry("new-minimal", &Params::new().with("n", 3.0).with("f", 0.0).with("theta", 1.0), &tol).unwrap();
        let ryu = reg.entry("ryu", &Params::new().with("theta", 1.0), &tol).unwrap();
        let tuple = common::tuple(&mut rng, 3, 2, &Default::default());
        let z = common::lifted(&mut rng, 2, 2);
        let a = evaluator::evaluate(nm.representation(), &tuple, &z).unwrap().1;
        let b = evaluator::evaluate(ryu.representation(), &tuple, &z).unwrap().1;
        assert!(a.max_abs_diff(&b) <= 1e-10);
    }
}

#[test]
fn minimal_lifting_flags() {
    let reg = Registry::builtin();
    let tol = Tolerance::default();
    for (name, minimal) in [
        ("davis-yin", true),
        ("ryu", true),
        ("malitsky-tam", true),
        ("campoy", true),
        ("new-minimal", true),
        ("fb-momentum", false),
        ("fb-nesterov", false),
        ("projective", false),
    ] {
        let e = reg.entry(name, &Params::new(), &tol).unwrap();
        assert_eq!(e.has_minimal_lifting(), minimal, "{name}");
    }
}

#[test]
fn forward_backward_matrices() {
    let e = Registry::builtin().entry("forward-backward", &Params::new(), &Tolerance::default()).unwrap();
    let rep = e.representation();
    assert_eq!(rep.m(), &Matrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 1.0]));
    assert_eq!(rep.n(), &Matrix::from_row_slice(2, 1, &[1.0, 1.0]));
    assert_eq!(rep.u(), &Matrix::from_row_slice(1, 1, &[1.0]));
    assert_eq!(rep.v(), &Matrix::from_row_slice(1, 2, &[0.0, 1.0]));
}

#[test]
fn davis_yin_factors() {
    let tol = Tolerance::default();
    let gamma = 1.7;
    let e = Registry::builtin().entry("davis-yin", &Params::new().with("gamma", gamma), &tol).unwrap();
    let f = factorize(e.representation(), &tol).unwrap();
    assert!((f.pp.clone() - Matrix::from_row_slice(1, 3, &[gamma, 0.0, 1.0])).amax() < 1e-12);
    assert!((f.s.clone() - Matrix::from_row_slice(3, 1, &[1.0, 1.0, 1.0 / gamma])).amax() < 1e-12);
    let betas = BTreeMap::from([(1, 1.0)]);
    let w = convergence::build_w(&f, &Matrix::from_element(1, 1, 1.0 / gamma), &betas).unwrap();
    assert!((w[(0, 0)] - (1.0 / gamma - 0.5)).abs() < 1e-12);
    let bad = convergence::structural_residual(&f, &Matrix::from_element(1, 1, 2.0 / gamma)).unwrap();
    assert!(bad > 1e-3);
}

#[test]
fn chambolle_pock_factors_and_condition() {
    let tol = Tolerance::default();
    let e = Registry::builtin().entry("chambolle-pock", &Params::new(), &tol).unwrap();
    let f = factorize(e.representation(), &tol).unwrap();
    assert!((f.pp.clone() - Matrix::identity(2, 2)).amax() < 1e-12);
    assert!((f.s.clone() - e.representation().m()).amax() < 1e-12);
    for (tau, sigma, ok) in [(0.5, 0.5, true), (2.0, 2.0, false)] {
        let e = Registry::builtin().entry("chambolle-pock", &Params::new().with("tau", tau).with("sigma", sigma), &tol).unwrap();
        let f = factorize(e.representation(), &tol).unwrap();
        let q = e.closed_form_q(&Betas::new()).unwrap().unwrap();
        let cert = convergence::check(&f, &q, &Betas::new(), &tol).unwrap();
        assert_eq!(cert.satisfied, ok);
        assert_eq!(cert.min_eig_q > 0.0, ok);
    }
}

#[test]
fn ryu_w_matches_closed_form() {
    let tol = Tolerance::default();
    for theta in [0.3, 0.9] {
        let e = Registry::builtin().entry("ryu", &Params::new().with("theta", theta), &tol).unwrap();
        let rep = e.representation();
        assert_eq!(rep.m(), &Matrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 1.0]));
        let f = factorize(rep, &tol).unwrap();
        let q = e.closed_form_q(&Betas::new()).unwrap().unwrap();
        let w = convergence::build_w(&f, &q, &Betas::new()).unwrap();
        let expected = Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 2.0]) * (1.0 - theta) + Matrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, theta]);
        assert!((linalg::sym(&w) - expected).amax() < 1e-12);
        assert!(linalg::min_eig(&w) > 0.0);
    }
}

#[test]
fn malitsky_tam_w_matches_closed_form() {
    let tol = Tolerance::default();
    let theta = 0.5;
    let e = Registry::builtin().entry("malitsky-tam", &Params::new().with("n", 3.0).with("theta", theta), &tol).unwrap();
    let rep = e.representation();
    assert!((rep.u() - Matrix::from_row_slice(2, 2, &[1.0, -1.0, 0.0, 1.0]) * theta).amax() < 1e-12);
    assert!(linalg::subset_range(rep.v(), rep.u(), &tol).unwrap());
    let f = factorize(rep, &tol).unwrap();
    let q = e.closed_form_q(&Betas::new()).unwrap().unwrap();
    let w = convergence::build_w(&f, &q, &Betas::new()).unwrap();
    let expected = frugal_split::zoo::MalitskyTam::tridiagonal(2) * (1.0 - theta) + Matrix::from_row_slice(2, 2, &[theta, 0.0, 0.0, 0.0]);
    assert!((linalg::sym(&w) - expected).amax() < 1e-12);
}

#[test]
fn douglas_rachford_w_equals_q() {
    let tol = Tolerance::default();
    let e = Registry::builtin().entry("douglas-rachford", &Params::new().with("gamma", 2.0), &tol).unwrap();
    assert_eq!(e.representation().m(), &Matrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 0.5]));
    assert_eq!(linalg::rank(e.representation().m(), &tol), 1);
    let f = factorize(e.representation(), &tol).unwrap();
    let q = e.closed_form_q(&Betas::new()).unwrap().unwrap();
    let w = convergence::build_w(&f, &q, &Betas::new()).unwrap();
    assert!((w - q).amax() < 1e-12);
}

#[test]
fn projective_is_not_minimal() {
    let tol = Tolerance::default();
    let e = Registry::builtin().entry("projective", &Params::new().with("n", 4.0), &tol).unwrap();
    assert_eq!(e.representation().lifting(), 4);
    assert_eq!(minimal_lifting(4, &Default::default()).unwrap(), 3);
}

#[test]
fn new_minimal_condition_controls_w() {
    let tol = Tolerance::default();
    let params = Params::new().with("n", 4.0).with("f", 1.0).with("lambda", 1.0).with("theta", 0.5);
    let e = Registry::builtin().entry("new-minimal", &params, &tol).unwrap();
    let f = factorize(e.representation(), &tol).unwrap();
    let q = e.closed_form_q(&Betas::new()).unwrap().unwrap();
    for (beta, ok) in [(1.0, true), (0.2, false)] {
        let betas = BTreeMap::from([(2, beta)]);
        assert_eq!(e.convergence_condition(&betas).unwrap(), ok);
        let cert = convergence::check(&f, &q, &betas, &tol).unwrap();
        assert_eq!(cert.min_eig_w > tol.eig_tol, ok);
    }
}
