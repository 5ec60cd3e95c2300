#![allow(dead_code)]

use std::collections::BTreeSet;

use frugal_split::blocks::LiftedVector;
use frugal_split::linalg::{Matrix, Vector};
use frugal_split::operators::{Operator, OperatorTuple};
use frugal_split::zoo::Params;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn vector(rng: &mut ChaCha8Rng, m: usize, scale: f64) -> Vector {
    Vector::from_fn(m, |_, _| rng.gen_range(-scale..scale))
}

pub fn matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> Matrix {
    Matrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

pub fn psd(rng: &mut ChaCha8Rng, m: usize) -> Matrix {
    let b = matrix(rng, m, m);
    b.transpose() * b
}

pub fn single_valued(rng: &mut ChaCha8Rng, m: usize) -> Operator {
    match rng.gen_range(0..4) {
        0 => Operator::quadratic(psd(rng, m), vector(rng, m, 1.0)).unwrap(),
        1 => {
            let s = matrix(rng, m, m);
            Operator::affine(psd(rng, m) + &s - s.transpose(), vector(rng, m, 1.0)).unwrap()
        }
        2 => {
            let s = matrix(rng, m, m);
            Operator::skew(&s - s.transpose()).unwrap()
        }
        _ => Operator::scaled(rng.gen_range(0.2..2.0), Operator::quadratic(psd(rng, m), vector(rng, m, 1.0)).unwrap()).unwrap(),
    }
}

pub fn any_operator(rng: &mut ChaCha8Rng, m: usize) -> Operator {
    match rng.gen_range(0..4) {
        0 => {
            let lo = vector(rng, m, 1.0);
            let hi = lo.map(|x| x + rng.gen_range(0.0..2.0));
            Operator::boxed(lo, hi).unwrap()
        }
        1 => Operator::l1(rng.gen_range(0.1..2.0)).unwrap(),
        2 => Operator::Zero,
        _ => single_valued(rng, m),
    }
}

/// A random tuple with forward operators only at `forward`.
pub fn tuple(rng: &mut ChaCha8Rng, n: usize, m: usize, forward: &BTreeSet<usize>) -> OperatorTuple {
    let ops = (0..n).map(|i| if forward.contains(&i) { single_valued(rng, m) } else { any_operator(rng, m) }).collect();
    OperatorTuple::new(m, ops, forward.clone()).unwrap()
}

pub fn lifted(rng: &mut ChaCha8Rng, m: usize, d: usize) -> LiftedVector {
    LiftedVector::from_blocks(&(0..d).map(|_| vector(rng, m, 2.0)).collect::<Vec<_>>()).unwrap()
}

/// Random admissible parameters for a built-in method.
pub fn params(rng: &mut ChaCha8Rng, name: &str) -> Params {
    let mut p = Params::new();
    match name {
        "forward-backward" | "douglas-rachford" | "davis-yin" => p.set("gamma", rng.gen_range(0.1..3.0)),
        "chambolle-pock" => {
            p.set("tau", rng.gen_range(0.1..3.0));
            p.set("sigma", rng.gen_range(0.1..3.0));
        }
        "fb-momentum" | "fb-nesterov" => {
            p.set("gamma", rng.gen_range(0.1..3.0));
            p.set("theta", rng.gen_range(-0.5..0.5));
        }
        "ryu" => p.set("theta", rng.gen_range(0.1..1.5)),
        "malitsky-tam" => {
            p.set("n", rng.gen_range(2..7) as f64);
            p.set("theta", rng.gen_range(0.1..1.5));
        }
        "campoy" => {
            p.set("n", rng.gen_range(2..7) as f64);
            p.set("gamma", rng.gen_range(0.1..3.0));
            p.set("theta", rng.gen_range(0.1..1.9));
        }
        "projective" => {
            let n = rng.gen_range(2..6);
            p.set_vector("taus", (0..n).map(|_| rng.gen_range(0.2..3.0)).collect());
            p.set("theta", rng.gen_range(0.1..1.5));
        }
        "new-minimal" => {
            let n = rng.gen_range(3..7);
            p.set("n", n as f64);
            p.set("f", rng.gen_range(0..=n - 2) as f64);
            p.set("lambda", rng.gen_range(0.1..3.0));
            p.set("theta", rng.gen_range(0.1..1.5));
        }
        _ => {}
    }
    p
}
