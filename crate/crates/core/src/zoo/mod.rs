//! Known splitting methods, each with a representation, a closed-form
//! certificate where one is known, and an independent textbook update.
//!
//! Methods are registered by name in a [`Registry`] and built from [`Params`].

mod classic;
mod lifted;
mod minimal;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use crate::blocks::LiftedVector;
use crate::error::{Error, Result};
use crate::linalg::{Matrix, Tolerance};
use crate::operators::OperatorTuple;
use crate::representation::{self, Representation};

pub use classic::{ChambollePock, DavisYin, DouglasRachford, ForwardBackward, MomentumForwardBackward, NesterovForwardBackward};
pub use lifted::{Campoy, MalitskyTam, Projective, Ryu};
pub use minimal::NewMinimal;

/// Cocoercivity constants keyed by 0-based operator index.
pub type Betas = BTreeMap<usize, f64>;

/// A splitting method with fixed parameters.
pub trait Splitting: Send + Sync + fmt::Debug {
    /// Registry name, e.g. `"davis-yin"`.
    fn name(&self) -> &'static str;

    /// Where the method was introduced.
    fn reference(&self) -> &'static str;

    /// Parameter values in a fixed order.
    fn parameters(&self) -> Vec<(&'static str, f64)>;

    fn num_operators(&self) -> usize;

    fn forward_set(&self) -> BTreeSet<usize>;

    fn representation(&self, tol: &Tolerance) -> Result<Representation>;

    /// A certificate `Q` known in closed form, if any.
    fn closed_form_q(&self, _betas: &Betas) -> Result<Option<Matrix>> {
        Ok(None)
    }

    /// The analytic convergence condition of the method.
    fn convergence_condition(&self, betas: &Betas) -> Result<bool>;

    /// One step of the method written directly in terms of resolvents and
    /// forward evaluations.
    fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector>;
}

pub(crate) fn beta(betas: &Betas, i: usize) -> Result<f64> {
    match betas.get(&i) {
        Some(&b) if b > 0.0 => Ok(b),
        Some(&b) => Err(Error::param("beta", b, "must be positive")),
        None => Err(Error::MissingBeta(i)),
    }
}

pub(crate) fn positive(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(Error::param(name, v, "must be positive"))
    }
}

pub(crate) fn finite(name: &str, v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::param(name, v, "must be finite"))
    }
}

pub(crate) fn check_tuple(tuple: &OperatorTuple, z: &LiftedVector, n: usize, d: usize) -> Result<()> {
    if tuple.n() != n {
        return Err(Error::Incompatible(format!("method needs {n} operators, tuple has {}", tuple.n())));
    }
    if z.len() != d || z.dim() != tuple.m() {
        return Err(Error::dims("lifted vector", format!("{d} blocks of size {}", tuple.m()), format!("{} blocks of size {}", z.len(), z.dim())));
    }
    Ok(())
}

pub(crate) fn mat(r: usize, c: usize, data: &[f64]) -> Matrix {
    Matrix::from_row_slice(r, c, data)
}

/// Named scalar and vector parameters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    scalars: BTreeMap<String, f64>,
    vectors: BTreeMap<String, Vec<f64>>,
}

impl Params {
    pub fn new() -> Self {
        Params::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.scalars.insert(name.to_string(), value);
        self
    }

    pub fn with_vector(mut self, name: &str, values: Vec<f64>) -> Self {
        self.vectors.insert(name.to_string(), values);
        self
    }

    pub fn set(&mut self, name: &str, value: f64) {
        self.scalars.insert(name.to_string(), value);
    }

    pub fn set_vector(&mut self, name: &str, values: Vec<f64>) {
        self.vectors.insert(name.to_string(), values);
    }

    pub fn scalar(&self, name: &str, default: f64) -> f64 {
        self.scalars.get(name).copied().unwrap_or(default)
    }

    /// A nonnegative integer parameter.
    pub fn count(&self, name: &str, default: usize) -> Result<usize> {
        match self.scalars.get(name) {
            None => Ok(default),
            Some(&v) if v >= 0.0 && v.fract() == 0.0 && v < 1e9 => Ok(v as usize),
            Some(&v) => Err(Error::param(name, v, "must be a nonnegative integer")),
        }
    }

    pub fn vector(&self, name: &str) -> Option<&[f64]> {
        self.vectors.get(name).map(Vec::as_slice)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.scalars.keys().chain(self.vectors.keys()).map(String::as_str)
    }
}

/// A method bound to its (validated) representation.
#[derive(Debug)]
pub struct ZooEntry {
    method: Box<dyn Splitting>,
    representation: Representation,
}

impl ZooEntry {
    pub fn new(method: Box<dyn Splitting>, tol: &Tolerance) -> Result<Self> {
        let representation = method.representation(tol)?;
        Ok(ZooEntry { method, representation })
    }

    pub fn name(&self) -> &'static str {
        self.method.name()
    }

    pub fn method(&self) -> &dyn Splitting {
        self.method.as_ref()
    }

    pub fn representation(&self) -> &Representation {
        &self.representation
    }

    pub fn parameters(&self) -> Vec<(&'static str, f64)> {
        self.method.parameters()
    }

    pub fn closed_form_q(&self, betas: &Betas) -> Result<Option<Matrix>> {
        self.method.closed_form_q(betas)
    }

    pub fn convergence_condition(&self, betas: &Betas) -> Result<bool> {
        self.method.convergence_condition(betas)
    }

    pub fn textbook_step(&self, tuple: &OperatorTuple, z: &LiftedVector) -> Result<LiftedVector> {
        self.method.textbook_step(tuple, z)
    }

    /// Whether the lifting number equals the minimal lifting for `(n, F)`.
    pub fn has_minimal_lifting(&self) -> bool {
        let rep = &self.representation;
        representation::minimal_lifting(rep.num_operators(), rep.forward_set())
            .map_or(false, |d| d == rep.lifting())
    }
}

/// Builds a method from parameters.
pub type Factory = fn(&Params) -> Result<Box<dyn Splitting>>;

#[derive(Clone)]
struct RegistryItem {
    summary: &'static str,
    factory: Factory,
}

/// Methods addressable by name.
#[derive(Clone)]
pub struct Registry {
    items: BTreeMap<&'static str, RegistryItem>,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.items.keys()).finish()
    }
}

impl Registry {
    /// An empty registry.
    pub fn empty() -> Self {
        Registry { items: BTreeMap::new() }
    }

    /// All built-in methods.
    pub fn builtin() -> Self {
        let mut r = Registry::empty();
        r.register("forward-backward", "forward-backward splitting (gamma)", |p| Ok(Box::new(ForwardBackward::new(p.scalar("gamma", 1.0))?)));
        r.register("douglas-rachford", "Douglas-Rachford splitting (gamma)", |p| Ok(Box::new(DouglasRachford::new(p.scalar("gamma", 1.0))?)));
        r.register("davis-yin", "Davis-Yin three-operator splitting (gamma)", |p| Ok(Box::new(DavisYin::new(p.scalar("gamma", 1.0))?)));
        r.register("chambolle-pock", "Chambolle-Pock primal-dual method (tau, sigma)", |p| {
            Ok(Box::new(ChambollePock::new(p.scalar("tau", 0.5), p.scalar("sigma", 0.5))?))
        });
        r.register("fb-momentum", "forward-backward with momentum on the forward step (gamma, theta)", |p| {
            Ok(Box::new(MomentumForwardBackward::new(p.scalar("gamma", 1.0), p.scalar("theta", 0.1))?))
        });
        r.register("fb-nesterov", "forward-backward with Nesterov-type momentum (gamma, theta)", |p| {
            Ok(Box::new(NesterovForwardBackward::new(p.scalar("gamma", 1.0), p.scalar("theta", 0.1))?))
        });
        r.register("ryu", "Ryu three-operator splitting (theta)", |p| Ok(Box::new(Ryu::new(p.scalar("theta", 0.5))?)));
        r.register("malitsky-tam", "Malitsky-Tam n-operator splitting (n, theta)", |p| {
            Ok(Box::new(MalitskyTam::new(p.count("n", 3)?, p.scalar("theta", 0.5))?))
        });
        r.register("campoy", "Campoy product-space Douglas-Rachford (n, gamma, theta)", |p| {
            Ok(Box::new(Campoy::new(p.count("n", 3)?, p.scalar("gamma", 1.0), p.scalar("theta", 1.0))?))
        });
        r.register("projective", "projective splitting (n, theta, taus)", |p| {
            let n = p.count("n", p.vector("taus").map_or(3, <[f64]>::len))?;
            let taus = match p.vector("taus") {
                Some(t) => t.to_vec(),
                None => vec![p.scalar("tau", 1.0); n],
            };
            Ok(Box::new(Projective::new(taus, p.scalar("theta", 0.5))?))
        });
        r.register("new-minimal", "minimal-lifting forward-backward splitting (n, f, lambda, theta)", |p| {
            Ok(Box::new(NewMinimal::new(p.count("n", 3)?, p.count("f", 0)?, p.scalar("lambda", 1.0), p.scalar("theta", 0.5))?))
        });
        r
    }

    pub fn register(&mut self, name: &'static str, summary: &'static str, factory: Factory) {
        self.items.insert(name, RegistryItem { summary, factory });
    }

    /// Builds the named method.
    pub fn build(&self, name: &str, params: &Params) -> Result<Box<dyn Splitting>> {
        let item = self.items.get(name).ok_or_else(|| Error::UnknownMethod(name.to_string()))?;
        (item.factory)(params)
    }

    /// Builds the named method and its representation.
    pub fn entry(&self, name: &str, params: &Params, tol: &Tolerance) -> Result<ZooEntry> {
        ZooEntry::new(self.build(name, params)?, tol)
    }

    pub fn names(&self) -> Vec<&'static str> {
        self.items.keys().copied().collect()
    }

    pub fn summary(&self, name: &str) -> Option<&'static str> {
        self.items.get(name).map(|i| i.summary)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

impl Default for Registry {
    fn default() -> Self {
        Registry::builtin()
    }
}
