pub mod blocks;
pub mod error;
pub mod evaluator;
pub mod linalg;
pub mod operators;
pub mod representation;
pub mod zoo;
pub mod convergence;
pub mod runner;
pub mod io;

pub use error::{Error, Result};
