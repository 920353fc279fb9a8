//! Resource estimation for linear combination of Hamiltonian simulation
//! (LCHS) with a dense-matrix validator for small instances.

pub mod bounds;
pub mod budget;
pub mod cli;
pub mod cost;
pub mod error;
pub mod integrate;
pub mod kernel;
pub mod quad;
pub mod signpoly;
pub mod specfun;
pub mod validate;

pub use budget::{equal_budget, optimize, ErrorBudget, Method, OptimizeOptions};
pub use cost::{CostReport, ProblemSpec};
pub use error::{Error, Result};
