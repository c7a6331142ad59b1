//! Non-equilibrium steady states of boundary-driven qubit chains.

pub mod config;
pub mod error;
pub mod experiments;
pub mod liouvillian;
pub mod model;
pub mod observables;
pub mod operator;
pub mod solver;
pub mod symmetry;

pub use error::{Error, Result};
pub use liouvillian::Liouvillian;
pub use model::{LindbladSpec, Model};
pub use operator::{Axis, DensityMatrix, Operator, C64};
pub use solver::{check_uniqueness, solve_ness, Method, SolveOptions, SteadyState};
