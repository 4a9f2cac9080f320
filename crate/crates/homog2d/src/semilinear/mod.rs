//! Semilinear problems: models, discretization, Newton solves,
//! nondegeneracy and local uniqueness checks.

mod model;
mod newton;
mod nondegeneracy;
mod probe;
mod problem;

pub use model::{manufactured_solution, ModelValues, NonlinearityModel, ScalarField, SeparableModel, Term, UFunction};
pub use newton::{newton_solve, NewtonMode, NewtonOptions, NewtonReport};
pub use nondegeneracy::check_nondegeneracy;
pub use probe::{local_uniqueness_probe, ProbeOptions, ProbeReport, ProbeTrial};
pub use problem::{Coefficients, Discretization, ProblemSpec};
