//! Bilinear finite elements: quadrature, function spaces, sparse assembly,
//! linear solves and norms.

pub mod assembly;
mod field;
pub mod norms;
pub mod quadrature;
mod space;
pub mod sparse;

pub use assembly::{assemble_diffusion, assemble_load, assemble_mass, assemble_stiffness, tensor_index, TensorField};
pub use field::SolutionField;
pub use norms::{dual_h1_norm, norm, NormKind};
pub use space::Space;
pub use sparse::{solve_sparse, Factored, SparseOperator};
