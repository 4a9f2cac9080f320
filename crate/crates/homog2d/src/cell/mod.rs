//! Periodic cell problems, the homogenized tensor and flux correctors.

mod cache;
mod coefficients;
mod correctors;
mod flux;
mod tensor;

pub use cache::{cache_key, load_cache, save_cache};
pub use coefficients::{identity, legendre_min, FieldKind, Oscillating, PeriodicCoefficientField};
pub use correctors::{homogenized_tensor, solve_cell_problems, CorrectorSet};
pub use flux::{flux_correctors, phi_index, FluxCorrectorSet};
pub use tensor::{verify_coercivity, HomogenizedTensor};

#[cfg(test)]
mod tests;
