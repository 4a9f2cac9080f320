//! First-order approximate solutions built from a homogenized solution and
//! the cell correctors, and their discrepancy in the oscillatory problem.

mod builder;
mod cutoff;
mod mollifier;
mod recovery;

pub use builder::{build_expansion, discrepancy, DeltaRule, Expansion, ExpansionRecipe, ExpansionVariant};
pub use cutoff::{cutoff, cutoff_gradient, cutoff_with, Smoothstep};
pub use mollifier::{bump, bump_integral, Mollified, Samples, Tabulated};
pub use recovery::RecoveredGradient;
