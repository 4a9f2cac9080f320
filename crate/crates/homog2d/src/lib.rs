//! Finite-element toolkit for periodic homogenization of semilinear elliptic
//! systems on two-dimensional domains.
//!
//! The pipeline runs in four stages:
//!
//! 1. [`cell`] solves the periodic cell problems, forms the homogenized tensor
//!    and the flux correctors.
//! 2. [`semilinear`] discretizes the oscillatory and homogenized semilinear
//!    problems and solves them with a Newton (or frozen-Jacobian) iteration.
//! 3. [`expansion`] builds first-order approximate solutions from a
//!    homogenized solution and measures how far they are from solving the
//!    oscillatory problem.
//! 4. [`study`] sweeps over a list of periods and fits convergence rates.
//!
//! Everything sits on top of [`geometry`] (structured quadrilateral meshes)
//! and [`fem`] (bilinear elements, sparse assembly and norms).

pub mod cell;
pub mod error;
pub mod expansion;
pub mod fem;
pub mod geometry;
pub mod semilinear;
pub mod study;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/meshes.md")]
    mod meshes {}
    #[doc = include_str!("../../../book/src/cell_problems.md")]
    mod cell_problems {}
    #[doc = include_str!("../../../book/src/flux_correctors.md")]
    mod flux_correctors {}
    #[doc = include_str!("../../../book/src/semilinear.md")]
    mod semilinear {}
    #[doc = include_str!("../../../book/src/expansions.md")]
    mod expansions {}
    #[doc = include_str!("../../../book/src/studies.md")]
    mod studies {}
}
