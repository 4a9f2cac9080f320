//! Domains, structured quadrilateral meshes and the periodic unit cell.

mod domain;
mod mesh;
mod periodic;

pub use domain::{DomainKind, DomainSpec};
pub use mesh::{build_domain_mesh, BoundaryFacet, BoundaryTag, Mesh};
pub use periodic::{periodic_cell_mesh, PeriodicMesh};

/// A point (or vector) in the plane.
pub type Point = [f64; 2];

/// Distance from `x` to the boundary of the domain, zero outside of it.
pub fn boundary_distance(spec: &DomainSpec, x: Point) -> f64 {
    spec.boundary_distance(x)
}
