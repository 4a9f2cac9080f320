use std::ops::Deref;

use super::{DomainSpec, Mesh};
use crate::{Error, Result};

/// Uniform `m x m` mesh of the unit cell with opposite sides identified.
///
/// Node `(i, j)` maps to the periodic degree of freedom
/// `(j mod m) * m + (i mod m)`.
#[derive(Clone, Debug)]
pub struct PeriodicMesh {
    mesh: Mesh,
    m: usize,
    node_dof: Vec<usize>,
}

pub fn periodic_cell_mesh(m: usize) -> Result<PeriodicMesh> {
    if m < 2 {
        return Err(Error::InvalidResolution { got: m, min: 2 });
    }
    let sq = DomainSpec::unit_square();
    let corners = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
    let mut mesh = Mesh::structured(&sq, corners, m, m)?;
    mesh.clear_facets();
    let node_dof = (0..=m)
        .flat_map(|j| (0..=m).map(move |i| (j % m) * m + (i % m)))
        .collect();
    Ok(PeriodicMesh { mesh, m, node_dof })
}

impl PeriodicMesh {
    pub fn resolution(&self) -> usize {
        self.m
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    /// Periodic degree of freedom carried by `node`.
    pub fn dof(&self, node: usize) -> usize {
        self.node_dof[node]
    }

    pub fn node_dofs(&self) -> &[usize] {
        &self.node_dof
    }

    pub fn dof_count(&self) -> usize {
        self.m * self.m
    }

    /// The node in `[0, 1)^2` that shares the periodic class of `node`.
    pub fn representative(&self, node: usize) -> usize {
        let d = self.node_dof[node];
        (d / self.m) * (self.m + 1) + d % self.m
    }
}

impl Deref for PeriodicMesh {
    type Target = Mesh;

    fn deref(&self) -> &Mesh {
        &self.mesh
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_tiny_resolution() {
        assert!(matches!(
            periodic_cell_mesh(1),
            Err(Error::InvalidResolution { got: 1, min: 2 })
        ));
    }

    #[test]
    fn opposite_sides_share_dofs() {
        let p = periodic_cell_mesh(4).unwrap();
        assert_eq!(p.dof_count(), 16);
        assert_eq!(p.dof(0), p.dof(4));
        assert_eq!(p.dof(0), p.dof(24));
        assert_eq!(p.dof(5), p.dof(9));
    }

    proptest! {
        #[test]
        fn representative_is_idempotent(m in 2usize..20, seed in 0usize..10_000) {
            let p = periodic_cell_mesh(m).unwrap();
            let node = seed % p.node_count();
            let r = p.representative(node);
            prop_assert_eq!(p.representative(r), r);
            prop_assert_eq!(p.dof(r), p.dof(node));
            let [x, y] = p.nodes()[r];
            prop_assert!(x < 1.0 && y < 1.0);
        }
    }
}
