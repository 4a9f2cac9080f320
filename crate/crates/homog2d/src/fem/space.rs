use std::sync::{Arc, OnceLock};

use super::assembly::{assemble_mass, assemble_stiffness};
use super::sparse::{Factored, Pattern, SparseOperator};
use crate::geometry::{Mesh, PeriodicMesh};
use crate::Result;

/// Vector-valued bilinear finite-element space on a mesh.
///
/// Global dof of component `alpha` at scalar dof `d` is
/// `alpha * scalar_dofs + d`. On domain meshes every node is a scalar dof and
/// nodes on Dirichlet facets are constrained; on the periodic cell nodes are
/// identified modulo the period and nothing is constrained.
pub struct Space {
    mesh: Arc<Mesh>,
    components: usize,
    node_dof: Vec<usize>,
    scalar_dofs: usize,
    periodic: bool,
    constrained: Vec<bool>,
    pattern: OnceLock<Arc<Pattern>>,
    gram: OnceLock<Arc<Factored>>,
}

impl std::fmt::Debug for Space {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Space")
            .field("nodes", &self.mesh.node_count())
            .field("components", &self.components)
            .field("periodic", &self.periodic)
            .finish()
    }
}

impl Space {
    pub fn new(mesh: Arc<Mesh>, components: usize) -> Self {
        let scalar_dofs = mesh.node_count();
        let dirichlet = mesh.dirichlet_nodes();
        let constrained = (0..components).flat_map(|_| dirichlet.iter().copied()).collect();
        Self {
            node_dof: (0..scalar_dofs).collect(),
            mesh,
            components,
            scalar_dofs,
            periodic: false,
            constrained,
            pattern: OnceLock::new(),
            gram: OnceLock::new(),
        }
    }

    pub fn periodic(cell: &PeriodicMesh, components: usize) -> Self {
        let scalar_dofs = cell.dof_count();
        Self {
            mesh: Arc::new(cell.mesh().clone()),
            components,
            node_dof: cell.node_dofs().to_vec(),
            scalar_dofs,
            periodic: true,
            constrained: vec![false; components * scalar_dofs],
            pattern: OnceLock::new(),
            gram: OnceLock::new(),
        }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn scalar_dofs(&self) -> usize {
        self.scalar_dofs
    }

    pub fn dim(&self) -> usize {
        self.components * self.scalar_dofs
    }

    pub fn is_periodic(&self) -> bool {
        self.periodic
    }

    pub fn node_dof(&self, node: usize) -> usize {
        self.node_dof[node]
    }

    pub fn dof(&self, node: usize, component: usize) -> usize {
        component * self.scalar_dofs + self.node_dof[node]
    }

    /// Scalar dofs of an element's four nodes.
    pub fn element_dofs(&self, element: usize) -> [usize; 4] {
        self.mesh.elements()[element].map(|n| self.node_dof[n])
    }

    pub fn constrained(&self) -> &[bool] {
        &self.constrained
    }

    /// Element-coupling pattern with local order `component * 4 + node`.
    pub fn pattern(&self) -> Arc<Pattern> {
        self.pattern
            .get_or_init(|| {
                let n = self.components;
                let dofs: Vec<Vec<usize>> = (0..self.mesh.element_count())
                    .map(|e| {
                        let d = self.element_dofs(e);
                        (0..n).flat_map(|a| d.map(|s| a * self.scalar_dofs + s)).collect()
                    })
                    .collect();
                Arc::new(Pattern::from_elements(self.dim(), &dofs))
            })
            .clone()
    }

    /// Zeroes the constrained entries of a vector.
    pub fn zero_constrained(&self, v: &mut [f64]) {
        for (x, &c) in v.iter_mut().zip(&self.constrained) {
            if c {
                *x = 0.0;
            }
        }
    }

    /// Factored `H^1` Gram matrix (stiffness plus mass), constrained rows
    /// replaced by identity rows.
    pub fn h1_gram(&self) -> Result<Arc<Factored>> {
        if let Some(f) = self.gram.get() {
            return Ok(f.clone());
        }
        let mut k = assemble_stiffness(self)?.add_scaled(&assemble_mass(self)?, 1.0);
        k.constrain(&self.constrained);
        k.set_symmetric(true);
        let f = Arc::new(Factored::cholesky(&k)?);
        Ok(self.gram.get_or_init(|| f).clone())
    }

    /// The same Gram matrix, unfactored.
    pub fn h1_gram_matrix(&self) -> Result<SparseOperator> {
        let mut k = assemble_stiffness(self)?.add_scaled(&assemble_mass(self)?, 1.0);
        k.constrain(&self.constrained);
        k.set_symmetric(true);
        Ok(k)
    }
}
