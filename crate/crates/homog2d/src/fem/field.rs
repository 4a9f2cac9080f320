use std::sync::Arc;

use super::quadrature::shape;
use super::Space;
use crate::geometry::Point;
use crate::{Error, Result};

/// Nodal values of a finite-element function.
#[derive(Clone, Debug)]
pub struct SolutionField {
    space: Arc<Space>,
    values: Vec<f64>,
}

impl SolutionField {
    pub fn new(space: Arc<Space>, values: Vec<f64>) -> Result<Self> {
        if values.len() != space.dim() {
            return Err(Error::Numeric(format!(
                "field has {} values, space has {} dofs",
                values.len(),
                space.dim()
            )));
        }
        Ok(Self { space, values })
    }

    pub fn zeros(space: Arc<Space>) -> Self {
        let values = vec![0.0; space.dim()];
        Self { space, values }
    }

    /// Nodal interpolant of `f(x, component)`.
    pub fn from_fn(space: Arc<Space>, f: impl Fn(Point, usize) -> f64) -> Self {
        let mut values = vec![0.0; space.dim()];
        for (node, &x) in space.mesh().nodes().iter().enumerate() {
            for a in 0..space.components() {
                values[space.dof(node, a)] = f(x, a);
            }
        }
        Self { space, values }
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn components(&self) -> usize {
        self.space.components()
    }

    /// Value of one component at a mesh node.
    pub fn nodal(&self, node: usize, component: usize) -> f64 {
        self.values[self.space.dof(node, component)]
    }

    /// Values of every component at `x`, or `None` outside the mesh.
    pub fn value_at(&self, x: Point) -> Option<Vec<f64>> {
        let (e, local) = self.space.mesh().locate(x)?;
        let n = shape(local);
        let nodes = self.space.mesh().elements()[e];
        Some(
            (0..self.components())
                .map(|a| (0..4).map(|k| n[k] * self.nodal(nodes[k], a)).sum())
                .collect(),
        )
    }

    /// Gradients `[component][direction]` at the centre of `element`.
    pub fn element_gradient(&self, element: usize) -> Vec<[f64; 2]> {
        let mesh = self.space.mesh();
        let nodes = mesh.elements()[element];
        let p = nodes.map(|n| mesh.nodes()[n]);
        // Jacobian of the bilinear map at the element centre.
        let j = [
            [
                0.5 * (p[1][0] + p[2][0] - p[0][0] - p[3][0]),
                0.5 * (p[2][0] + p[3][0] - p[0][0] - p[1][0]),
            ],
            [
                0.5 * (p[1][1] + p[2][1] - p[0][1] - p[3][1]),
                0.5 * (p[2][1] + p[3][1] - p[0][1] - p[1][1]),
            ],
        ];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        let ds = [-0.5, 0.5, 0.5, -0.5];
        let dt = [-0.5, -0.5, 0.5, 0.5];
        (0..self.components())
            .map(|a| {
                let (mut gs, mut gt) = (0.0, 0.0);
                for k in 0..4 {
                    let v = self.nodal(nodes[k], a);
                    gs += ds[k] * v;
                    gt += dt[k] * v;
                }
                [(j[1][1] * gs - j[1][0] * gt) / det, (-j[0][1] * gs + j[0][0] * gt) / det]
            })
            .collect()
    }

    /// Nodal interpolant of this field on another space.
    pub fn interpolate_to(&self, target: Arc<Space>) -> Result<SolutionField> {
        if target.components() != self.components() {
            return Err(Error::Numeric("component counts differ".into()));
        }
        let mut values = vec![0.0; target.dim()];
        for (node, &x) in target.mesh().nodes().iter().enumerate() {
            let v = self.value_at(x).ok_or_else(|| {
                Error::Geometry(format!("node ({:.6}, {:.6}) lies outside the source mesh", x[0], x[1]))
            })?;
            for (a, va) in v.into_iter().enumerate() {
                values[target.dof(node, a)] = va;
            }
        }
        Ok(SolutionField { space: target, values })
    }
}
