use crate::fem::quadrature::shape;
use crate::fem::SolutionField;
use crate::geometry::Point;

/// Nodal gradient obtained by averaging element-centre gradients over the
/// patch of elements around each node, weighted by element area.
#[derive(Clone, Debug)]
pub struct RecoveredGradient {
    u: SolutionField,
    /// `nodal[node * 2n + alpha * 2 + k]`.
    nodal: Vec<f64>,
}

impl RecoveredGradient {
    pub fn new(u: &SolutionField) -> Self {
        let mesh = u.space().mesh();
        let c = 2 * u.components();
        let mut nodal = vec![0.0; mesh.node_count() * c];
        let mut weight = vec![0.0; mesh.node_count()];
        for e in 0..mesh.element_count() {
            let ids = mesh.elements()[e];
            let p = ids.map(|i| mesh.nodes()[i]);
            let area = 0.5 * ((p[2][0] - p[0][0]) * (p[3][1] - p[1][1]) - (p[3][0] - p[1][0]) * (p[2][1] - p[0][1]));
            let g: Vec<f64> = u.element_gradient(e).into_iter().flatten().collect();
            for &n in &ids {
                weight[n] += area;
                for k in 0..c {
                    nodal[n * c + k] += area * g[k];
                }
            }
        }
        for (n, w) in weight.iter().enumerate() {
            for k in 0..c {
                nodal[n * c + k] /= w;
            }
        }
        Self { u: u.clone(), nodal }
    }

    /// Interpolated recovered gradient at `x`; zero outside the mesh.
    pub fn eval(&self, x: Point, out: &mut [f64]) {
        let mesh = self.u.space().mesh();
        let c = 2 * self.u.components();
        out.fill(0.0);
        if let Some((e, local)) = mesh.locate(x) {
            let w = shape(local);
            for (a, &n) in mesh.elements()[e].iter().enumerate() {
                for k in 0..c {
                    out[k] += w[a] * self.nodal[n * c + k];
                }
            }
        }
    }
}
