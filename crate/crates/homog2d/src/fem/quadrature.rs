use crate::geometry::{Mesh, Point};

/// Gauss-Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n > 0, "quadrature needs at least one point");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        // Chebyshev guess, refined by Newton on P_n.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[n - 1 - i] = 0.5 * (x + 1.0);
        weights[n - 1 - i] = 1.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// Tensor-product rule on the reference square `[0, 1]^2`.
#[derive(Clone, Debug)]
pub struct QuadRule {
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadRule {
    pub fn gauss(n: usize) -> Self {
        let (x, w) = gauss_legendre(n);
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for j in 0..n {
            for i in 0..n {
                points.push([x[i], x[j]]);
                weights.push(w[i] * w[j]);
            }
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }
}

impl Default for QuadRule {
    fn default() -> Self {
        Self::gauss(3)
    }
}

/// Bilinear shape functions at local coordinates, counter-clockwise order.
pub fn shape(local: [f64; 2]) -> [f64; 4] {
    let [s, t] = local;
    [(1.0 - s) * (1.0 - t), s * (1.0 - t), s * t, (1.0 - s) * t]
}

fn shape_derivatives(local: [f64; 2]) -> ([f64; 4], [f64; 4]) {
    let [s, t] = local;
    ([-(1.0 - t), 1.0 - t, t, -t], [-(1.0 - s), -s, s, 1.0 - s])
}

/// Shape values, physical gradients and weights of one element at every
/// quadrature point.
#[derive(Clone, Debug, Default)]
pub struct ElementValues {
    pub x: Vec<Point>,
    pub jxw: Vec<f64>,
    pub phi: Vec<[f64; 4]>,
    pub grad: Vec<[[f64; 2]; 4]>,
}

impl ElementValues {
    pub fn reinit(&mut self, mesh: &Mesh, element: usize, rule: &QuadRule) {
        let nodes = mesh.elements()[element].map(|n| mesh.nodes()[n]);
        let q = rule.len();
        self.x.resize(q, [0.0; 2]);
        self.jxw.resize(q, 0.0);
        self.phi.resize(q, [0.0; 4]);
        self.grad.resize(q, [[0.0; 2]; 4]);
        for (k, (&local, &w)) in rule.points.iter().zip(&rule.weights).enumerate() {
            let n = shape(local);
            let (ds, dt) = shape_derivatives(local);
            let mut x = [0.0; 2];
            let mut j = [[0.0; 2]; 2];
            for a in 0..4 {
                for r in 0..2 {
                    x[r] += n[a] * nodes[a][r];
                    j[r][0] += ds[a] * nodes[a][r];
                    j[r][1] += dt[a] * nodes[a][r];
                }
            }
            let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
            for a in 0..4 {
                self.grad[k][a] = [
                    (j[1][1] * ds[a] - j[1][0] * dt[a]) / det,
                    (-j[0][1] * ds[a] + j[0][0] * dt[a]) / det,
                ];
            }
            self.x[k] = x;
            self.jxw[k] = w * det;
            self.phi[k] = n;
        }
    }
}
