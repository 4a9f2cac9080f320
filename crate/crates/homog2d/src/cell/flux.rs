use std::sync::Arc;

use crate::fem::assembly::for_each_element;
use crate::fem::quadrature::QuadRule;
use crate::fem::{assemble_stiffness, tensor_index, Factored, Space};
use crate::geometry::{periodic_cell_mesh, Point};
use crate::Result;

use super::coefficients::PeriodicCoefficientField;
use super::correctors::CorrectorSet;
use super::tensor::HomogenizedTensor;

/// Index of `phi_ijk^{alpha beta}` among the stored flux corrector fields.
#[inline]
pub fn phi_index(n: usize, i: usize, j: usize, k: usize, alpha: usize, beta: usize) -> usize {
    (((i * 2 + j) * 2 + k) * n + alpha) * n + beta
}

/// Periodic potentials `c_ij` with `Laplace c = b` and the skew fields
/// `phi_ijk` with `d_i phi_ijk = b_jk`, where
/// `b_ij = a_ij + a_ik d_k v_j - a_hat_ij`.
///
/// In two dimensions `phi_12k` is the stream function of the divergence-free
/// column `b_.k`; it is computed directly as the Galerkin solution of
/// `Laplace phi_12k = d_1 b_2k - d_2 b_1k`, which equals `d_1 c_2k - d_2 c_1k`.
#[derive(Clone, Debug)]
pub struct FluxCorrectorSet {
    n: usize,
    space: Arc<Space>,
    c: Vec<Vec<f64>>,
    phi: Vec<Vec<f64>>,
    mean_b: f64,
    curl_residual: f64,
    grad_residual: f64,
}

pub fn flux_correctors(
    field: &PeriodicCoefficientField,
    correctors: &CorrectorSet,
    hom: &HomogenizedTensor,
) -> Result<FluxCorrectorSet> {
    let n = correctors.components();
    let m = correctors.resolution();
    let cell = periodic_cell_mesh(m)?;
    let space = Arc::new(Space::periodic(&cell, 1));
    let rule = QuadRule::default();
    let len = 4 * n * n;
    let mut b = correctors.cell_fluxes(field, &rule);
    for chunk in b.chunks_mut(len) {
        for (v, h) in chunk.iter_mut().zip(hom.data()) {
            *v -= h;
        }
    }

    let dofs = space.dim();
    let mut mean = vec![0.0; len];
    let mut c_rhs = vec![vec![0.0; dofs]; len];
    let mut curl_rhs = vec![vec![0.0; dofs]; 2 * n * n];
    let mut div = vec![vec![0.0; dofs]; 2 * n * n];
    let col = |alpha: usize, beta: usize, k: usize| (alpha * n + beta) * 2 + k;
    let mut qp = 0;
    for_each_element(&space, &rule, |e, ev| {
        let d = space.element_dofs(e);
        for q in 0..rule.len() {
            let bq = &b[qp * len..(qp + 1) * len];
            qp += 1;
            let w = ev.jxw[q];
            for t in 0..len {
                mean[t] += w * bq[t];
                for a in 0..4 {
                    c_rhs[t][d[a]] -= w * bq[t] * ev.phi[q][a];
                }
            }
            for alpha in 0..n {
                for beta in 0..n {
                    for k in 0..2 {
                        let b1 = bq[tensor_index(n, alpha, beta, 0, k)];
                        let b2 = bq[tensor_index(n, alpha, beta, 1, k)];
                        for a in 0..4 {
                            let g = ev.grad[q][a];
                            curl_rhs[col(alpha, beta, k)][d[a]] += w * (b2 * g[0] - b1 * g[1]);
                            div[col(alpha, beta, k)][d[a]] += w * (b1 * g[0] + b2 * g[1]);
                        }
                    }
                }
            }
        }
        Ok(())
    })?;

    let lap = assemble_stiffness(&space)?;
    let mut pinned = lap.clone();
    let mut pins = vec![false; dofs];
    pins[0] = true;
    pinned.constrain(&pins);
    let factor = Factored::cholesky(&pinned)?;
    let solve = |rhs: &[f64]| -> Result<Vec<f64>> {
        let mut r = rhs.to_vec();
        r[0] = 0.0;
        let mut x = factor.solve(&r)?;
        let avg = x.iter().sum::<f64>() / x.len() as f64;
        x.iter_mut().for_each(|v| *v -= avg);
        Ok(x)
    };

    let c = c_rhs.iter().map(|r| solve(r)).collect::<Result<Vec<_>>>()?;
    let mut phi = vec![vec![0.0; dofs]; 8 * n * n];
    let mut curl_residual: f64 = 0.0;
    for alpha in 0..n {
        for beta in 0..n {
            for k in 0..2 {
                let rhs = &curl_rhs[col(alpha, beta, k)];
                let s = solve(rhs)?;
                let ls = lap.matvec(&s);
                curl_residual = ls.iter().zip(rhs).fold(curl_residual, |r, (p, q)| r.max((p - q).abs()));
                phi[phi_index(n, 1, 0, k, alpha, beta)] = s.iter().map(|v| -v).collect();
                phi[phi_index(n, 0, 1, k, alpha, beta)] = s;
            }
        }
    }
    let grad_residual = div.iter().flatten().fold(0.0f64, |r, v| r.max(v.abs()));
    let mean_b = mean.iter().fold(0.0f64, |r, v| r.max(v.abs()));
    Ok(FluxCorrectorSet { n, space, c, phi, mean_b, curl_residual, grad_residual })
}

impl FluxCorrectorSet {
    pub fn components(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// Nodal values of `c_ij^{alpha beta}`.
    pub fn c(&self, alpha: usize, beta: usize, i: usize, j: usize) -> &[f64] {
        &self.c[tensor_index(self.n, alpha, beta, i, j)]
    }

    /// Nodal values of `phi_ijk^{alpha beta}`.
    pub fn phi(&self, i: usize, j: usize, k: usize, alpha: usize, beta: usize) -> &[f64] {
        &self.phi[phi_index(self.n, i, j, k, alpha, beta)]
    }

    /// `phi_ijk^{alpha beta}(y)` by periodic bilinear interpolation.
    pub fn phi_at(&self, y: Point, i: usize, j: usize, k: usize, alpha: usize, beta: usize) -> f64 {
        let m = (self.space.scalar_dofs() as f64).sqrt().round() as usize;
        let f = self.phi(i, j, k, alpha, beta);
        let gx = (y[0] - y[0].floor()) * m as f64;
        let gy = (y[1] - y[1].floor()) * m as f64;
        let ii = (gx.floor() as usize).min(m - 1);
        let jj = (gy.floor() as usize).min(m - 1);
        let (a, b) = (gx - ii as f64, gy - jj as f64);
        let d = |p: usize, q: usize| f[(q % m) * m + (p % m)];
        (1.0 - a) * (1.0 - b) * d(ii, jj) + a * (1.0 - b) * d(ii + 1, jj) + a * b * d(ii + 1, jj + 1)
            + (1.0 - a) * b * d(ii, jj + 1)
    }

    /// Largest cell average of any `b_ij^{alpha beta}`.
    pub fn mean_b(&self) -> f64 {
        self.mean_b
    }

    /// Residual of `d_i phi_ijk = b_jk` tested against `(-d_2 psi, d_1 psi)`
    /// for every periodic basis function `psi`.
    pub fn curl_residual(&self) -> f64 {
        self.curl_residual
    }

    /// Residual of the same identity tested against `grad psi`. The `phi`
    /// term vanishes by skew symmetry, leaving the weak divergence of `b`.
    pub fn grad_residual(&self) -> f64 {
        self.grad_residual
    }

    pub fn weak_identity_residual(&self) -> f64 {
        self.curl_residual.max(self.grad_residual)
    }

    /// `max |phi_ijk + phi_jik|` over the stored arrays.
    pub fn skew_defect(&self) -> f64 {
        self.defect(|i, j, k| (j, i, k))
    }

    /// `max |phi_ijk + phi_kji|` over the stored arrays.
    pub fn outer_skew_defect(&self) -> f64 {
        self.defect(|i, j, k| (k, j, i))
    }

    fn defect(&self, partner: impl Fn(usize, usize, usize) -> (usize, usize, usize)) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    let (p, q, r) = partner(i, j, k);
                    for alpha in 0..n {
                        for beta in 0..n {
                            let a = self.phi(i, j, k, alpha, beta);
                            let b = self.phi(p, q, r, alpha, beta);
                            worst = a.iter().zip(b).fold(worst, |w, (x, y)| w.max((x + y).abs()));
                        }
                    }
                }
            }
        }
        worst
    }

    /// Relative discrete `L^2` gap between `phi_12k` and `d_1 c_2k - d_2 c_1k`
    /// evaluated at element centres.
    pub fn potential_gap(&self) -> f64 {
        let n = self.n;
        let mesh = self.space.mesh();
        let (mut num, mut den) = (0.0, 0.0);
        for e in 0..mesh.element_count() {
            let d = self.space.element_dofs(e);
            let h = mesh.nodes()[mesh.elements()[e][1]][0] - mesh.nodes()[mesh.elements()[e][0]][0];
            let grad = |f: &[f64]| {
                [
                    0.5 * (f[d[1]] + f[d[2]] - f[d[0]] - f[d[3]]) / h,
                    0.5 * (f[d[2]] + f[d[3]] - f[d[0]] - f[d[1]]) / h,
                ]
            };
            for alpha in 0..n {
                for beta in 0..n {
                    for k in 0..2 {
                        let s = self.phi(0, 1, k, alpha, beta);
                        let centre = 0.25 * d.iter().map(|&i| s[i]).sum::<f64>();
                        let from_c = grad(self.c(alpha, beta, 1, k))[0] - grad(self.c(alpha, beta, 0, k))[1];
                        num += (centre - from_c).powi(2);
                        den += centre * centre;
                    }
                }
            }
        }
        if den == 0.0 {
            num.sqrt()
        } else {
            (num / den).sqrt()
        }
    }
}
