use std::sync::Arc;

use crate::fem::assembly::for_each_element;
use crate::fem::quadrature::QuadRule;
use crate::fem::{assemble_diffusion, assemble_load, tensor_index, Factored, Space, TensorField};
use crate::geometry::{periodic_cell_mesh, Point};
use crate::{Error, Result};

use super::coefficients::PeriodicCoefficientField;
use super::tensor::HomogenizedTensor;

/// Periodic, mean-zero solutions `v_j^{gamma beta}` of the cell problems.
///
/// Field `(beta, j)` is a vector field over components `gamma`.
#[derive(Clone, Debug)]
pub struct CorrectorSet {
    space: Arc<Space>,
    n: usize,
    m: usize,
    fields: Vec<Vec<f64>>,
    residual: f64,
}

/// Solves the `2n` cell problems on an `m x m` periodic mesh.
pub fn solve_cell_problems(field: &PeriodicCoefficientField, m: usize) -> Result<CorrectorSet> {
    let cell = periodic_cell_mesh(m)?;
    let n = field.components();
    let legendre = field.legendre_constant();
    if !(legendre > 0.0) {
        return Err(Error::Coercivity(format!(
            "coefficient fails the Legendre condition (sampled constant {legendre:e})"
        )));
    }
    let space = Arc::new(Space::periodic(&cell, n));
    let a = assemble_diffusion(&space, field)?;
    let pins: Vec<bool> = (0..space.dim()).map(|d| d % space.scalar_dofs() == 0).collect();
    let mut pinned = a.clone();
    pinned.constrain(&pins);
    let factor = if pinned.symmetric() {
        Factored::cholesky(&pinned).map_err(|e| Error::Coercivity(format!("cell operator: {e}")))?
    } else {
        Factored::lu(&pinned)?
    };

    let mut fields = Vec::with_capacity(2 * n);
    let mut residual: f64 = 0.0;
    for beta in 0..n {
        for j in 0..2 {
            let flux = |x: Point, out: &mut [f64]| {
                let mut t = vec![0.0; 4 * n * n];
                field.eval(x, &mut t);
                for alpha in 0..n {
                    for i in 0..2 {
                        out[alpha * 2 + i] = -t[tensor_index(n, alpha, beta, i, j)];
                    }
                }
            };
            let rhs = assemble_load(&space, None, Some(&flux))?;
            let mut pinned_rhs = rhs.clone();
            space_zero(&pins, &mut pinned_rhs);
            let mut v = factor.solve(&pinned_rhs)?;
            let s = space.scalar_dofs();
            for gamma in 0..n {
                let block = &mut v[gamma * s..(gamma + 1) * s];
                let mean = block.iter().sum::<f64>() / s as f64;
                block.iter_mut().for_each(|x| *x -= mean);
            }
            let av = a.matvec(&v);
            residual = residual.max(av.iter().zip(&rhs).fold(0.0, |r, (p, q)| r.max((p - q).abs())));
            fields.push(v);
        }
    }
    Ok(CorrectorSet { space, n, m, fields, residual })
}

fn space_zero(mask: &[bool], v: &mut [f64]) {
    for (x, &c) in v.iter_mut().zip(mask) {
        if c {
            *x = 0.0;
        }
    }
}

impl CorrectorSet {
    pub(crate) fn from_parts(n: usize, m: usize, fields: Vec<Vec<f64>>, residual: f64) -> Result<Self> {
        let cell = periodic_cell_mesh(m)?;
        let space = Arc::new(Space::periodic(&cell, n));
        if fields.len() != 2 * n || fields.iter().any(|f| f.len() != space.dim()) {
            return Err(Error::Cache("corrector arrays have the wrong shape".into()));
        }
        Ok(Self { space, n, m, fields, residual })
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    pub fn components(&self) -> usize {
        self.n
    }

    pub fn resolution(&self) -> usize {
        self.m
    }

    /// Nodal values of `v_j^{. beta}` on the periodic space.
    pub fn field(&self, beta: usize, j: usize) -> &[f64] {
        &self.fields[beta * 2 + j]
    }

    pub(crate) fn fields(&self) -> &[Vec<f64>] {
        &self.fields
    }

    /// Largest entry of the unpinned cell residual `A v - f`.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    /// Cell average of `v_j^{gamma beta}`.
    pub fn mean(&self, gamma: usize, beta: usize, j: usize) -> f64 {
        let s = self.space.scalar_dofs();
        self.field(beta, j)[gamma * s..(gamma + 1) * s].iter().sum::<f64>() / s as f64
    }

    /// Every `v_j^{gamma beta}(y)` at once, written at `(gamma n + beta) 2 + j`.
    /// `y` may lie anywhere; it is folded into the cell.
    pub fn values_at(&self, y: Point, out: &mut [f64]) {
        let m = self.m;
        let s = self.space.scalar_dofs();
        let gx = (y[0] - y[0].floor()) * m as f64;
        let gy = (y[1] - y[1].floor()) * m as f64;
        let i = (gx.floor() as usize).min(m - 1);
        let j = (gy.floor() as usize).min(m - 1);
        let (a, b) = (gx - i as f64, gy - j as f64);
        let d = |ii: usize, jj: usize| (jj % m) * m + (ii % m);
        let dofs = [d(i, j), d(i + 1, j), d(i + 1, j + 1), d(i, j + 1)];
        let w = [(1.0 - a) * (1.0 - b), a * (1.0 - b), a * b, (1.0 - a) * b];
        for gamma in 0..self.n {
            for beta in 0..self.n {
                for jj in 0..2 {
                    let f = &self.fields[beta * 2 + jj][gamma * s..];
                    out[(gamma * self.n + beta) * 2 + jj] = (0..4).map(|k| w[k] * f[dofs[k]]).sum();
                }
            }
        }
    }

    /// `a_ij + a_ik d_k v_j` (the flux of `x_j e_beta + v_j^beta`) at every
    /// quadrature point of every element, laid out by [`tensor_index`].
    pub(crate) fn cell_fluxes(&self, field: &PeriodicCoefficientField, rule: &QuadRule) -> Vec<f64> {
        let n = self.n;
        let s = self.space.scalar_dofs();
        let len = 4 * n * n;
        let mut out = Vec::with_capacity(self.space.mesh().element_count() * rule.len() * len);
        let mut a = vec![0.0; len];
        for_each_element(&self.space, rule, |e, ev| {
            let dofs = self.space.element_dofs(e);
            for q in 0..rule.len() {
                field.eval(ev.x[q], &mut a);
                let start = out.len();
                out.extend_from_slice(&a);
                for beta in 0..n {
                    for j in 0..2 {
                        let v = &self.fields[beta * 2 + j];
                        for gamma in 0..n {
                            let mut g = [0.0; 2];
                            for k in 0..4 {
                                let val = v[gamma * s + dofs[k]];
                                g[0] += val * ev.grad[q][k][0];
                                g[1] += val * ev.grad[q][k][1];
                            }
                            for alpha in 0..n {
                                for i in 0..2 {
                                    let t = (0..2).map(|k| a[tensor_index(n, alpha, gamma, i, k)] * g[k]).sum::<f64>();
                                    out[start + tensor_index(n, alpha, beta, i, j)] += t;
                                }
                            }
                        }
                    }
                }
            }
            Ok(())
        })
        .expect("flux evaluation cannot fail");
        out
    }
}

/// `a_hat_ij^{alpha beta} = int (a_ij^{alpha beta} + a_ik^{alpha gamma} d_k v_j^{gamma beta})`.
pub fn homogenized_tensor(field: &PeriodicCoefficientField, correctors: &CorrectorSet) -> Result<HomogenizedTensor> {
    let n = correctors.n;
    let rule = QuadRule::default();
    let fluxes = correctors.cell_fluxes(field, &rule);
    let len = 4 * n * n;
    let mut data = vec![0.0; len];
    let mut jxw = Vec::with_capacity(fluxes.len() / len);
    for_each_element(correctors.space(), &rule, |_, ev| {
        jxw.extend_from_slice(&ev.jxw);
        Ok(())
    })?;
    for (w, chunk) in jxw.iter().zip(fluxes.chunks(len)) {
        for (d, c) in data.iter_mut().zip(chunk) {
            *d += w * c;
        }
    }
    HomogenizedTensor::new(n, data)
}
