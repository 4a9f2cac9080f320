use std::sync::Arc;

use crate::cell::{HomogenizedTensor, Oscillating, PeriodicCoefficientField};
use crate::fem::assembly::{check_finite, for_each_element};
use crate::fem::quadrature::{gauss_legendre, QuadRule};
use crate::fem::{assemble_diffusion, assemble_mass, dual_h1_norm, SparseOperator, Space, TensorField};
use crate::geometry::{BoundaryTag, DomainSpec, Mesh};
use crate::{Error, Result};

use super::model::{ModelValues, NonlinearityModel};

/// Principal part of the operator.
#[derive(Clone, Debug)]
pub enum Coefficients {
    /// `a(x / eps)` for a periodic field `a`.
    Oscillatory { field: Arc<PeriodicCoefficientField>, eps: f64 },
    /// A constant tensor.
    Homogenized(HomogenizedTensor),
}

/// A semilinear boundary value problem
/// `-div(a grad u + b_i(x, u)) + b(x, u) = 0` with `u = 0` on Dirichlet edges
/// and conormal flux `b_0(x, u)` on Robin edges.
#[derive(Clone)]
pub struct ProblemSpec {
    pub domain: DomainSpec,
    pub coefficients: Coefficients,
    pub model: Arc<dyn NonlinearityModel>,
    /// The coefficient satisfies the Legendre condition.
    pub legendre: bool,
}

impl ProblemSpec {
    pub fn oscillatory(
        domain: DomainSpec,
        field: Arc<PeriodicCoefficientField>,
        eps: f64,
        model: Arc<dyn NonlinearityModel>,
    ) -> Self {
        let legendre = field.legendre_constant() > 0.0;
        Self { domain, coefficients: Coefficients::Oscillatory { field, eps }, model, legendre }
    }

    pub fn homogenized(
        domain: DomainSpec,
        tensor: HomogenizedTensor,
        model: Arc<dyn NonlinearityModel>,
        legendre: bool,
    ) -> Self {
        Self { domain, coefficients: Coefficients::Homogenized(tensor), model, legendre }
    }

    pub fn validate(&self) -> Result<()> {
        self.domain.validate()?;
        let n = match &self.coefficients {
            Coefficients::Oscillatory { field, eps } => {
                if !(*eps > 0.0 && eps.is_finite()) {
                    return Err(Error::Config(format!("period must be positive, got {eps}")));
                }
                field.components()
            }
            Coefficients::Homogenized(t) => t.components(),
        };
        if n != self.model.components() {
            return Err(Error::Config(format!(
                "coefficient has {n} components, model has {}",
                self.model.components()
            )));
        }
        if self.domain.all_robin() && !self.legendre {
            return Err(Error::Coercivity(
                "a Robin condition on the whole boundary needs a coefficient satisfying the Legendre condition".into(),
            ));
        }
        Ok(())
    }

    fn tensor(&self) -> Box<dyn TensorField + '_> {
        match &self.coefficients {
            Coefficients::Oscillatory { field, eps } => Box::new(Oscillating { field: field.clone(), eps: *eps }),
            Coefficients::Homogenized(t) => Box::new(t.clone()),
        }
    }
}

/// A [`ProblemSpec`] discretized on a mesh: residual and Jacobian assembly.
///
/// With Robin data on the whole boundary there are no Dirichlet constraints,
/// so the mass matrix is moved from the lower-order part into the linear
/// part; the residual itself is unchanged.
pub struct Discretization {
    spec: ProblemSpec,
    space: Arc<Space>,
    linear: SparseOperator,
    mass_shift: Option<SparseOperator>,
    symmetric_principal: bool,
}

impl Discretization {
    pub fn new(spec: ProblemSpec, mesh: Arc<Mesh>) -> Result<Self> {
        spec.validate()?;
        let space = Arc::new(Space::new(mesh, spec.model.components()));
        let (mut linear, symmetric_principal) = {
            let tensor = spec.tensor();
            (assemble_diffusion(&space, tensor.as_ref())?, tensor.is_symmetric())
        };
        let mass_shift = if spec.domain.all_robin() {
            let m = assemble_mass(&space)?;
            linear = linear.add_scaled(&m, 1.0);
            Some(m)
        } else {
            None
        };
        Ok(Self { spec, space, linear, mass_shift, symmetric_principal })
    }

    pub fn spec(&self) -> &ProblemSpec {
        &self.spec
    }

    pub fn space(&self) -> &Arc<Space> {
        &self.space
    }

    /// The assembled linear part, without constraints.
    pub fn linear_operator(&self) -> &SparseOperator {
        &self.linear
    }

    /// `F(u)` as a vector of tested values; constrained entries are zero.
    pub fn residual(&self, u: &[f64]) -> Result<Vec<f64>> {
        let mut r = self.linear.matvec(u);
        if let Some(m) = &self.mass_shift {
            for (ri, mi) in r.iter_mut().zip(m.matvec(u)) {
                *ri -= mi;
            }
        }
        self.lower_order(u, Some(&mut r), None)?;
        self.space.zero_constrained(&mut r);
        Ok(r)
    }

    /// `F'(u)` with constrained rows and columns replaced by identity rows.
    pub fn jacobian(&self, u: &[f64]) -> Result<SparseOperator> {
        let mut j = self.linear.clone();
        if let Some(m) = &self.mass_shift {
            j = j.add_scaled(m, -1.0);
        }
        self.lower_order(u, None, Some(&mut j))?;
        j.constrain(self.space.constrained());
        let scale = j.values().iter().fold(0.0f64, |s, v| s.max(v.abs()));
        let symmetric = self.symmetric_principal && !self.spec.model.has_drift() && j.is_symmetric(1e-13 * scale);
        j.set_symmetric(symmetric);
        Ok(j)
    }

    /// Dual `H^1` norm of a residual vector.
    pub fn residual_norm(&self, r: &[f64]) -> Result<f64> {
        dual_h1_norm(&self.space, r)
    }

    /// Adds the drift, reaction and boundary contributions to a residual
    /// and/or a Jacobian.
    fn lower_order(&self, u: &[f64], mut r: Option<&mut Vec<f64>>, mut jac: Option<&mut SparseOperator>) -> Result<()> {
        let space = &self.space;
        let n = space.components();
        let s = space.scalar_dofs();
        let model = self.spec.model.as_ref();
        let rule = QuadRule::default();
        let ls = 4 * n;
        let mut vals = ModelValues::new(n);
        let mut uq = vec![0.0; n];
        let mut local = vec![0.0; ls * ls];
        for_each_element(space, &rule, |e, ev| {
            let d = space.element_dofs(e);
            local.fill(0.0);
            for q in 0..rule.len() {
                for (a, uqa) in uq.iter_mut().enumerate() {
                    *uqa = (0..4).map(|k| u[a * s + d[k]] * ev.phi[q][k]).sum();
                }
                model.interior(ev.x[q], &uq, &mut vals);
                let w = ev.jxw[q];
                if let Some(r) = r.as_deref_mut() {
                    check_finite(&vals.reaction, ev.x[q], "reaction")?;
                    check_finite(&vals.drift, ev.x[q], "drift")?;
                    for alpha in 0..n {
                        for k in 0..4 {
                            let g = ev.grad[q][k];
                            r[alpha * s + d[k]] += w
                                * (vals.reaction[alpha] * ev.phi[q][k]
                                    + vals.drift[alpha * 2] * g[0]
                                    + vals.drift[alpha * 2 + 1] * g[1]);
                        }
                    }
                }
                if jac.is_some() {
                    check_finite(&vals.d_reaction, ev.x[q], "reaction derivative")?;
                    check_finite(&vals.d_drift, ev.x[q], "drift derivative")?;
                    for alpha in 0..n {
                        for gamma in 0..n {
                            let dr = vals.d_reaction[alpha * n + gamma];
                            let d0 = vals.d_drift[(alpha * 2) * n + gamma];
                            let d1 = vals.d_drift[(alpha * 2 + 1) * n + gamma];
                            for a in 0..4 {
                                let g = ev.grad[q][a];
                                let test = dr * ev.phi[q][a];
                                let flux = d0 * g[0] + d1 * g[1];
                                for b in 0..4 {
                                    local[(alpha * 4 + a) * ls + gamma * 4 + b] += w * (test + flux) * ev.phi[q][b];
                                }
                            }
                        }
                    }
                }
            }
            if let Some(j) = jac.as_deref_mut() {
                j.add_element(e, &local);
            }
            Ok(())
        })?;

        let (gx, gw) = gauss_legendre(3);
        let mesh = space.mesh();
        let mut flux = vec![0.0; n];
        let mut dflux = vec![0.0; n * n];
        for f in mesh.facets().iter().filter(|f| f.tag == BoundaryTag::Robin) {
            let [p, q] = f.nodes.map(|i| mesh.nodes()[i]);
            let len = (q[0] - p[0]).hypot(q[1] - p[1]);
            let dofs = f.nodes.map(|i| space.node_dof(i));
            for (&t, &wt) in gx.iter().zip(&gw) {
                let x = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
                let phi = [1.0 - t, t];
                for (a, uqa) in uq.iter_mut().enumerate() {
                    *uqa = phi[0] * u[a * s + dofs[0]] + phi[1] * u[a * s + dofs[1]];
                }
                model.boundary(x, &uq, &mut flux, &mut dflux);
                check_finite(&flux, x, "boundary flux")?;
                check_finite(&dflux, x, "boundary flux derivative")?;
                let w = wt * len;
                for alpha in 0..n {
                    for a in 0..2 {
                        if let Some(r) = r.as_deref_mut() {
                            r[alpha * s + dofs[a]] -= w * flux[alpha] * phi[a];
                        }
                        if let Some(j) = jac.as_deref_mut() {
                            for gamma in 0..n {
                                for b in 0..2 {
                                    j.add_to(
                                        alpha * s + dofs[a],
                                        gamma * s + dofs[b],
                                        -w * dflux[alpha * n + gamma] * phi[a] * phi[b],
                                    );
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(())
    }
}
