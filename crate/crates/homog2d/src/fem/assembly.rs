use super::quadrature::{ElementValues, QuadRule};
use super::sparse::SparseOperator;
use super::Space;
use crate::geometry::Point;
use crate::{Error, Result};

/// Index of `a_ij^{alpha beta}` in a flat coefficient buffer.
#[inline]
pub fn tensor_index(n: usize, alpha: usize, beta: usize, i: usize, j: usize) -> usize {
    ((alpha * n + beta) * 2 + i) * 2 + j
}

/// A fourth-order coefficient tensor `a_ij^{alpha beta}(x)`.
pub trait TensorField: Send + Sync {
    fn components(&self) -> usize;

    /// Writes the `4 n^2` entries at `x`, laid out by [`tensor_index`].
    fn eval(&self, x: Point, out: &mut [f64]);

    /// `a_ij^{alpha beta} = a_ji^{beta alpha}` everywhere.
    fn is_symmetric(&self) -> bool;
}

/// Runs `f` on every element with its quadrature data.
pub fn for_each_element(
    space: &Space,
    rule: &QuadRule,
    mut f: impl FnMut(usize, &ElementValues) -> Result<()>,
) -> Result<()> {
    let mut ev = ElementValues::default();
    for e in 0..space.mesh().element_count() {
        ev.reinit(space.mesh(), e, rule);
        f(e, &ev)?;
    }
    Ok(())
}

pub(crate) fn check_finite(values: &[f64], x: Point, what: &str) -> Result<()> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Assembly { x: x[0], y: x[1], msg: format!("non-finite {what}") })
    }
}

/// `int a_ij^{alpha beta} d_j u^beta d_i v^alpha`, unconstrained.
pub fn assemble_diffusion(space: &Space, coeff: &dyn TensorField) -> Result<SparseOperator> {
    let n = space.components();
    assert_eq!(coeff.components(), n, "coefficient and space component counts differ");
    let rule = QuadRule::default();
    let mut op = SparseOperator::zeros(space.pattern(), coeff.is_symmetric());
    let ls = 4 * n;
    let mut local = vec![0.0; ls * ls];
    let mut a = vec![0.0; 4 * n * n];
    for_each_element(space, &rule, |e, ev| {
        local.fill(0.0);
        for q in 0..rule.len() {
            coeff.eval(ev.x[q], &mut a);
            check_finite(&a, ev.x[q], "coefficient")?;
            let g = &ev.grad[q];
            for alpha in 0..n {
                for beta in 0..n {
                    for ra in 0..4 {
                        for cb in 0..4 {
                            let mut s = 0.0;
                            for i in 0..2 {
                                for j in 0..2 {
                                    s += a[tensor_index(n, alpha, beta, i, j)] * g[cb][j] * g[ra][i];
                                }
                            }
                            local[(alpha * 4 + ra) * ls + beta * 4 + cb] += ev.jxw[q] * s;
                        }
                    }
                }
            }
        }
        op.add_element(e, &local);
        Ok(())
    })?;
    Ok(op)
}

/// Component-wise Laplacian stiffness, unconstrained.
pub fn assemble_stiffness(space: &Space) -> Result<SparseOperator> {
    assemble_diffusion(space, &Identity(space.components()))
}

/// Component-wise mass matrix, unconstrained.
pub fn assemble_mass(space: &Space) -> Result<SparseOperator> {
    let n = space.components();
    let rule = QuadRule::default();
    let mut op = SparseOperator::zeros(space.pattern(), true);
    let ls = 4 * n;
    let mut local = vec![0.0; ls * ls];
    for_each_element(space, &rule, |e, ev| {
        local.fill(0.0);
        for q in 0..rule.len() {
            let phi = &ev.phi[q];
            for alpha in 0..n {
                for ra in 0..4 {
                    for cb in 0..4 {
                        local[(alpha * 4 + ra) * ls + alpha * 4 + cb] += ev.jxw[q] * phi[ra] * phi[cb];
                    }
                }
            }
        }
        op.add_element(e, &local);
        Ok(())
    })?;
    Ok(op)
}

/// Load vector `int f^alpha v^alpha + g_i^alpha d_i v^alpha`.
///
/// `f` writes `n` values and `g` writes `2 n` values (`alpha * 2 + i`) at a
/// point; either may be omitted.
pub fn assemble_load(
    space: &Space,
    f: Option<&dyn Fn(Point, &mut [f64])>,
    g: Option<&dyn Fn(Point, &mut [f64])>,
) -> Result<Vec<f64>> {
    let n = space.components();
    let rule = QuadRule::default();
    let mut rhs = vec![0.0; space.dim()];
    let mut fv = vec![0.0; n];
    let mut gv = vec![0.0; 2 * n];
    for_each_element(space, &rule, |e, ev| {
        let dofs = space.element_dofs(e);
        for q in 0..rule.len() {
            let w = ev.jxw[q];
            if let Some(f) = f {
                f(ev.x[q], &mut fv);
                check_finite(&fv, ev.x[q], "source term")?;
                for alpha in 0..n {
                    for a in 0..4 {
                        rhs[alpha * space.scalar_dofs() + dofs[a]] += w * fv[alpha] * ev.phi[q][a];
                    }
                }
            }
            if let Some(g) = g {
                g(ev.x[q], &mut gv);
                check_finite(&gv, ev.x[q], "flux term")?;
                for alpha in 0..n {
                    for a in 0..4 {
                        let d = gv[alpha * 2] * ev.grad[q][a][0] + gv[alpha * 2 + 1] * ev.grad[q][a][1];
                        rhs[alpha * space.scalar_dofs() + dofs[a]] += w * d;
                    }
                }
            }
        }
        Ok(())
    })?;
    Ok(rhs)
}

/// The identity tensor `delta_ij delta_{alpha beta}`.
#[derive(Clone, Copy, Debug)]
pub struct Identity(pub usize);

impl TensorField for Identity {
    fn components(&self) -> usize {
        self.0
    }

    fn eval(&self, _x: Point, out: &mut [f64]) {
        out.fill(0.0);
        for a in 0..self.0 {
            for i in 0..2 {
                out[tensor_index(self.0, a, a, i, i)] = 1.0;
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}
