use super::assembly::for_each_element;
use super::quadrature::QuadRule;
use super::{SolutionField, Space};
use crate::Result;

/// Which norm [`norm`] evaluates.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NormKind {
    /// Maximum nodal magnitude, exact for bilinear fields.
    Sup,
    /// `(int |u|^p + |grad u|^p)^(1/p)` by element quadrature.
    W1p(f64),
    /// Dual `H^1` norm of the values read as a functional, through the
    /// Riesz map of the `H^1` Gram matrix.
    DualH1,
}

pub fn norm(field: &SolutionField, kind: NormKind) -> Result<f64> {
    match kind {
        NormKind::Sup => Ok(sup_norm(field.values())),
        NormKind::W1p(p) => Ok(w1p_norm(field, p)),
        NormKind::DualH1 => dual_h1_norm(field.space(), field.values()),
    }
}

pub fn sup_norm(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |m: f64, v| m.max(v.abs()))
}

pub fn w1p_norm(field: &SolutionField, p: f64) -> f64 {
    let space = field.space();
    let n = space.components();
    let rule = QuadRule::default();
    let mut total = 0.0;
    for_each_element(space, &rule, |e, ev| {
        let nodes = space.mesh().elements()[e];
        for q in 0..rule.len() {
            let (mut v2, mut g2) = (0.0, 0.0);
            for a in 0..n {
                let (mut v, mut g) = (0.0, [0.0; 2]);
                for k in 0..4 {
                    let u = field.nodal(nodes[k], a);
                    v += u * ev.phi[q][k];
                    g[0] += u * ev.grad[q][k][0];
                    g[1] += u * ev.grad[q][k][1];
                }
                v2 += v * v;
                g2 += g[0] * g[0] + g[1] * g[1];
            }
            total += ev.jxw[q] * (v2.powf(p / 2.0) + g2.powf(p / 2.0));
        }
        Ok(())
    })
    .expect("norm evaluation cannot fail");
    total.powf(1.0 / p)
}

/// `sqrt(r^T K^{-1} r)` with `K` the constrained `H^1` Gram matrix.
/// Constrained entries of `r` are ignored.
pub fn dual_h1_norm(space: &Space, residual: &[f64]) -> Result<f64> {
    let gram = space.h1_gram()?;
    let mut r = residual.to_vec();
    space.zero_constrained(&mut r);
    let z = gram.solve(&r)?;
    Ok(r.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>().max(0.0).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::assembly::assemble_load;
    use crate::geometry::{build_domain_mesh, DomainSpec};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn space(h: f64) -> Arc<Space> {
        Arc::new(Space::new(Arc::new(build_domain_mesh(&DomainSpec::unit_square(), h).unwrap()), 1))
    }

    #[test]
    fn w12_norm_of_sine_product() {
        let s = space(1.0 / 64.0);
        let u = SolutionField::from_fn(s, |x, _| (PI * x[0]).sin() * (PI * x[1]).sin());
        let exact = (0.25 + 0.5 * PI * PI).sqrt();
        assert!((w1p_norm(&u, 2.0) - exact).abs() / exact < 1e-3);
        assert!((norm(&u, NormKind::Sup).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn dual_norm_of_riesz_representative() {
        // For r = K u the dual norm equals the H^1 norm of u.
        let s = space(1.0 / 32.0);
        let u = SolutionField::from_fn(s.clone(), |x, _| (PI * x[0]).sin() * (PI * x[1]).sin() * x[0]);
        let mut uv = u.values().to_vec();
        s.zero_constrained(&mut uv);
        let u = SolutionField::new(s.clone(), uv).unwrap();
        let r = s.h1_gram_matrix().unwrap().matvec(u.values());
        let d = dual_h1_norm(&s, &r).unwrap();
        assert!((d - w1p_norm(&u, 2.0)).abs() < 1e-10);
    }

    #[test]
    fn dual_norm_is_bounded_by_l2() {
        let s = space(1.0 / 16.0);
        let r = assemble_load(&s, Some(&|_x, out: &mut [f64]| out[0] = 1.0), None).unwrap();
        let d = dual_h1_norm(&s, &r).unwrap();
        assert!(d > 0.0 && d <= 1.0);
    }
}
