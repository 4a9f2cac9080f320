use std::sync::Arc;

use crate::cell::CorrectorSet;
use crate::fem::{SolutionField, Space};
use crate::geometry::DomainSpec;
use crate::semilinear::Discretization;
use crate::{Error, Result};

use super::cutoff::{cutoff_with, Smoothstep};
use super::mollifier::{Mollified, Samples, Tabulated};
use super::recovery::RecoveredGradient;

/// Which gradient of the homogenized solution multiplies the correctors.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpansionVariant {
    /// Mollified gradient `S_delta(grad u0)`.
    Smoothed,
    /// Recovered gradient of `u0` itself.
    Direct,
}

impl ExpansionVariant {
    pub fn other(self) -> Self {
        match self {
            Self::Smoothed => Self::Direct,
            Self::Direct => Self::Smoothed,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Smoothed => "smoothed",
            Self::Direct => "direct",
        }
    }
}

/// Mollifier radius as a function of the period.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum DeltaRule {
    /// `delta = eps^r` with `0 < r < 1/2`.
    Power(f64),
    /// `delta = -1 / ln(eps)`.
    InverseLog,
}

impl DeltaRule {
    pub fn delta(self, eps: f64) -> f64 {
        match self {
            Self::Power(r) => eps.powf(r),
            Self::InverseLog => -1.0 / eps.ln(),
        }
    }

    pub fn validate(self) -> Result<()> {
        match self {
            Self::Power(r) if !(r > 0.0 && r < 0.5) => {
                Err(Error::Config(format!("mollifier exponent must lie in (0, 1/2), got {r}")))
            }
            _ => Ok(()),
        }
    }
}

impl Default for DeltaRule {
    fn default() -> Self {
        Self::Power(0.25)
    }
}

/// Parameters of a first-order expansion
/// `u0 + eps eta G_k^gamma v_k^{alpha gamma}(x / eps)`.
#[derive(Clone, Debug)]
pub struct ExpansionRecipe {
    pub variant: ExpansionVariant,
    pub eps: f64,
    pub delta_rule: DeltaRule,
    pub profile: Smoothstep,
    /// Divide the mollifier by the kernel mass inside the domain.
    pub renormalize: bool,
    /// Evaluate the mollified gradient through an interpolation table with
    /// spacing `delta / 24`, built from samples merged to about that spacing.
    pub tabulate: bool,
}

impl ExpansionRecipe {
    pub fn new(variant: ExpansionVariant, eps: f64) -> Self {
        Self {
            variant,
            eps,
            delta_rule: DeltaRule::default(),
            profile: Smoothstep::Quintic,
            renormalize: true,
            tabulate: true,
        }
    }
}

/// An assembled expansion on the target space.
#[derive(Clone, Debug)]
pub struct Expansion {
    pub field: SolutionField,
    /// Mollifier radius, for the smoothed variant.
    pub delta: Option<f64>,
    /// The radius is at most twice the mesh size of `u0`.
    pub under_resolved: bool,
}

/// Builds the expansion at the nodes of `target`.
pub fn build_expansion(
    recipe: &ExpansionRecipe,
    u0: &SolutionField,
    correctors: Option<&CorrectorSet>,
    domain: &DomainSpec,
    target: Arc<Space>,
) -> Result<Expansion> {
    let correctors = correctors.ok_or_else(|| Error::Dependency("cell correctors are required to build an expansion".into()))?;
    recipe.delta_rule.validate()?;
    let eps = recipe.eps;
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::Config(format!("period must lie in (0, 1/2), got {eps}")));
    }
    let n = u0.components();
    if correctors.components() != n || target.components() != n {
        return Err(Error::Config("component counts of u0, correctors and target differ".into()));
    }

    let mut delta = None;
    let mut under_resolved = false;
    let gradient: Box<dyn Fn([f64; 2], &mut [f64])> = match recipe.variant {
        ExpansionVariant::Direct => {
            let r = RecoveredGradient::new(u0);
            Box::new(move |x, out| r.eval(x, out))
        }
        ExpansionVariant::Smoothed => {
            let d = recipe.delta_rule.delta(eps);
            let mesh = u0.space().mesh();
            let h = mesh.h() / std::f64::consts::SQRT_2;
            delta = Some(d);
            under_resolved = d <= 2.0 * mesh.h();
            let samples = Samples::gradients(u0);
            if recipe.tabulate {
                let (nx, ny) = mesh.divisions();
                let factor = ((d / 24.0) / h).floor().max(1.0) as usize;
                let moll = Mollified::new(samples.coarsen(nx, ny, factor), d, recipe.renormalize);
                let (lo, hi) = domain.bounding_box();
                let table = Tabulated::build(lo, hi, d / 24.0, 2 * n, |x, out| moll.value(x, out));
                Box::new(move |x, out| table.eval(x, out))
            } else {
                let moll = Mollified::new(samples, d, recipe.renormalize);
                Box::new(move |x, out| moll.value(x, out))
            }
        }
    };

    let base = u0.interpolate_to(target.clone())?;
    let mut values = base.into_values();
    let mut g = vec![0.0; 2 * n];
    let mut v = vec![0.0; 4 * n * n];
    for (node, &x) in target.mesh().nodes().iter().enumerate() {
        let eta = cutoff_with(recipe.profile, domain, eps, x);
        if eta == 0.0 {
            continue;
        }
        gradient(x, &mut g);
        correctors.values_at([x[0] / eps, x[1] / eps], &mut v);
        for alpha in 0..n {
            let mut s = 0.0;
            for gamma in 0..n {
                for k in 0..2 {
                    s += g[gamma * 2 + k] * v[(alpha * n + gamma) * 2 + k];
                }
            }
            values[target.dof(node, alpha)] += eps * eta * s;
        }
    }
    target.zero_constrained(&mut values);
    Ok(Expansion { field: SolutionField::new(target, values)?, delta, under_resolved })
}

/// Dual `H^1` norm of the residual of the oscillatory problem at `ubar`.
pub fn discrepancy(disc: &Discretization, ubar: &SolutionField) -> Result<f64> {
    let r = disc.residual(ubar.values())?;
    disc.residual_norm(&r)
}
