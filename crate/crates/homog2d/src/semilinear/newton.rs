use crate::fem::norms::sup_norm;
use crate::fem::{Factored, SolutionField};
use crate::{Error, Result};

use super::problem::Discretization;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NewtonMode {
    /// Jacobian re-evaluated at every iterate.
    Full,
    /// Jacobian evaluated once at the initial guess: the fixed-point map
    /// `u - F'(u_init)^{-1} F(u)`.
    Frozen,
}

#[derive(Clone, Debug)]
pub struct NewtonOptions {
    pub mode: NewtonMode,
    /// Stop once the dual `H^1` norm of the residual is at most this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        Self { mode: NewtonMode::Full, tol: 1e-10, max_iter: 50 }
    }
}

#[derive(Clone, Debug)]
pub struct NewtonReport {
    pub mode: NewtonMode,
    /// Number of updates applied.
    pub iterations: usize,
    /// Residual norms, starting with the initial guess.
    pub residual_norms: Vec<f64>,
    pub converged: bool,
    /// Sup norm of the last update.
    pub final_update_norm: f64,
}

/// Newton iteration for `F(u) = 0` started at `init`.
///
/// Failure to reach the tolerance is reported, not returned as an error.
/// A singular Jacobian is an error.
pub fn newton_solve(
    disc: &Discretization,
    init: &SolutionField,
    opts: &NewtonOptions,
) -> Result<(SolutionField, NewtonReport)> {
    let space = disc.space().clone();
    let mut u = init.values().to_vec();
    space.zero_constrained(&mut u);
    let mut r = disc.residual(&u)?;
    let mut norm = disc.residual_norm(&r)?;
    let mut report = NewtonReport {
        mode: opts.mode,
        iterations: 0,
        residual_norms: vec![norm],
        converged: norm <= opts.tol,
        final_update_norm: 0.0,
    };
    let factor = |u: &[f64]| -> Result<Factored> {
        let j = disc.jacobian(u)?;
        Factored::new(&j).map_err(|e| Error::Degenerate(format!("Jacobian factorization: {e}")))
    };
    let frozen = match opts.mode {
        NewtonMode::Frozen => Some(factor(&u)?),
        NewtonMode::Full => None,
    };
    while !report.converged && report.iterations < opts.max_iter {
        let minus_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let du = match &frozen {
            Some(f) => f.solve(&minus_r),
            None => factor(&u)?.solve(&minus_r),
        }
        .map_err(|e| Error::Degenerate(format!("Jacobian solve: {e}")))?;
        for (ui, d) in u.iter_mut().zip(&du) {
            *ui += d;
        }
        report.iterations += 1;
        report.final_update_norm = sup_norm(&du);
        r = match disc.residual(&u) {
            Ok(r) => r,
            Err(Error::Assembly { .. }) => break,
            Err(e) => return Err(e),
        };
        norm = disc.residual_norm(&r)?;
        report.residual_norms.push(norm);
        if !norm.is_finite() {
            break;
        }
        report.converged = norm <= opts.tol;
    }
    Ok((SolutionField::new(space, u)?, report))
}
