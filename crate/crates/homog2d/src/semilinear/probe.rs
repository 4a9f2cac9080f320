use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fem::norms::sup_norm;
use crate::fem::{assemble_stiffness, SolutionField};
use crate::Result;

use super::newton::{newton_solve, NewtonMode, NewtonOptions};
use super::problem::Discretization;

#[derive(Clone, Debug)]
pub struct ProbeOptions {
    /// Sup norm of each perturbation.
    pub radius: f64,
    pub trials: usize,
    pub seed: u64,
    pub newton: NewtonOptions,
    /// Largest sup-norm distance still counted as the same solution.
    pub agreement: f64,
}

impl Default for ProbeOptions {
    fn default() -> Self {
        Self {
            radius: 0.05,
            trials: 8,
            seed: 1,
            newton: NewtonOptions::default(),
            agreement: 1e-8,
        }
    }
}

#[derive(Clone, Debug)]
pub struct ProbeTrial {
    pub converged: bool,
    pub iterations: usize,
    /// Sup-norm distance of the converged iterate from the reference.
    pub distance: f64,
}

#[derive(Clone, Debug)]
pub struct ProbeReport {
    pub radius: f64,
    pub trials: Vec<ProbeTrial>,
    /// Every trial converged back to the reference solution.
    pub all_agree: bool,
}

/// Restarts Newton from random smooth perturbations of `u_ref` and checks
/// that every run returns to `u_ref`.
///
/// Perturbations are uniform nodal noise, smoothed by one damped Jacobi
/// sweep of the Laplacian and rescaled to sup norm `radius`.
pub fn local_uniqueness_probe(disc: &Discretization, u_ref: &SolutionField, opts: &ProbeOptions) -> Result<ProbeReport> {
    let space = disc.space();
    let stiff = assemble_stiffness(space)?;
    let diag: Vec<f64> = (0..space.dim()).map(|i| stiff.get(i, i)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let newton = NewtonOptions { mode: NewtonMode::Full, ..opts.newton.clone() };
    let mut trials = Vec::with_capacity(opts.trials);
    for _ in 0..opts.trials {
        let mut p: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let sp = stiff.matvec(&p);
        for i in 0..p.len() {
            p[i] -= (2.0 / 3.0) * sp[i] / diag[i];
        }
        space.zero_constrained(&mut p);
        let scale = sup_norm(&p);
        let init: Vec<f64> = u_ref
            .values()
            .iter()
            .zip(&p)
            .map(|(u, d)| if scale > 0.0 { u + opts.radius * d / scale } else { *u })
            .collect();
        let init = SolutionField::new(space.clone(), init)?;
        let trial = match newton_solve(disc, &init, &newton) {
            Ok((u, rep)) => {
                let distance = u.values().iter().zip(u_ref.values()).fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
                ProbeTrial { converged: rep.converged, iterations: rep.iterations, distance }
            }
            Err(_) => ProbeTrial { converged: false, iterations: 0, distance: f64::INFINITY },
        };
        trials.push(trial);
    }
    let all_agree = trials.iter().all(|t| t.converged && t.distance <= opts.agreement);
    Ok(ProbeReport { radius: opts.radius, trials, all_agree })
}
