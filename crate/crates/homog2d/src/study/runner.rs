use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crate::cell::{
    cache_key, homogenized_tensor, load_cache, save_cache, solve_cell_problems, verify_coercivity, CorrectorSet,
    HomogenizedTensor, PeriodicCoefficientField,
};
use crate::expansion::{build_expansion, discrepancy, ExpansionRecipe, ExpansionVariant};
use crate::fem::norms::{sup_norm, w1p_norm};
use crate::fem::SolutionField;
use crate::geometry::{build_domain_mesh, DomainSpec};
use crate::semilinear::{
    check_nondegeneracy, local_uniqueness_probe, manufactured_solution, newton_solve, Discretization,
    NewtonReport, NonlinearityModel, ProbeOptions, ProbeReport, ProblemSpec, ScalarField, SeparableModel, Term,
    UFunction,
};
use crate::{Error, Result};

use super::config::{Forcing, LimitName, ReactionName, StudyConfig};
use super::rate::{fit_rate, RateFit};

/// Cell stage: correctors, homogenized tensor and its certificate.
#[derive(Clone, Debug)]
pub struct CellOutcome {
    pub field: Arc<PeriodicCoefficientField>,
    pub correctors: CorrectorSet,
    pub tensor: HomogenizedTensor,
    /// Smallest eigenvalue of the symmetrized homogenized tensor.
    pub certificate: f64,
    /// Sampled Legendre constant of the cell coefficient.
    pub legendre: f64,
    pub from_cache: bool,
}

/// Homogenized stage.
#[derive(Clone, Debug)]
pub struct HomogenizedOutcome {
    pub u0: SolutionField,
    pub newton: NewtonReport,
    /// Smallest singular value of the linearization on the certificate mesh.
    pub sigma_min: f64,
    /// Sup distance to `sin(pi x) sin(pi y)` when the forcing is manufactured
    /// on the unit square with Dirichlet data.
    pub manufactured_error: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct SolveReport {
    pub cell: CellOutcome,
    pub homogenized: HomogenizedOutcome,
}

/// The other expansion variant, solved from independently.
#[derive(Clone, Debug)]
pub struct CrossCheck {
    pub variant: ExpansionVariant,
    pub discrepancy: f64,
    pub converged: bool,
    /// Sup distance between the two Newton limits.
    pub agreement: f64,
}

#[derive(Clone, Debug)]
pub struct SweepRow {
    pub sup_err: f64,
    pub w12_err: f64,
    pub discrepancy: f64,
    pub newton_iters: usize,
    pub apriori_ratio: f64,
    pub converged: bool,
    pub delta: Option<f64>,
    pub under_resolved: bool,
    pub cross: Option<CrossCheck>,
}

/// One requested period; failures are kept as messages.
#[derive(Clone, Debug)]
pub struct SweepRecord {
    pub eps: f64,
    /// Grid spacing `eps / kappa`.
    pub h: f64,
    pub outcome: std::result::Result<SweepRow, String>,
}

impl SweepRecord {
    pub fn converged_row(&self) -> Option<&SweepRow> {
        self.outcome.as_ref().ok().filter(|r| r.converged)
    }
}

#[derive(Clone, Debug)]
pub struct StudyReport {
    pub variant: ExpansionVariant,
    /// Tensor at `cell_resolution`.
    pub tensor: HomogenizedTensor,
    pub certificate: f64,
    pub cell_residual: f64,
    /// Resolution and tensor of the cell solve the sweep used, when it is
    /// not the one above.
    pub limit: Option<(usize, HomogenizedTensor)>,
    pub sigma_min: f64,
    pub homogenized_iterations: usize,
    pub homogenized_h: f64,
    pub records: Vec<SweepRecord>,
    pub sup_fit: std::result::Result<RateFit, String>,
    pub discrepancy_fit: std::result::Result<RateFit, String>,
    /// Discrepancy fit of the cross-check variant.
    pub cross_discrepancy_fit: Option<std::result::Result<RateFit, String>>,
}

impl StudyReport {
    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged_row().is_some())
    }

    /// `(eps, value)` over converged rows.
    pub fn series(&self, f: impl Fn(&SweepRow) -> Option<f64>) -> Vec<(f64, f64)> {
        self.records.iter().filter_map(|r| r.converged_row().and_then(&f).map(|v| (r.eps, v))).collect()
    }
}

#[derive(Clone, Debug)]
pub struct ProbeSummary {
    pub eps: f64,
    pub reference: NewtonReport,
    pub report: ProbeReport,
}

fn cache_path(config: &StudyConfig, field: &PeriodicCoefficientField, m: usize) -> PathBuf {
    let key = cache_key(field, m);
    let hex: String = key[..8].iter().map(|b| format!("{b:02x}")).collect();
    config.output.dir.join("cache").join(format!("cell-{hex}.bin"))
}

/// Solves the cell problems at `cell_resolution`, reusing a cached solve
/// when allowed.
pub fn run_cell(config: &StudyConfig, use_cache: bool) -> Result<CellOutcome> {
    run_cell_at(config, config.study.cell_resolution, use_cache)
}

/// Cell stage at resolution `m`.
pub fn run_cell_at(config: &StudyConfig, m: usize, use_cache: bool) -> Result<CellOutcome> {
    let field = Arc::new(config.field()?);
    let legendre = field.legendre_constant();
    if config.coefficients.legendre && !(legendre > 0.0) {
        return Err(Error::Coercivity(format!(
            "coefficients.legendre is set but the sampled Legendre constant is {legendre:e}"
        )));
    }
    let path = cache_path(config, &field, m);
    let cached = if use_cache { load_cache(&path, &field, m)? } else { None };
    let (correctors, tensor, from_cache) = match cached {
        Some((c, t)) => (c, t, true),
        None => {
            let c = solve_cell_problems(&field, m)?;
            let t = homogenized_tensor(&field, &c)?;
            if use_cache {
                save_cache(&path, &field, &c, &t)?;
            }
            (c, t, false)
        }
    };
    let certificate = verify_coercivity(&tensor)?;
    Ok(CellOutcome { field, correctors, tensor, certificate, legendre, from_cache })
}

/// The nonlinearity described by `[model]`. A manufactured source is built
/// from `tensor` so that `sin(pi x) sin(pi y)` solves the homogenized
/// problem on the unit square.
pub fn build_model(config: &StudyConfig, tensor: &HomogenizedTensor) -> Result<Arc<dyn NonlinearityModel>> {
    let m = &config.model;
    let n = config.coefficients.components;
    let g = match m.reaction {
        ReactionName::Zero => None,
        ReactionName::Linear => Some(UFunction::Poly(vec![0.0, 1.0])),
        ReactionName::Cubic => Some(UFunction::Poly(vec![0.0, 0.0, 0.0, 1.0])),
        ReactionName::Sine => Some(UFunction::Sin(1.0)),
        ReactionName::Exp => Some(UFunction::Exp(1.0)),
    };
    let scale = m.reaction_scale;
    let mut model = SeparableModel::new(n);
    for a in 0..n {
        if let Some(g) = &g {
            model = model.with_reaction(Term::new(a, a, ScalarField::Constant(scale), g.clone()));
        }
        if let Some([cx, cy]) = m.drift {
            for (dir, c) in [cx, cy].into_iter().enumerate() {
                model = model.with_drift(dir, Term::new(a, a, ScalarField::Constant(c), UFunction::Poly(vec![0.0, 1.0])));
            }
        }
        if let Some([c0, c1]) = m.boundary_flux {
            model = model.with_boundary(Term::new(a, a, ScalarField::Constant(1.0), UFunction::Poly(vec![c0, c1])));
        }
    }
    let source = match &m.forcing {
        Forcing::Value(c) => Some(ScalarField::Constant(*c)),
        Forcing::Named(s) if s == "none" => None,
        Forcing::Named(_) => {
            let matrix = tensor
                .scalar_matrix()
                .ok_or_else(|| Error::Config("a manufactured source needs a scalar problem".into()))?;
            let g = g.clone();
            let drift = m.drift.unwrap_or([0.0, 0.0]);
            let principal = ScalarField::Manufactured { matrix, reaction: UFunction::Poly(vec![0.0]) };
            Some(ScalarField::Custom(Arc::new(move |x| {
                let s = manufactured_solution(x);
                let pi = std::f64::consts::PI;
                let ds = [pi * (pi * x[0]).cos() * (pi * x[1]).sin(), pi * (pi * x[0]).sin() * (pi * x[1]).cos()];
                let reaction = g.as_ref().map_or(0.0, |g| scale * g.value(s));
                principal.eval(x) + reaction - drift[0] * ds[0] - drift[1] * ds[1]
            })))
        }
    };
    if let Some(f) = source {
        for a in 0..n {
            model = model.with_reaction(Term::new(a, a, f.clone(), UFunction::Poly(vec![-1.0])));
        }
    }
    Ok(Arc::new(model))
}

fn is_unit_square(domain: &DomainSpec) -> bool {
    domain.vertices() == [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
}

fn homogenized_spacing(config: &StudyConfig) -> f64 {
    match config.study.homogenized_resolution {
        Some(r) => 1.0 / r as f64,
        None => config.epsilons().last().copied().unwrap_or(0.125) / config.study.kappa as f64,
    }
}

/// Homogenized solve: Newton from zero on the certificate mesh, the
/// nondegeneracy check there, then Newton again on the fine mesh.
pub fn run_homogenized(
    config: &StudyConfig,
    cell: &CellOutcome,
    model: Arc<dyn NonlinearityModel>,
) -> Result<HomogenizedOutcome> {
    let domain = config.domain()?;
    let legendre = cell.legendre > 0.0;
    let spec = ProblemSpec::homogenized(domain.clone(), cell.tensor.clone(), model, legendre);
    let opts = config.newton_options();

    let coarse_mesh = Arc::new(build_domain_mesh(&domain, 1.0 / config.study.certificate_resolution as f64)?);
    let coarse = Discretization::new(spec.clone(), coarse_mesh)?;
    let (uc, rc) = newton_solve(&coarse, &SolutionField::zeros(coarse.space().clone()), &opts)?;
    if !rc.converged {
        return Err(Error::Numeric(format!(
            "homogenized Newton did not converge on the certificate mesh (residual {:e})",
            rc.residual_norms.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let sigma_min = check_nondegeneracy(&coarse, &uc)?;

    let fine_mesh = Arc::new(build_domain_mesh(&domain, homogenized_spacing(config))?);
    let fine = Discretization::new(spec, fine_mesh)?;
    let init = uc.interpolate_to(fine.space().clone())?;
    let (u0, newton) = newton_solve(&fine, &init, &opts)?;
    if !newton.converged {
        return Err(Error::Numeric(format!(
            "homogenized Newton did not converge (residual {:e})",
            newton.residual_norms.last().copied().unwrap_or(f64::NAN)
        )));
    }
    let manufactured = matches!(&config.model.forcing, Forcing::Named(s) if s == "manufactured")
        && is_unit_square(&domain)
        && !domain.has_robin();
    let manufactured_error = manufactured.then(|| {
        let nodes = u0.space().mesh().nodes();
        nodes.iter().enumerate().fold(0.0f64, |m, (i, &x)| m.max((u0.nodal(i, 0) - manufactured_solution(x)).abs()))
    });
    Ok(HomogenizedOutcome { u0, newton, sigma_min, manufactured_error })
}

pub fn run_solve(config: &StudyConfig, use_cache: bool) -> Result<SolveReport> {
    let cell = run_cell(config, use_cache)?;
    let model = build_model(config, &cell.tensor)?;
    let homogenized = run_homogenized(config, &cell, model)?;
    Ok(SolveReport { cell, homogenized })
}

/// Shared state of the period sweep.
struct Context<'a> {
    config: &'a StudyConfig,
    domain: DomainSpec,
    cell: &'a CellOutcome,
    model: Arc<dyn NonlinearityModel>,
    u0: &'a SolutionField,
}

impl Context<'_> {
    fn recipe(&self, variant: ExpansionVariant, eps: f64) -> ExpansionRecipe {
        ExpansionRecipe {
            delta_rule: self.config.delta_rule(),
            renormalize: self.config.study.renormalize,
            ..ExpansionRecipe::new(variant, eps)
        }
    }

    fn discretize(&self, eps: f64) -> Result<Discretization> {
        let h = eps / self.config.study.kappa as f64;
        let mesh = Arc::new(build_domain_mesh(&self.domain, h)?);
        let spec = ProblemSpec::oscillatory(self.domain.clone(), self.cell.field.clone(), eps, self.model.clone());
        Discretization::new(spec, mesh)
    }

    fn entry(&self, eps: f64) -> Result<SweepRow> {
        let disc = self.discretize(eps)?;
        let space = disc.space().clone();
        let variant = self.config.variant();
        let opts = self.config.newton_options();
        let exp = build_expansion(
            &self.recipe(variant, eps),
            self.u0,
            Some(&self.cell.correctors),
            &self.domain,
            space.clone(),
        )?;
        let disc_value = discrepancy(&disc, &exp.field)?;
        let (u, rep) = newton_solve(&disc, &exp.field, &opts)?;

        let u0 = self.u0.interpolate_to(space.clone())?;
        let sup_err = sup_norm(&difference(u.values(), u0.values()));
        let w12_err = w1p_norm(&SolutionField::new(space.clone(), difference(u.values(), exp.field.values()))?, 2.0);

        let cross = if self.config.study.cross_check {
            let other = variant.other();
            let alt = build_expansion(
                &self.recipe(other, eps),
                self.u0,
                Some(&self.cell.correctors),
                &self.domain,
                space.clone(),
            )?;
            let alt_disc = discrepancy(&disc, &alt.field)?;
            let (ua, ra) = newton_solve(&disc, &alt.field, &opts)?;
            Some(CrossCheck {
                variant: other,
                discrepancy: alt_disc,
                converged: ra.converged,
                agreement: sup_norm(&difference(ua.values(), u.values())),
            })
        } else {
            None
        };
        Ok(SweepRow {
            sup_err,
            w12_err,
            discrepancy: disc_value,
            newton_iters: rep.iterations,
            apriori_ratio: w12_err / disc_value,
            converged: rep.converged,
            delta: exp.delta,
            under_resolved: exp.under_resolved,
            cross,
        })
    }
}

fn difference(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// The cell stage feeding a sweep: `None` when it is the reference stage.
fn sweep_cell(config: &StudyConfig, reference: &CellOutcome, use_cache: bool) -> Result<Option<CellOutcome>> {
    let m = match config.study.limit {
        LimitName::Mesh => config.study.kappa,
        LimitName::Cell => return Ok(None),
    };
    if m == reference.correctors.resolution() {
        return Ok(None);
    }
    run_cell_at(config, m, use_cache).map(Some)
}

/// Full pipeline: cell stage, homogenized solve with its nondegeneracy
/// check, and one oscillatory solve per period seeded at the expansion.
///
/// Periods run on a pool of worker threads; each is independent, so the
/// numbers do not depend on the thread count. A failing period is recorded
/// and the others proceed.
pub fn run_study(config: &StudyConfig, use_cache: bool) -> Result<StudyReport> {
    config.validate()?;
    let reference = run_cell(config, use_cache)?;
    let limit = sweep_cell(config, &reference, use_cache)?;
    let cell = limit.as_ref().unwrap_or(&reference);
    let model = build_model(config, &cell.tensor)?;
    let hom = run_homogenized(config, &cell, model.clone())?;
    let ctx = Context { config, domain: config.domain()?, cell, model, u0: &hom.u0 };

    let eps = config.epsilons();
    let slots: Mutex<Vec<Option<SweepRecord>>> = Mutex::new(vec![None; eps.len()]);
    let next = AtomicUsize::new(0);
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(eps.len()).max(1);
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= eps.len() {
                    break;
                }
                let e = eps[i];
                let record = SweepRecord {
                    eps: e,
                    h: e / config.study.kappa as f64,
                    outcome: ctx.entry(e).map_err(|err| err.to_string()),
                };
                slots.lock().unwrap()[i] = Some(record);
            });
        }
    });
    let records: Vec<SweepRecord> = slots.into_inner().unwrap().into_iter().map(|r| r.expect("every period ran")).collect();

    let mut report = StudyReport {
        variant: config.variant(),
        tensor: reference.tensor.clone(),
        certificate: reference.certificate,
        cell_residual: reference.correctors.residual(),
        limit: limit.as_ref().map(|c| (c.correctors.resolution(), c.tensor.clone())),
        sigma_min: hom.sigma_min,
        homogenized_iterations: hom.newton.iterations,
        homogenized_h: hom.u0.space().mesh().h(),
        records,
        sup_fit: Err(String::new()),
        discrepancy_fit: Err(String::new()),
        cross_discrepancy_fit: None,
    };
    let fit = |pairs: Vec<(f64, f64)>| fit_rate(&pairs).map_err(|e| e.to_string());
    report.sup_fit = fit(report.series(|r| Some(r.sup_err)));
    report.discrepancy_fit = fit(report.series(|r| Some(r.discrepancy)));
    if config.study.cross_check {
        report.cross_discrepancy_fit = Some(fit(report.series(|r| r.cross.as_ref().map(|c| c.discrepancy))));
    }
    Ok(report)
}

/// Solves at the probe period from the expansion, then restarts Newton from
/// seeded perturbations of the limit.
pub fn run_probe(config: &StudyConfig, use_cache: bool) -> Result<ProbeSummary> {
    config.validate()?;
    let reference = run_cell(config, use_cache)?;
    let limit = sweep_cell(config, &reference, use_cache)?;
    let cell = limit.unwrap_or(reference);
    let model = build_model(config, &cell.tensor)?;
    let hom = run_homogenized(config, &cell, model.clone())?;
    let ctx = Context { config, domain: config.domain()?, cell: &cell, model, u0: &hom.u0 };
    let eps = config.probe_epsilon();
    let disc = ctx.discretize(eps)?;
    let exp = build_expansion(
        &ctx.recipe(config.variant(), eps),
        &hom.u0,
        Some(&cell.correctors),
        &ctx.domain,
        disc.space().clone(),
    )?;
    let opts = config.newton_options();
    let (u, reference) = newton_solve(&disc, &exp.field, &opts)?;
    if !reference.converged {
        return Err(Error::Numeric(format!("reference solve at period {eps} did not converge")));
    }
    let probe = ProbeOptions {
        radius: config.probe.radius,
        trials: config.probe.trials,
        seed: config.output.seed,
        newton: opts,
        agreement: config.probe.agreement,
    };
    let report = local_uniqueness_probe(&disc, &u, &probe)?;
    Ok(ProbeSummary { eps, reference, report })
}
