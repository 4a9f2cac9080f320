use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::cell::{identity, FieldKind, PeriodicCoefficientField};
use crate::expansion::{DeltaRule, ExpansionVariant};
use crate::geometry::DomainSpec;
use crate::semilinear::{NewtonMode, NewtonOptions};
use crate::{Error, Result};

/// A study read from a TOML file. Unknown keys are rejected.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    #[serde(default)]
    pub domain: DomainConfig,
    pub coefficients: CoefficientConfig,
    #[serde(default)]
    pub model: ModelConfig,
    pub study: SweepConfig,
    #[serde(default)]
    pub newton: NewtonConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

/// A number, or a fraction written as a string such as `"1/8"`.
#[derive(Clone, Copy, Debug, PartialEq, Deserialize)]
#[serde(try_from = "NumberRepr")]
pub struct Number(pub f64);

#[derive(Deserialize)]
#[serde(untagged)]
enum NumberRepr {
    Int(i64),
    Float(f64),
    Text(String),
}

impl TryFrom<NumberRepr> for Number {
    type Error = String;

    fn try_from(r: NumberRepr) -> std::result::Result<Self, String> {
        match r {
            NumberRepr::Int(i) => Ok(Number(i as f64)),
            NumberRepr::Float(f) => Ok(Number(f)),
            NumberRepr::Text(s) => parse_fraction(&s).map(Number).ok_or_else(|| format!("not a number: {s:?}")),
        }
    }
}

fn parse_fraction(s: &str) -> Option<f64> {
    match s.split_once('/') {
        Some((a, b)) => Some(a.trim().parse::<f64>().ok()? / b.trim().parse::<f64>().ok()?),
        None => s.trim().parse().ok(),
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum EdgeRef {
    Index(usize),
    Name(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainConfig {
    /// `[x0, y0, x1, y1]`.
    pub rectangle: Option<[f64; 4]>,
    /// Counter-clockwise vertices.
    pub polygon: Option<Vec<[f64; 2]>>,
    /// Edge names (`bottom`, `right`, `top`, `left`), indices, or `"all"`.
    #[serde(default)]
    pub robin_edges: Vec<EdgeRef>,
}

impl Default for DomainConfig {
    fn default() -> Self {
        Self { rectangle: None, polygon: None, robin_edges: Vec::new() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FieldName {
    Constant,
    Laminate,
    Checkerboard,
    Trigonometric,
    Tabulated,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub kind: FieldName,
    /// Phase values for laminates and checkerboards.
    pub values: Option<[f64; 2]>,
    pub c0: Option<f64>,
    pub c1: Option<f64>,
    pub resolution: Option<usize>,
    pub data: Option<Vec<f64>>,
    #[serde(default = "one")]
    pub components: usize,
    /// Base tensor, `4 n^2` entries; identity when absent.
    pub base: Option<Vec<f64>>,
    /// Assert the Legendre condition; required for Robin data on the whole
    /// boundary.
    #[serde(default)]
    pub legendre: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReactionName {
    Zero,
    Linear,
    Cubic,
    Sine,
    Exp,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Forcing {
    Value(f64),
    Named(String),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    #[serde(default = "cubic")]
    pub reaction: ReactionName,
    #[serde(default = "unit")]
    pub reaction_scale: f64,
    /// `"manufactured"`, `"none"` or a constant source.
    #[serde(default = "manufactured")]
    pub forcing: Forcing,
    /// Drift `b_i = c_i u`.
    pub drift: Option<[f64; 2]>,
    /// Robin flux `b_0 = c0 + c1 u`.
    pub boundary_flux: Option<[f64; 2]>,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            reaction: ReactionName::Cubic,
            reaction_scale: 1.0,
            forcing: manufactured(),
            drift: None,
            boundary_flux: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VariantName {
    Smoothed,
    Direct,
}

impl From<VariantName> for ExpansionVariant {
    fn from(v: VariantName) -> Self {
        match v {
            VariantName::Smoothed => ExpansionVariant::Smoothed,
            VariantName::Direct => ExpansionVariant::Direct,
        }
    }
}

/// Which cell solve supplies the homogenized tensor and correctors of a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitName {
    /// Cell problems on the `kappa x kappa` grid that the oscillatory meshes
    /// induce on each period. The discrete oscillatory problems homogenize
    /// to this tensor when the meshes align with the period lattice.
    Mesh,
    /// Cell problems at `cell_resolution`.
    Cell,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DeltaName {
    Power,
    InverseLog,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    /// Periods, strictly decreasing.
    pub epsilons: Vec<Number>,
    /// Elements per period on the oscillatory meshes.
    #[serde(default = "eight")]
    pub kappa: usize,
    #[serde(default = "cell_resolution")]
    pub cell_resolution: usize,
    #[serde(default = "mesh")]
    pub limit: LimitName,
    #[serde(default = "direct")]
    pub variant: VariantName,
    #[serde(default = "power")]
    pub delta_rule: DeltaName,
    #[serde(default = "quarter")]
    pub delta_exponent: f64,
    #[serde(default = "yes")]
    pub renormalize: bool,
    /// Also build the other expansion variant and solve from it.
    #[serde(default = "yes")]
    pub cross_check: bool,
    /// Divisions per unit length of the mesh used for the nondegeneracy check.
    #[serde(default = "certificate_resolution")]
    pub certificate_resolution: usize,
    /// Divisions per unit length for the homogenized solution; defaults to
    /// the finest oscillatory mesh.
    pub homogenized_resolution: Option<usize>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NewtonConfig {
    #[serde(default = "tol")]
    pub tol: f64,
    #[serde(default = "max_iter")]
    pub max_iter: usize,
    #[serde(default = "full")]
    pub mode: ModeName,
}

impl Default for NewtonConfig {
    fn default() -> Self {
        Self { tol: tol(), max_iter: max_iter(), mode: ModeName::Full }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModeName {
    Full,
    Frozen,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeConfig {
    /// Period of the probed solve; the smallest study period when absent.
    pub epsilon: Option<Number>,
    #[serde(default = "radius")]
    pub radius: f64,
    #[serde(default = "eight")]
    pub trials: usize,
    #[serde(default = "agreement")]
    pub agreement: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self { epsilon: None, radius: radius(), trials: 8, agreement: agreement() }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "out_dir")]
    pub dir: PathBuf,
    #[serde(default = "one_u64")]
    pub seed: u64,
    /// Reuse cell correctors stored under `dir/cache`.
    #[serde(default = "yes")]
    pub cache: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: out_dir(), seed: 1, cache: true }
    }
}

fn one() -> usize {
    1
}
fn one_u64() -> u64 {
    1
}
fn unit() -> f64 {
    1.0
}
fn yes() -> bool {
    true
}
fn eight() -> usize {
    8
}
fn cell_resolution() -> usize {
    128
}
fn certificate_resolution() -> usize {
    64
}
fn quarter() -> f64 {
    0.25
}
fn tol() -> f64 {
    1e-10
}
fn max_iter() -> usize {
    50
}
fn radius() -> f64 {
    0.05
}
fn agreement() -> f64 {
    1e-8
}
fn out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn cubic() -> ReactionName {
    ReactionName::Cubic
}
fn manufactured() -> Forcing {
    Forcing::Named("manufactured".into())
}
fn direct() -> VariantName {
    VariantName::Direct
}
fn mesh() -> LimitName {
    LimitName::Mesh
}
fn power() -> DeltaName {
    DeltaName::Power
}
fn full() -> ModeName {
    ModeName::Full
}

/// Reads and validates a study file.
pub fn parse_config(path: &Path) -> Result<StudyConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<StudyConfig> {
    let config: StudyConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
    config.validate()?;
    Ok(config)
}

impl StudyConfig {
    /// Collects every invariant violation, each prefixed by its key path.
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        let eps: Vec<f64> = self.epsilons();
        if eps.is_empty() {
            problems.push("study.epsilons: empty".to_string());
        }
        for (i, e) in eps.iter().enumerate() {
            if !(*e > 0.0 && *e < 0.5) {
                problems.push(format!("study.epsilons[{i}]: {e} is outside (0, 1/2)"));
            }
        }
        if eps.windows(2).any(|w| w[1] >= w[0]) {
            problems.push("study.epsilons: not strictly decreasing".to_string());
        }
        let s = &self.study;
        if s.kappa < 8 {
            problems.push(format!("study.kappa: {} is below 8", s.kappa));
        }
        if s.cell_resolution < 4 {
            problems.push(format!("study.cell_resolution: {} is below 4", s.cell_resolution));
        }
        if s.certificate_resolution < 2 {
            problems.push(format!("study.certificate_resolution: {} is below 2", s.certificate_resolution));
        }
        if s.homogenized_resolution.is_some_and(|r| r < 2) {
            problems.push("study.homogenized_resolution: below 2".to_string());
        }
        if let Err(e) = self.delta_rule().validate() {
            problems.push(format!("study.delta_exponent: {e}"));
        }
        if !(self.newton.tol > 0.0) {
            problems.push(format!("newton.tol: {} is not positive", self.newton.tol));
        }
        if self.newton.max_iter == 0 {
            problems.push("newton.max_iter: zero".to_string());
        }
        if !(self.probe.radius > 0.0) {
            problems.push(format!("probe.radius: {} is not positive", self.probe.radius));
        }
        if let Some(Number(e)) = self.probe.epsilon {
            if !(e > 0.0 && e < 0.5) {
                problems.push(format!("probe.epsilon: {e} is outside (0, 1/2)"));
            }
        }
        if !self.model.reaction_scale.is_finite() {
            problems.push("model.reaction_scale: not finite".to_string());
        }
        if let Forcing::Named(name) = &self.model.forcing {
            if name != "manufactured" && name != "none" {
                problems.push(format!("model.forcing: unknown source {name:?}"));
            }
        }
        match self.domain() {
            Ok(d) => {
                if d.all_robin() && !self.coefficients.legendre {
                    problems.push(
                        "domain.robin_edges: Robin data on the whole boundary requires coefficients.legendre = true"
                            .to_string(),
                    );
                }
            }
            Err(e) => problems.push(format!("domain: {e}")),
        }
        if let Err(e) = self.field() {
            problems.push(format!("coefficients: {e}"));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Validation(problems))
        }
    }

    pub fn epsilons(&self) -> Vec<f64> {
        self.study.epsilons.iter().map(|n| n.0).collect()
    }

    pub fn variant(&self) -> ExpansionVariant {
        self.study.variant.into()
    }

    pub fn delta_rule(&self) -> DeltaRule {
        match self.study.delta_rule {
            DeltaName::Power => DeltaRule::Power(self.study.delta_exponent),
            DeltaName::InverseLog => DeltaRule::InverseLog,
        }
    }

    pub fn newton_options(&self) -> NewtonOptions {
        NewtonOptions {
            mode: match self.newton.mode {
                ModeName::Full => NewtonMode::Full,
                ModeName::Frozen => NewtonMode::Frozen,
            },
            tol: self.newton.tol,
            max_iter: self.newton.max_iter,
        }
    }

    /// Period of the uniqueness probe.
    pub fn probe_epsilon(&self) -> f64 {
        match self.probe.epsilon {
            Some(Number(e)) => e,
            None => self.epsilons().last().copied().unwrap_or(0.125),
        }
    }

    pub fn domain(&self) -> Result<DomainSpec> {
        let d = &self.domain;
        let spec = match (&d.rectangle, &d.polygon) {
            (Some(_), Some(_)) => return Err(Error::Config("give either rectangle or polygon".into())),
            (Some([x0, y0, x1, y1]), None) => DomainSpec::rectangle(*x0, *y0, *x1, *y1)?,
            (None, Some(v)) => DomainSpec::polygon(v.clone())?,
            (None, None) => DomainSpec::unit_square(),
        };
        if d.robin_edges.iter().any(|e| e == &EdgeRef::Name("all".into())) {
            return Ok(spec.with_all_robin());
        }
        let mut edges = Vec::new();
        for e in &d.robin_edges {
            edges.push(match e {
                EdgeRef::Index(i) => *i,
                EdgeRef::Name(name) => spec.edge_index(name)?,
            });
        }
        spec.with_robin_edges(&edges)
    }

    pub fn field(&self) -> Result<PeriodicCoefficientField> {
        let c = &self.coefficients;
        let n = c.components;
        let missing = |key: &str| Error::Config(format!("coefficients.{key} is required for this kind"));
        let kind = match c.kind {
            FieldName::Constant => FieldKind::Constant,
            FieldName::Laminate => FieldKind::Laminate { values: c.values.ok_or_else(|| missing("values"))? },
            FieldName::Checkerboard => FieldKind::Checkerboard { values: c.values.ok_or_else(|| missing("values"))? },
            FieldName::Trigonometric => FieldKind::Trigonometric {
                c0: c.c0.ok_or_else(|| missing("c0"))?,
                c1: c.c1.ok_or_else(|| missing("c1"))?,
            },
            FieldName::Tabulated => FieldKind::Tabulated {
                resolution: c.resolution.ok_or_else(|| missing("resolution"))?,
                data: c.data.clone().ok_or_else(|| missing("data"))?,
            },
        };
        let base = c.base.clone().unwrap_or_else(|| identity(n));
        PeriodicCoefficientField::new(kind, n, base)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[coefficients]
kind = "checkerboard"
values = [1.0, 4.0]

[study]
epsilons = ["1/8", "1/16", 0.03125]
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let c = parse_config_str(MINIMAL).unwrap();
        assert_eq!(c.study.kappa, 8);
        assert_eq!(c.study.cell_resolution, 128);
        assert_eq!(c.newton.tol, 1e-10);
        assert_eq!(c.epsilons(), vec![0.125, 0.0625, 0.03125]);
        assert_eq!(c.variant(), ExpansionVariant::Direct);
        assert_eq!(c.study.limit, LimitName::Mesh);
        assert_eq!(c.probe_epsilon(), 0.03125);
        assert!(c.output.cache);
    }

    #[test]
    fn repeated_period_is_rejected() {
        let text = MINIMAL.replace(r#"["1/8", "1/16", 0.03125]"#, r#"["1/8", "1/8"]"#);
        match parse_config_str(&text) {
            Err(Error::Validation(p)) => assert!(p.iter().any(|s| s.contains("not strictly decreasing")), "{p:?}"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn all_violations_are_listed() {
        let text = MINIMAL.replace("epsilons = [\"1/8\", \"1/16\", 0.03125]", "epsilons = [0.7, 0.1]\nkappa = 4");
        match parse_config_str(&text) {
            Err(Error::Validation(p)) => {
                assert!(p.iter().any(|s| s.starts_with("study.epsilons[0]")), "{p:?}");
                assert!(p.iter().any(|s| s.starts_with("study.kappa")), "{p:?}");
            }
            other => panic!("expected a validation error, got {other:?}"),
        }
    }

    #[test]
    fn unknown_keys_are_hard_errors() {
        let text = MINIMAL.replace("[study]", "[study]\nkapa = 8");
        assert!(matches!(parse_config_str(&text), Err(Error::Config(_))));
    }

    #[test]
    fn robin_edges_by_name_and_index() {
        let text = format!("{MINIMAL}\n[domain]\nrobin_edges = [\"bottom\", 2]\n");
        let c = parse_config_str(&text).unwrap();
        assert_eq!(c.domain().unwrap().robin_edges(), vec![0, 2]);
    }

    #[test]
    fn whole_boundary_robin_needs_legendre_flag() {
        let text = format!("{MINIMAL}\n[domain]\nrobin_edges = [\"all\"]\n");
        assert!(matches!(parse_config_str(&text), Err(Error::Validation(_))));
        let text = text.replace("values = [1.0, 4.0]", "values = [1.0, 4.0]\nlegendre = true");
        let c = parse_config_str(&text).unwrap();
        assert!(c.domain().unwrap().all_robin());
    }

    #[test]
    fn missing_phase_values_are_reported() {
        let text = MINIMAL.replace("values = [1.0, 4.0]\n", "");
        match parse_config_str(&text) {
            Err(Error::Validation(p)) => assert!(p.iter().any(|s| s.contains("coefficients.values")), "{p:?}"),
            other => panic!("expected a validation error, got {other:?}"),
        }
    }
}
