use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::geometry::Point;

/// Lower-order terms of the system and their derivatives in `u` at a point.
#[derive(Clone, Debug)]
pub struct ModelValues {
    /// `b_i^alpha` at `alpha * 2 + i`.
    pub drift: Vec<f64>,
    /// `b^alpha`.
    pub reaction: Vec<f64>,
    /// `d b_i^alpha / d u^gamma` at `(alpha * 2 + i) * n + gamma`.
    pub d_drift: Vec<f64>,
    /// `d b^alpha / d u^gamma` at `alpha * n + gamma`.
    pub d_reaction: Vec<f64>,
}

impl ModelValues {
    pub fn new(n: usize) -> Self {
        Self {
            drift: vec![0.0; 2 * n],
            reaction: vec![0.0; n],
            d_drift: vec![0.0; 2 * n * n],
            d_reaction: vec![0.0; n * n],
        }
    }

    fn clear(&mut self) {
        self.drift.fill(0.0);
        self.reaction.fill(0.0);
        self.d_drift.fill(0.0);
        self.d_reaction.fill(0.0);
    }
}

/// The nonlinear part of a semilinear system: drift `b_i(x, u)`, reaction
/// `b(x, u)` and boundary flux `b_0(x, u)` on the Robin boundary.
pub trait NonlinearityModel: Send + Sync {
    fn components(&self) -> usize;

    fn interior(&self, x: Point, u: &[f64], out: &mut ModelValues);

    /// Writes `b_0^alpha` and `d b_0^alpha / d u^gamma` (at `alpha * n + gamma`).
    fn boundary(&self, x: Point, u: &[f64], flux: &mut [f64], d_flux: &mut [f64]);

    /// Whether any drift term is present; drift makes the Jacobian nonsymmetric.
    fn has_drift(&self) -> bool;
}

/// A scalar function of one unknown component.
#[derive(Clone, Debug, PartialEq)]
pub enum UFunction {
    /// `c0 + c1 u + c2 u^2 + ...`
    Poly(Vec<f64>),
    /// `sin(k u)`
    Sin(f64),
    /// `cos(k u)`
    Cos(f64),
    /// `exp(k u)`
    Exp(f64),
}

impl UFunction {
    pub fn value(&self, u: f64) -> f64 {
        match self {
            Self::Poly(c) => c.iter().rev().fold(0.0, |acc, &ci| acc * u + ci),
            Self::Sin(k) => (k * u).sin(),
            Self::Cos(k) => (k * u).cos(),
            Self::Exp(k) => (k * u).exp(),
        }
    }

    pub fn derivative(&self, u: f64) -> f64 {
        match self {
            Self::Poly(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (p, &ci)| acc * u + p as f64 * ci),
            Self::Sin(k) => k * (k * u).cos(),
            Self::Cos(k) => -k * (k * u).sin(),
            Self::Exp(k) => k * (k * u).exp(),
        }
    }
}

/// A scalar weight `c(x)`.
#[derive(Clone)]
pub enum ScalarField {
    Constant(f64),
    /// `amplitude sin(kx pi x) sin(ky pi y)`
    SinSin { amplitude: f64, kx: f64, ky: f64 },
    /// The source `f = -div(A grad s) + g(s)` for `s = sin(pi x) sin(pi y)`,
    /// with `A = [a11, a12, a21, a22]` constant.
    Manufactured { matrix: [f64; 4], reaction: UFunction },
    Custom(Arc<dyn Fn(Point) -> f64 + Send + Sync>),
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Constant(c) => write!(f, "Constant({c})"),
            Self::SinSin { amplitude, kx, ky } => write!(f, "SinSin({amplitude}, {kx}, {ky})"),
            Self::Manufactured { matrix, reaction } => write!(f, "Manufactured({matrix:?}, {reaction:?})"),
            Self::Custom(_) => write!(f, "Custom"),
        }
    }
}

impl ScalarField {
    pub fn eval(&self, x: Point) -> f64 {
        match self {
            Self::Constant(c) => *c,
            Self::SinSin { amplitude, kx, ky } => amplitude * (kx * PI * x[0]).sin() * (ky * PI * x[1]).sin(),
            Self::Manufactured { matrix, reaction } => {
                let s = manufactured_solution(x);
                let c = (PI * x[0]).cos() * (PI * x[1]).cos();
                PI * PI * (matrix[0] + matrix[3]) * s - PI * PI * (matrix[1] + matrix[2]) * c + reaction.value(s)
            }
            Self::Custom(f) => f(x),
        }
    }
}

/// `sin(pi x) sin(pi y)`.
pub fn manufactured_solution(x: Point) -> f64 {
    (PI * x[0]).sin() * (PI * x[1]).sin()
}

/// `weight(x) * function(u^argument)`, contributing to component `component`.
#[derive(Clone, Debug)]
pub struct Term {
    pub component: usize,
    pub argument: usize,
    pub weight: ScalarField,
    pub function: UFunction,
}

impl Term {
    pub fn new(component: usize, argument: usize, weight: ScalarField, function: UFunction) -> Self {
        Self { component, argument, weight, function }
    }

    /// A term of the first component in the first unknown.
    pub fn scalar(weight: ScalarField, function: UFunction) -> Self {
        Self::new(0, 0, weight, function)
    }
}

/// Sums of separable terms `c(x) g(u^gamma)` for the drift, reaction and
/// boundary flux.
#[derive(Clone, Debug)]
pub struct SeparableModel {
    n: usize,
    reaction: Vec<Term>,
    drift: Vec<(usize, Term)>,
    boundary: Vec<Term>,
}

impl SeparableModel {
    pub fn new(n: usize) -> Self {
        Self { n, reaction: Vec::new(), drift: Vec::new(), boundary: Vec::new() }
    }

    pub fn with_reaction(mut self, term: Term) -> Self {
        assert!(term.component < self.n && term.argument < self.n, "term indices out of range");
        self.reaction.push(term);
        self
    }

    /// Adds a term to the drift in direction `dir`.
    pub fn with_drift(mut self, dir: usize, term: Term) -> Self {
        assert!(dir < 2 && term.component < self.n && term.argument < self.n, "term indices out of range");
        self.drift.push((dir, term));
        self
    }

    pub fn with_boundary(mut self, term: Term) -> Self {
        assert!(term.component < self.n && term.argument < self.n, "term indices out of range");
        self.boundary.push(term);
        self
    }

    /// Scalar model `b(x, u) = g(u) - f(x)` whose homogenized problem with
    /// tensor `matrix` is solved by `sin(pi x) sin(pi y)` on the unit square.
    pub fn manufactured(matrix: [f64; 4], g: UFunction) -> Self {
        Self::new(1)
            .with_reaction(Term::scalar(ScalarField::Constant(1.0), g.clone()))
            .with_reaction(Term::scalar(
                ScalarField::Manufactured { matrix, reaction: g },
                UFunction::Poly(vec![-1.0]),
            ))
    }
}

impl NonlinearityModel for SeparableModel {
    fn components(&self) -> usize {
        self.n
    }

    fn interior(&self, x: Point, u: &[f64], out: &mut ModelValues) {
        let n = self.n;
        out.clear();
        for t in &self.reaction {
            let w = t.weight.eval(x);
            let v = u[t.argument];
            out.reaction[t.component] += w * t.function.value(v);
            out.d_reaction[t.component * n + t.argument] += w * t.function.derivative(v);
        }
        for (dir, t) in &self.drift {
            let w = t.weight.eval(x);
            let v = u[t.argument];
            out.drift[t.component * 2 + dir] += w * t.function.value(v);
            out.d_drift[(t.component * 2 + dir) * n + t.argument] += w * t.function.derivative(v);
        }
    }

    fn boundary(&self, x: Point, u: &[f64], flux: &mut [f64], d_flux: &mut [f64]) {
        flux.fill(0.0);
        d_flux.fill(0.0);
        for t in &self.boundary {
            let w = t.weight.eval(x);
            let v = u[t.argument];
            flux[t.component] += w * t.function.value(v);
            d_flux[t.component * self.n + t.argument] += w * t.function.derivative(v);
        }
    }

    fn has_drift(&self) -> bool {
        !self.drift.is_empty()
    }
}
