use std::fmt::Write as _;
use std::sync::Arc;

use faer::{Mat, Side};

use crate::fem::{tensor_index, TensorField};
use crate::geometry::Point;
use crate::{Error, Result};

/// How the coefficient varies over the unit cell.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldKind {
    /// The base tensor everywhere.
    Constant,
    /// `values[0]` times the base tensor for `y1 < 1/2`, `values[1]` after.
    Laminate { values: [f64; 2] },
    /// `values[0]` times the base tensor where `floor(2 y1) + floor(2 y2)` is
    /// even, `values[1]` elsewhere.
    Checkerboard { values: [f64; 2] },
    /// `c0 + c1 sin(2 pi y1) sin(2 pi y2)` times the base tensor.
    Trigonometric { c0: f64, c1: f64 },
    /// Piecewise-constant full tensors on a `resolution x resolution` grid,
    /// `4 n^2` entries per cell, cells ordered row by row.
    Tabulated { resolution: usize, data: Vec<f64> },
}

/// A 1-periodic coefficient tensor `a_ij^{alpha beta}(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct PeriodicCoefficientField {
    n: usize,
    base: Vec<f64>,
    kind: FieldKind,
}

impl PeriodicCoefficientField {
    /// `base` holds `4 n^2` entries laid out by [`tensor_index`].
    pub fn new(kind: FieldKind, n: usize, base: Vec<f64>) -> Result<Self> {
        if n == 0 {
            return Err(Error::Config("coefficient needs at least one component".into()));
        }
        if base.len() != 4 * n * n || base.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config(format!("base tensor needs {} finite entries", 4 * n * n)));
        }
        match &kind {
            FieldKind::Laminate { values } | FieldKind::Checkerboard { values } => {
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Config("non-finite phase value".into()));
                }
            }
            FieldKind::Trigonometric { c0, c1 } => {
                if !c0.is_finite() || !c1.is_finite() {
                    return Err(Error::Config("non-finite trigonometric coefficient".into()));
                }
            }
            FieldKind::Tabulated { resolution, data } => {
                if *resolution == 0 || data.len() != resolution * resolution * 4 * n * n {
                    return Err(Error::Config(format!(
                        "tabulated coefficient needs {} entries",
                        resolution * resolution * 4 * n * n
                    )));
                }
            }
            FieldKind::Constant => {}
        }
        Ok(Self { n, base, kind })
    }

    /// Scalar field: `n = 1` and identity base, so `a_ij = m(y) delta_ij`.
    pub fn scalar(kind: FieldKind) -> Result<Self> {
        Self::new(kind, 1, identity(1))
    }

    pub fn kind(&self) -> &FieldKind {
        &self.kind
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    /// Scalar multiplier at a folded cell point, `None` for tabulated fields.
    fn multiplier(&self, y: Point) -> Option<f64> {
        Some(match &self.kind {
            FieldKind::Constant => 1.0,
            FieldKind::Laminate { values } => values[(y[0] >= 0.5) as usize],
            FieldKind::Checkerboard { values } => {
                let parity = ((2.0 * y[0]).floor() as i64 + (2.0 * y[1]).floor() as i64) % 2;
                values[parity as usize]
            }
            FieldKind::Trigonometric { c0, c1 } => {
                let tau = 2.0 * std::f64::consts::PI;
                c0 + c1 * (tau * y[0]).sin() * (tau * y[1]).sin()
            }
            FieldKind::Tabulated { .. } => return None,
        })
    }

    /// Smallest eigenvalue of the symmetrized `2n x 2n` matrix
    /// `a_ij^{alpha beta}` sampled on a `64 x 64` grid of cell centres.
    pub fn legendre_constant(&self) -> f64 {
        let samples = 64;
        let mut out = vec![0.0; 4 * self.n * self.n];
        let mut lo = f64::INFINITY;
        for j in 0..samples {
            for i in 0..samples {
                let y = [(i as f64 + 0.5) / samples as f64, (j as f64 + 0.5) / samples as f64];
                self.eval(y, &mut out);
                lo = lo.min(legendre_min(self.n, &out));
            }
        }
        lo
    }

    /// Canonical text describing the field, used as a cache key.
    pub fn descriptor(&self) -> String {
        let mut s = format!("n={};base=", self.n);
        for v in &self.base {
            let _ = write!(s, "{:016x},", v.to_bits());
        }
        let bits = |v: &f64| format!("{:016x}", v.to_bits());
        match &self.kind {
            FieldKind::Constant => s.push_str(";constant"),
            FieldKind::Laminate { values } => {
                let _ = write!(s, ";laminate:{}:{}", bits(&values[0]), bits(&values[1]));
            }
            FieldKind::Checkerboard { values } => {
                let _ = write!(s, ";checkerboard:{}:{}", bits(&values[0]), bits(&values[1]));
            }
            FieldKind::Trigonometric { c0, c1 } => {
                let _ = write!(s, ";trigonometric:{}:{}", bits(c0), bits(c1));
            }
            FieldKind::Tabulated { resolution, data } => {
                let _ = write!(s, ";tabulated:{resolution}:");
                for v in data {
                    let _ = write!(s, "{},", bits(v));
                }
            }
        }
        s
    }
}

impl TensorField for PeriodicCoefficientField {
    fn components(&self) -> usize {
        self.n
    }

    fn eval(&self, x: Point, out: &mut [f64]) {
        let y = [x[0] - x[0].floor(), x[1] - x[1].floor()];
        match self.multiplier(y) {
            Some(m) => {
                for (o, b) in out.iter_mut().zip(&self.base) {
                    *o = m * b;
                }
            }
            None => {
                let FieldKind::Tabulated { resolution: r, data } = &self.kind else {
                    unreachable!()
                };
                let i = ((y[0] * *r as f64) as usize).min(r - 1);
                let j = ((y[1] * *r as f64) as usize).min(r - 1);
                let len = 4 * self.n * self.n;
                let start = (j * r + i) * len;
                out.copy_from_slice(&data[start..start + len]);
            }
        }
    }

    fn is_symmetric(&self) -> bool {
        let n = self.n;
        let sym = |t: &[f64]| {
            (0..n).all(|a| {
                (0..n).all(|b| {
                    (0..2).all(|i| {
                        (0..2).all(|j| t[tensor_index(n, a, b, i, j)] == t[tensor_index(n, b, a, j, i)])
                    })
                })
            })
        };
        match &self.kind {
            FieldKind::Tabulated { data, .. } => data.chunks(4 * n * n).all(sym),
            _ => sym(&self.base),
        }
    }
}

/// `a(x / eps)` for a periodic field `a`.
#[derive(Clone, Debug)]
pub struct Oscillating {
    pub field: Arc<PeriodicCoefficientField>,
    pub eps: f64,
}

impl TensorField for Oscillating {
    fn components(&self) -> usize {
        self.field.components()
    }

    fn eval(&self, x: Point, out: &mut [f64]) {
        self.field.eval([x[0] / self.eps, x[1] / self.eps], out)
    }

    fn is_symmetric(&self) -> bool {
        self.field.is_symmetric()
    }
}

/// Flattened identity tensor `delta_ij delta_{alpha beta}`.
pub fn identity(n: usize) -> Vec<f64> {
    let mut t = vec![0.0; 4 * n * n];
    for a in 0..n {
        for i in 0..2 {
            t[tensor_index(n, a, a, i, i)] = 1.0;
        }
    }
    t
}

/// Smallest eigenvalue of the symmetric part of the `2n x 2n` matrix with
/// entries `t[(alpha, i), (beta, j)] = a_ij^{alpha beta}`.
pub fn legendre_min(n: usize, t: &[f64]) -> f64 {
    let dim = 2 * n;
    let entry = |r: usize, c: usize| t[tensor_index(n, r / 2, c / 2, r % 2, c % 2)];
    if n == 1 {
        let (a, d) = (entry(0, 0), entry(1, 1));
        let b = 0.5 * (entry(0, 1) + entry(1, 0));
        return 0.5 * (a + d) - (0.25 * (a - d) * (a - d) + b * b).sqrt();
    }
    let m = Mat::from_fn(dim, dim, |r, c| 0.5 * (entry(r, c) + entry(c, r)));
    m.self_adjoint_eigenvalues(Side::Lower)
        .map(|ev| ev[0])
        .unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_phases_and_periodicity() {
        let f = PeriodicCoefficientField::scalar(FieldKind::Checkerboard { values: [1.0, 4.0] }).unwrap();
        let mut a = [0.0; 4];
        f.eval([0.25, 0.25], &mut a);
        assert_eq!(a, [1.0, 0.0, 0.0, 1.0]);
        f.eval([0.75, 0.25], &mut a);
        assert_eq!(a[0], 4.0);
        f.eval([1.75, -0.75], &mut a);
        assert_eq!(a[0], 4.0);
        assert_eq!(f.legendre_constant(), 1.0);
    }

    #[test]
    fn laminate_and_scaling() {
        let f = Arc::new(PeriodicCoefficientField::scalar(FieldKind::Laminate { values: [1.0, 4.0] }).unwrap());
        let osc = Oscillating { field: f, eps: 0.1 };
        let mut a = [0.0; 4];
        osc.eval([0.07, 0.3], &mut a);
        assert_eq!(a[3], 4.0);
        osc.eval([0.13, 0.3], &mut a);
        assert_eq!(a[3], 1.0);
    }

    #[test]
    fn legendre_of_a_coupled_system() {
        let n = 2;
        let mut base = identity(n);
        base[tensor_index(n, 0, 1, 0, 0)] = 0.5;
        base[tensor_index(n, 1, 0, 0, 0)] = 0.5;
        let f = PeriodicCoefficientField::new(FieldKind::Constant, n, base).unwrap();
        assert!((f.legendre_constant() - 0.5).abs() < 1e-12);
        assert!(f.is_symmetric());
    }

    #[test]
    fn descriptor_distinguishes_fields() {
        let a = PeriodicCoefficientField::scalar(FieldKind::Laminate { values: [1.0, 4.0] }).unwrap();
        let b = PeriodicCoefficientField::scalar(FieldKind::Laminate { values: [1.0, 4.000001] }).unwrap();
        assert_ne!(a.descriptor(), b.descriptor());
        assert_eq!(a.descriptor(), a.clone().descriptor());
    }

    #[test]
    fn tabulated_requires_matching_length() {
        let bad = PeriodicCoefficientField::new(FieldKind::Tabulated { resolution: 2, data: vec![1.0; 15] }, 1, identity(1));
        assert!(bad.is_err());
    }
}
