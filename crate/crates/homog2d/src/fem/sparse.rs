use std::io::Write;
use std::sync::{Arc, OnceLock};

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, Lu, SymbolicLlt, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMatRef};
use faer::{Conj, MatMut, Side};

use crate::{Error, Result};

/// Structurally symmetric compressed-row sparsity pattern.
///
/// Patterns built from a mesh also remember where every local element matrix
/// entry lands, so repeated assembly writes straight into the value array.
#[derive(Debug)]
pub struct Pattern {
    dim: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    element_slots: Vec<usize>,
    local_size: usize,
    llt: OnceLock<Option<SymbolicLlt<usize>>>,
    lu: OnceLock<Option<SymbolicLu<usize>>>,
}

impl Pattern {
    /// Pattern coupling every pair of degrees of freedom that share an
    /// element. `element_dofs` lists each element's local dofs in order.
    pub fn from_elements(dim: usize, element_dofs: &[Vec<usize>]) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for dofs in element_dofs {
            for &r in dofs {
                rows[r].extend_from_slice(dofs);
            }
        }
        let mut pattern = Self::from_rows(dim, rows);
        let local_size = element_dofs.first().map_or(0, Vec::len);
        let mut slots = Vec::with_capacity(element_dofs.len() * local_size * local_size);
        for dofs in element_dofs {
            debug_assert_eq!(dofs.len(), local_size);
            for &r in dofs {
                for &c in dofs {
                    slots.push(pattern.slot(r, c).expect("element entry in pattern"));
                }
            }
        }
        pattern.element_slots = slots;
        pattern.local_size = local_size;
        pattern
    }

    /// Pattern holding the given positions and their transposes.
    pub fn from_positions(dim: usize, positions: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for (r, c) in positions {
            rows[r].push(c);
            rows[c].push(r);
        }
        for (r, row) in rows.iter_mut().enumerate() {
            row.push(r);
        }
        Self::from_rows(dim, rows)
    }

    fn from_rows(dim: usize, mut rows: Vec<Vec<usize>>) -> Self {
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            col_idx.extend_from_slice(row);
            row_ptr.push(col_idx.len());
        }
        Self {
            dim,
            row_ptr,
            col_idx,
            element_slots: Vec::new(),
            local_size: 0,
            llt: OnceLock::new(),
            lu: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    /// Position of entry `(r, c)` in the value array.
    pub fn slot(&self, r: usize, c: usize) -> Option<usize> {
        let lo = self.row_ptr[r];
        let hi = self.row_ptr[r + 1];
        self.col_idx[lo..hi].binary_search(&c).ok().map(|k| lo + k)
    }

    /// Value-array positions of the local matrix of `element`, row-major.
    pub fn element_slots(&self, element: usize) -> &[usize] {
        let n = self.local_size * self.local_size;
        &self.element_slots[element * n..(element + 1) * n]
    }

    pub fn row(&self, r: usize) -> (&[usize], std::ops::Range<usize>) {
        let range = self.row_ptr[r]..self.row_ptr[r + 1];
        (&self.col_idx[range.clone()], range)
    }

    fn symbolic(&self) -> SymbolicSparseColMatRef<'_, usize> {
        SymbolicSparseColMatRef::new_checked(self.dim, self.dim, &self.row_ptr, None, &self.col_idx)
    }
}

/// A square sparse matrix sharing a [`Pattern`].
#[derive(Clone, Debug)]
pub struct SparseOperator {
    pattern: Arc<Pattern>,
    values: Vec<f64>,
    symmetric: bool,
}

impl SparseOperator {
    pub fn zeros(pattern: Arc<Pattern>, symmetric: bool) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values, symmetric }
    }

    /// Builds a matrix from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(dim: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let pattern = Arc::new(Pattern::from_positions(dim, triplets.iter().map(|&(r, c, _)| (r, c))));
        let mut op = Self::zeros(pattern, false);
        for &(r, c, v) in triplets {
            let s = op.pattern.slot(r, c).expect("triplet in pattern");
            op.values[s] += v;
        }
        op.symmetric = op.is_symmetric(0.0);
        op
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_triplets(dim, &(0..dim).map(|i| (i, i, 1.0)).collect::<Vec<_>>())
    }

    pub fn dim(&self) -> usize {
        self.pattern.dim
    }

    pub fn pattern(&self) -> &Arc<Pattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    /// Whether the matrix is treated as symmetric when factorizing.
    pub fn symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn set_symmetric(&mut self, symmetric: bool) {
        self.symmetric = symmetric;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.pattern.slot(r, c).map_or(0.0, |s| self.values[s])
    }

    pub fn add_to(&mut self, r: usize, c: usize, v: f64) {
        let s = self.pattern.slot(r, c).expect("entry outside sparsity pattern");
        self.values[s] += v;
    }

    /// Adds a dense local matrix (row-major) of `element` using the pattern's
    /// element map.
    pub fn add_element(&mut self, element: usize, local: &[f64]) {
        for (&s, &v) in self.pattern.element_slots(element).iter().zip(local) {
            self.values[s] += v;
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        (0..p.dim)
            .map(|r| {
                let (cols, range) = p.row(r);
                cols.iter().zip(&self.values[range]).map(|(&c, v)| v * x[c]).sum()
            })
            .collect()
    }

    pub fn matvec_transpose(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        let mut y = vec![0.0; p.dim];
        for (r, &xr) in x.iter().enumerate() {
            let (cols, range) = p.row(r);
            for (&c, v) in cols.iter().zip(&self.values[range]) {
                y[c] += v * xr;
            }
        }
        y
    }

    /// `self + s * other`; both operands must share the same pattern.
    pub fn add_scaled(&self, other: &SparseOperator, s: f64) -> SparseOperator {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern), "operators must share a pattern");
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + s * b).collect();
        SparseOperator {
            pattern: self.pattern.clone(),
            values,
            symmetric: self.symmetric && other.symmetric,
        }
    }

    /// Largest asymmetry `|a_rc - a_cr|` is at most `tol`.
    pub fn is_symmetric(&self, tol: f64) -> bool {
        let p = &self.pattern;
        for r in 0..p.dim {
            let (cols, range) = p.row(r);
            for (&c, &v) in cols.iter().zip(&self.values[range]) {
                if c > r && (v - self.get(c, r)).abs() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Replaces the rows and columns of constrained dofs by identity rows.
    pub fn constrain(&mut self, constrained: &[bool]) {
        let p = self.pattern.clone();
        for r in 0..p.dim {
            let (cols, range) = p.row(r);
            for (k, &c) in range.zip(cols) {
                if constrained[r] || constrained[c] {
                    self.values[k] = if r == c { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// Coordinate listing `row col value`, zero-based, one entry per line.
    pub fn write_coordinate<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        let p = &self.pattern;
        for r in 0..p.dim {
            let (cols, range) = p.row(r);
            for (&c, &v) in cols.iter().zip(&self.values[range]) {
                writeln!(w, "{r} {c} {v:e}")?;
            }
        }
        Ok(())
    }

    /// The stored arrays read as compressed columns: the transpose.
    fn as_transpose(&self) -> SparseColMatRef<'_, usize, f64> {
        SparseColMatRef::new(self.pattern.symbolic(), &self.values)
    }
}

/// A sparse factorization: Cholesky for symmetric positive definite matrices,
/// LU otherwise.
pub enum Factored {
    Cholesky(Llt<usize, f64>),
    /// LU factors of the transpose of the matrix.
    TransposeLu(Lu<usize, f64>),
}

impl Factored {
    /// Tries Cholesky when the operator is flagged symmetric and falls back
    /// to LU if that fails.
    pub fn new(op: &SparseOperator) -> Result<Self> {
        if op.symmetric {
            if let Ok(f) = Self::cholesky(op) {
                return Ok(f);
            }
        }
        Self::lu(op)
    }

    pub fn cholesky(op: &SparseOperator) -> Result<Self> {
        let symbolic = op
            .pattern
            .llt
            .get_or_init(|| SymbolicLlt::try_new(op.pattern.symbolic(), Side::Lower).ok())
            .clone()
            .ok_or_else(|| Error::Numeric("symbolic Cholesky analysis failed".into()))?;
        Llt::try_new_with_symbolic(symbolic, op.as_transpose(), Side::Lower)
            .map(Self::Cholesky)
            .map_err(|e| Error::Numeric(format!("Cholesky breakdown: {e:?}")))
    }

    pub fn lu(op: &SparseOperator) -> Result<Self> {
        let symbolic = op
            .pattern
            .lu
            .get_or_init(|| SymbolicLu::try_new(op.pattern.symbolic()).ok())
            .clone()
            .ok_or_else(|| Error::Numeric("symbolic LU analysis failed".into()))?;
        Lu::try_new_with_symbolic(symbolic, op.as_transpose())
            .map(Self::TransposeLu)
            .map_err(|e| Error::Numeric(format!("LU breakdown: {e:?}")))
    }

    pub fn is_cholesky(&self) -> bool {
        matches!(self, Self::Cholesky(_))
    }

    /// Solves `A x = b`.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        let view = MatMut::from_column_major_slice_mut(&mut x, rhs.len(), 1);
        match self {
            Self::Cholesky(f) => f.solve_in_place_with_conj(Conj::No, view),
            Self::TransposeLu(f) => f.solve_transpose_in_place_with_conj(Conj::No, view),
        }
        check_finite(&x)?;
        Ok(x)
    }

    /// Solves `A^T x = b`.
    pub fn solve_transpose(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let mut x = rhs.to_vec();
        let view = MatMut::from_column_major_slice_mut(&mut x, rhs.len(), 1);
        match self {
            Self::Cholesky(f) => f.solve_in_place_with_conj(Conj::No, view),
            Self::TransposeLu(f) => f.solve_in_place_with_conj(Conj::No, view),
        }
        check_finite(&x)?;
        Ok(x)
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    match x.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::Numeric(format!("singular factor: non-finite solution entry {i}"))),
        None => Ok(()),
    }
}

/// Direct solve with one step of iterative refinement.
pub fn solve_sparse(a: &SparseOperator, rhs: &[f64]) -> Result<Vec<f64>> {
    let f = Factored::new(a)?;
    let mut x = f.solve(rhs)?;
    let r: Vec<f64> = a.matvec(&x).iter().zip(rhs).map(|(ax, b)| b - ax).collect();
    let dx = f.solve(&r)?;
    for (xi, d) in x.iter_mut().zip(&dx) {
        *xi += d;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian_1d(n: usize) -> Vec<(usize, usize, f64)> {
        let mut t = Vec::new();
        for i in 0..n {
            t.push((i, i, 2.0));
            if i + 1 < n {
                t.push((i, i + 1, -1.0));
                t.push((i + 1, i, -1.0));
            }
        }
        t
    }

    #[test]
    fn duplicates_are_summed() {
        let a = SparseOperator::from_triplets(2, &[(0, 0, 1.0), (0, 0, 2.0), (1, 1, 4.0)]);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(0, 1), 0.0);
    }

    #[test]
    fn cholesky_and_lu_agree() {
        let a = SparseOperator::from_triplets(50, &laplacian_1d(50));
        assert!(a.symmetric());
        let b: Vec<f64> = (0..50).map(|i| (i as f64).sin()).collect();
        let x1 = Factored::cholesky(&a).unwrap().solve(&b).unwrap();
        let x2 = Factored::lu(&a).unwrap().solve(&b).unwrap();
        for (p, q) in x1.iter().zip(&x2) {
            assert!((p - q).abs() < 1e-12);
        }
    }

    #[test]
    fn nonsymmetric_solve_and_transpose() {
        let mut t = laplacian_1d(30);
        t.push((0, 5, 0.7));
        t.push((12, 3, -0.4));
        let a = SparseOperator::from_triplets(30, &t);
        assert!(!a.symmetric());
        let b: Vec<f64> = (0..30).map(|i| 1.0 + i as f64).collect();
        let f = Factored::new(&a).unwrap();
        let x = f.solve(&b).unwrap();
        let y = f.solve_transpose(&b).unwrap();
        let ax = a.matvec(&x);
        let aty = a.matvec_transpose(&y);
        for i in 0..30 {
            assert!((ax[i] - b[i]).abs() < 1e-10);
            assert!((aty[i] - b[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_reported() {
        let a = SparseOperator::from_triplets(3, &[(0, 0, 1.0), (1, 1, 1.0), (2, 2, 0.0)]);
        let res = solve_sparse(&a, &[1.0, 1.0, 1.0]);
        assert!(matches!(res, Err(Error::Numeric(_))));
    }

    #[test]
    fn constrain_pins_identity_rows() {
        let mut a = SparseOperator::from_triplets(4, &laplacian_1d(4));
        a.constrain(&[true, false, false, true]);
        assert_eq!(a.get(0, 0), 1.0);
        assert_eq!(a.get(1, 0), 0.0);
        assert_eq!(a.get(1, 1), 2.0);
        assert!(a.is_symmetric(0.0));
    }

    #[test]
    fn coordinate_export_is_zero_based() {
        let a = SparseOperator::from_triplets(2, &[(0, 1, 2.5)]);
        let mut buf = Vec::new();
        a.write_coordinate(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.lines().any(|l| l == "0 1 2.5e0"));
    }
}
