use crate::fem::{tensor_index, TensorField};
use crate::geometry::Point;
use crate::{Error, Result};

use super::coefficients::legendre_min;

/// The constant homogenized tensor `a_hat_ij^{alpha beta}`.
#[derive(Clone, Debug, PartialEq)]
pub struct HomogenizedTensor {
    n: usize,
    data: Vec<f64>,
}

impl HomogenizedTensor {
    pub fn new(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != 4 * n * n {
            return Err(Error::Numeric(format!("tensor needs {} entries", 4 * n * n)));
        }
        Ok(Self { n, data })
    }

    pub fn get(&self, alpha: usize, beta: usize, i: usize, j: usize) -> f64 {
        self.data[tensor_index(self.n, alpha, beta, i, j)]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Scalar case: the 2x2 matrix `[a11, a12, a21, a22]`.
    pub fn scalar_matrix(&self) -> Option<[f64; 4]> {
        (self.n == 1).then(|| [self.data[0], self.data[1], self.data[2], self.data[3]])
    }
}

impl TensorField for HomogenizedTensor {
    fn components(&self) -> usize {
        self.n
    }

    fn eval(&self, _x: Point, out: &mut [f64]) {
        out.copy_from_slice(&self.data);
    }

    fn is_symmetric(&self) -> bool {
        let n = self.n;
        let scale = self.data.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1.0);
        (0..n).all(|a| {
            (0..n).all(|b| {
                (0..2).all(|i| (0..2).all(|j| (self.get(a, b, i, j) - self.get(b, a, j, i)).abs() <= 1e-12 * scale))
            })
        })
    }
}

/// Coercivity certificate of a constant tensor: the smallest eigenvalue of
/// its symmetrized `2n x 2n` matrix. Errors when it is not positive.
pub fn verify_coercivity(tensor: &HomogenizedTensor) -> Result<f64> {
    let lambda = legendre_min(tensor.n, &tensor.data);
    if lambda > 0.0 {
        Ok(lambda)
    } else {
        Err(Error::Coercivity(format!(
            "homogenized tensor has smallest symmetrized eigenvalue {lambda:e}"
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certificate_of_diagonal_tensor() {
        let t = HomogenizedTensor::new(1, vec![1.6, 0.0, 0.0, 2.5]).unwrap();
        assert!((verify_coercivity(&t).unwrap() - 1.6).abs() < 1e-15);
        let bad = HomogenizedTensor::new(1, vec![1.0, 0.0, 0.0, -0.1]).unwrap();
        assert!(matches!(verify_coercivity(&bad), Err(Error::Coercivity(_))));
    }
}
