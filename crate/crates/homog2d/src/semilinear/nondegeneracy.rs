use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::fem::{Factored, SolutionField};
use crate::{Error, Result};

use super::problem::Discretization;

/// Smallest singular value of `F'(u0)` as a map from `H^1` to its dual,
/// estimated by inverse iteration on `J^T K^{-1} J x = lambda K x` with `K`
/// the `H^1` Gram matrix.
///
/// Errors with [`Error::Degenerate`] when the Jacobian is singular or the
/// estimate is not positive.
pub fn check_nondegeneracy(disc: &Discretization, u0: &SolutionField) -> Result<f64> {
    let space = disc.space();
    let j = disc.jacobian(u0.values())?;
    let jf = Factored::new(&j).map_err(|e| Error::Degenerate(format!("linearization is singular: {e}")))?;
    let k = space.h1_gram_matrix()?;
    let kf = space.h1_gram()?;

    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..space.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
    space.zero_constrained(&mut x);
    let k_norm = |x: &[f64]| dot(x, &k.matvec(x)).sqrt();
    let nx = k_norm(&x);
    x.iter_mut().for_each(|v| *v /= nx);

    let mut lambda = f64::INFINITY;
    for _ in 0..300 {
        let z = jf
            .solve_transpose(&k.matvec(&x))
            .map_err(|e| Error::Degenerate(format!("linearization is singular: {e}")))?;
        let mut y = jf
            .solve(&k.matvec(&z))
            .map_err(|e| Error::Degenerate(format!("linearization is singular: {e}")))?;
        space.zero_constrained(&mut y);
        let ny = k_norm(&y);
        if !(ny > 0.0 && ny.is_finite()) {
            return Err(Error::Degenerate("inverse iteration broke down".into()));
        }
        y.iter_mut().for_each(|v| *v /= ny);
        let mut jy = j.matvec(&y);
        space.zero_constrained(&mut jy);
        let next = dot(&jy, &kf.solve(&jy)?);
        let done = (lambda - next).abs() <= 1e-12 * next.abs();
        lambda = next;
        x = y;
        if done {
            break;
        }
    }
    let sigma = lambda.max(0.0).sqrt();
    if !(sigma > 1e-10) {
        return Err(Error::Degenerate(format!("smallest singular value {sigma:e}")));
    }
    Ok(sigma)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
