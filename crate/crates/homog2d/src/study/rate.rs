use crate::{Error, Result};

/// Least-squares line through `(ln eps, ln error)`.
#[derive(Clone, Debug, PartialEq)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Euclidean norm of the residuals in log space.
    pub residual: f64,
    /// Number of pairs used.
    pub used: usize,
    /// Pairs dropped because the error was not positive and finite.
    pub excluded: Vec<f64>,
}

/// Fits `error ~ exp(intercept) eps^slope`. Pairs with a non-positive or
/// non-finite error are excluded and listed in the result.
pub fn fit_rate(pairs: &[(f64, f64)]) -> Result<RateFit> {
    let mut excluded = Vec::new();
    let mut pts = Vec::new();
    for &(eps, err) in pairs {
        if err > 0.0 && err.is_finite() && eps > 0.0 {
            pts.push((eps.ln(), err.ln()));
        } else {
            excluded.push(eps);
        }
    }
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!("{} usable points, need 3", pts.len())));
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all periods coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum::<f64>().sqrt();
    Ok(RateFit { slope, intercept, residual, used: pts.len(), excluded })
}
