use crate::geometry::{DomainSpec, Point};

/// Profile `s` of the boundary cut-off: 0 below 0, 1 above 1.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Smoothstep {
    /// `3t^2 - 2t^3`, `C^1`.
    Cubic,
    /// `6t^5 - 15t^4 + 10t^3`, `C^2`.
    Quintic,
}

impl Smoothstep {
    pub fn value(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Self::Cubic => t * t * (3.0 - 2.0 * t),
            Self::Quintic => t * t * t * (t * (6.0 * t - 15.0) + 10.0),
        }
    }

    pub fn derivative(self, t: f64) -> f64 {
        if !(0.0..=1.0).contains(&t) {
            return 0.0;
        }
        match self {
            Self::Cubic => 6.0 * t * (1.0 - t),
            Self::Quintic => 30.0 * t * t * (t - 1.0) * (t - 1.0),
        }
    }

    /// `sup |s'|`.
    pub fn max_slope(self) -> f64 {
        match self {
            Self::Cubic => 1.5,
            Self::Quintic => 1.875,
        }
    }
}

/// `eta(x) = s((d(x) - eps) / eps)` with `d` the distance to the boundary:
/// zero within `eps` of the boundary, one beyond `2 eps`.
pub fn cutoff(spec: &DomainSpec, eps: f64, x: Point) -> f64 {
    cutoff_with(Smoothstep::Quintic, spec, eps, x)
}

pub fn cutoff_with(profile: Smoothstep, spec: &DomainSpec, eps: f64, x: Point) -> f64 {
    profile.value((spec.boundary_distance(x) - eps) / eps)
}

/// Gradient of the cut-off wherever the distance function is smooth.
pub fn cutoff_gradient(profile: Smoothstep, spec: &DomainSpec, eps: f64, x: Point) -> Point {
    let s = profile.derivative((spec.boundary_distance(x) - eps) / eps) / eps;
    let g = spec.boundary_distance_gradient(x);
    [s * g[0], s * g[1]]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn slopes_match_closed_form_maxima() {
        for p in [Smoothstep::Cubic, Smoothstep::Quintic] {
            let sampled = (0..=10_000).map(|k| p.derivative(k as f64 / 10_000.0)).fold(0.0, f64::max);
            assert!((sampled - p.max_slope()).abs() < 1e-6);
            assert_eq!(p.value(0.0), 0.0);
            assert_eq!(p.value(1.0), 1.0);
        }
    }

    proptest! {
        #[test]
        fn cutoff_bounds(x in 0.0f64..1.0, y in 0.0f64..1.0, k in 2u32..7) {
            let eps = 0.5f64.powi(k as i32);
            let sq = DomainSpec::unit_square();
            let d = sq.boundary_distance([x, y]);
            let eta = cutoff(&sq, eps, [x, y]);
            prop_assert!((0.0..=1.0).contains(&eta));
            if d <= eps { prop_assert_eq!(eta, 0.0); }
            if d >= 2.0 * eps { prop_assert_eq!(eta, 1.0); }
            let g = cutoff_gradient(Smoothstep::Quintic, &sq, eps, [x, y]);
            prop_assert!(g[0].hypot(g[1]) <= 1.875 / eps * (1.0 + 1e-12));
        }
    }
}
