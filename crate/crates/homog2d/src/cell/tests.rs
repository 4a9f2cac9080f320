use super::*;
use crate::fem::TensorField;
use proptest::prelude::*;

fn scalar(kind: FieldKind) -> PeriodicCoefficientField {
    PeriodicCoefficientField::scalar(kind).unwrap()
}

/// Laminate corrector from the one-dimensional formula `v' = H / a - 1`,
/// `H` the harmonic mean, integrated on an independent fine grid.
fn laminate_oracle(values: [f64; 2], y: f64) -> (f64, f64) {
    let samples = 1 << 16;
    let dy = 1.0 / samples as f64;
    let a = |k: usize| if (k as f64 + 0.5) * dy < 0.5 { values[0] } else { values[1] };
    let h = 1.0 / ((0..samples).map(|k| 1.0 / a(k)).sum::<f64>() * dy);
    let mut prim = vec![0.0; samples + 1];
    for k in 0..samples {
        prim[k + 1] = prim[k] + (h / a(k) - 1.0) * dy;
    }
    let mean = (0..samples).map(|k| 0.5 * (prim[k] + prim[k + 1])).sum::<f64>() * dy;
    (h, prim[(y / dy).round() as usize] - mean)
}

#[test]
fn constant_field_has_vanishing_correctors() {
    let f = PeriodicCoefficientField::new(FieldKind::Constant, 1, vec![2.0, 0.3, 0.3, 1.0]).unwrap();
    let v = solve_cell_problems(&f, 16).unwrap();
    for j in 0..2 {
        assert!(v.field(0, j).iter().all(|x| x.abs() < 1e-12));
    }
    let hom = homogenized_tensor(&f, &v).unwrap();
    for (a, b) in hom.data().iter().zip(f.base()) {
        assert!((a - b).abs() < 1e-12);
    }
}

#[test]
fn laminate_matches_one_dimensional_formula() {
    let values = [1.0, 4.0];
    let f = scalar(FieldKind::Laminate { values });
    let m = 64;
    let v = solve_cell_problems(&f, m).unwrap();
    assert!(v.residual() <= 1e-10);
    let hom = homogenized_tensor(&f, &v).unwrap();
    let (h, _) = laminate_oracle(values, 0.0);
    assert!((hom.get(0, 0, 0, 0) - h).abs() < 1e-10, "{}", hom.get(0, 0, 0, 0));
    assert!((hom.get(0, 0, 1, 1) - 2.5).abs() < 1e-10);
    assert!(hom.get(0, 0, 0, 1).abs() < 1e-10 && hom.get(0, 0, 1, 0).abs() < 1e-10);
    let mut out = [0.0; 2];
    for k in [0, 5, 16, 32, 40, 63] {
        let y = k as f64 / m as f64;
        v.values_at([y, 0.3], &mut out);
        let (_, expect) = laminate_oracle(values, y);
        assert!((out[0] - expect).abs() < 1e-10, "y={y}: {} vs {expect}", out[0]);
        assert!(out[1].abs() < 1e-10);
    }
}

#[test]
fn checkerboard_is_isotropic_and_converges_to_geometric_mean() {
    let f = scalar(FieldKind::Checkerboard { values: [1.0, 4.0] });
    let mut last = f64::INFINITY;
    for m in [16, 32, 64] {
        let v = solve_cell_problems(&f, m).unwrap();
        let hom = homogenized_tensor(&f, &v).unwrap();
        assert!((hom.get(0, 0, 0, 0) - hom.get(0, 0, 1, 1)).abs() < 1e-10);
        assert!(hom.get(0, 0, 0, 1).abs() < 1e-10);
        let err = hom.get(0, 0, 0, 0) - 2.0;
        assert!(err > 0.0 && err < last);
        last = err;
    }
    assert!(last < 0.05);
}

#[test]
fn correctors_have_zero_mean() {
    let f = scalar(FieldKind::Trigonometric { c0: 2.0, c1: 1.0 });
    let v = solve_cell_problems(&f, 32).unwrap();
    for j in 0..2 {
        assert!(v.mean(0, 0, j).abs() < 1e-14);
    }
}

#[test]
fn indefinite_field_is_rejected() {
    let f = scalar(FieldKind::Laminate { values: [1.0, -0.5] });
    assert!(matches!(solve_cell_problems(&f, 8), Err(crate::Error::Coercivity(_))));
}

#[test]
fn rejects_resolution_below_two() {
    let f = scalar(FieldKind::Constant);
    assert!(matches!(solve_cell_problems(&f, 1), Err(crate::Error::InvalidResolution { .. })));
}

#[test]
fn coupled_system_cell_problems() {
    let n = 2;
    let mut base = identity(n);
    base[crate::fem::tensor_index(n, 0, 1, 0, 1)] = 0.3;
    base[crate::fem::tensor_index(n, 1, 0, 1, 0)] = 0.3;
    let f = PeriodicCoefficientField::new(FieldKind::Checkerboard { values: [1.0, 3.0] }, n, base).unwrap();
    let v = solve_cell_problems(&f, 16).unwrap();
    assert!(v.residual() <= 1e-10);
    let hom = homogenized_tensor(&f, &v).unwrap();
    assert!(hom.is_symmetric());
    assert!(verify_coercivity(&hom).unwrap() > 0.0);
}

#[test]
fn flux_correctors_satisfy_weak_identity() {
    let f = scalar(FieldKind::Checkerboard { values: [1.0, 4.0] });
    let v = solve_cell_problems(&f, 32).unwrap();
    let hom = homogenized_tensor(&f, &v).unwrap();
    let phi = flux_correctors(&f, &v, &hom).unwrap();
    assert!(phi.mean_b() <= 1e-10);
    assert!(phi.weak_identity_residual() <= 1e-8);
    assert_eq!(phi.skew_defect(), 0.0);
    assert!(phi.phi(0, 0, 0, 0, 0).iter().all(|&x| x == 0.0));
}

#[test]
fn stream_function_agrees_with_potentials() {
    let f = scalar(FieldKind::Trigonometric { c0: 2.0, c1: 1.0 });
    let gap = |m: usize| {
        let v = solve_cell_problems(&f, m).unwrap();
        let hom = homogenized_tensor(&f, &v).unwrap();
        flux_correctors(&f, &v, &hom).unwrap().potential_gap()
    };
    let (g16, g32) = (gap(16), gap(32));
    assert!(g32 < 0.6 * g16, "{g16} {g32}");
    assert!(g32 < 0.05);
}

#[test]
fn cache_round_trip_is_bit_exact() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("cell.bin");
    let f = scalar(FieldKind::Checkerboard { values: [1.0, 4.0] });
    let v = solve_cell_problems(&f, 16).unwrap();
    let hom = homogenized_tensor(&f, &v).unwrap();
    save_cache(&path, &f, &v, &hom).unwrap();
    let (v2, hom2) = load_cache(&path, &f, 16).unwrap().unwrap();
    for (a, b) in hom.data().iter().zip(hom2.data()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
    assert_eq!(v.field(0, 1), v2.field(0, 1));
    let other = scalar(FieldKind::Checkerboard { values: [1.0, 4.5] });
    assert!(load_cache(&path, &other, 16).unwrap().is_none());
    assert!(load_cache(&path, &f, 32).unwrap().is_none());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn homogenized_tensor_lies_between_harmonic_and_arithmetic_means(
        a in 0.5f64..5.0, b in 0.5f64..5.0, lam in any::<bool>(),
    ) {
        let kind = if lam { FieldKind::Laminate { values: [a, b] } } else { FieldKind::Checkerboard { values: [a, b] } };
        let f = scalar(kind);
        let v = solve_cell_problems(&f, 16).unwrap();
        let hom = homogenized_tensor(&f, &v).unwrap();
        prop_assert!(hom.is_symmetric());
        let harm = 2.0 / (1.0 / a + 1.0 / b);
        let arith = 0.5 * (a + b);
        let lo = verify_coercivity(&hom).unwrap();
        let t = hom.scalar_matrix().unwrap();
        let hi = 0.5 * (t[0] + t[3]) + (0.25 * (t[0] - t[3]).powi(2) + t[1] * t[1]).sqrt();
        prop_assert!(lo >= harm - 1e-9 && hi <= arith + 1e-9, "{lo} {hi} {harm} {arith}");
        prop_assert_eq!(f.components(), 1);
    }
}
