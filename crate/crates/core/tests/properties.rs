//! Invariants of the public API, checked across crate modules.

use gaussbound_core::constants::{bound_value, certificate, corollary_certificate, Variant};
use gaussbound_core::geometry::{brute_force_distance, fill_distance, uniform_random};
use gaussbound_core::interp::{fit, GaussianKernel, SplineModel};
use gaussbound_core::polybound::{max_abs_on_samples, max_abs_on_samples_brute_force, random_polynomial};
use gaussbound_core::rng::{stream, uniform};
use gaussbound_core::{Cube, Error, LogScalar, PointSet};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn bound_grows_with_spacing(n in 1u32..=2, beta in 0.25f64..4.0, b0 in 0.5f64..2.0, t in 0.01f64..0.99) {
        let cert = certificate(n, beta, b0, Variant::General).unwrap();
        let small = bound_value(&cert, cert.delta0 * t * t, 1.0).unwrap();
        let large = bound_value(&cert, cert.delta0 * t, 1.0).unwrap();
        prop_assert!(small.ln_abs() < large.ln_abs());
        let above = matches!(bound_value(&cert, cert.delta0 * 1.5, 1.0), Err(Error::OutOfCertificate { .. }));
        prop_assert!(above);
    }

    #[test]
    fn corollary_halves_threshold(n in 1u32..=4, beta in 0.25f64..4.0, b0 in 0.5f64..2.0) {
        let cert = certificate(n, beta, b0, Variant::General).unwrap();
        let cor = corollary_certificate(&cert).unwrap();
        prop_assert_eq!(cor.c_exp * 2.0, cert.c_exp);
        prop_assert_eq!(cor.delta0 * 2.0, cert.delta0);
        prop_assert!((cor.ln_delta0 - cert.ln_delta0 + std::f64::consts::LN_2).abs() <= 4.0 * f64::EPSILON * cert.ln_delta0.abs());
    }

    #[test]
    fn fill_distance_brackets_sampled_distances(seed in 0u64..1000, n in 1usize..=2, count in 1usize..20) {
        let cube = Cube::unit(n).unwrap();
        let points = uniform_random(&cube, count, seed).unwrap();
        let fd = fill_distance(&cube, &points, 64).unwrap();
        prop_assert!(fd.lower <= fd.upper);
        let mut rng = stream(seed ^ 0x5eed);
        for _ in 0..64 {
            let y: Vec<f64> = (0..n).map(|_| uniform(&mut rng, 0.0, 1.0)).collect();
            prop_assert!(brute_force_distance(&points, &y) <= fd.upper);
        }
    }

    #[test]
    fn branch_and_bound_matches_enumeration(seed in 0u64..500, n in 1usize..=2, k in 0u32..=2) {
        let cube = Cube::unit(n).unwrap();
        let p = random_polynomial(n, k, seed).unwrap();
        let q = 3 + seed % 5;
        prop_assert_eq!(
            max_abs_on_samples(&p, &cube, q, seed).unwrap(),
            max_abs_on_samples_brute_force(&p, &cube, q, seed).unwrap()
        );
    }

    #[test]
    fn log_scalar_products_add_logarithms(a in -50.0f64..50.0, b in -50.0f64..50.0) {
        let x = LogScalar::from_ln(a) * LogScalar::from_ln(b);
        prop_assert!((x.ln_abs() - (a + b)).abs() <= 1e-12 * (1.0 + (a + b).abs()));
    }
}

#[test]
fn zero_data_interpolates_on_singular_matrix() {
    // Spacing 1e-4 at beta = 1 makes the 50 x 50 kernel matrix numerically singular.
    let points = PointSet::from_flat(1, (0..50).map(|i| i as f64 * 1e-4).collect()).unwrap();
    let kernel = GaussianKernel::new(1.0, 1).unwrap();
    assert!(matches!(fit(kernel, &points, &[1.0; 50]), Err(Error::IllConditioned { .. })));
    let model = fit(kernel, &points, &[0.0; 50]).unwrap();
    assert!(model.coefficients().iter().all(|&c| c == 0.0));
    assert_eq!(model.native_norm(), 0.0);
    assert_eq!(model.evaluate(&[0.3]).unwrap(), 0.0);
}

#[test]
fn model_json_round_trip_is_exact() {
    let points = PointSet::from_flat(2, vec![0.0, 0.0, 0.5, 0.1, 0.2, 0.9, 1.0, 1.0]).unwrap();
    let model = fit(GaussianKernel::new(3.0, 2).unwrap(), &points, &[1.0, -0.5, 0.25, 2.0]).unwrap();
    let back = SplineModel::from_json(&model.to_json().unwrap()).unwrap();
    assert_eq!(back.coefficients(), model.coefficients());
    assert_eq!(back.centers(), model.centers());
    assert_eq!(back.native_norm(), model.native_norm());
    assert_eq!(back.evaluate(&[0.3, 0.4]).unwrap(), model.evaluate(&[0.3, 0.4]).unwrap());
}
