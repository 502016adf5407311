//! Sweep harness properties: scheme ordering and error isolation.

use floqperron::lab::{gen_matrix_seq, gen_periodic_matrix, FormWeights};
use floqperron::periodic::AveragingScheme;
use floqperron::spectral::{perron_metzler, perron_nonneg, DEFAULT_MAX_ITER, DEFAULT_TOL};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Entrywise mean ordering plus Perron monotonicity puts the three schemes
/// in a fixed order for the matrix classes (the geometric-everywhere scheme
/// coincides with the arithmetico-geometric one for ODE systems, whose
/// sign-indefinite diagonals always take the arithmetic mean).
#[test]
fn ode_scheme_ordering() {
    let weights = FormWeights::default();
    for seed in 0..120u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3100 + seed);
        let dim = rng.gen_range(1..=6);
        let a = gen_periodic_matrix(&mut rng, dim, &weights);
        let lambda = |scheme| {
            perron_metzler(
                &a.average_with(scheme).unwrap(),
                DEFAULT_TOL,
                DEFAULT_MAX_ITER,
            )
            .unwrap()
            .eigenvalue
        };
        let geom = lambda(AveragingScheme::GeometricEverywhere);
        let arith_geom = lambda(AveragingScheme::ArithGeometric);
        let arith = lambda(AveragingScheme::ArithmeticEverywhere);
        assert!(geom <= arith_geom + 1e-9, "seed {seed}: {geom} > {arith_geom}");
        assert!(arith_geom <= arith + 1e-9, "seed {seed}: {arith_geom} > {arith}");
        assert_eq!(geom, arith_geom, "identical schemes for ODE systems");
    }
}

#[test]
fn discrete_scheme_ordering() {
    for seed in 0..120u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(3200 + seed);
        let dim = rng.gen_range(1..=6);
        let p = rng.gen_range(1..=8);
        let seq = gen_matrix_seq(&mut rng, dim, p);
        let lambda = |scheme| {
            perron_nonneg(&seq.average_with(scheme), DEFAULT_TOL, DEFAULT_MAX_ITER)
                .unwrap()
                .eigenvalue
        };
        let geom = lambda(AveragingScheme::GeometricEverywhere);
        let arith_geom = lambda(AveragingScheme::ArithGeometric);
        let arith = lambda(AveragingScheme::ArithmeticEverywhere);
        assert!(geom <= arith_geom + 1e-9, "seed {seed}: {geom} > {arith_geom}");
        assert!(arith_geom <= arith + 1e-9, "seed {seed}: {arith_geom} > {arith}");
    }
}
