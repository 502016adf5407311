//! Monodromy solver checks: convergence order, an independent long-time
//! growth oracle, and the growth inequality on random systems.

#![allow(clippy::needless_range_loop)] // the oracle's RK4 indexes in lockstep

use floqperron::lab::{gen_periodic_matrix, FormWeights};
use floqperron::ode::{compare_growth_rates, integrate_fundamental, DEFAULT_TOL_COMPARE};
use floqperron::periodic::{PeriodicMatrix, PeriodicScalar};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;

/// Independent growth-rate estimate: propagate a positive vector with a
/// locally-implemented RK4 at fine steps for many periods and difference the
/// log norms over the second half (the transient and the unknown projection
/// constant cancel). Smooth or grid-aligned piecewise coefficients only.
fn long_time_growth_oracle(a: &PeriodicMatrix, periods: usize, steps_per_period: usize) -> f64 {
    let dim = a.dim();
    let period = a.period();
    let h = period / steps_per_period as f64;
    let mut x = vec![1.0; dim];
    let mut log_norm = 0.0;
    let mut half_log = 0.0;
    let eval = |t: f64, buf: &mut Vec<Vec<f64>>| {
        for i in 0..dim {
            for j in 0..dim {
                buf[i][j] = a.entry(i, j).value(t);
            }
        }
    };
    let mut mat = vec![vec![0.0; dim]; dim];
    let mul = |m: &Vec<Vec<f64>>, v: &[f64]| -> Vec<f64> {
        (0..dim)
            .map(|i| (0..dim).map(|j| m[i][j] * v[j]).sum())
            .collect()
    };
    for p in 0..periods {
        for s in 0..steps_per_period {
            let t = s as f64 * h;
            eval(t, &mut mat);
            let k1 = mul(&mat, &x);
            let x1: Vec<f64> = x.iter().zip(&k1).map(|(v, k)| v + 0.5 * h * k).collect();
            eval(t + 0.5 * h, &mut mat);
            let k2 = mul(&mat, &x1);
            let x2: Vec<f64> = x.iter().zip(&k2).map(|(v, k)| v + 0.5 * h * k).collect();
            let k3 = mul(&mat, &x2);
            let x3: Vec<f64> = x.iter().zip(&k3).map(|(v, k)| v + h * k).collect();
            eval(t + h, &mut mat);
            let k4 = mul(&mat, &x3);
            for i in 0..dim {
                x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        let norm: f64 = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        log_norm += norm.ln();
        for v in &mut x {
            *v /= norm;
        }
        if p + 1 == periods / 2 {
            half_log = log_norm;
        }
    }
    (log_norm - half_log) / ((periods - periods / 2) as f64 * period)
}

fn smooth_test_system() -> PeriodicMatrix {
    PeriodicMatrix::from_rows(vec![
        vec![
            PeriodicScalar::cosine(1.0, -0.5, 2.0, 0.0).unwrap(),
            PeriodicScalar::cosine(1.0, 1.5, 1.2, 0.3).unwrap(),
        ],
        vec![
            PeriodicScalar::cosine(1.0, 2.0, 1.8, 0.6).unwrap(),
            PeriodicScalar::cosine(1.0, 0.2, 2.5, 0.8).unwrap(),
        ],
    ])
    .unwrap()
}

#[test]
fn rk4_error_shrinks_sixteen_fold_per_halving() {
    let a = smooth_test_system();
    let reference = integrate_fundamental(&a, 16384)
        .unwrap()
        .floquet_eigenvalue;
    let err = |steps: usize| {
        (integrate_fundamental(&a, steps).unwrap().floquet_eigenvalue - reference).abs()
    };
    let e128 = err(128);
    let e256 = err(256);
    let e512 = err(512);
    let r1 = e128 / e256;
    let r2 = e256 / e512;
    assert!(
        (8.0..=32.0).contains(&r1),
        "first halving ratio {r1} (errors {e128:e}, {e256:e})"
    );
    assert!(
        (8.0..=32.0).contains(&r2),
        "second halving ratio {r2} (errors {e256:e}, {e512:e})"
    );
}

#[test]
fn monodromy_matches_long_time_growth_on_smooth_system() {
    let a = smooth_test_system();
    let lambda = integrate_fundamental(&a, 4096).unwrap().floquet_eigenvalue;
    let oracle = long_time_growth_oracle(&a, 200, 4096);
    assert!(
        (lambda - oracle).abs() < 1e-6,
        "monodromy {lambda} vs oracle {oracle}"
    );
}

#[test]
fn exponential_sine_exchange_system() {
    // off-diagonal rates e^{±sin 2πt} as 1024-cell sampled coefficients;
    // the averaged matrix is exactly [[0,1],[1,0]] with Perron root 1
    let m = 1024;
    let sampled = |sign: f64| {
        let samples: Vec<f64> = (0..m)
            .map(|k| (sign * (TAU * (k as f64 + 0.5) / m as f64).sin()).exp())
            .collect();
        PeriodicScalar::sampled(1.0, samples).unwrap()
    };
    let zero = PeriodicScalar::constant(1.0, 0.0).unwrap();
    let a = PeriodicMatrix::from_rows(vec![
        vec![zero.clone(), sampled(1.0)],
        vec![sampled(-1.0), zero],
    ])
    .unwrap();

    let cmp = compare_growth_rates(&a, 4096, DEFAULT_TOL_COMPARE).unwrap();
    assert!(
        (cmp.lambda_s - 1.0).abs() < 1e-9,
        "lambda_s = {}",
        cmp.lambda_s
    );
    assert!(cmp.pass);
    assert!(cmp.lambda_per >= 1.0 - 1e-9, "lambda_per = {}", cmp.lambda_per);

    // independent confirmation of the Floquet value (the sampled
    // coefficients are constant on grid cells, and 4096 oracle steps align
    // with the 1024-cell grid)
    let oracle = long_time_growth_oracle(&a, 200, 4096);
    assert!(
        (cmp.lambda_per - oracle).abs() < 1e-6,
        "monodromy {} vs oracle {oracle}",
        cmp.lambda_per
    );
}

#[test]
fn random_systems_satisfy_the_growth_inequality() {
    let weights = FormWeights::default();
    for seed in 0..250u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(900 + seed);
        let dim = (seed as usize % 8) + 1;
        let a = gen_periodic_matrix(&mut rng, dim, &weights);
        let cmp = compare_growth_rates(&a, 512, DEFAULT_TOL_COMPARE).unwrap();
        assert!(
            cmp.gap >= -1e-6,
            "seed {seed}: gap = {} (λ_per {}, λ_s {})",
            cmp.gap,
            cmp.lambda_per,
            cmp.lambda_s
        );
    }
}

#[test]
fn monodromies_of_random_systems_stay_in_the_orthant() {
    let weights = FormWeights::default();
    for seed in 0..150u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(4000 + seed);
        let dim = (seed as usize % 8) + 1;
        let a = gen_periodic_matrix(&mut rng, dim, &weights);
        // integrate_fundamental errors out if any entry is below −1e−12,
        // and clamps the rounding-level rest
        let result = integrate_fundamental(&a, 2048).unwrap();
        assert!(result.monodromy.iter().all(|x| *x >= 0.0));
    }
}
