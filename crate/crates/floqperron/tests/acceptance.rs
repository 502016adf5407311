//! Acceptance suite: every release criterion, one test each, with a
//! printed pass/fail line (`cargo test -p floqperron --test acceptance --
//! --nocapture` to see them). Tolerances are pinned in the assertions.

mod common;

use std::time::Instant;

use floqperron::cellcycle::{
    self, artificial_loss, floquet_growth_rate, AgeTimeCoefficient, CellCycleModel,
    CellCyclePhase, PdeGrid,
};
use floqperron::discrete;
use floqperron::lab::{
    self, format_records, gen_cellcycle_model, FormWeights, SweepConfig, TrialOutcome,
};
use floqperron::ode;
use floqperron::periodic::{PeriodicMatrix, PeriodicMatrixSeq, PeriodicScalar};
use floqperron::spectral::{
    collatz_wielandt_lower, collatz_wielandt_upper, perron_metzler, MetzlerMatrix,
    NonnegMatrix, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: &str, ok: bool, detail: &str) {
    let verdict = if ok { "PASS" } else { "FAIL" };
    println!("criterion {criterion}: {verdict} — {detail}");
    assert!(ok, "criterion {criterion}: {detail}");
}

#[test]
fn criterion_1_ode_growth_inequality_sweep() {
    let start = Instant::now();
    let cfg = SweepConfig::ode(7, 1000);
    let result = lab::run_sweep(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let min_gap = result.summary.min_gap.unwrap();
    let ok = result.summary.violations == 0
        && result.summary.errors == 0
        && min_gap >= -1e-6
        && elapsed < 60.0;
    report(
        "1 (periodic ODE sweep)",
        ok,
        &format!(
            "1000 trials, dim 1–8: min gap {min_gap:.3e} (≥ -1e-6), {} violations, \
             {} errors, {elapsed:.1} s (< 60 s)",
            result.summary.violations, result.summary.errors
        ),
    );
}

#[test]
fn criterion_2_discrete_growth_inequality_sweep() {
    let start = Instant::now();
    let cfg = SweepConfig::discrete(11, 1000);
    let result = lab::run_sweep(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let min_gap = result.summary.min_gap.unwrap();

    // closed-form anti-diagonal 2-cycle: λ_per = 2, λ_s = (1·4·1·1)^(1/4)
    let a0 = NonnegMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
    let a1 = NonnegMatrix::from_rows(&[vec![0.0, 4.0], vec![1.0, 0.0]]).unwrap();
    let seq = PeriodicMatrixSeq::new(vec![a0, a1]).unwrap();
    let cmp = discrete::compare_growth_rates(&seq, discrete::DEFAULT_TOL_COMPARE).unwrap();
    let closed_form_ok = (cmp.lambda_per - 2.0).abs() <= 1e-9
        && (cmp.lambda_s - std::f64::consts::SQRT_2).abs() <= 1e-9;

    let ok = result.summary.violations == 0
        && result.summary.errors == 0
        && min_gap >= -1e-9
        && closed_form_ok
        && elapsed < 10.0;
    report(
        "2 (discrete sweep)",
        ok,
        &format!(
            "1000 trials, dim 1–8, p 1–12: min gap {min_gap:.3e} (≥ -1e-9); 2-cycle \
             λ_per = {:.12}, λ_s = {:.12} (1e-9 of closed form); {elapsed:.1} s (< 10 s)",
            cmp.lambda_per, cmp.lambda_s
        ),
    );
}

#[test]
fn criterion_3_cellcycle_growth_inequality_sweep() {
    let start = Instant::now();
    let mut cfg = SweepConfig::cellcycle(13, 200);
    cfg.phases_max = 4;
    cfg.cellcycle.dx = 1.0 / 200.0;
    let result = lab::run_sweep(&cfg).unwrap();
    let elapsed = start.elapsed().as_secs_f64();
    let min_gap = result.summary.min_gap.unwrap();
    let ok = result.summary.violations == 0
        && result.summary.errors == 0
        && min_gap >= -5e-3
        && elapsed < 600.0;
    report(
        "3 (cell-cycle sweep)",
        ok,
        &format!(
            "200 models, I ≤ 4, Δx = 1/200: min gap {min_gap:.3e} (≥ -5e-3), \
             {} violations, {} errors, {elapsed:.0} s (< 600 s)",
            result.summary.violations, result.summary.errors
        ),
    );
}

#[test]
fn criterion_4_closed_form_pde_benchmarks() {
    let constant_model = |phases: usize| {
        let phase = || CellCyclePhase {
            apoptosis: AgeTimeCoefficient::constant(1.0, 0.0).unwrap(),
            transition: AgeTimeCoefficient::constant(1.0, 1.0).unwrap(),
        };
        CellCycleModel::new(1.0, 20.0, (0..phases).map(|_| phase()).collect()).unwrap()
    };
    let grid = PdeGrid {
        dx: 1.0 / 400.0,
        ..PdeGrid::default()
    };

    let one = constant_model(1);
    let per1 = floquet_growth_rate(&one, &grid).unwrap().eigenvalue;
    let avg1 = cellcycle::averaged_perron_rate(&one).unwrap().eigenvalue;

    let two = constant_model(2);
    let per2 = floquet_growth_rate(&two, &grid).unwrap().eigenvalue;
    let target2 = std::f64::consts::SQRT_2 - 1.0;

    let ok = (per1 - 1.0).abs() <= 2e-3
        && (avg1 - 1.0).abs() <= 1e-8
        && (per2 - target2).abs() <= 2e-3;
    report(
        "4 (renewal benchmarks)",
        ok,
        &format!(
            "single phase: λ_per = {per1:.6} (2e-3 of 1), λ_s = {avg1:.10} (1e-8 of 1); \
             two phases: λ_per = {per2:.6} (2e-3 of √2−1 = {target2:.6})"
        ),
    );
}

#[test]
fn criterion_5_equality_cases() {
    // constant-coefficient ODE
    let a = MetzlerMatrix::from_rows(&[
        vec![-0.4, 1.1, 0.2],
        vec![0.6, 0.3, 0.9],
        vec![0.0, 0.5, -1.2],
    ])
    .unwrap();
    let ode_sys = PeriodicMatrix::from_constant(&a, 1.0).unwrap();
    let ode_gap = ode::compare_growth_rates(&ode_sys, ode::DEFAULT_STEPS, 1e-6)
        .unwrap()
        .gap;

    // constant discrete sequence
    let m = NonnegMatrix::from_rows(&[vec![0.5, 1.3], vec![0.7, 0.2]]).unwrap();
    let seq = PeriodicMatrixSeq::new(vec![m; 6]).unwrap();
    let disc_gap = discrete::compare_growth_rates(&seq, 1e-9).unwrap().gap;

    // constant cell-cycle model
    let cc = CellCycleModel::new(
        1.0,
        20.0,
        vec![CellCyclePhase {
            apoptosis: AgeTimeCoefficient::constant(1.0, 0.1).unwrap(),
            transition: AgeTimeCoefficient::constant(1.0, 1.2).unwrap(),
        }],
    )
    .unwrap();
    let cc_cmp =
        cellcycle::compare_growth_rates(&cc, &PdeGrid::default(), cellcycle::DEFAULT_TOL_COMPARE)
            .unwrap();

    // scalar ODE under every coefficient form
    let scalar_forms = [
        PeriodicScalar::constant(1.0, 0.8).unwrap(),
        PeriodicScalar::cosine(1.0, -0.4, 1.1, 0.2).unwrap(),
        PeriodicScalar::square(1.0, -1.0, 2.0, 0.35, 0.6).unwrap(),
        PeriodicScalar::sampled(1.0, vec![0.4, -0.6, 1.9, 0.0]).unwrap(),
    ];
    let mut scalar_max_gap: f64 = 0.0;
    for u in scalar_forms {
        let sys = PeriodicMatrix::from_rows(vec![vec![u]]).unwrap();
        let gap = ode::compare_growth_rates(&sys, ode::DEFAULT_STEPS, 1e-6)
            .unwrap()
            .gap;
        scalar_max_gap = scalar_max_gap.max(gap.abs());
    }

    let ok = ode_gap.abs() <= 1e-7
        && disc_gap.abs() <= 1e-7
        && cc_cmp.gap.abs() <= 5e-3
        && scalar_max_gap <= 1e-7;
    report(
        "5 (equality cases)",
        ok,
        &format!(
            "constant gaps: ODE {ode_gap:.2e}, discrete {disc_gap:.2e} (≤ 1e-7), \
             cell-cycle {:.2e} (≤ 5e-3); scalar ODE max |gap| {scalar_max_gap:.2e} (≤ 1e-7)",
            cc_cmp.gap
        ),
    );
}

#[test]
fn criterion_6_artificial_loss_is_nonnegative_everywhere() {
    let weights = FormWeights::default();
    let mut worst = f64::INFINITY;
    let mut points = 0usize;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(60_000 + seed);
        let phases = rng.gen_range(1..=4);
        let m = gen_cellcycle_model(&mut rng, phases, &weights, 1.0 / 200.0, false).unwrap();
        for phase in m.phases() {
            // per-segment supremum (exact for the piecewise-constant age
            // structure) plus a dense grid probe
            let sup = artificial_loss(&phase.transition, m.x_max()).unwrap();
            worst = worst.min(sup.min(0.0));
            for j in 0..=512 {
                let x = m.x_max() * j as f64 / 512.0;
                let (am, gm) = phase.transition.means_at_age(x).unwrap();
                worst = worst.min(am - gm);
                points += 1;
            }
        }
    }
    let ok = worst >= -1e-12;
    report(
        "6 (arithmetico-geometric loss)",
        ok,
        &format!("⟨K⟩_a − ⟨K⟩_g ≥ {worst:.2e} over {points} grid points (≥ -1e-12)"),
    );
}

#[test]
fn criterion_7_numerical_hygiene() {
    // RK4 order on a smooth monodromy benchmark
    let smooth = PeriodicMatrix::from_rows(vec![
        vec![
            PeriodicScalar::cosine(1.0, -0.5, 2.0, 0.0).unwrap(),
            PeriodicScalar::cosine(1.0, 1.5, 1.2, 0.3).unwrap(),
        ],
        vec![
            PeriodicScalar::cosine(1.0, 2.0, 1.8, 0.6).unwrap(),
            PeriodicScalar::cosine(1.0, 0.2, 2.5, 0.8).unwrap(),
        ],
    ])
    .unwrap();
    let reference = ode::integrate_fundamental(&smooth, 16384)
        .unwrap()
        .floquet_eigenvalue;
    let err = |steps: usize| {
        (ode::integrate_fundamental(&smooth, steps)
            .unwrap()
            .floquet_eigenvalue
            - reference)
            .abs()
    };
    let rk4_ratio = err(256) / err(512);
    let rk4_ok = (8.0..=32.0).contains(&rk4_ratio);

    // PDE refinement on the smooth single-phase benchmark
    let bench = CellCycleModel::new(
        1.0,
        20.0,
        vec![CellCyclePhase {
            apoptosis: AgeTimeCoefficient::constant(1.0, 0.0).unwrap(),
            transition: AgeTimeCoefficient::uniform(
                PeriodicScalar::cosine(1.0, 1.0, 0.25, 0.0).unwrap(),
            )
            .unwrap(),
        }],
    )
    .unwrap();
    let rate = |dx: f64| {
        floquet_growth_rate(
            &bench,
            &PdeGrid {
                dx,
                ..PdeGrid::default()
            },
        )
        .unwrap()
        .eigenvalue
    };
    let (l1, l2, l3) = (rate(1.0 / 50.0), rate(1.0 / 100.0), rate(1.0 / 200.0));
    let pde_ratio = (l1 - l2).abs() / (l2 - l3).abs();
    let pde_ok = pde_ratio >= 1.8;

    // Collatz–Wielandt sandwich and charpoly oracle on random matrices
    let mut rng = ChaCha8Rng::seed_from_u64(70_000);
    let mut sandwich_ok = true;
    let mut oracle_ok = true;
    for trial in 0..300 {
        let dim = trial % 4 + 1;
        let entries: Vec<f64> = (0..dim * dim)
            .enumerate()
            .map(|(idx, _)| {
                let (i, j) = (idx / dim, idx % dim);
                if i == j {
                    rng.gen_range(-3.0..3.0)
                } else if rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen_range(0.0..3.0)
                }
            })
            .collect();
        let a = MetzlerMatrix::new(dim, entries.clone()).unwrap();
        let r = perron_metzler(&a, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let y: Vec<f64> = r
            .eigenvector
            .iter()
            .map(|v| if *v <= 0.0 { DEFAULT_TOL } else { *v })
            .collect();
        let slack = 10.0 * DEFAULT_TOL * r.eigenvalue.abs().max(1.0);
        if collatz_wielandt_lower(&a, &y).unwrap() > r.eigenvalue + slack
            || r.eigenvalue > collatz_wielandt_upper(&a, &y).unwrap() + slack
        {
            sandwich_ok = false;
        }
        let poly = common::char_poly(dim, &entries);
        let (lo, hi) = common::scan_bracket(dim, &entries);
        let root = common::rightmost_real_root(&poly, lo, hi);
        if (r.eigenvalue - root).abs() > 1e-8 {
            oracle_ok = false;
        }
    }

    let ok = rk4_ok && pde_ok && sandwich_ok && oracle_ok;
    report(
        "7 (numerical hygiene)",
        ok,
        &format!(
            "RK4 halving ratio {rk4_ratio:.1} (in [8, 32]); PDE refinement ratio \
             {pde_ratio:.2} (≥ 1.8); Collatz–Wielandt sandwich within 10·tol on 300 \
             matrices: {sandwich_ok}; charpoly oracle within 1e-8: {oracle_ok}"
        ),
    );
}

#[test]
fn criterion_8_sweeps_are_deterministic() {
    let mut byte_identical = true;
    for cfg in [SweepConfig::ode(97, 120), SweepConfig::discrete(98, 120)] {
        let serial = {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(1)
                .build()
                .unwrap();
            pool.install(|| lab::run_sweep(&cfg)).unwrap()
        };
        let parallel = {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(4)
                .build()
                .unwrap();
            pool.install(|| lab::run_sweep(&cfg)).unwrap()
        };
        let again = lab::run_sweep(&cfg).unwrap();
        if format_records(&serial.records) != format_records(&parallel.records)
            || format_records(&serial.records) != format_records(&again.records)
        {
            byte_identical = false;
        }
        // spot-check the records round-trip through the text format
        let parsed = lab::parse_records(&format_records(&serial.records)).unwrap();
        for (orig, back) in serial.records.iter().zip(&parsed) {
            if let (
                TrialOutcome::Compared { gap: g1, .. },
                TrialOutcome::Compared { gap: g2, .. },
            ) = (&orig.outcome, &back.outcome)
            {
                assert_eq!(g1, g2, "text format must round-trip exactly");
            }
        }
    }
    report(
        "8 (determinism)",
        byte_identical,
        "identical seeds give byte-identical record sections across runs and thread counts",
    );
}
