//! Deterministic random instance generators for the sweep harness.
//!
//! Every generator is a pure function of the supplied RNG state, so a seed
//! plus a per-trial stream index reproduces any instance exactly. Parameter
//! ranges are chosen so that generated systems stay inside the solvers'
//! comfort zone: monodromy norms stay far from the orthant-rounding
//! threshold, and cell-cycle rates keep the transition survival product
//! above 1/2 for the requested phase counts (resampling the rare misses).

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::cellcycle::{
    check_assumptions, AgeProfile, AgeTimeCoefficient, CellCycleModel, CellCyclePhase,
};
use crate::error::{Error, Result};
use crate::periodic::{PeriodicMatrix, PeriodicMatrixSeq, PeriodicScalar};
use crate::spectral::NonnegMatrix;

/// Relative weights of the four coefficient families used when drawing
/// periodic coefficients.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FormWeights {
    pub constant: f64,
    pub cosine: f64,
    pub square: f64,
    pub sampled: f64,
}

impl Default for FormWeights {
    fn default() -> Self {
        FormWeights {
            constant: 1.0,
            cosine: 1.0,
            square: 1.0,
            sampled: 1.0,
        }
    }
}

impl FormWeights {
    pub fn validate(&self) -> Result<()> {
        let all = [self.constant, self.cosine, self.square, self.sampled];
        if all.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::InvalidInput(
                "form weights must be nonnegative reals".into(),
            ));
        }
        if all.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidInput(
                "at least one form weight must be positive".into(),
            ));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> Form {
        let total = self.constant + self.cosine + self.square + self.sampled;
        let mut x = rng.gen_range(0.0..total);
        if x < self.constant {
            return Form::Constant;
        }
        x -= self.constant;
        if x < self.cosine {
            return Form::Cosine;
        }
        x -= self.cosine;
        if x < self.square {
            return Form::Square;
        }
        Form::Sampled
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Form {
    Constant,
    Cosine,
    Square,
    Sampled,
}

fn sample_count(rng: &mut ChaCha8Rng) -> usize {
    *[2usize, 4, 8].get(rng.gen_range(0..3)).unwrap()
}

/// Sign-indefinite periodic coefficient in `[-scale, scale]`.
fn gen_signed_scalar(
    rng: &mut ChaCha8Rng,
    period: f64,
    scale: f64,
    weights: &FormWeights,
) -> PeriodicScalar {
    match weights.draw(rng) {
        Form::Constant => {
            PeriodicScalar::constant(period, rng.gen_range(-scale..scale)).unwrap()
        }
        Form::Cosine => {
            let mean = rng.gen_range(-scale..scale);
            let amplitude = rng.gen_range(0.0..0.75 * scale);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::cosine(period, mean, amplitude, phase).unwrap()
        }
        Form::Square => {
            let lo = rng.gen_range(-scale..scale);
            let hi = rng.gen_range(-scale..scale);
            let duty = rng.gen_range(0.1..0.9);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::square(period, lo, hi, duty, phase).unwrap()
        }
        Form::Sampled => {
            let m = sample_count(rng);
            let samples = (0..m).map(|_| rng.gen_range(-scale..scale)).collect();
            PeriodicScalar::sampled(period, samples).unwrap()
        }
    }
}

/// Nonnegative periodic coefficient bounded by `scale`.
fn gen_nonneg_scalar(
    rng: &mut ChaCha8Rng,
    period: f64,
    scale: f64,
    weights: &FormWeights,
) -> PeriodicScalar {
    match weights.draw(rng) {
        Form::Constant => PeriodicScalar::constant(period, rng.gen_range(0.0..scale)).unwrap(),
        Form::Cosine => {
            let mean = rng.gen_range(0.05 * scale..0.5 * scale);
            let amplitude = mean * rng.gen_range(0.0..0.95);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::cosine(period, mean, amplitude, phase).unwrap()
        }
        Form::Square => {
            let lo = rng.gen_range(0.0..scale);
            let hi = rng.gen_range(0.0..scale);
            let duty = rng.gen_range(0.1..0.9);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::square(period, lo, hi, duty, phase).unwrap()
        }
        Form::Sampled => {
            let m = sample_count(rng);
            let samples = (0..m).map(|_| rng.gen_range(0.0..scale)).collect();
            PeriodicScalar::sampled(period, samples).unwrap()
        }
    }
}

/// Probability that an off-diagonal ODE entry is identically zero.
const ODE_ZERO_PROB: f64 = 0.15;
/// Probability that a discrete matrix entry is exactly zero.
const DISCRETE_ZERO_PROB: f64 = 0.2;

/// Random monotone periodic coefficient matrix: sign-indefinite diagonal,
/// nonnegative off-diagonal entries (identically zero with probability
/// 0.15), all sharing one random period in `[0.5, 1.5]`.
pub fn gen_periodic_matrix(
    rng: &mut ChaCha8Rng,
    dim: usize,
    weights: &FormWeights,
) -> PeriodicMatrix {
    let period = rng.gen_range(0.5..1.5);
    // keep row sums modest so monodromy entries stay well inside the
    // orthant-rounding budget
    let off_scale = 3.0 / dim as f64;
    let mut entries = Vec::with_capacity(dim * dim);
    for i in 0..dim {
        for j in 0..dim {
            let scalar = if i == j {
                gen_signed_scalar(rng, period, 2.0, weights)
            } else if rng.gen_bool(ODE_ZERO_PROB) {
                PeriodicScalar::constant(period, 0.0).unwrap()
            } else {
                gen_nonneg_scalar(rng, period, off_scale, weights)
            };
            entries.push(scalar);
        }
    }
    PeriodicMatrix::new(dim, entries).expect("generated entries satisfy the invariants")
}

/// Random p-periodic sequence of nonnegative matrices with exact zeros.
pub fn gen_matrix_seq(rng: &mut ChaCha8Rng, dim: usize, p: usize) -> PeriodicMatrixSeq {
    let matrices = (0..p)
        .map(|_| {
            let entries = (0..dim * dim)
                .map(|_| {
                    if rng.gen_bool(DISCRETE_ZERO_PROB) {
                        0.0
                    } else {
                        rng.gen_range(0.0..2.0)
                    }
                })
                .collect();
            NonnegMatrix::new(dim, entries).unwrap()
        })
        .collect();
    PeriodicMatrixSeq::new(matrices).expect("p ≥ 1 and shared dimension")
}

/// Resampling cap for the assumption-constrained cell-cycle generator.
const CELLCYCLE_RESAMPLE_CAP: usize = 100;

/// Maximal relative time-variation of the transition rates per phase count;
/// tighter cycles need larger survival products, hence calmer rates.
fn transition_variation(phases: usize) -> f64 {
    match phases {
        1 => 0.25,
        2 => 0.14,
        3 => 0.09,
        _ => 0.06,
    }
}

/// Nonnegative periodic scalar with values in
/// `[base·(1−v), base·(1+v)]`.
fn gen_level_scalar(
    rng: &mut ChaCha8Rng,
    period: f64,
    base: f64,
    v_max: f64,
    weights: &FormWeights,
) -> PeriodicScalar {
    match weights.draw(rng) {
        Form::Constant => PeriodicScalar::constant(period, base).unwrap(),
        Form::Cosine => {
            let amplitude = base * rng.gen_range(0.0..v_max);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::cosine(period, base, amplitude, phase).unwrap()
        }
        Form::Square => {
            let v = rng.gen_range(0.0..v_max);
            let duty = rng.gen_range(0.3..0.7);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::square(period, base * (1.0 - v), base * (1.0 + v), duty, phase)
                .unwrap()
        }
        Form::Sampled => {
            let m = sample_count(rng);
            let samples = (0..m)
                .map(|_| base * (1.0 + rng.gen_range(-v_max..v_max)))
                .collect();
            PeriodicScalar::sampled(period, samples).unwrap()
        }
    }
}

/// Random cell-cycle model with `phases` phases on a grid of spacing `dx`,
/// resampled until the standing assumptions hold (cap 100 attempts).
///
/// The period is a whole multiple of `dx` and the age truncation follows
/// `20 / min positive transition level`, clamped to `[10, 30]`. With
/// `periodic_d_only` the transition rates are constant in time and only the
/// apoptosis rates oscillate.
pub fn gen_cellcycle_model(
    rng: &mut ChaCha8Rng,
    phases: usize,
    weights: &FormWeights,
    dx: f64,
    periodic_d_only: bool,
) -> Result<CellCycleModel> {
    for _ in 0..CELLCYCLE_RESAMPLE_CAP {
        let steps_per_period = rng.gen_range(100..=300);
        let period = steps_per_period as f64 * dx;
        let v_max = transition_variation(phases);

        let mut phase_coeffs = Vec::with_capacity(phases);
        let mut min_positive_level = f64::INFINITY;
        for _ in 0..phases {
            let base = rng.gen_range(0.8..2.0);
            let level = if periodic_d_only {
                PeriodicScalar::constant(period, base).unwrap()
            } else {
                gen_level_scalar(rng, period, base, v_max, weights)
            };
            min_positive_level = min_positive_level.min(level.min_value());
            let transition = if rng.gen_bool(0.3) {
                AgeTimeCoefficient::new(AgeProfile::Gate {
                    x_on: rng.gen_range(0.0..1.5),
                    level,
                })?
            } else {
                AgeTimeCoefficient::new(AgeProfile::Uniform(level))?
            };

            let d_scale = if periodic_d_only {
                base * rng.gen_range(0.05..0.15)
            } else {
                base * 0.04 * rng.gen_range(0.0..1.0)
            };
            let apoptosis = if !periodic_d_only && rng.gen_bool(0.3) {
                AgeTimeCoefficient::constant(period, 0.0)?
            } else {
                AgeTimeCoefficient::uniform(gen_bounded_nonneg(rng, period, d_scale, weights))?
            };
            phase_coeffs.push(CellCyclePhase {
                apoptosis,
                transition,
            });
        }

        let target = (20.0 / min_positive_level).clamp(10.0, 30.0);
        let cells = (target / dx).ceil() as usize;
        let x_max = cells as f64 * dx;
        let model = CellCycleModel::new(period, x_max, phase_coeffs)?;
        if check_assumptions(&model).pass {
            return Ok(model);
        }
    }
    Err(Error::DegenerateModel(format!(
        "no model satisfying the survival assumptions in {CELLCYCLE_RESAMPLE_CAP} draws"
    )))
}

/// Nonnegative scalar with maximum ≤ `scale` (used for apoptosis rates).
fn gen_bounded_nonneg(
    rng: &mut ChaCha8Rng,
    period: f64,
    scale: f64,
    weights: &FormWeights,
) -> PeriodicScalar {
    if scale <= 0.0 {
        return PeriodicScalar::constant(period, 0.0).unwrap();
    }
    match weights.draw(rng) {
        Form::Constant => PeriodicScalar::constant(period, rng.gen_range(0.0..scale)).unwrap(),
        Form::Cosine => {
            let mean = scale * rng.gen_range(0.3..0.7);
            let amplitude = mean * rng.gen_range(0.0..0.95);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::cosine(period, mean, amplitude, phase).unwrap()
        }
        Form::Square => {
            let lo = scale * rng.gen_range(0.0..0.5);
            let hi = scale * rng.gen_range(0.5..1.0);
            let duty = rng.gen_range(0.2..0.8);
            let phase = rng.gen_range(0.0..period);
            PeriodicScalar::square(period, lo, hi, duty, phase).unwrap()
        }
        Form::Sampled => {
            let m = sample_count(rng);
            let samples = (0..m).map(|_| rng.gen_range(0.0..scale)).collect();
            PeriodicScalar::sampled(period, samples).unwrap()
        }
    }
}
