//! Reproducible random sweeps over the three growth-rate comparisons.
//!
//! A sweep draws random systems of one class (ODE, discrete, cell-cycle),
//! computes `λ_per` and `λ_s` for each, and aggregates the gaps. Under the
//! arithmetico-geometric scheme the expected violation count is zero; the
//! alternative schemes are exploratory searches for instances breaking the
//! hierarchy, and a nonzero count there is a finding, not a failure. A
//! finite sweep without violations proves nothing and the summary is
//! worded accordingly.
//!
//! Trials are split off a counter-based RNG (one ChaCha stream per trial
//! index), so results are independent of execution order and identical
//! configurations yield bit-identical record sections. Trials may run in
//! parallel; records are keyed by trial index.

mod generate;
mod records;

pub use generate::{gen_cellcycle_model, gen_matrix_seq, gen_periodic_matrix, FormWeights};
pub use records::{format_records, parse_records, RECORD_HEADER};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cellcycle::{self, CellCycleModel, PdeGrid};
use crate::discrete;
use crate::error::{Error, Result};
use crate::ode;
use crate::periodic::{
    AveragingScheme, PeriodicMatrix, PeriodicMatrixSeq, PeriodicScalar, ScalarForm,
};
use crate::spectral::{perron_metzler, perron_nonneg, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::GrowthComparison;

use records::Fnv1a;

/// Which comparison a sweep exercises.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemClass {
    Ode,
    Discrete,
    Cellcycle,
}

/// Inclusive integer range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RangeInclusive {
    pub min: usize,
    pub max: usize,
}

impl RangeInclusive {
    fn validate(&self, what: &str) -> Result<()> {
        if self.min == 0 || self.min > self.max {
            return Err(Error::InvalidInput(format!(
                "{what} range [{}, {}] is empty or starts at zero",
                self.min, self.max
            )));
        }
        Ok(())
    }

    fn draw(&self, rng: &mut ChaCha8Rng) -> usize {
        rng.gen_range(self.min..=self.max)
    }
}

/// Comparison tolerances per system class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub ode: f64,
    pub discrete: f64,
    pub cellcycle: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            ode: ode::DEFAULT_TOL_COMPARE,
            discrete: discrete::DEFAULT_TOL_COMPARE,
            cellcycle: cellcycle::DEFAULT_TOL_COMPARE,
        }
    }
}

/// Cell-cycle sweep parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CellcycleSweepParams {
    pub dx: f64,
    pub warmup_periods: usize,
    pub measure_periods: usize,
    /// Restrict to time-constant transitions with periodic apoptosis only.
    pub periodic_d_only: bool,
}

impl Default for CellcycleSweepParams {
    fn default() -> Self {
        CellcycleSweepParams {
            dx: cellcycle::DEFAULT_DX,
            warmup_periods: cellcycle::DEFAULT_WARMUP_PERIODS,
            measure_periods: cellcycle::DEFAULT_MEASURE_PERIODS,
            periodic_d_only: false,
        }
    }
}

fn default_dim_range() -> RangeInclusive {
    RangeInclusive { min: 1, max: 8 }
}

fn default_period_range() -> RangeInclusive {
    RangeInclusive { min: 1, max: 12 }
}

fn default_phases_max() -> usize {
    4
}

fn default_ode_steps() -> usize {
    ode::DEFAULT_STEPS
}

fn default_scheme() -> AveragingScheme {
    AveragingScheme::ArithGeometric
}

/// Full description of a sweep; serializable so reports can echo it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub seed: u64,
    pub trials: usize,
    pub class: SystemClass,
    #[serde(default = "default_scheme")]
    pub scheme: AveragingScheme,
    #[serde(default = "default_dim_range")]
    pub dim: RangeInclusive,
    /// Discrete period range (ignored by the other classes).
    #[serde(default = "default_period_range")]
    pub period: RangeInclusive,
    /// Largest cell-cycle phase count.
    #[serde(default = "default_phases_max")]
    pub phases_max: usize,
    #[serde(default)]
    pub form_weights: FormWeights,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default = "default_ode_steps")]
    pub ode_steps: usize,
    #[serde(default)]
    pub cellcycle: CellcycleSweepParams,
}

impl SweepConfig {
    /// A sweep of `trials` ODE systems with defaults everywhere else.
    pub fn ode(seed: u64, trials: usize) -> Self {
        SweepConfig {
            seed,
            trials,
            class: SystemClass::Ode,
            scheme: default_scheme(),
            dim: default_dim_range(),
            period: default_period_range(),
            phases_max: default_phases_max(),
            form_weights: FormWeights::default(),
            tolerances: Tolerances::default(),
            ode_steps: default_ode_steps(),
            cellcycle: CellcycleSweepParams::default(),
        }
    }

    pub fn discrete(seed: u64, trials: usize) -> Self {
        SweepConfig {
            class: SystemClass::Discrete,
            ..Self::ode(seed, trials)
        }
    }

    pub fn cellcycle(seed: u64, trials: usize) -> Self {
        SweepConfig {
            class: SystemClass::Cellcycle,
            ..Self::ode(seed, trials)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::InvalidInput("trials must be ≥ 1".into()));
        }
        self.dim.validate("dimension")?;
        self.period.validate("period")?;
        if self.phases_max == 0 {
            return Err(Error::InvalidInput("phases_max must be ≥ 1".into()));
        }
        self.form_weights.validate()?;
        for (name, tol) in [
            ("ode", self.tolerances.ode),
            ("discrete", self.tolerances.discrete),
            ("cellcycle", self.tolerances.cellcycle),
        ] {
            if !(tol > 0.0) || !tol.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "{name} tolerance must be a positive real, got {tol}"
                )));
            }
        }
        if self.ode_steps < 16 {
            return Err(Error::InvalidInput(
                "ode_steps must be at least 16".into(),
            ));
        }
        if !(self.cellcycle.dx > 0.0) || self.cellcycle.measure_periods == 0 {
            return Err(Error::InvalidInput(
                "cell-cycle grid needs dx > 0 and measure_periods ≥ 1".into(),
            ));
        }
        Ok(())
    }
}

/// What happened in one trial.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialOutcome {
    Compared {
        lambda_per: f64,
        lambda_s: f64,
        gap: f64,
        pass: bool,
    },
    Failed {
        message: String,
    },
}

/// One sweep trial, keyed by its index.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    /// Hash of the generated model parameters; rerunning the sweep with the
    /// same seed regenerates the model for any recorded digest.
    pub digest: String,
    pub outcome: TrialOutcome,
}

/// Order-independent aggregate of a sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSummary {
    pub trials: usize,
    pub completed: usize,
    pub errors: usize,
    pub min_gap: Option<f64>,
    pub mean_gap: Option<f64>,
    pub violations: usize,
    pub violating_digests: Vec<String>,
}

/// Records plus summary plus the config that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub config: SweepConfig,
    pub records: Vec<TrialRecord>,
    pub summary: SweepSummary,
}

/// Runs every trial of the sweep (in parallel when invoked inside a rayon
/// pool with more than one thread). Individual trial errors are recorded
/// and skipped, never aborting the sweep.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let records: Vec<TrialRecord> = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| run_trial(cfg, trial))
        .collect();

    let mut completed = 0usize;
    let mut errors = 0usize;
    let mut min_gap: Option<f64> = None;
    let mut gap_sum = 0.0;
    let mut violations = 0usize;
    let mut violating_digests = Vec::new();
    for r in &records {
        match &r.outcome {
            TrialOutcome::Compared { gap, pass, .. } => {
                completed += 1;
                gap_sum += gap;
                min_gap = Some(min_gap.map_or(*gap, |m: f64| m.min(*gap)));
                if !pass {
                    violations += 1;
                    violating_digests.push(r.digest.clone());
                }
            }
            TrialOutcome::Failed { .. } => errors += 1,
        }
    }
    let summary = SweepSummary {
        trials: cfg.trials,
        completed,
        errors,
        min_gap,
        mean_gap: (completed > 0).then(|| gap_sum / completed as f64),
        violations,
        violating_digests,
    };
    Ok(SweepResult {
        config: cfg.clone(),
        records,
        summary,
    })
}

/// Per-trial RNG: one ChaCha stream per trial index off the sweep seed.
fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64 + 1);
    rng
}

fn run_trial(cfg: &SweepConfig, trial: usize) -> TrialRecord {
    let mut rng = trial_rng(cfg.seed, trial);
    let (digest, result) = match cfg.class {
        SystemClass::Ode => {
            let dim = cfg.dim.draw(&mut rng);
            let a = gen_periodic_matrix(&mut rng, dim, &cfg.form_weights);
            (
                digest_periodic_matrix(&a),
                ode_compare(&a, cfg.ode_steps, cfg.tolerances.ode, cfg.scheme),
            )
        }
        SystemClass::Discrete => {
            let dim = cfg.dim.draw(&mut rng);
            let p = cfg.period.draw(&mut rng);
            let seq = gen_matrix_seq(&mut rng, dim, p);
            (
                digest_matrix_seq(&seq),
                discrete_compare(&seq, cfg.tolerances.discrete, cfg.scheme),
            )
        }
        SystemClass::Cellcycle => {
            let phases = rng.gen_range(1..=cfg.phases_max);
            match gen_cellcycle_model(
                &mut rng,
                phases,
                &cfg.form_weights,
                cfg.cellcycle.dx,
                cfg.cellcycle.periodic_d_only,
            ) {
                Ok(m) => (
                    digest_cellcycle(&m),
                    cellcycle_compare(&m, &cfg.cellcycle, cfg.tolerances.cellcycle, cfg.scheme),
                ),
                Err(e) => ("-".into(), Err(e)),
            }
        }
    };
    let outcome = match result {
        Ok(cmp) => TrialOutcome::Compared {
            lambda_per: cmp.lambda_per,
            lambda_s: cmp.lambda_s,
            gap: cmp.gap,
            pass: cmp.pass,
        },
        Err(e) => TrialOutcome::Failed {
            message: e.to_string(),
        },
    };
    TrialRecord {
        trial,
        digest,
        outcome,
    }
}

fn ode_compare(
    a: &PeriodicMatrix,
    steps: usize,
    tol: f64,
    scheme: AveragingScheme,
) -> Result<GrowthComparison> {
    let monodromy = ode::integrate_fundamental(a, steps)?;
    let averaged = a.average_with(scheme)?;
    let lambda_s = perron_metzler(&averaged, DEFAULT_TOL, DEFAULT_MAX_ITER)?.eigenvalue;
    Ok(GrowthComparison::new(
        monodromy.floquet_eigenvalue,
        lambda_s,
        tol,
    ))
}

fn discrete_compare(
    seq: &PeriodicMatrixSeq,
    tol: f64,
    scheme: AveragingScheme,
) -> Result<GrowthComparison> {
    let lambda_per = discrete::floquet_discrete(seq)?.eigenvalue;
    let averaged = seq.average_with(scheme);
    let lambda_s = perron_nonneg(&averaged, DEFAULT_TOL, DEFAULT_MAX_ITER)?.eigenvalue;
    Ok(GrowthComparison::new(lambda_per, lambda_s, tol))
}

fn cellcycle_compare(
    m: &CellCycleModel,
    params: &CellcycleSweepParams,
    tol: f64,
    scheme: AveragingScheme,
) -> Result<GrowthComparison> {
    let grid = PdeGrid {
        dx: params.dx,
        warmup_periods: params.warmup_periods,
        measure_periods: params.measure_periods,
        ..PdeGrid::default()
    };
    let lambda_per = cellcycle::floquet_growth_rate(m, &grid)?.eigenvalue;
    let lambda_s = cellcycle::averaged_perron_rate_with(m, scheme)?.eigenvalue;
    Ok(GrowthComparison::new(lambda_per, lambda_s, tol))
}

fn hash_scalar(h: &mut Fnv1a, s: &PeriodicScalar) {
    h.write_f64(s.period());
    match s.form() {
        ScalarForm::Constant { value } => {
            h.write(b"const");
            h.write_f64(*value);
        }
        ScalarForm::Cosine {
            mean,
            amplitude,
            phase,
        } => {
            h.write(b"cos");
            h.write_f64(*mean);
            h.write_f64(*amplitude);
            h.write_f64(*phase);
        }
        ScalarForm::Square { lo, hi, duty, phase } => {
            h.write(b"square");
            h.write_f64(*lo);
            h.write_f64(*hi);
            h.write_f64(*duty);
            h.write_f64(*phase);
        }
        ScalarForm::Sampled { samples } => {
            h.write(b"sampled");
            h.write_usize(samples.len());
            for v in samples {
                h.write_f64(*v);
            }
        }
    }
}

/// Stable parameter hash of an ODE instance.
pub fn digest_periodic_matrix(a: &PeriodicMatrix) -> String {
    let mut h = Fnv1a::new();
    h.write(b"ode");
    h.write_usize(a.dim());
    for i in 0..a.dim() {
        for j in 0..a.dim() {
            hash_scalar(&mut h, a.entry(i, j));
        }
    }
    h.finish()
}

/// Stable parameter hash of a discrete instance.
pub fn digest_matrix_seq(seq: &PeriodicMatrixSeq) -> String {
    let mut h = Fnv1a::new();
    h.write(b"discrete");
    h.write_usize(seq.dim());
    h.write_usize(seq.len());
    for m in seq.matrices() {
        for v in m.entries() {
            h.write_f64(*v);
        }
    }
    h.finish()
}

/// Stable parameter hash of a cell-cycle instance.
pub fn digest_cellcycle(m: &CellCycleModel) -> String {
    use crate::cellcycle::AgeProfile;
    let mut h = Fnv1a::new();
    h.write(b"cellcycle");
    h.write_f64(m.period());
    h.write_f64(m.x_max());
    h.write_usize(m.phase_count());
    for phase in m.phases() {
        for coeff in [&phase.apoptosis, &phase.transition] {
            match coeff.profile() {
                AgeProfile::Uniform(s) => {
                    h.write(b"uniform");
                    hash_scalar(&mut h, s);
                }
                AgeProfile::Gate { x_on, level } => {
                    h.write(b"gate");
                    h.write_f64(*x_on);
                    hash_scalar(&mut h, level);
                }
                AgeProfile::Sampled { x_step, values } => {
                    h.write(b"xsampled");
                    h.write_f64(*x_step);
                    h.write_usize(values.len());
                    for s in values {
                        hash_scalar(&mut h, s);
                    }
                }
            }
        }
    }
    h.finish()
}
