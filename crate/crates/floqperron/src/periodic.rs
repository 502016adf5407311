//! T-periodic coefficient families and their time averages.
//!
//! Coefficients are finitely parameterized so that both the arithmetic mean
//! `⟨u⟩_a = (1/T)∫₀ᵀ u` and the geometric mean `⟨u⟩_g = exp(⟨log u⟩_a)` are
//! exact, so no quadrature error enters the averaged matrices. Four families
//! are supported:
//!
//! * constants,
//! * a single cosine `a + b·cos(2π(t−φ)/T)`,
//! * square waves with an arbitrary duty fraction,
//! * piecewise-constant sampled values on a uniform grid (the escape hatch
//!   for coefficients outside the closed families).
//!
//! For the cosine family the log-mean uses the classical integral
//! `⟨log(a + b cos θ)⟩ = log((a + √(a² − b²))/2)`, so even coefficients that
//! touch zero average exactly. A geometric mean is 0 exactly whenever the
//! log-integral diverges to −∞ (a zero level or sample of positive measure).

use crate::error::{Error, Result};
use crate::spectral::{MetzlerMatrix, NonnegMatrix};
use std::f64::consts::TAU;

/// Functional form of a periodic scalar coefficient.
#[derive(Debug, Clone, PartialEq)]
pub enum ScalarForm {
    Constant {
        value: f64,
    },
    /// `mean + amplitude · cos(2π(t − phase)/T)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        phase: f64,
    },
    /// `hi` on `[phase, phase + duty·T)`, `lo` on the rest of the period.
    Square {
        lo: f64,
        hi: f64,
        duty: f64,
        phase: f64,
    },
    /// Piecewise constant: `samples[k]` on `[k·T/m, (k+1)·T/m)`.
    Sampled {
        samples: Vec<f64>,
    },
}

/// A T-periodic real-valued function of time.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicScalar {
    period: f64,
    form: ScalarForm,
}

impl PeriodicScalar {
    pub fn new(period: f64, form: ScalarForm) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidInput(format!(
                "period must be a positive real, got {period}"
            )));
        }
        match &form {
            ScalarForm::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::InvalidInput("constant value is not finite".into()));
                }
            }
            ScalarForm::Cosine {
                mean,
                amplitude,
                phase,
            } => {
                if ![*mean, *amplitude, *phase].iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidInput("cosine parameters not finite".into()));
                }
            }
            ScalarForm::Square { lo, hi, duty, phase } => {
                if ![*lo, *hi, *phase].iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidInput("square-wave levels not finite".into()));
                }
                if !(*duty > 0.0 && *duty < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "square-wave duty fraction must lie in (0, 1), got {duty}"
                    )));
                }
            }
            ScalarForm::Sampled { samples } => {
                if samples.is_empty() {
                    return Err(Error::InvalidInput(
                        "sampled form needs at least one sample".into(),
                    ));
                }
                if !samples.iter().all(|x| x.is_finite()) {
                    return Err(Error::InvalidInput("sample values not finite".into()));
                }
            }
        }
        Ok(PeriodicScalar { period, form })
    }

    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::new(period, ScalarForm::Constant { value })
    }

    pub fn cosine(period: f64, mean: f64, amplitude: f64, phase: f64) -> Result<Self> {
        Self::new(
            period,
            ScalarForm::Cosine {
                mean,
                amplitude,
                phase,
            },
        )
    }

    pub fn square(period: f64, lo: f64, hi: f64, duty: f64, phase: f64) -> Result<Self> {
        Self::new(period, ScalarForm::Square { lo, hi, duty, phase })
    }

    pub fn sampled(period: f64, samples: Vec<f64>) -> Result<Self> {
        Self::new(period, ScalarForm::Sampled { samples })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn form(&self) -> &ScalarForm {
        &self.form
    }

    /// Value at time `t` (any real; the function is T-periodic by
    /// construction).
    pub fn value(&self, t: f64) -> f64 {
        match &self.form {
            ScalarForm::Constant { value } => *value,
            ScalarForm::Cosine {
                mean,
                amplitude,
                phase,
            } => mean + amplitude * (TAU * (t - phase) / self.period).cos(),
            ScalarForm::Square { lo, hi, duty, phase } => {
                if frac((t - phase) / self.period) < *duty {
                    *hi
                } else {
                    *lo
                }
            }
            ScalarForm::Sampled { samples } => {
                let m = samples.len();
                let idx = ((frac(t / self.period) * m as f64) as usize).min(m - 1);
                samples[idx]
            }
        }
    }

    /// Exact antiderivative `∫₀ᵗ u(s) ds` (valid for all real `t`).
    pub fn integral_from_zero(&self, t: f64) -> f64 {
        match &self.form {
            ScalarForm::Constant { value } => value * t,
            ScalarForm::Cosine {
                mean,
                amplitude,
                phase,
            } => {
                let w = TAU / self.period;
                mean * t + amplitude / w * ((w * (t - phase)).sin() + (w * phase).sin())
            }
            ScalarForm::Square { lo, hi, duty, phase } => {
                // antiderivative of the phase-0 wave, then shift
                let g = |y: f64| -> f64 {
                    let cycles = (y / self.period).floor();
                    let tau = y - cycles * self.period;
                    let per_period = (duty * hi + (1.0 - duty) * lo) * self.period;
                    let partial =
                        tau.min(duty * self.period) * hi + (tau - duty * self.period).max(0.0) * lo;
                    cycles * per_period + partial
                };
                g(t - phase) - g(-phase)
            }
            ScalarForm::Sampled { samples } => {
                let m = samples.len();
                let h = self.period / m as f64;
                let mean_sum: f64 = samples.iter().sum::<f64>() * h;
                let g = |y: f64| -> f64 {
                    let cycles = (y / self.period).floor();
                    let tau = y - cycles * self.period;
                    let mut partial = 0.0;
                    let full = (tau / h).floor() as usize;
                    for &s in samples.iter().take(full.min(m)) {
                        partial += s * h;
                    }
                    if full < m {
                        partial += samples[full] * (tau - full as f64 * h);
                    }
                    cycles * mean_sum + partial
                };
                g(t)
            }
        }
    }

    /// Exact `∫_{t0}^{t1} u(s) ds`.
    pub fn integral(&self, t0: f64, t1: f64) -> f64 {
        self.integral_from_zero(t1) - self.integral_from_zero(t0)
    }

    /// Value at `t` with piecewise forms resolved at `witness`, a point
    /// strictly inside the smooth piece being integrated. Keeps one-sided
    /// limits consistent when `t` falls exactly on a discontinuity.
    pub(crate) fn value_in_piece(&self, t: f64, witness: f64) -> f64 {
        match &self.form {
            ScalarForm::Constant { .. } | ScalarForm::Cosine { .. } => self.value(t),
            ScalarForm::Square { .. } | ScalarForm::Sampled { .. } => self.value(witness),
        }
    }

    /// Arithmetic time average `(1/T) ∫₀ᵀ u`; closed form for every family.
    pub fn arith_mean(&self) -> f64 {
        match &self.form {
            ScalarForm::Constant { value } => *value,
            ScalarForm::Cosine { mean, .. } => *mean,
            ScalarForm::Square { lo, hi, duty, .. } => duty * hi + (1.0 - duty) * lo,
            ScalarForm::Sampled { samples } => {
                samples.iter().sum::<f64>() / samples.len() as f64
            }
        }
    }

    /// Geometric time average `exp((1/T) ∫₀ᵀ log u)` for a nonnegative
    /// coefficient; exactly 0 when the log-integral diverges to −∞.
    ///
    /// Rejects coefficients that take negative values.
    pub fn geom_mean(&self) -> Result<f64> {
        if self.min_value() < 0.0 {
            return Err(Error::InvalidInput(format!(
                "geometric mean needs a nonnegative coefficient; minimum value is {}",
                self.min_value()
            )));
        }
        Ok(match &self.form {
            ScalarForm::Constant { value } => *value,
            ScalarForm::Cosine {
                mean, amplitude, ..
            } => {
                // ⟨log(a + b cos θ)⟩ = log((a + √(a² − b²))/2) for a ≥ |b|
                let a = *mean;
                let b = amplitude.abs();
                if a == 0.0 && b == 0.0 {
                    0.0
                } else {
                    (a + ((a - b) * (a + b)).max(0.0).sqrt()) / 2.0
                }
            }
            ScalarForm::Square { lo, hi, duty, .. } => {
                if *lo == 0.0 || *hi == 0.0 {
                    0.0
                } else {
                    (duty * hi.ln() + (1.0 - duty) * lo.ln()).exp()
                }
            }
            ScalarForm::Sampled { samples } => {
                if samples.contains(&0.0) {
                    0.0
                } else {
                    (samples.iter().map(|s| s.ln()).sum::<f64>() / samples.len() as f64).exp()
                }
            }
        })
    }

    /// Exact minimum over one period.
    pub fn min_value(&self) -> f64 {
        match &self.form {
            ScalarForm::Constant { value } => *value,
            ScalarForm::Cosine {
                mean, amplitude, ..
            } => mean - amplitude.abs(),
            ScalarForm::Square { lo, hi, .. } => lo.min(*hi),
            ScalarForm::Sampled { samples } => samples.iter().cloned().fold(f64::INFINITY, f64::min),
        }
    }

    /// Exact maximum over one period.
    pub fn max_value(&self) -> f64 {
        match &self.form {
            ScalarForm::Constant { value } => *value,
            ScalarForm::Cosine {
                mean, amplitude, ..
            } => mean + amplitude.abs(),
            ScalarForm::Square { lo, hi, .. } => lo.max(*hi),
            ScalarForm::Sampled { samples } => {
                samples.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// The coefficient shifted in time, `t ↦ u(t + s)`, as a member of the
    /// same family. Sampled coefficients only admit shifts by whole grid
    /// cells (`s` a multiple of `T/m`).
    pub fn shifted(&self, s: f64) -> Result<Self> {
        let form = match &self.form {
            ScalarForm::Constant { value } => ScalarForm::Constant { value: *value },
            ScalarForm::Cosine {
                mean,
                amplitude,
                phase,
            } => ScalarForm::Cosine {
                mean: *mean,
                amplitude: *amplitude,
                phase: phase - s,
            },
            ScalarForm::Square { lo, hi, duty, phase } => ScalarForm::Square {
                lo: *lo,
                hi: *hi,
                duty: *duty,
                phase: phase - s,
            },
            ScalarForm::Sampled { samples } => {
                let m = samples.len();
                let cell = self.period / m as f64;
                let steps = s / cell;
                if (steps - steps.round()).abs() > 1e-9 {
                    return Err(Error::InvalidInput(format!(
                        "sampled coefficient can only be shifted by multiples of {cell}"
                    )));
                }
                let k = (steps.round() as i64).rem_euclid(m as i64) as usize;
                let mut rotated = samples[k..].to_vec();
                rotated.extend_from_slice(&samples[..k]);
                ScalarForm::Sampled { samples: rotated }
            }
        };
        Self::new(self.period, form)
    }

    /// Points of discontinuity within `[0, T)`, for step-boundary snapping.
    pub fn breakpoints(&self) -> Vec<f64> {
        match &self.form {
            ScalarForm::Constant { .. } | ScalarForm::Cosine { .. } => Vec::new(),
            ScalarForm::Square { duty, phase, .. } => {
                let t = self.period;
                vec![
                    frac(phase / t) * t,
                    frac(phase / t + duty) * t,
                ]
            }
            ScalarForm::Sampled { samples } => {
                let m = samples.len();
                (0..m).map(|k| k as f64 * self.period / m as f64).collect()
            }
        }
    }
}

fn frac(x: f64) -> f64 {
    let f = x - x.floor();
    // guard against f == 1.0 from rounding of tiny negative x
    if f >= 1.0 {
        0.0
    } else {
        f
    }
}

/// Selects which time average is applied to off-diagonal (ODE), entrywise
/// (discrete) or transition (cell-cycle) coefficients when building the
/// constant comparison system.
///
/// Diagonal ODE coefficients and apoptosis rates are always averaged
/// arithmetically: they may take negative values (ODE diagonal) and the
/// inequality theory fixes their mean.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AveragingScheme {
    /// The arithmetico-geometric scheme: geometric on transitions (and on all
    /// entries in the discrete case), arithmetic elsewhere. This is the
    /// scheme for which `λ_per ≥ λ_s` is guaranteed.
    ArithGeometric,
    /// Arithmetic mean everywhere (exploratory; no guaranteed hierarchy).
    ArithmeticEverywhere,
    /// Geometric mean on every coefficient it is defined for (exploratory).
    GeometricEverywhere,
}

/// Square matrix of shared-period coefficients with nonnegative
/// off-diagonal entries (a time-dependent Metzler matrix).
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMatrix {
    dim: usize,
    period: f64,
    entries: Vec<PeriodicScalar>,
}

impl PeriodicMatrix {
    /// Validates shared periods and almost-everywhere nonnegativity of the
    /// off-diagonal entries (exact per-family minima).
    pub fn new(dim: usize, entries: Vec<PeriodicScalar>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidInput("matrix dimension must be ≥ 1".into()));
        }
        if entries.len() != dim * dim {
            return Err(Error::InvalidInput(format!(
                "expected {} coefficient entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        let period = entries[0].period();
        for (idx, entry) in entries.iter().enumerate() {
            if entry.period() != period {
                return Err(Error::InvalidInput(format!(
                    "entry ({},{}) has period {}, expected shared period {}",
                    idx / dim,
                    idx % dim,
                    entry.period(),
                    period
                )));
            }
            let (i, j) = (idx / dim, idx % dim);
            if i != j && entry.min_value() < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "off-diagonal entry ({i},{j}) dips to {} < 0",
                    entry.min_value()
                )));
            }
        }
        Ok(PeriodicMatrix {
            dim,
            period,
            entries,
        })
    }

    pub fn from_rows(rows: Vec<Vec<PeriodicScalar>>) -> Result<Self> {
        let dim = rows.len();
        Self::new(dim, rows.into_iter().flatten().collect())
    }

    /// Constant matrix as a periodic one (any period works; 1 is used).
    pub fn from_constant(a: &MetzlerMatrix, period: f64) -> Result<Self> {
        let entries = a
            .entries()
            .iter()
            .map(|&c| PeriodicScalar::constant(period, c))
            .collect::<Result<Vec<_>>>()?;
        Self::new(a.dim(), entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> &PeriodicScalar {
        &self.entries[i * self.dim + j]
    }

    /// Dense value `A(t)` written into `out` (row-major, length dim²).
    pub fn value_into(&self, t: f64, out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.entries) {
            *o = e.value(t);
        }
    }

    /// Dense value with discontinuous entries resolved at `witness`.
    pub(crate) fn value_in_piece_into(&self, t: f64, witness: f64, out: &mut [f64]) {
        for (o, e) in out.iter_mut().zip(&self.entries) {
            *o = e.value_in_piece(t, witness);
        }
    }

    /// All entry discontinuities within `[0, T)`, sorted and deduplicated.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut bps: Vec<f64> = self.entries.iter().flat_map(|e| e.breakpoints()).collect();
        bps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        bps.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * self.period);
        bps
    }

    /// Every entry shifted in time by the same `s`.
    pub fn shifted(&self, s: f64) -> Result<Self> {
        let entries = self
            .entries
            .iter()
            .map(|e| e.shifted(s))
            .collect::<Result<Vec<_>>>()?;
        Self::new(self.dim, entries)
    }

    /// The constant comparison matrix: arithmetic mean on the diagonal,
    /// geometric mean off the diagonal.
    pub fn average(&self) -> Result<MetzlerMatrix> {
        self.average_with(AveragingScheme::ArithGeometric)
    }

    /// Averaged matrix under a chosen scheme. The scheme selects the mean of
    /// the off-diagonal entries; the diagonal (sign-indefinite) is always
    /// averaged arithmetically, so `GeometricEverywhere` coincides with the
    /// arithmetico-geometric scheme here.
    pub fn average_with(&self, scheme: AveragingScheme) -> Result<MetzlerMatrix> {
        let mut avg = vec![0.0; self.dim * self.dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                let entry = self.entry(i, j);
                avg[i * self.dim + j] = if i == j {
                    entry.arith_mean()
                } else {
                    match scheme {
                        AveragingScheme::ArithmeticEverywhere => entry.arith_mean(),
                        AveragingScheme::ArithGeometric | AveragingScheme::GeometricEverywhere => {
                            entry.geom_mean()?
                        }
                    }
                };
            }
        }
        MetzlerMatrix::new(self.dim, avg)
    }
}

/// A p-periodic sequence of nonnegative matrices `A(0), …, A(p−1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodicMatrixSeq {
    dim: usize,
    matrices: Vec<NonnegMatrix>,
}

impl PeriodicMatrixSeq {
    pub fn new(matrices: Vec<NonnegMatrix>) -> Result<Self> {
        if matrices.is_empty() {
            return Err(Error::InvalidInput(
                "a periodic sequence needs at least one matrix".into(),
            ));
        }
        let dim = matrices[0].dim();
        if let Some(k) = matrices.iter().position(|m| m.dim() != dim) {
            return Err(Error::InvalidInput(format!(
                "matrix {k} has dimension {}, expected {dim}",
                matrices[k].dim()
            )));
        }
        Ok(PeriodicMatrixSeq { dim, matrices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The period p.
    pub fn len(&self) -> usize {
        self.matrices.len()
    }

    pub fn is_empty(&self) -> bool {
        false // a valid sequence always has p ≥ 1
    }

    pub fn matrices(&self) -> &[NonnegMatrix] {
        &self.matrices
    }

    /// Entrywise geometric mean over the period,
    /// `Ā_ij = (∏_k A_ij(k))^(1/p)`; the mean is the same for diagonal and
    /// off-diagonal entries, and an entry with any zero factor averages to 0.
    pub fn average(&self) -> NonnegMatrix {
        self.average_with(AveragingScheme::ArithGeometric)
    }

    /// Averaged matrix under a chosen scheme (entrywise arithmetic mean for
    /// `ArithmeticEverywhere`, entrywise geometric mean otherwise).
    pub fn average_with(&self, scheme: AveragingScheme) -> NonnegMatrix {
        let p = self.matrices.len() as f64;
        let n = self.dim * self.dim;
        let mut avg = vec![0.0; n];
        match scheme {
            AveragingScheme::ArithmeticEverywhere => {
                for m in &self.matrices {
                    for (acc, x) in avg.iter_mut().zip(m.entries()) {
                        *acc += x / p;
                    }
                }
            }
            AveragingScheme::ArithGeometric | AveragingScheme::GeometricEverywhere => {
                for idx in 0..n {
                    let mut log_sum = 0.0;
                    let mut has_zero = false;
                    for m in &self.matrices {
                        let x = m.entries()[idx];
                        if x == 0.0 {
                            has_zero = true;
                            break;
                        }
                        log_sum += x.ln();
                    }
                    avg[idx] = if has_zero { 0.0 } else { (log_sum / p).exp() };
                }
            }
        }
        NonnegMatrix::new(self.dim, avg).expect("entrywise means of nonnegative entries")
    }
}
