//! Age-structured multi-phase cell-cycle system.
//!
//! Cells age at unit speed through phases `1..I` (phase `I+1` identified with
//! phase 1). Phase `i` loses mass to apoptosis at rate `d_i(t, x)` and hands
//! mass to the next phase at transition rate `K_i(t, x)`; the last transition
//! is mitosis, which doubles the inflow:
//!
//! ```text
//! ∂_t n_i + ∂_x n_i + [d_i + K_i] n_i = 0,
//! n_i(t, 0) = ∫ K_{i−1} n_{i−1} dx      (i > 1),
//! n_1(t, 0) = 2 ∫ K_I n_I dx.
//! ```
//!
//! The Floquet growth rate `λ_per` of the T-periodic problem is measured by
//! long-time transport simulation combined with power iteration on the
//! period map ([`floquet_growth_rate`]). The Perron growth rate `λ_s` of the
//! time-averaged stationary problem (arithmetic means inside the transport,
//! geometric means in the boundary kernels) reduces exactly to a scalar
//! characteristic equation and is solved by bisection
//! ([`averaged_perron_rate`]). [`compare_growth_rates`] combines both and
//! reports the per-phase artificial loss `⟨K⟩_a − ⟨K⟩_g ≥ 0` that the
//! averaging introduces.
//!
//! The standing assumptions are boundedness of the coefficients and a lower
//! bound on the transition survival product ([`check_assumptions`]): with
//! `k_i(x) = min_t K_i`, `μ_i(x) = max_t [d_i + K_i]` and `M_i = ∫₀ˣ μ_i`,
//!
//! ```text
//! ∏_i ∫₀^∞ k_i(y) e^{−M_i(y)} dy > 1/2,
//! ```
//!
//! evaluated on the age-truncated domain `[0, x_max]`.

mod averaged;
mod transport;

pub use averaged::{averaged_perron_rate, averaged_perron_rate_with};
pub use transport::{floquet_growth_rate, floquet_growth_rate_traced, step_transport, GrowthTrace};

use crate::error::{Error, Result};
use crate::periodic::PeriodicScalar;

/// Default age-grid spacing.
pub const DEFAULT_DX: f64 = 1.0 / 200.0;
/// Default warmup periods before growth measurement.
pub const DEFAULT_WARMUP_PERIODS: usize = 10;
/// Default measurement periods.
pub const DEFAULT_MEASURE_PERIODS: usize = 10;
/// Default tolerance for the cell-cycle `λ_per ≥ λ_s` comparison
/// (discretization-dominated).
pub const DEFAULT_TOL_COMPARE: f64 = 5e-3;

/// Dependence of a rate coefficient on age at fixed time pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum AgeProfile {
    /// Same periodic time law at every age.
    Uniform(PeriodicScalar),
    /// Zero below the switch-on age, a periodic level above it.
    Gate { x_on: f64, level: PeriodicScalar },
    /// Piecewise constant in age: `values[k]` on `[k·x_step, (k+1)·x_step)`,
    /// with the last value extended beyond the sampled range.
    Sampled { x_step: f64, values: Vec<PeriodicScalar> },
}

/// Nonnegative bounded rate coefficient `c(t, x)`, T-periodic in time and
/// piecewise constant in age.
#[derive(Debug, Clone, PartialEq)]
pub struct AgeTimeCoefficient {
    profile: AgeProfile,
}

impl AgeTimeCoefficient {
    pub fn new(profile: AgeProfile) -> Result<Self> {
        match &profile {
            AgeProfile::Uniform(s) => {
                if s.min_value() < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "rate coefficient dips to {} < 0",
                        s.min_value()
                    )));
                }
            }
            AgeProfile::Gate { x_on, level } => {
                if !(*x_on >= 0.0) || !x_on.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "gate age must be a nonnegative real, got {x_on}"
                    )));
                }
                if level.min_value() < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "gate level dips to {} < 0",
                        level.min_value()
                    )));
                }
            }
            AgeProfile::Sampled { x_step, values } => {
                if !(*x_step > 0.0) || !x_step.is_finite() {
                    return Err(Error::InvalidInput(format!(
                        "age step must be a positive real, got {x_step}"
                    )));
                }
                if values.is_empty() {
                    return Err(Error::InvalidInput(
                        "age-sampled coefficient needs at least one value".into(),
                    ));
                }
                let period = values[0].period();
                for (k, v) in values.iter().enumerate() {
                    if v.period() != period {
                        return Err(Error::InvalidInput(format!(
                            "age sample {k} has period {}, expected {period}",
                            v.period()
                        )));
                    }
                    if v.min_value() < 0.0 {
                        return Err(Error::InvalidInput(format!(
                            "age sample {k} dips to {} < 0",
                            v.min_value()
                        )));
                    }
                }
            }
        }
        Ok(AgeTimeCoefficient { profile })
    }

    /// Constant-in-age coefficient from a periodic time law.
    pub fn uniform(scalar: PeriodicScalar) -> Result<Self> {
        Self::new(AgeProfile::Uniform(scalar))
    }

    /// Constant in both time and age.
    pub fn constant(period: f64, value: f64) -> Result<Self> {
        Self::new(AgeProfile::Uniform(PeriodicScalar::constant(period, value)?))
    }

    pub fn profile(&self) -> &AgeProfile {
        &self.profile
    }

    pub fn period(&self) -> f64 {
        match &self.profile {
            AgeProfile::Uniform(s) => s.period(),
            AgeProfile::Gate { level, .. } => level.period(),
            AgeProfile::Sampled { values, .. } => values[0].period(),
        }
    }

    pub fn value(&self, t: f64, x: f64) -> f64 {
        match self.scalar_at_age(x) {
            Some(s) => s.value(t),
            None => 0.0,
        }
    }

    /// Exact maximum over time and age.
    pub fn max_value(&self) -> f64 {
        match &self.profile {
            AgeProfile::Uniform(s) => s.max_value(),
            AgeProfile::Gate { level, .. } => level.max_value().max(0.0),
            AgeProfile::Sampled { values, .. } => values
                .iter()
                .map(|v| v.max_value())
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Arithmetic and geometric time means of the coefficient at age `x`
    /// (both zero where the coefficient vanishes identically).
    pub fn means_at_age(&self, x: f64) -> Result<(f64, f64)> {
        match self.scalar_at_age(x) {
            Some(s) => Ok((s.arith_mean(), s.geom_mean()?)),
            None => Ok((0.0, 0.0)),
        }
    }

    /// The periodic time law in force at age `x`; `None` means identically
    /// zero there.
    pub(crate) fn scalar_at_age(&self, x: f64) -> Option<&PeriodicScalar> {
        match &self.profile {
            AgeProfile::Uniform(s) => Some(s),
            AgeProfile::Gate { x_on, level } => {
                if x < *x_on {
                    None
                } else {
                    Some(level)
                }
            }
            AgeProfile::Sampled { x_step, values } => {
                let idx = ((x / x_step).floor() as usize).min(values.len() - 1);
                Some(&values[idx])
            }
        }
    }

    /// Ages in `(0, x_max)` where the in-age law changes.
    pub(crate) fn age_breaks(&self, x_max: f64) -> Vec<f64> {
        match &self.profile {
            AgeProfile::Uniform(_) => Vec::new(),
            AgeProfile::Gate { x_on, .. } => {
                if *x_on > 0.0 && *x_on < x_max {
                    vec![*x_on]
                } else {
                    Vec::new()
                }
            }
            AgeProfile::Sampled { x_step, values } => (1..values.len())
                .map(|k| k as f64 * x_step)
                .take_while(|x| *x < x_max)
                .collect(),
        }
    }

    /// Maximal runs of consecutive positions in the sorted age list `xs`
    /// that share one time law. Returned as half-open index ranges.
    pub(crate) fn runs_over<'a>(
        &'a self,
        xs: &[f64],
    ) -> Vec<(usize, usize, Option<&'a PeriodicScalar>)> {
        let n = xs.len();
        let mut runs = Vec::new();
        let mut start = 0;
        while start < n {
            let here = self.scalar_at_age(xs[start]);
            let mut end = start + 1;
            while end < n && self.scalar_at_age(xs[end]) == here {
                end += 1;
            }
            runs.push((start, end, here));
            start = end;
        }
        runs
    }
}

/// Apoptosis and onward-transition rates of one phase.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCyclePhase {
    pub apoptosis: AgeTimeCoefficient,
    pub transition: AgeTimeCoefficient,
}

/// The I-phase cell-cycle model: shared period, age truncation, per-phase
/// rate coefficients.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCycleModel {
    period: f64,
    x_max: f64,
    phases: Vec<CellCyclePhase>,
}

impl CellCycleModel {
    pub fn new(period: f64, x_max: f64, phases: Vec<CellCyclePhase>) -> Result<Self> {
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::InvalidInput(format!(
                "period must be a positive real, got {period}"
            )));
        }
        if !(x_max > 0.0) || !x_max.is_finite() {
            return Err(Error::InvalidInput(format!(
                "age truncation must be a positive real, got {x_max}"
            )));
        }
        if phases.is_empty() {
            return Err(Error::InvalidInput("at least one phase is required".into()));
        }
        for (i, phase) in phases.iter().enumerate() {
            if phase.apoptosis.period() != period || phase.transition.period() != period {
                return Err(Error::InvalidInput(format!(
                    "phase {} coefficients do not share the model period {period}",
                    i + 1
                )));
            }
        }
        Ok(CellCycleModel {
            period,
            x_max,
            phases,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }

    pub fn phases(&self) -> &[CellCyclePhase] {
        &self.phases
    }
}

/// Per-phase population densities over the age grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct PopulationState {
    time: f64,
    dx: f64,
    /// `phases[i][j]` is the density of phase `i` at age `j·dx`.
    phases: Vec<Vec<f64>>,
}

impl PopulationState {
    pub fn new(time: f64, dx: f64, phases: Vec<Vec<f64>>) -> Result<Self> {
        if !(dx > 0.0) || !dx.is_finite() {
            return Err(Error::InvalidInput(format!(
                "grid spacing must be a positive real, got {dx}"
            )));
        }
        if phases.is_empty() || phases[0].len() < 2 {
            return Err(Error::InvalidInput(
                "a population state needs ≥ 1 phase and ≥ 2 age nodes".into(),
            ));
        }
        let nodes = phases[0].len();
        for (i, p) in phases.iter().enumerate() {
            if p.len() != nodes {
                return Err(Error::InvalidInput(format!(
                    "phase {} has {} nodes, expected {nodes}",
                    i + 1,
                    p.len()
                )));
            }
            if let Some(j) = p.iter().position(|v| !(*v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "density of phase {} at node {j} is {} (must be finite and ≥ 0)",
                    i + 1,
                    p[j]
                )));
            }
        }
        Ok(PopulationState { time, dx, phases })
    }

    /// State with every phase initialised to `e^{−x}` on the model grid.
    pub fn exponential_profile(model: &CellCycleModel, dx: f64) -> Result<Self> {
        let nodes = grid_nodes(model.x_max(), dx)? + 1;
        let profile: Vec<f64> = (0..nodes).map(|j| (-(j as f64) * dx).exp()).collect();
        Self::new(0.0, dx, vec![profile; model.phase_count()])
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn phase_count(&self) -> usize {
        self.phases.len()
    }

    pub fn nodes(&self) -> usize {
        self.phases[0].len()
    }

    pub fn density(&self, phase: usize) -> &[f64] {
        &self.phases[phase]
    }

    /// Total mass `Σ_i ∫ n_i dx` by the trapezoid rule.
    pub fn total_mass(&self) -> f64 {
        self.phases
            .iter()
            .map(|p| trapezoid_mass(p, self.dx))
            .sum()
    }

    pub(crate) fn phases_mut(&mut self) -> &mut Vec<Vec<f64>> {
        &mut self.phases
    }

    pub(crate) fn advance_time(&mut self, dt: f64) {
        self.time += dt;
    }
}

pub(crate) fn trapezoid_mass(p: &[f64], dx: f64) -> f64 {
    let n = p.len();
    let inner: f64 = p[1..n - 1].iter().sum();
    dx * (0.5 * p[0] + inner + 0.5 * p[n - 1])
}

/// Number of grid cells covering `[0, x_max]`; `x_max` must be a whole
/// multiple of `dx`.
pub(crate) fn grid_nodes(x_max: f64, dx: f64) -> Result<usize> {
    if !(dx > 0.0) || !dx.is_finite() {
        return Err(Error::InvalidInput(format!(
            "grid spacing must be a positive real, got {dx}"
        )));
    }
    let cells = x_max / dx;
    let rounded = cells.round();
    if (cells - rounded).abs() > 1e-9 * cells.max(1.0) || rounded < 2.0 {
        return Err(Error::InvalidInput(format!(
            "age truncation {x_max} must be a whole multiple (≥ 2) of the grid spacing {dx}"
        )));
    }
    Ok(rounded as usize)
}

/// Simulation grid for the Floquet growth-rate measurement.
#[derive(Debug, Clone, PartialEq)]
pub struct PdeGrid {
    /// Age-grid spacing; the time step equals it (unit-speed aging).
    pub dx: f64,
    /// Minimum periods simulated before measurement starts; the solver
    /// always warms up at least until the initial profile has aged out of
    /// the truncated window (`x_max/T` periods plus one).
    pub warmup_periods: usize,
    /// Periods over which the growth rate is averaged.
    pub measure_periods: usize,
    /// Residual threshold on the renormalized period map below which the
    /// eigenstate is reported converged.
    pub state_tol: f64,
    /// Run even when [`check_assumptions`] fails.
    pub allow_failed_assumptions: bool,
}

impl Default for PdeGrid {
    fn default() -> Self {
        PdeGrid {
            dx: DEFAULT_DX,
            warmup_periods: DEFAULT_WARMUP_PERIODS,
            measure_periods: DEFAULT_MEASURE_PERIODS,
            state_tol: 1e-7,
            allow_failed_assumptions: false,
        }
    }
}

/// Outcome of the standing-assumption check.
#[derive(Debug, Clone, PartialEq)]
pub struct AssumptionReport {
    /// All coefficients bounded on the evaluation grid.
    pub bounded: bool,
    /// The transition survival product `∏_i ∫ k_i e^{−M_i}`.
    pub survival_product: f64,
    /// `bounded` and `survival_product > 1/2`.
    pub pass: bool,
    /// Per-phase truncation factors `e^{−M_i(x_max)}`; small values mean the
    /// age truncation captures the integral well.
    pub tail_factors: Vec<f64>,
}

/// Time-grid resolution for the min/max envelopes in the assumption check.
const ASSUMPTION_TIME_GRID: usize = 256;
/// Age-grid intervals for the assumption quadrature.
const ASSUMPTION_AGE_GRID: usize = 2048;

/// Evaluates the standing assumptions: bounded rates and transition survival
/// product above 1/2.
///
/// Envelopes `k_i = min_t K_i` and `μ_i = max_t (d_i + K_i)` are taken over a
/// 256-point time grid per period; `M_i = ∫ μ_i` and the survival integrals
/// use the trapezoid rule on a 2048-interval age grid. Report-only: nothing
/// is rejected here.
pub fn check_assumptions(m: &CellCycleModel) -> AssumptionReport {
    let nt = ASSUMPTION_TIME_GRID;
    let nx = ASSUMPTION_AGE_GRID;
    let hx = m.x_max() / nx as f64;
    let period = m.period();

    let mut survival_product = 1.0;
    let mut bounded = true;
    let mut tail_factors = Vec::with_capacity(m.phase_count());
    for phase in m.phases() {
        // envelopes on the age grid
        let mut k_min = vec![f64::INFINITY; nx + 1];
        let mut mu_max = vec![f64::NEG_INFINITY; nx + 1];
        for j in 0..=nx {
            let x = j as f64 * hx;
            for k in 0..nt {
                let t = k as f64 * period / nt as f64;
                let trans = phase.transition.value(t, x);
                let total = trans + phase.apoptosis.value(t, x);
                if !total.is_finite() {
                    bounded = false;
                }
                k_min[j] = k_min[j].min(trans);
                mu_max[j] = mu_max[j].max(total);
            }
        }
        // M(x) by cumulative trapezoid, then ∫ k e^{−M} by trapezoid
        let mut m_cum = 0.0;
        let mut integral = 0.5 * hx * k_min[0]; // e^{−M(0)} = 1
        let mut prev_mu = mu_max[0];
        for j in 1..=nx {
            m_cum += 0.5 * hx * (prev_mu + mu_max[j]);
            prev_mu = mu_max[j];
            let w = if j == nx { 0.5 } else { 1.0 };
            integral += w * hx * k_min[j] * (-m_cum).exp();
        }
        survival_product *= integral;
        tail_factors.push((-m_cum).exp());
    }

    AssumptionReport {
        bounded,
        survival_product,
        pass: bounded && survival_product > 0.5,
        tail_factors,
    }
}

/// Growth comparison for the cell-cycle system, with the per-phase
/// artificial loss introduced by the averaging.
#[derive(Debug, Clone, PartialEq)]
pub struct CellCycleComparison {
    pub lambda_per: f64,
    pub lambda_s: f64,
    pub gap: f64,
    pub pass: bool,
    /// `sup_x (⟨K_i⟩_a(x) − ⟨K_i⟩_g(x))` per phase; nonnegative by the
    /// AM–GM inequality.
    pub artificial_loss: Vec<f64>,
}

/// Largest value of `⟨K⟩_a(x) − ⟨K⟩_g(x)` over ages in `[0, x_max]`.
///
/// The coefficient is piecewise constant in age, so the supremum is the
/// maximum over its age segments (a gate's zero segment contributes 0).
pub fn artificial_loss(coeff: &AgeTimeCoefficient, x_max: f64) -> Result<f64> {
    let mut edges = vec![0.0];
    edges.extend(coeff.age_breaks(x_max));
    edges.push(x_max);
    let mut sup = f64::NEG_INFINITY;
    for w in edges.windows(2) {
        let x_mid = 0.5 * (w[0] + w[1]);
        let diff = match coeff.scalar_at_age(x_mid) {
            Some(s) => s.arith_mean() - s.geom_mean()?,
            None => 0.0,
        };
        sup = sup.max(diff);
    }
    Ok(sup)
}

/// Computes `λ_per` (transport simulation) and `λ_s` (characteristic
/// equation of the averaged system) and checks `λ_per ≥ λ_s` against
/// `tol_compare`.
pub fn compare_growth_rates(
    m: &CellCycleModel,
    grid: &PdeGrid,
    tol_compare: f64,
) -> Result<CellCycleComparison> {
    let per = floquet_growth_rate(m, grid)?;
    let avg = averaged_perron_rate(m)?;
    let losses = m
        .phases()
        .iter()
        .map(|p| artificial_loss(&p.transition, m.x_max()))
        .collect::<Result<Vec<f64>>>()?;
    let gap = per.eigenvalue - avg.eigenvalue;
    Ok(CellCycleComparison {
        lambda_per: per.eigenvalue,
        lambda_s: avg.eigenvalue,
        gap,
        pass: gap >= -tol_compare,
        artificial_loss: losses,
    })
}

pub(crate) fn max_rate_bounds(m: &CellCycleModel) -> (f64, f64) {
    let mut max_mu: f64 = 0.0;
    let mut max_k: f64 = 0.0;
    for phase in m.phases() {
        max_k = max_k.max(phase.transition.max_value());
        max_mu = max_mu.max(phase.transition.max_value() + phase.apoptosis.max_value());
    }
    (max_mu, max_k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    pub(crate) fn simple_model(i: usize, k: f64, d: f64, x_max: f64) -> CellCycleModel {
        let period = 1.0;
        let phases = (0..i)
            .map(|_| CellCyclePhase {
                apoptosis: AgeTimeCoefficient::constant(period, d).unwrap(),
                transition: AgeTimeCoefficient::constant(period, k).unwrap(),
            })
            .collect();
        CellCycleModel::new(period, x_max, phases).unwrap()
    }

    #[test]
    fn assumption_check_single_phase_unit_transition() {
        // ∫₀²⁰ e^{−y} dy = 1 − e^{−20} ≈ 1 > 1/2
        let m = simple_model(1, 1.0, 0.0, 20.0);
        let report = check_assumptions(&m);
        assert!(report.pass);
        assert_abs_diff_eq!(report.survival_product, 1.0 - (-20.0f64).exp(), epsilon = 1e-5);
        assert!(report.tail_factors[0] < 1e-8);
    }

    #[test]
    fn assumption_check_zero_transition_fails() {
        let m = simple_model(1, 0.0, 0.0, 20.0);
        let report = check_assumptions(&m);
        assert_eq!(report.survival_product, 0.0);
        assert!(!report.pass);
    }

    #[test]
    fn assumption_check_two_phases() {
        let m = simple_model(2, 1.0, 0.0, 20.0);
        let report = check_assumptions(&m);
        assert!(report.pass);
        assert_abs_diff_eq!(report.survival_product, 1.0, epsilon = 1e-4);
    }

    #[test]
    fn rejects_negative_coefficients() {
        let level = PeriodicScalar::cosine(1.0, 0.5, 1.0, 0.0).unwrap();
        assert!(AgeTimeCoefficient::uniform(level).is_err());
        assert!(AgeTimeCoefficient::constant(1.0, -0.1).is_err());
    }

    #[test]
    fn gate_and_sampled_age_profiles() {
        let level = PeriodicScalar::constant(1.0, 2.0).unwrap();
        let gate = AgeTimeCoefficient::new(AgeProfile::Gate {
            x_on: 1.5,
            level: level.clone(),
        })
        .unwrap();
        assert_eq!(gate.value(0.3, 1.0), 0.0);
        assert_eq!(gate.value(0.3, 1.5), 2.0);
        assert_eq!(gate.age_breaks(10.0), vec![1.5]);
        assert_eq!(gate.age_breaks(1.0), Vec::<f64>::new());

        let sampled = AgeTimeCoefficient::new(AgeProfile::Sampled {
            x_step: 1.0,
            values: vec![
                PeriodicScalar::constant(1.0, 1.0).unwrap(),
                PeriodicScalar::constant(1.0, 3.0).unwrap(),
            ],
        })
        .unwrap();
        assert_eq!(sampled.value(0.0, 0.5), 1.0);
        assert_eq!(sampled.value(0.0, 1.5), 3.0);
        // last value extends beyond the sampled range
        assert_eq!(sampled.value(0.0, 7.0), 3.0);
        assert_eq!(sampled.max_value(), 3.0);
    }

    #[test]
    fn artificial_loss_is_nonnegative_and_zero_for_constants() {
        let constant = AgeTimeCoefficient::constant(1.0, 2.0).unwrap();
        assert_abs_diff_eq!(artificial_loss(&constant, 10.0).unwrap(), 0.0);

        let square = AgeTimeCoefficient::uniform(
            PeriodicScalar::square(1.0, 1.0, 4.0, 0.5, 0.0).unwrap(),
        )
        .unwrap();
        // ⟨K⟩_a − ⟨K⟩_g = 2.5 − 2
        assert_abs_diff_eq!(artificial_loss(&square, 10.0).unwrap(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn population_state_mass() {
        let m = simple_model(2, 1.0, 0.0, 2.0);
        let s = PopulationState::exponential_profile(&m, 0.5).unwrap();
        assert_eq!(s.nodes(), 5);
        // trapezoid of e^{−x} on [0,2] with h = 0.5, two phases
        let expected: f64 = 2.0
            * 0.5
            * (0.5 + (-0.5f64).exp() + (-1.0f64).exp() + (-1.5f64).exp()
                + 0.5 * (-2.0f64).exp());
        assert_abs_diff_eq!(s.total_mass(), expected, epsilon = 1e-12);
    }
}
