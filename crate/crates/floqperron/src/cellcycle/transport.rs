//! Characteristics-aligned transport solver for the cell-cycle system.
//!
//! With `Δt = Δx` the age derivative is an exact shift along the grid, so
//! one step is: shift each density right by one node, damp it by the exact
//! exponential of the per-step loss integral `∫ (d_i + K_i) dt` (time
//! integral in closed form along the characteristic), then fill the age-0
//! node from the renewal integral at the new time. The renewal integrals
//! couple the phase boundaries cyclically through their age-0 endpoints;
//! that linear cycle is solved exactly, so positivity is preserved to the
//! last bit.
//!
//! Age discontinuities of the coefficients (gate switch-on ages, sample
//! boundaries) need not sit on the grid: a characteristic crossing one
//! inside a step splits its loss integral at the crossing time, and the
//! renewal quadrature integrates the discontinuous kernel against the
//! piecewise-linear density exactly (hat-function overlaps). Without these
//! corrections an off-grid gate costs O(Δx) in the growth rate; with them
//! the scheme stays second order.
//!
//! The Floquet growth rate is measured by running the step over warmup
//! periods and then averaging the per-period log mass ratios, which is power
//! iteration on the period map with mass renormalization; the residual
//! between successive renormalized states is the convergence diagnostic.

use crate::error::{Error, Result};
use crate::mat::normalize_max;
use crate::periodic::PeriodicScalar;
use crate::spectral::EigenReport;

use super::{check_assumptions, grid_nodes, CellCycleModel, PdeGrid, PopulationState};

/// Snapping tolerance for coefficient breaks that sit on the grid.
const GRID_EPS: f64 = 1e-12;

/// Loss-integral parts of a cell crossing an age break: each part is one
/// time law active over a sub-window `[σ_lo, σ_hi]` of the step.
type LossParts = Vec<(PeriodicScalar, f64, f64)>;

/// Kernel–hat overlap parts at one node: `(time law, overlap length)`.
type KernelParts = Vec<(PeriodicScalar, f64)>;

/// Time-independent age segmentation of one phase on a fixed grid.
///
/// Cells are indexed by their list position `ℓ` (age span
/// `[ℓ·dx, (ℓ+1)·dx]`, target node `ℓ+1`); nodes by `j` (age `j·dx`).
#[derive(Debug, Clone)]
struct PhaseGeometry {
    /// Runs of whole cells sharing one pair of time laws (apoptosis,
    /// transition); `None` means identically zero over the run.
    regular: Vec<(usize, usize, Option<PeriodicScalar>, Option<PeriodicScalar>)>,
    /// Cells crossing an age break, with their split loss integrals.
    straddle: Vec<(usize, LossParts)>,
    /// Renewal kernel by nodal value over node runs (trapezoid weights).
    kernel_runs: Vec<(usize, usize, Option<PeriodicScalar>)>,
    /// Nodes whose hat support contains an age break: exact kernel–hat
    /// overlaps replace the trapezoid weight there (base law kept for the
    /// weight swap).
    kernel_overrides: Vec<(usize, KernelParts, Option<PeriodicScalar>)>,
}

/// Segment pieces `[lo, hi) → value law` of a coefficient within `[0, x_max]`.
fn coefficient_pieces(
    coeff: &super::AgeTimeCoefficient,
    x_max: f64,
) -> Vec<(f64, f64, Option<PeriodicScalar>)> {
    let mut edges = vec![0.0];
    edges.extend(coeff.age_breaks(x_max));
    edges.push(x_max);
    edges
        .windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            (w[0], w[1], coeff.scalar_at_age(mid).cloned())
        })
        .collect()
}

/// Overlap of the hat function of node `j` with the age interval `[p, q)`.
fn hat_overlap(j: usize, last: usize, dx: f64, p: f64, q: f64) -> f64 {
    let xj = j as f64 * dx;
    let mut overlap = 0.0;
    if j >= 1 {
        // rising ramp on [x_{j-1}, x_j]
        let u1 = ((p - (xj - dx)) / dx).clamp(0.0, 1.0);
        let u2 = ((q - (xj - dx)) / dx).clamp(0.0, 1.0);
        overlap += dx * (u2 * u2 - u1 * u1) / 2.0;
    }
    if j < last {
        // falling ramp on [x_j, x_{j+1}]
        let v1 = ((p - xj) / dx).clamp(0.0, 1.0);
        let v2 = ((q - xj) / dx).clamp(0.0, 1.0);
        overlap += dx * ((1.0 - v1) * (1.0 - v1) - (1.0 - v2) * (1.0 - v2)) / 2.0;
    }
    overlap
}

fn build_geometry(m: &CellCycleModel, dx: f64, cells: usize) -> Vec<PhaseGeometry> {
    let x_max = m.x_max();
    let last = cells;
    m.phases()
        .iter()
        .map(|phase| {
            let d_pieces = coefficient_pieces(&phase.apoptosis, x_max);
            let k_pieces = coefficient_pieces(&phase.transition, x_max);

            // breaks strictly inside a cell split that cell's loss integral
            let mut breaks: Vec<f64> = phase
                .apoptosis
                .age_breaks(x_max)
                .into_iter()
                .chain(phase.transition.age_breaks(x_max))
                .collect();
            breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
            breaks.dedup_by(|a, b| (*a - *b).abs() <= GRID_EPS * x_max.max(1.0));

            let off_grid = |c: f64| {
                let cell_pos = c / dx;
                (cell_pos - cell_pos.round()).abs() > GRID_EPS * (cells as f64)
            };
            let mut straddled: Vec<usize> = breaks
                .iter()
                .filter(|c| off_grid(**c))
                .map(|c| (c / dx).floor() as usize)
                .filter(|l| *l < cells)
                .collect();
            straddled.sort_unstable();
            straddled.dedup();

            let mut straddle = Vec::with_capacity(straddled.len());
            for &l in &straddled {
                let span_lo = l as f64 * dx;
                let span_hi = span_lo + dx;
                let mut parts = Vec::new();
                for pieces in [&d_pieces, &k_pieces] {
                    for (p, q, scalar) in pieces.iter() {
                        let lo = p.max(span_lo);
                        let hi = q.min(span_hi);
                        if hi > lo + GRID_EPS * dx {
                            if let Some(s) = scalar {
                                parts.push((s.clone(), lo - span_lo, hi - span_lo));
                            }
                        }
                    }
                }
                straddle.push((l, parts));
            }

            // regular cells grouped by their (apoptosis, transition) laws
            let mut regular = Vec::new();
            let mut l = 0usize;
            while l < cells {
                if straddled.binary_search(&l).is_ok() {
                    l += 1;
                    continue;
                }
                let mid = (l as f64 + 0.5) * dx;
                let d = phase.apoptosis.scalar_at_age(mid);
                let k = phase.transition.scalar_at_age(mid);
                let mut end = l + 1;
                while end < cells && straddled.binary_search(&end).is_err() {
                    let emid = (end as f64 + 0.5) * dx;
                    if phase.apoptosis.scalar_at_age(emid) != d
                        || phase.transition.scalar_at_age(emid) != k
                    {
                        break;
                    }
                    end += 1;
                }
                regular.push((l, end, d.cloned(), k.cloned()));
                l = end;
            }

            // renewal kernel: nodal runs plus exact hat overlaps where a
            // break (on-grid or not) lies inside a node's hat support
            let node_ages: Vec<f64> = (0..=cells).map(|j| j as f64 * dx).collect();
            let kernel_runs = phase
                .transition
                .runs_over(&node_ages)
                .into_iter()
                .map(|(a, b, s)| (a, b, s.cloned()))
                .collect();
            let mut override_nodes: Vec<usize> = Vec::new();
            for c in phase.transition.age_breaks(x_max) {
                let anchor = (c / dx).floor() as usize;
                for j in anchor.saturating_sub(1)..=(anchor + 1).min(last) {
                    let lo = if j == 0 { 0.0 } else { (j - 1) as f64 * dx };
                    let hi = ((j + 1).min(last)) as f64 * dx;
                    if c > lo + GRID_EPS && c < hi - GRID_EPS {
                        override_nodes.push(j);
                    }
                }
            }
            override_nodes.sort_unstable();
            override_nodes.dedup();
            let kernel_overrides = override_nodes
                .into_iter()
                .map(|j| {
                    let parts: Vec<(PeriodicScalar, f64)> = k_pieces
                        .iter()
                        .filter_map(|(p, q, scalar)| {
                            scalar.as_ref().and_then(|s| {
                                let w = hat_overlap(j, last, dx, *p, *q);
                                (w > 0.0).then(|| (s.clone(), w))
                            })
                        })
                        .collect();
                    let base = phase.transition.scalar_at_age(j as f64 * dx).cloned();
                    (j, parts, base)
                })
                .collect();

            PhaseGeometry {
                regular,
                straddle,
                kernel_runs,
                kernel_overrides,
            }
        })
        .collect()
}

/// Per-step, per-phase update plan derived from the geometry at one time.
///
/// `decay[(a, b, f)]` damps shifted cells with list index `ℓ ∈ [a, b)`
/// (target node `ℓ+1`) by `f`; `kernel[(a, b, κ)]` gives the transition rate
/// at nodes `j ∈ [a, b)` at the new time; `kernel_overrides[(j, w, κ_base)]`
/// replaces node `j`'s trapezoid weight by the absolute weight `w`.
#[derive(Debug, Clone)]
struct StepPlan {
    decay: Vec<Vec<(usize, usize, f64)>>,
    kernel: Vec<Vec<(usize, usize, f64)>>,
    kernel_overrides: Vec<Vec<(usize, f64, f64)>>,
}

fn build_step_plan(geometry: &[PhaseGeometry], t: f64, dt: f64) -> StepPlan {
    let t_new = t + dt;
    let mut decay = Vec::with_capacity(geometry.len());
    let mut kernel = Vec::with_capacity(geometry.len());
    let mut kernel_overrides = Vec::with_capacity(geometry.len());
    for geo in geometry {
        let mut runs: Vec<(usize, usize, f64)> = geo
            .regular
            .iter()
            .map(|(a, b, d, k)| {
                let mut exponent = 0.0;
                if let Some(s) = d {
                    exponent += s.integral(t, t_new);
                }
                if let Some(s) = k {
                    exponent += s.integral(t, t_new);
                }
                (*a, *b, (-exponent).exp())
            })
            .collect();
        for (l, parts) in &geo.straddle {
            // the characteristic enters the cell at age l·dx at time t, so a
            // part active on ages [σ_lo, σ_hi] is active on the matching
            // time window
            let exponent: f64 = parts
                .iter()
                .map(|(s, lo, hi)| s.integral(t + lo, t + hi))
                .sum();
            runs.push((*l, l + 1, (-exponent).exp()));
        }
        runs.sort_unstable_by_key(|r| r.0);
        decay.push(runs);

        kernel.push(
            geo.kernel_runs
                .iter()
                .map(|(a, b, s)| (*a, *b, s.as_ref().map(|s| s.value(t_new)).unwrap_or(0.0)))
                .collect(),
        );
        kernel_overrides.push(
            geo.kernel_overrides
                .iter()
                .map(|(j, parts, base)| {
                    let w: f64 = parts.iter().map(|(s, w)| s.value(t_new) * w).sum();
                    let kappa = base.as_ref().map(|s| s.value(t_new)).unwrap_or(0.0);
                    (*j, w, kappa)
                })
                .collect(),
        );
    }
    StepPlan {
        decay,
        kernel,
        kernel_overrides,
    }
}

/// Advance the densities by one step using a prebuilt plan. `new` buffers
/// must have the same shape as the state.
fn apply_step(
    plan: &StepPlan,
    state: &mut PopulationState,
    new: &mut Vec<Vec<f64>>,
    dt: f64,
) -> Result<()> {
    let phases = state.phase_count();
    let nodes = state.nodes();
    let last = nodes - 1;
    let dx = state.dx();

    for i in 0..phases {
        let old = state.density(i);
        let fresh = &mut new[i];
        for &(a, b, f) in &plan.decay[i] {
            for l in a..b {
                fresh[l + 1] = old[l] * f;
            }
        }
        fresh[0] = 0.0;
    }

    // renewal integrals at the new time; the age-0 endpoints couple the
    // phases cyclically, solved in closed form
    let mut alpha = vec![0.0; phases];
    let mut beta = vec![0.0; phases];
    for i in 0..phases {
        let source = (i + phases - 1) % phases;
        let fresh = &new[source];
        // trapezoid weights per nodal run, in absolute units
        let mut tail = 0.0; // Σ_{j ≥ 1} weight_j · n_j
        let mut w0 = 0.0; // weight of the unknown n_0
        for &(a, b, kappa) in &plan.kernel[source] {
            if kappa == 0.0 {
                continue;
            }
            let lo = a.max(1);
            let hi = b.min(last);
            if lo < hi {
                let run_sum: f64 = fresh[lo..hi].iter().sum();
                tail += kappa * dx * run_sum;
            }
            if last >= a && last < b {
                tail += 0.5 * kappa * dx * fresh[last];
            }
            if a == 0 {
                w0 = 0.5 * kappa * dx;
            }
        }
        // exact kernel–hat overlaps near age breaks replace the trapezoid
        // weight of the affected nodes
        for &(j, w, kappa_base) in &plan.kernel_overrides[source] {
            let trapezoid_w = if j == 0 || j == last {
                0.5 * kappa_base * dx
            } else {
                kappa_base * dx
            };
            if j == 0 {
                w0 += w - trapezoid_w;
            } else {
                tail += (w - trapezoid_w) * fresh[j];
            }
        }
        let factor = if i == 0 { 2.0 } else { 1.0 };
        beta[i] = factor * tail;
        alpha[i] = factor * w0;
    }
    // b_0 = β_0 + α_0 b_{I−1}, b_i = β_i + α_i b_{i−1}
    let mut sum = beta[0];
    let mut prod = alpha[0];
    for i in (1..phases).rev() {
        sum += prod * beta[i];
        prod *= alpha[i];
    }
    if !(prod < 1.0) {
        return Err(Error::DegenerateModel(format!(
            "renewal weights at age 0 reach {prod} ≥ 1; refine the grid"
        )));
    }
    let b0 = sum / (1.0 - prod);
    new[0][0] = b0;
    for i in 1..phases {
        new[i][0] = beta[i] + alpha[i] * new[i - 1][0];
    }

    for (i, fresh) in new.iter().enumerate() {
        if fresh.iter().any(|v| !v.is_finite()) {
            return Err(Error::IntegrationFailure {
                step: 0,
                time: state.time(),
                reason: format!("density of phase {} became non-finite", i + 1),
            });
        }
    }
    std::mem::swap(state.phases_mut(), new);
    state.advance_time(dt);
    Ok(())
}

/// One transport step of size `Δt = Δx`.
///
/// Requires the state grid to match the model (`nodes·Δx = x_max`) and the
/// step to equal the grid spacing; returns the advanced state.
pub fn step_transport(
    m: &CellCycleModel,
    s: &PopulationState,
    dt: f64,
) -> Result<PopulationState> {
    if (dt - s.dx()).abs() > 1e-12 * s.dx() {
        return Err(Error::InvalidInput(format!(
            "time step {dt} must equal the age grid spacing {} (unit-speed aging)",
            s.dx()
        )));
    }
    if s.phase_count() != m.phase_count() {
        return Err(Error::InvalidInput(format!(
            "state has {} phases, model has {}",
            s.phase_count(),
            m.phase_count()
        )));
    }
    let cells = grid_nodes(m.x_max(), s.dx())?;
    if cells + 1 != s.nodes() {
        return Err(Error::InvalidInput(format!(
            "state has {} age nodes, model grid needs {}",
            s.nodes(),
            cells + 1
        )));
    }
    let geometry = build_geometry(m, dt, cells);
    let plan = build_step_plan(&geometry, s.time(), dt);
    let mut state = s.clone();
    let mut scratch = vec![vec![0.0; state.nodes()]; state.phase_count()];
    apply_step(&plan, &mut state, &mut scratch, dt)?;
    Ok(state)
}

/// Per-period diagnostics of a growth-rate run.
#[derive(Debug, Clone)]
pub struct GrowthTrace {
    /// Time at the end of each simulated period.
    pub period_times: Vec<f64>,
    /// Mass ratio over each period (the Floquet multiplier estimate).
    pub mass_ratios: Vec<f64>,
    /// ∞-norm change of the renormalized state over each period.
    pub residuals: Vec<f64>,
    /// Final per-phase age profiles, max-normalized.
    pub final_profiles: Vec<Vec<f64>>,
    /// Age grid spacing of the profiles.
    pub dx: f64,
}

/// Floquet growth rate of the periodic system by long-time transport.
///
/// Runs `warmup_periods` from a positive initial profile, then averages the
/// per-period log mass ratios over `measure_periods`; each period acts as
/// one power-iteration step on the period map (states renormalized to unit
/// mass), and the final inter-period state change is the reported residual.
/// Refuses models that fail [`check_assumptions`] unless the grid sets
/// `allow_failed_assumptions`.
pub fn floquet_growth_rate(m: &CellCycleModel, grid: &PdeGrid) -> Result<EigenReport> {
    floquet_growth_rate_traced(m, grid).map(|(report, _)| report)
}

/// As [`floquet_growth_rate`], also returning the per-period trace.
pub fn floquet_growth_rate_traced(
    m: &CellCycleModel,
    grid: &PdeGrid,
) -> Result<(EigenReport, GrowthTrace)> {
    if grid.measure_periods == 0 {
        return Err(Error::InvalidInput(
            "at least one measurement period is required".into(),
        ));
    }
    let dt = grid.dx;
    let steps_f = m.period() / dt;
    let steps_per_period = steps_f.round();
    if (steps_f - steps_per_period).abs() > 1e-9 * steps_f || steps_per_period < 1.0 {
        return Err(Error::InvalidInput(format!(
            "the period {} must be a whole multiple of the time step {dt}",
            m.period()
        )));
    }
    let steps_per_period = steps_per_period as usize;
    let cells = grid_nodes(m.x_max(), dt)?;

    if !grid.allow_failed_assumptions {
        let report = check_assumptions(m);
        if !report.pass {
            return Err(Error::AssumptionFailed(format!(
                "transition survival product is {:.6} (needs > 0.5); set \
                 allow_failed_assumptions to run regardless",
                report.survival_product
            )));
        }
    }

    // the coefficient laws are T-periodic, so one period's worth of plans
    // serves the whole run
    let geometry = build_geometry(m, dt, cells);
    let plans: Vec<StepPlan> = (0..steps_per_period)
        .map(|s| build_step_plan(&geometry, s as f64 * dt, dt))
        .collect();

    let mut state = PopulationState::exponential_profile(m, dt)?;
    let mut scratch = vec![vec![0.0; state.nodes()]; state.phase_count()];
    normalize_mass(&mut state)?;

    // the transport has memory x_max: until the initial data has aged out of
    // the window, per-period mass ratios mix in the (arbitrary) initial
    // profile, so the warmup always covers at least one full flush
    let flush_periods = (m.x_max() / m.period()).ceil() as usize + 1;
    let warmup = grid.warmup_periods.max(flush_periods);
    let total_periods = warmup + grid.measure_periods;
    let mut period_times = Vec::with_capacity(total_periods);
    let mut mass_ratios = Vec::with_capacity(total_periods);
    let mut residuals = Vec::with_capacity(total_periods);
    let mut prev = flatten_normalized(&state);
    let mut log_sum = 0.0;

    for period in 0..total_periods {
        for plan in &plans {
            apply_step(plan, &mut state, &mut scratch, dt)?;
        }
        let ratio = state.total_mass();
        if !(ratio > 0.0) || !ratio.is_finite() {
            return Err(Error::DegenerateModel(format!(
                "total mass became {ratio} after period {}",
                period + 1
            )));
        }
        normalize_mass(&mut state)?;
        let flat = flatten_normalized(&state);
        let residual = flat
            .iter()
            .zip(&prev)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        prev = flat;

        period_times.push(state.time());
        mass_ratios.push(ratio);
        residuals.push(residual);
        if period >= warmup {
            log_sum += ratio.ln();
        }
    }

    let lambda = log_sum / (grid.measure_periods as f64 * m.period());
    let final_residual = *residuals.last().expect("at least one period");
    let mut final_profiles: Vec<Vec<f64>> = (0..state.phase_count())
        .map(|i| state.density(i).to_vec())
        .collect();
    let peak = final_profiles
        .iter()
        .flat_map(|p| p.iter().cloned())
        .fold(0.0f64, f64::max);
    if peak > 0.0 {
        for p in &mut final_profiles {
            for v in p.iter_mut() {
                *v /= peak;
            }
        }
    }

    let eigenvector: Vec<f64> = final_profiles.iter().flatten().cloned().collect();
    let report = EigenReport {
        eigenvalue: lambda,
        eigenvector,
        residual: final_residual,
        iterations: total_periods,
        converged: final_residual <= grid.state_tol,
    };
    let trace = GrowthTrace {
        period_times,
        mass_ratios,
        residuals,
        final_profiles,
        dx: dt,
    };
    Ok((report, trace))
}

fn normalize_mass(state: &mut PopulationState) -> Result<()> {
    let mass = state.total_mass();
    if !(mass > 0.0) || !mass.is_finite() {
        return Err(Error::DegenerateModel(format!(
            "total mass is {mass}; cannot normalize"
        )));
    }
    for p in state.phases_mut() {
        for v in p.iter_mut() {
            *v /= mass;
        }
    }
    Ok(())
}

fn flatten_normalized(state: &PopulationState) -> Vec<f64> {
    let mut flat: Vec<f64> = (0..state.phase_count())
        .flat_map(|i| state.density(i).iter().cloned())
        .collect();
    normalize_max(&mut flat);
    flat
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellcycle::{AgeTimeCoefficient, CellCyclePhase};
    use crate::periodic::PeriodicScalar;
    use approx::assert_abs_diff_eq;

    fn constant_model(i: usize, k: f64, d: f64, x_max: f64) -> CellCycleModel {
        let phases = (0..i)
            .map(|_| CellCyclePhase {
                apoptosis: AgeTimeCoefficient::constant(1.0, d).unwrap(),
                transition: AgeTimeCoefficient::constant(1.0, k).unwrap(),
            })
            .collect();
        CellCycleModel::new(1.0, x_max, phases).unwrap()
    }

    #[test]
    fn zero_rates_give_pure_shift() {
        let m = constant_model(1, 0.0, 0.0, 2.0);
        let dx = 0.25;
        let mut density = vec![0.0; 9];
        density[3] = 1.0;
        density[4] = 2.0;
        let s = PopulationState::new(0.0, dx, vec![density.clone()]).unwrap();
        let s1 = step_transport(&m, &s, dx).unwrap();
        assert_eq!(s1.density(0)[0], 0.0);
        assert_eq!(s1.density(0)[4], 1.0);
        assert_eq!(s1.density(0)[5], 2.0);
        // mass conserved while the support stays interior
        assert_abs_diff_eq!(s1.total_mass(), s.total_mass(), epsilon = 1e-15);
        assert_abs_diff_eq!(s1.time(), dx);
    }

    #[test]
    fn renewal_eigenstate_grows_at_unit_rate() {
        // K = 1, d = 0: the stationary profile is e^{−(λ+K)x} = e^{−2x}
        // with λ = 1; one step multiplies mass by e^{Δt} up to O(Δt²)
        let m = constant_model(1, 1.0, 0.0, 20.0);
        let dx = 1.0 / 200.0;
        let nodes = 20 * 200 + 1;
        let profile: Vec<f64> = (0..nodes).map(|j| (-2.0 * j as f64 * dx).exp()).collect();
        let s = PopulationState::new(0.0, dx, vec![profile]).unwrap();
        let s1 = step_transport(&m, &s, dx).unwrap();
        let ratio = s1.total_mass() / s.total_mass();
        assert_abs_diff_eq!(ratio, dx.exp(), epsilon = 5.0 * dx * dx);
    }

    #[test]
    fn nonnegativity_is_preserved() {
        let transition = AgeTimeCoefficient::uniform(
            PeriodicScalar::square(1.0, 0.5, 2.0, 0.4, 0.3).unwrap(),
        )
        .unwrap();
        let m = CellCycleModel::new(
            1.0,
            5.0,
            vec![CellCyclePhase {
                apoptosis: AgeTimeCoefficient::constant(1.0, 0.2).unwrap(),
                transition,
            }],
        )
        .unwrap();
        let dx = 0.05;
        let mut s = PopulationState::exponential_profile(&m, dx).unwrap();
        for _ in 0..50 {
            s = step_transport(&m, &s, dx).unwrap();
            assert!(s.density(0).iter().all(|v| *v >= 0.0));
        }
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let m = constant_model(1, 1.0, 0.0, 2.0);
        let s = PopulationState::new(0.0, 0.25, vec![vec![1.0; 9]]).unwrap();
        assert!(step_transport(&m, &s, 0.2).is_err());
        let wrong_nodes = PopulationState::new(0.0, 0.25, vec![vec![1.0; 7]]).unwrap();
        assert!(step_transport(&m, &wrong_nodes, 0.25).is_err());
        let two_phase = PopulationState::new(0.0, 0.25, vec![vec![1.0; 9]; 2]).unwrap();
        assert!(step_transport(&m, &two_phase, 0.25).is_err());
    }

    #[test]
    fn single_phase_benchmark_rate() {
        let m = constant_model(1, 1.0, 0.0, 20.0);
        let grid = PdeGrid {
            dx: 1.0 / 400.0,
            ..PdeGrid::default()
        };
        let r = floquet_growth_rate(&m, &grid).unwrap();
        assert!(r.converged, "residual {}", r.residual);
        assert_abs_diff_eq!(r.eigenvalue, 1.0, epsilon = 2e-3);
    }

    #[test]
    fn two_phase_benchmark_rate() {
        let m = constant_model(2, 1.0, 0.0, 20.0);
        let grid = PdeGrid {
            dx: 1.0 / 400.0,
            ..PdeGrid::default()
        };
        let r = floquet_growth_rate(&m, &grid).unwrap();
        assert_abs_diff_eq!(
            r.eigenvalue,
            std::f64::consts::SQRT_2 - 1.0,
            epsilon = 2e-3
        );
    }

    #[test]
    fn constant_apoptosis_shifts_rate_exactly() {
        let grid = PdeGrid {
            dx: 1.0 / 100.0,
            ..PdeGrid::default()
        };
        let base = floquet_growth_rate(&constant_model(1, 1.0, 0.0, 20.0), &grid)
            .unwrap()
            .eigenvalue;
        for c in [0.25, 0.8] {
            let shifted = floquet_growth_rate(&constant_model(1, 1.0, c, 20.0), &grid)
                .unwrap()
                .eigenvalue;
            assert_abs_diff_eq!(shifted, base - c, epsilon = 1e-6);
        }
    }

    #[test]
    fn assumption_gate_refuses_and_can_be_overridden() {
        // K = 0.1, d = 0.3: survival product 0.1/0.4 = 0.25 fails the bound,
        // but the renewal still sustains a (shrinking) population with
        // λ = K − d = −0.2 from the characteristic equation
        let m = constant_model(1, 0.1, 0.3, 20.0);
        let grid = PdeGrid {
            dx: 1.0 / 50.0,
            ..PdeGrid::default()
        };
        assert!(matches!(
            floquet_growth_rate(&m, &grid),
            Err(Error::AssumptionFailed(_))
        ));
        let permissive = PdeGrid {
            allow_failed_assumptions: true,
            ..grid
        };
        let r = floquet_growth_rate(&m, &permissive).unwrap();
        assert_abs_diff_eq!(r.eigenvalue, -0.2, epsilon = 5e-3);
    }

    #[test]
    fn growth_trace_is_consistent() {
        // x_max/T = 2, so the flush floor (3 periods) matches the requested
        // warmup and the trace holds exactly 3 + 4 periods
        let m = constant_model(1, 1.0, 0.0, 2.0);
        let grid = PdeGrid {
            dx: 1.0 / 100.0,
            warmup_periods: 3,
            measure_periods: 4,
            ..PdeGrid::default()
        };
        let (report, trace) = floquet_growth_rate_traced(&m, &grid).unwrap();
        assert_eq!(trace.mass_ratios.len(), 7);
        let measured: f64 = trace.mass_ratios[3..].iter().map(|r| r.ln()).sum::<f64>()
            / (4.0 * m.period());
        assert_abs_diff_eq!(report.eigenvalue, measured, epsilon = 1e-14);
        assert_eq!(trace.final_profiles.len(), 1);
        assert_eq!(trace.final_profiles[0].len(), 2 * 100 + 1);
    }
}
