//! Floquet eigenvalue of the periodic monotone ODE system `Ẋ = A(t)X`.
//!
//! The fundamental solution `Φ(T)` over one period (the monodromy matrix) is
//! integrated with fixed-step classical Runge–Kutta. Because the flow of a
//! Metzler system preserves the nonnegative orthant, `Φ(T)` is a nonnegative
//! matrix and the dominant Floquet multiplier is its Perron root, so
//!
//! ```text
//! λ_per = (1/T) · log ρ(Φ(T)),
//! ```
//!
//! which reduces the Floquet problem to the already-tested Perron solver.
//!
//! Step boundaries are snapped to the discontinuities of square-wave and
//! sampled coefficients, and each smooth piece evaluates its coefficients
//! through an interior witness point, so the scheme keeps its fourth order
//! across jumps. Irreducibility is not required; on reducible systems the
//! dominant multiplier may be defective, in which case the eigenvector
//! residual of the embedded Perron report flags it.

use crate::error::{Error, Result};
use crate::mat::{inf_norm_vec, SquareMat};
use crate::periodic::PeriodicMatrix;
use crate::spectral::{perron_metzler, perron_nonneg, NonnegMatrix, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::GrowthComparison;

/// Default number of RK4 steps per period.
pub const DEFAULT_STEPS: usize = 2048;
/// Default tolerance for the `λ_per ≥ λ_s` comparison.
pub const DEFAULT_TOL_COMPARE: f64 = 1e-6;

/// Entries of `Φ(T)` this far below zero are rounding noise and are clamped;
/// anything more negative means the integration lost orthant preservation.
const NEG_CLAMP: f64 = 1e-12;

/// Minimum accepted step count per period.
const MIN_STEPS: usize = 16;

/// Fundamental solution over one period and the growth data derived from it.
#[derive(Debug, Clone)]
pub struct MonodromyResult {
    /// State dimension.
    pub dim: usize,
    /// Coefficient period.
    pub period: f64,
    /// `Φ(T)`, row-major, with sub-rounding negative entries clamped to 0.
    pub monodromy: Vec<f64>,
    /// `(1/T) log ρ(Φ(T))`.
    pub floquet_eigenvalue: f64,
    /// Perron vector of the monodromy, max-normalized.
    pub floquet_vector: Vec<f64>,
    /// Residual and iteration diagnostics of the embedded Perron solve.
    pub perron_residual: f64,
    /// Number of RK4 steps actually taken (≥ the requested count when
    /// discontinuities forced extra boundaries).
    pub steps: usize,
    /// Requested step size `T / steps_requested`.
    pub step_size: f64,
}

/// Smooth pieces of `[t0, t1]`: coefficient discontinuities become piece
/// boundaries, and extra boundaries (e.g. snapshot times) can be merged in.
fn smooth_pieces(a: &PeriodicMatrix, t0: f64, t1: f64, extra: &[f64]) -> Vec<(f64, f64)> {
    let period = a.period();
    let mut edges = vec![t0, t1];
    for bp in a.breakpoints() {
        // periodic extensions of the breakpoint that land inside (t0, t1)
        let mut k = ((t0 - bp) / period).floor();
        loop {
            let t = bp + k * period;
            if t > t1 {
                break;
            }
            if t > t0 {
                edges.push(t);
            }
            k += 1.0;
        }
    }
    edges.extend(extra.iter().copied().filter(|t| *t > t0 && *t < t1));
    edges.sort_by(|a, b| a.partial_cmp(b).unwrap());
    edges.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * period.max(1.0));
    edges.windows(2).map(|w| (w[0], w[1])).collect()
}

struct Rk4Workspace {
    a_mat: SquareMat,
    k: [SquareMat; 4],
    stage: SquareMat,
    steps_taken: usize,
}

impl Rk4Workspace {
    fn new(dim: usize) -> Self {
        Rk4Workspace {
            a_mat: SquareMat::zeros(dim),
            k: std::array::from_fn(|_| SquareMat::zeros(dim)),
            stage: SquareMat::zeros(dim),
            steps_taken: 0,
        }
    }

    /// One classical RK4 step of `Φ' = (A(t) − shift·I) Φ` with coefficient
    /// pieces resolved at `witness`.
    fn step(
        &mut self,
        a: &PeriodicMatrix,
        t: f64,
        h: f64,
        witness: f64,
        shift: f64,
        phi: &mut SquareMat,
    ) {
        let dim = phi.dim;
        let eval = |ws_a: &mut SquareMat, time: f64| {
            a.value_in_piece_into(time, witness, &mut ws_a.e);
            if shift != 0.0 {
                for i in 0..dim {
                    *ws_a.at_mut(i, i) -= shift;
                }
            }
        };

        eval(&mut self.a_mat, t);
        self.a_mat.mul_into(phi, &mut self.k[0]);

        for i in 0..dim * dim {
            self.stage.e[i] = phi.e[i] + 0.5 * h * self.k[0].e[i];
        }
        eval(&mut self.a_mat, t + 0.5 * h);
        self.a_mat.mul_into(&self.stage, &mut self.k[1]);

        for i in 0..dim * dim {
            self.stage.e[i] = phi.e[i] + 0.5 * h * self.k[1].e[i];
        }
        self.a_mat.mul_into(&self.stage, &mut self.k[2]);

        for i in 0..dim * dim {
            self.stage.e[i] = phi.e[i] + h * self.k[2].e[i];
        }
        eval(&mut self.a_mat, t + h);
        self.a_mat.mul_into(&self.stage, &mut self.k[3]);

        for i in 0..dim * dim {
            phi.e[i] += h / 6.0
                * (self.k[0].e[i] + 2.0 * self.k[1].e[i] + 2.0 * self.k[2].e[i] + self.k[3].e[i]);
        }
        self.steps_taken += 1;
    }

    /// Integrate across `[l, r]` in `ceil((r−l)/h_target)` equal steps.
    fn run_piece(
        &mut self,
        a: &PeriodicMatrix,
        l: f64,
        r: f64,
        h_target: f64,
        shift: f64,
        phi: &mut SquareMat,
    ) -> Result<()> {
        let witness = 0.5 * (l + r);
        let n = (((r - l) / h_target).ceil() as usize).max(1);
        let h = (r - l) / n as f64;
        for k in 0..n {
            let t = l + k as f64 * h;
            self.step(a, t, h, witness, shift, phi);
            if !phi.is_finite() {
                return Err(Error::IntegrationFailure {
                    step: self.steps_taken,
                    time: t,
                    reason: "state became non-finite".into(),
                });
            }
        }
        Ok(())
    }
}

/// Integrates the matrix ODE `Φ' = A(t)Φ`, `Φ(0) = I`, over one period and
/// reports the monodromy matrix together with the Floquet eigenvalue.
///
/// `steps` is the requested number of RK4 steps per period (≥ 16); the
/// actual count grows when coefficient discontinuities force extra step
/// boundaries.
pub fn integrate_fundamental(a: &PeriodicMatrix, steps: usize) -> Result<MonodromyResult> {
    if steps < MIN_STEPS {
        return Err(Error::InvalidInput(format!(
            "at least {MIN_STEPS} integration steps per period are required, got {steps}"
        )));
    }
    let dim = a.dim();
    let period = a.period();
    let h_target = period / steps as f64;

    let mut phi = SquareMat::identity(dim);
    let mut ws = Rk4Workspace::new(dim);
    for (l, r) in smooth_pieces(a, 0.0, period, &[]) {
        ws.run_piece(a, l, r, h_target, 0.0, &mut phi)?;
    }

    // The exact flow preserves the nonnegative orthant; only rounding-level
    // negative entries are tolerated.
    for (idx, x) in phi.e.iter_mut().enumerate() {
        if *x < 0.0 {
            if *x <= -NEG_CLAMP {
                return Err(Error::IntegrationFailure {
                    step: ws.steps_taken,
                    time: period,
                    reason: format!(
                        "monodromy entry ({},{}) = {x} lost nonnegativity; increase steps",
                        idx / dim,
                        idx % dim
                    ),
                });
            }
            *x = 0.0;
        }
    }

    let monodromy = NonnegMatrix::new(dim, phi.e.clone())?;
    let perron = perron_nonneg(&monodromy, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    if perron.eigenvalue <= 0.0 {
        return Err(Error::DegenerateModel(
            "monodromy spectral radius is numerically zero".into(),
        ));
    }
    Ok(MonodromyResult {
        dim,
        period,
        monodromy: phi.e,
        floquet_eigenvalue: perron.eigenvalue.ln() / period,
        floquet_vector: perron.eigenvector,
        perron_residual: perron.residual,
        steps: ws.steps_taken,
        step_size: h_target,
    })
}

/// Periodic Floquet eigenfunction sampled over one period.
#[derive(Debug, Clone)]
pub struct EigenfunctionSamples {
    /// Equispaced sample times from 0 to T inclusive.
    pub times: Vec<f64>,
    /// State snapshot at each sample time (nonnegative entries).
    pub states: Vec<Vec<f64>>,
    /// Relative ∞-norm mismatch between the first and last snapshot.
    pub periodicity_residual: f64,
}

/// Propagates the Perron vector of the monodromy through one period under
/// `Ẋ = (A(t) − λ_per·I) X`, returning `samples` equispaced snapshots.
///
/// First and last snapshots coincide up to the reported periodicity
/// residual (small when the dominant multiplier is well separated).
pub fn floquet_eigenfunction(
    a: &PeriodicMatrix,
    result: &MonodromyResult,
    samples: usize,
) -> Result<EigenfunctionSamples> {
    if samples == 0 {
        return Err(Error::InvalidInput("at least one sample is required".into()));
    }
    if result.dim != a.dim() || result.period != a.period() {
        return Err(Error::InvalidInput(
            "monodromy result does not match the coefficient matrix".into(),
        ));
    }
    let dim = a.dim();
    let period = a.period();
    let lambda = result.floquet_eigenvalue;
    let h_target = result.step_size;

    let times: Vec<f64> = if samples == 1 {
        vec![0.0]
    } else {
        (0..samples)
            .map(|k| k as f64 * period / (samples - 1) as f64)
            .collect()
    };

    let clamp = |v: &mut Vec<f64>, t: f64, step: usize| -> Result<()> {
        for x in v.iter_mut() {
            if *x < 0.0 {
                if *x <= -NEG_CLAMP {
                    return Err(Error::IntegrationFailure {
                        step,
                        time: t,
                        reason: format!("eigenfunction entry {x} lost nonnegativity"),
                    });
                }
                *x = 0.0;
            }
        }
        Ok(())
    };

    // Vector propagation reuses the matrix stepper on a dim×1 layout by
    // embedding the state in the first column of an identity-padded matrix;
    // simpler here: a dedicated RK4 on vectors.
    let mut x = result.floquet_vector.clone();
    let mut states = Vec::with_capacity(samples);
    states.push(x.clone());
    let mut ws = VecRk4::new(dim);
    for w in times.windows(2) {
        let (t0, t1) = (w[0], w[1]);
        for (l, r) in smooth_pieces(a, t0, t1, &[]) {
            ws.run_piece(a, l, r, h_target, lambda, &mut x)?;
        }
        let mut snap = x.clone();
        clamp(&mut snap, t1, ws.steps_taken)?;
        states.push(snap);
    }
    states.truncate(samples);

    let first = &states[0];
    let last = &states[samples - 1];
    let scale = inf_norm_vec(first).max(f64::MIN_POSITIVE);
    let periodicity_residual = if samples == 1 {
        0.0
    } else {
        first
            .iter()
            .zip(last)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
            / scale
    };

    Ok(EigenfunctionSamples {
        times,
        states,
        periodicity_residual,
    })
}

struct VecRk4 {
    a_mat: SquareMat,
    k: [Vec<f64>; 4],
    stage: Vec<f64>,
    steps_taken: usize,
}

impl VecRk4 {
    fn new(dim: usize) -> Self {
        VecRk4 {
            a_mat: SquareMat::zeros(dim),
            k: std::array::from_fn(|_| vec![0.0; dim]),
            stage: vec![0.0; dim],
            steps_taken: 0,
        }
    }

    fn run_piece(
        &mut self,
        a: &PeriodicMatrix,
        l: f64,
        r: f64,
        h_target: f64,
        shift: f64,
        x: &mut [f64],
    ) -> Result<()> {
        let dim = x.len();
        let witness = 0.5 * (l + r);
        let n = (((r - l) / h_target).ceil() as usize).max(1);
        let h = (r - l) / n as f64;
        for step in 0..n {
            let t = l + step as f64 * h;
            let eval = |ws_a: &mut SquareMat, time: f64| {
                a.value_in_piece_into(time, witness, &mut ws_a.e);
                if shift != 0.0 {
                    for i in 0..dim {
                        *ws_a.at_mut(i, i) -= shift;
                    }
                }
            };
            eval(&mut self.a_mat, t);
            self.a_mat.mul_vec_into(x, &mut self.k[0]);
            for i in 0..dim {
                self.stage[i] = x[i] + 0.5 * h * self.k[0][i];
            }
            eval(&mut self.a_mat, t + 0.5 * h);
            self.a_mat.mul_vec_into(&self.stage, &mut self.k[1]);
            for i in 0..dim {
                self.stage[i] = x[i] + 0.5 * h * self.k[1][i];
            }
            self.a_mat.mul_vec_into(&self.stage, &mut self.k[2]);
            for i in 0..dim {
                self.stage[i] = x[i] + h * self.k[2][i];
            }
            eval(&mut self.a_mat, t + h);
            self.a_mat.mul_vec_into(&self.stage, &mut self.k[3]);
            for i in 0..dim {
                x[i] += h / 6.0
                    * (self.k[0][i] + 2.0 * self.k[1][i] + 2.0 * self.k[2][i] + self.k[3][i]);
            }
            self.steps_taken += 1;
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::IntegrationFailure {
                    step: self.steps_taken,
                    time: t,
                    reason: "eigenfunction state became non-finite".into(),
                });
            }
        }
        Ok(())
    }
}

/// Computes both growth rates of the periodic system and checks the
/// inequality `λ_per ≥ λ_s` against `tol_compare`.
///
/// `λ_per` comes from the monodromy, `λ_s` from the Perron root of the
/// arithmetico-geometrically averaged matrix.
pub fn compare_growth_rates(
    a: &PeriodicMatrix,
    steps: usize,
    tol_compare: f64,
) -> Result<GrowthComparison> {
    let monodromy = integrate_fundamental(a, steps)?;
    let averaged = a.average()?;
    let perron = perron_metzler(&averaged, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    Ok(GrowthComparison::new(
        monodromy.floquet_eigenvalue,
        perron.eigenvalue,
        tol_compare,
    ))
}
