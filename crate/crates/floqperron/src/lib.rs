//! Growth eigenvalues of monotone periodic systems.
//!
//! The crate computes two growth rates for linear systems whose coefficients
//! oscillate with a fixed period:
//!
//! * the **Floquet eigenvalue** `λ_per`, the exponential growth rate of the
//!   time-periodic system itself, and
//! * the **Perron eigenvalue** `λ_s`, the growth rate of the constant system
//!   obtained by averaging the coefficients in time, arithmetically on
//!   diagonal/loss terms and geometrically on off-diagonal/transition terms.
//!
//! Under that arithmetico-geometric averaging the inequality `λ_per ≥ λ_s`
//! holds for monotone ODE systems, for discrete periodic matrix products, and
//! for the multi-phase age-structured cell-cycle system. The library provides
//! the solvers for all three settings, exact averaging operators for a family
//! of closed-form periodic coefficients, and a sweep harness that certifies
//! the inequality empirically over randomly generated instances.
//!
//! Module map:
//!
//! * [`spectral`] — Perron roots of nonnegative and Metzler matrices.
//! * [`periodic`] — periodic coefficient families and their time averages.
//! * [`ode`] — monodromy matrices and the ODE growth-rate comparison.
//! * [`discrete`] — periodic matrix products and their comparison.
//! * [`cellcycle`] — the age-structured cell-cycle system.
//! * [`lab`] — random instance generators and reproducible sweeps.
//!
//! A narrative guide with runnable examples lives in `book/`; its code
//! snippets are compiled and executed as part of `cargo test --doc`.

// numerical kernels index in lockstep over several arrays, and the negated
// comparisons (`!(x > 0.0)`) deliberately trap NaN alongside the sign check
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cellcycle;
pub mod discrete;
mod error;
pub mod lab;
mod mat;
pub mod ode;
pub mod periodic;
pub mod spectral;

pub use error::{Error, Result};
pub use spectral::{EigenReport, MetzlerMatrix, NonnegMatrix};

/// Outcome of a Floquet-vs-Perron growth comparison.
///
/// `gap = lambda_per - lambda_s`; `pass` records whether the gap stayed above
/// the negated comparison tolerance supplied by the caller.
#[derive(Debug, Clone, PartialEq)]
pub struct GrowthComparison {
    pub lambda_per: f64,
    pub lambda_s: f64,
    pub gap: f64,
    pub pass: bool,
}

impl GrowthComparison {
    pub(crate) fn new(lambda_per: f64, lambda_s: f64, tol_compare: f64) -> Self {
        let gap = lambda_per - lambda_s;
        GrowthComparison {
            lambda_per,
            lambda_s,
            gap,
            pass: gap >= -tol_compare,
        }
    }
}

#[cfg(doctest)]
mod book;
