//! Growth rate of discrete periodic systems `X(k+1) ∝ A(k) X(k)`.
//!
//! For a p-periodic sequence of nonnegative matrices the Floquet eigenvalue
//! is defined through the periodic eigenproblem `λ_per X(k+1) = A(k) X(k)`,
//! so `λ_per^p` is the Perron eigenvalue of the ordered period product
//! `A(p−1)⋯A(0)`. The comparison value `λ_s` is the Perron eigenvalue of the
//! entrywise geometric mean of the sequence. Zero entries are first-class:
//! no regularization is applied anywhere.

use crate::error::Result;
use crate::mat::SquareMat;
use crate::periodic::PeriodicMatrixSeq;
use crate::spectral::{perron_nonneg, EigenReport, NonnegMatrix, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::GrowthComparison;

/// Default tolerance for the discrete `λ_per ≥ λ_s` comparison.
pub const DEFAULT_TOL_COMPARE: f64 = 1e-9;

/// The ordered product `A(p−1)·…·A(1)·A(0)`.
pub fn period_product(seq: &PeriodicMatrixSeq) -> NonnegMatrix {
    let dim = seq.dim();
    let mut acc = SquareMat::identity(dim);
    let mut out = SquareMat::zeros(dim);
    for m in seq.matrices() {
        let factor = SquareMat::from_entries(dim, m.entries().to_vec());
        factor.mul_into(&acc, &mut out);
        std::mem::swap(&mut acc, &mut out);
    }
    NonnegMatrix::new(dim, acc.e).expect("product of nonnegative matrices")
}

/// Floquet eigenvalue of the periodic sequence: the nonnegative real p-th
/// root of the Perron eigenvalue of the period product. The eigenvector is
/// the Perron vector of the product, i.e. the periodic solution at k = 0.
pub fn floquet_discrete(seq: &PeriodicMatrixSeq) -> Result<EigenReport> {
    let product = period_product(seq);
    let mut report = perron_nonneg(&product, DEFAULT_TOL, DEFAULT_MAX_ITER)?;
    let p = seq.len() as f64;
    report.eigenvalue = report.eigenvalue.max(0.0).powf(1.0 / p);
    Ok(report)
}

/// Computes `λ_per` and the Perron root `λ_s` of the geometrically averaged
/// matrix, and checks `λ_per ≥ λ_s` against `tol_compare`.
pub fn compare_growth_rates(seq: &PeriodicMatrixSeq, tol_compare: f64) -> Result<GrowthComparison> {
    let lambda_per = floquet_discrete(seq)?.eigenvalue;
    let averaged = seq.average();
    let lambda_s = perron_nonneg(&averaged, DEFAULT_TOL, DEFAULT_MAX_ITER)?.eigenvalue;
    Ok(GrowthComparison::new(lambda_per, lambda_s, tol_compare))
}
