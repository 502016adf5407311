//! Perron eigenvalues of nonnegative and Metzler matrices.
//!
//! For a nonnegative matrix the Perron eigenvalue is the spectral radius; for
//! a Metzler matrix (nonnegative off-diagonal) it is the spectral abscissa,
//! which is real and carries a nonnegative eigenvector. Both are computed by
//! the power method applied to the shifted matrix `A + I`: the unit shift
//! makes every diagonal entry positive, so each irreducible block becomes
//! primitive and the iteration cannot cycle. The iteration is run in squared
//! form (the shifted matrix is repeatedly squared and renormalized), which
//! doubles the effective power per step and converges even when the dominant
//! eigenvalue is defective (e.g. `[[1,1],[0,1]]`), where the plain vector
//! iteration stalls at O(1/k) accuracy.
//!
//! At every step the true eigenvalue of the shifted matrix `B` is sandwiched:
//!
//! ```text
//! max_i (B^k)_ii ^ (1/k)  ≤  ρ(B)  ≤  ||B^k||_∞ ^ (1/k)
//! ```
//!
//! and the reported value is the log-midpoint of the bracket. Convergence is
//! judged on the residual `||A v − λ v||_∞`, never on eigenvector uniqueness,
//! so reducible inputs are accepted.

use crate::error::{Error, Result};
use crate::mat::{mul_vec, normalize_max, SquareMat};

/// Default convergence tolerance, relative to `max(1, |λ|)`.
pub const DEFAULT_TOL: f64 = 1e-10;
/// Default iteration cap.
pub const DEFAULT_MAX_ITER: usize = 100_000;

/// One squaring of the shifted matrix doubles the effective power, so the
/// bracket is machine-tight long before this many steps.
const MAX_SQUARINGS: usize = 64;

/// Square matrix with nonnegative off-diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct MetzlerMatrix {
    dim: usize,
    entries: Vec<f64>,
}

/// Square matrix with all entries nonnegative.
#[derive(Debug, Clone, PartialEq)]
pub struct NonnegMatrix {
    dim: usize,
    entries: Vec<f64>,
}

fn validate_square(dim: usize, entries: &[f64]) -> Result<()> {
    if dim == 0 {
        return Err(Error::InvalidInput("matrix dimension must be ≥ 1".into()));
    }
    if entries.len() != dim * dim {
        return Err(Error::InvalidInput(format!(
            "expected {} entries for a {dim}×{dim} matrix, got {}",
            dim * dim,
            entries.len()
        )));
    }
    if let Some(idx) = entries.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "entry ({},{}) is not finite",
            idx / dim,
            idx % dim
        )));
    }
    Ok(())
}

impl MetzlerMatrix {
    /// Builds a Metzler matrix from row-major entries, rejecting negative
    /// off-diagonal entries and non-finite values.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        validate_square(dim, &entries)?;
        for i in 0..dim {
            for j in 0..dim {
                if i != j && entries[i * dim + j] < 0.0 {
                    return Err(Error::InvalidInput(format!(
                        "off-diagonal entry ({i},{j}) = {} is negative",
                        entries[i * dim + j]
                    )));
                }
            }
        }
        Ok(MetzlerMatrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.len(), rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }
}

impl NonnegMatrix {
    /// Builds a nonnegative matrix from row-major entries.
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        validate_square(dim, &entries)?;
        if let Some(idx) = entries.iter().position(|x| *x < 0.0) {
            return Err(Error::InvalidInput(format!(
                "entry ({},{}) = {} is negative",
                idx / dim,
                idx % dim,
                entries[idx]
            )));
        }
        Ok(NonnegMatrix { dim, entries })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(rows.len(), rows.concat())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }
}

impl From<NonnegMatrix> for MetzlerMatrix {
    fn from(a: NonnegMatrix) -> Self {
        MetzlerMatrix {
            dim: a.dim,
            entries: a.entries,
        }
    }
}

/// Result of an eigenvalue solve.
///
/// The eigenvector is nonnegative and normalized so its largest entry is 1.
/// `residual` is the ∞-norm of the defining relation (`A v − λ v` for matrix
/// problems); `converged` means the residual and the eigenvalue bracket both
/// ended below `tol · max(1, |λ|)`. For iterative period-map problems the
/// fields keep the same meaning with the period map in place of `A`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenReport {
    pub eigenvalue: f64,
    pub eigenvector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Spectral radius and Perron vector of a nonnegative matrix.
///
/// Deterministic for fixed inputs. On non-convergence within `max_iter`
/// squarings the best iterate is returned with `converged = false`.
pub fn perron_nonneg(a: &NonnegMatrix, tol: f64, max_iter: usize) -> Result<EigenReport> {
    check_solver_args(tol, max_iter)?;
    let dim = a.dim;
    let mut shifted = SquareMat::from_entries(dim, a.entries.clone());
    for i in 0..dim {
        *shifted.at_mut(i, i) += 1.0;
    }
    let report = shifted_power(&shifted, &a.entries, 0.0, tol, max_iter);
    Ok(report)
}

/// Spectral abscissa (rightmost eigenvalue, real for Metzler matrices) and
/// its nonnegative eigenvector.
///
/// Computed by shifting the diagonal up to a nonnegative matrix, solving, and
/// shifting back; the shift is exact.
pub fn perron_metzler(a: &MetzlerMatrix, tol: f64, max_iter: usize) -> Result<EigenReport> {
    check_solver_args(tol, max_iter)?;
    let dim = a.dim;
    let min_diag = (0..dim).map(|i| a.at(i, i)).fold(f64::INFINITY, f64::min);
    let shift = (-min_diag).max(0.0);
    let mut shifted = SquareMat::from_entries(dim, a.entries.clone());
    for i in 0..dim {
        // shift to nonnegative first, then add the unit primitivity shift;
        // two rounded monotone additions keep the diagonal ≥ 1 exactly
        let e = shifted.at_mut(i, i);
        *e += shift;
        *e += 1.0;
    }
    let report = shifted_power(&shifted, &a.entries, shift, tol, max_iter);
    Ok(report)
}

fn check_solver_args(tol: f64, max_iter: usize) -> Result<()> {
    if !(tol > 0.0) || !tol.is_finite() {
        return Err(Error::InvalidInput(format!(
            "tolerance must be a positive real, got {tol}"
        )));
    }
    if max_iter == 0 {
        return Err(Error::InvalidInput("max_iter must be ≥ 1".into()));
    }
    Ok(())
}

/// Core iteration on the shifted matrix `B = A + (shift + 1)·I`, which is
/// nonnegative with diagonal ≥ 1. Returns the report for the original `A`
/// (eigenvalue un-shifted by `shift + 1`; the residual is shift-invariant).
fn shifted_power(
    b: &SquareMat,
    original: &[f64],
    shift: f64,
    tol: f64,
    max_iter: usize,
) -> EigenReport {
    let dim = b.dim;
    let cap = MAX_SQUARINGS.min(max_iter);

    // n_mat tracks B^(2^m) normalized to unit ∞-norm; log_upper is
    // (1/2^m)·log ||B^(2^m)||_∞, a decreasing upper bound on log ρ(B).
    let mut n_mat = b.clone();
    let t0 = n_mat.inf_norm();
    debug_assert!(t0 >= 1.0);
    n_mat.scale_in_place(1.0 / t0);
    let mut log_upper = t0.ln();
    let mut pow = 1.0f64; // 2^{-m}
    let mut scratch = SquareMat::zeros(dim);

    let mut best: Option<EigenReport> = None;
    let mut m = 0usize;
    loop {
        // Bracket [L, U] for ρ(B) from the diagonal and the norm of the
        // current power; candidate eigenvalue at the log-midpoint.
        let max_diag = n_mat.max_diag();
        let (lambda_b, width) = if max_diag > 0.0 {
            let log_lower = log_upper + pow * max_diag.ln();
            (
                (0.5 * (log_upper + log_lower)).exp(),
                log_upper.exp() - log_lower.exp(),
            )
        } else {
            (log_upper.exp(), f64::INFINITY)
        };
        let lambda = lambda_b - 1.0 - shift;

        // Row sums of the normalized power approximate the Perron direction.
        let mut v = vec![0.0; dim];
        for i in 0..dim {
            v[i] = n_mat.e[i * dim..(i + 1) * dim].iter().sum();
        }
        normalize_max(&mut v);

        let av = mul_vec(dim, original, &v);
        let residual = av
            .iter()
            .zip(&v)
            .map(|(a, x)| (a - lambda * x).abs())
            .fold(0.0, f64::max);

        let scale = 1.0f64.max(lambda.abs());
        let converged = residual <= tol * scale && width <= tol * scale;
        let candidate = EigenReport {
            eigenvalue: lambda,
            eigenvector: v,
            residual,
            iterations: m,
            converged,
        };
        let improved = best
            .as_ref()
            .map(|b| candidate.residual < b.residual)
            .unwrap_or(true);
        if improved {
            best = Some(candidate);
        }
        if converged || m >= cap {
            break;
        }

        n_mat.mul_into(&n_mat, &mut scratch);
        std::mem::swap(&mut n_mat, &mut scratch);
        let t = n_mat.inf_norm();
        if !(t > 0.0) || !t.is_finite() {
            break; // cannot happen for diag ≥ 1, but never divide by zero
        }
        n_mat.scale_in_place(1.0 / t);
        pow *= 0.5;
        log_upper += pow * t.ln();
        m += 1;
    }

    let mut report = best.expect("at least one iterate");
    report.iterations = m;
    report
}

/// Collatz–Wielandt upper bound: `max_i (A y)_i / y_i` for a strictly
/// positive test vector `y`. The bound dominates the Perron eigenvalue for
/// every such `y`, and is tight when `y` is the Perron vector.
pub fn collatz_wielandt_upper(a: &MetzlerMatrix, y: &[f64]) -> Result<f64> {
    if y.len() != a.dim {
        return Err(Error::InvalidInput(format!(
            "test vector has length {}, matrix dimension is {}",
            y.len(),
            a.dim
        )));
    }
    if let Some(i) = y.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "test vector entry {i} = {} is not strictly positive",
            y[i]
        )));
    }
    let ay = mul_vec(a.dim, &a.entries, y);
    Ok(ay
        .iter()
        .zip(y)
        .map(|(num, den)| num / den)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Lower Collatz–Wielandt ratio `min_i (A y)_i / y_i` for a positive vector.
pub fn collatz_wielandt_lower(a: &MetzlerMatrix, y: &[f64]) -> Result<f64> {
    if y.len() != a.dim {
        return Err(Error::InvalidInput(format!(
            "test vector has length {}, matrix dimension is {}",
            y.len(),
            a.dim
        )));
    }
    if let Some(i) = y.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "test vector entry {i} = {} is not strictly positive",
            y[i]
        )));
    }
    let ay = mul_vec(a.dim, &a.entries, y);
    Ok(ay
        .iter()
        .zip(y)
        .map(|(num, den)| num / den)
        .fold(f64::INFINITY, f64::min))
}

/// True iff the directed graph with an edge `i → j` whenever `A[j][i] > 0`
/// (mass flowing from state `i` into state `j`) is strongly connected.
///
/// Checked by graph search, not numerics. A 1×1 matrix is irreducible by
/// convention regardless of its diagonal.
pub fn is_irreducible(a: &MetzlerMatrix) -> bool {
    let dim = a.dim;
    if dim == 1 {
        return true;
    }
    // Strong connectivity is invariant under transposition, so it is enough
    // that every node is reachable from node 0 along edges and along
    // reversed edges.
    let reaches_all = |forward: bool| -> bool {
        let mut seen = vec![false; dim];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for j in 0..dim {
                let w = if forward { a.at(j, i) } else { a.at(i, j) };
                if i != j && w > 0.0 && !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == dim
    };
    reaches_all(true) && reaches_all(false)
}
