//! Small dense row-major matrix helpers shared by the solvers.
//!
//! Dimensions stay below ~100, so plain `Vec<f64>` storage and triple loops
//! are all that is needed; no external linear algebra backend.

/// Row-major dense square matrix scratch type.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct SquareMat {
    pub dim: usize,
    pub e: Vec<f64>,
}

impl SquareMat {
    pub fn zeros(dim: usize) -> Self {
        SquareMat {
            dim,
            e: vec![0.0; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.e[i * dim + i] = 1.0;
        }
        m
    }

    pub fn from_entries(dim: usize, entries: Vec<f64>) -> Self {
        debug_assert_eq!(entries.len(), dim * dim);
        SquareMat { dim, e: entries }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.e[i * self.dim + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut f64 {
        &mut self.e[i * self.dim + j]
    }

    /// Max absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        let d = self.dim;
        (0..d)
            .map(|i| self.e[i * d..(i + 1) * d].iter().map(|x| x.abs()).sum())
            .fold(0.0, f64::max)
    }

    pub fn max_diag(&self) -> f64 {
        (0..self.dim)
            .map(|i| self.at(i, i))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn scale_in_place(&mut self, c: f64) {
        for x in &mut self.e {
            *x *= c;
        }
    }

    /// `out = self * other`.
    pub fn mul_into(&self, other: &SquareMat, out: &mut SquareMat) {
        let d = self.dim;
        debug_assert_eq!(other.dim, d);
        debug_assert_eq!(out.dim, d);
        for i in 0..d {
            let row = &mut out.e[i * d..(i + 1) * d];
            row.fill(0.0);
            for k in 0..d {
                let a = self.e[i * d + k];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.e[k * d..(k + 1) * d];
                for (r, b) in row.iter_mut().zip(brow) {
                    *r += a * b;
                }
            }
        }
    }

    /// `y = self * x`.
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let d = self.dim;
        for i in 0..d {
            let mut s = 0.0;
            for j in 0..d {
                s += self.e[i * d + j] * x[j];
            }
            y[i] = s;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().all(|x| x.is_finite())
    }
}

/// `y = a * x` for a row-major square matrix given as a slice.
pub(crate) fn mul_vec(dim: usize, a: &[f64], x: &[f64]) -> Vec<f64> {
    let mut y = vec![0.0; dim];
    for i in 0..dim {
        let mut s = 0.0;
        for j in 0..dim {
            s += a[i * dim + j] * x[j];
        }
        y[i] = s;
    }
    y
}

pub(crate) fn inf_norm_vec(x: &[f64]) -> f64 {
    x.iter().map(|v| v.abs()).fold(0.0, f64::max)
}

/// Rescale so the maximum entry is exactly 1; no-op on the zero vector.
pub(crate) fn normalize_max(v: &mut [f64]) {
    let m = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m > 0.0 {
        for x in v.iter_mut() {
            *x /= m;
        }
    }
}
