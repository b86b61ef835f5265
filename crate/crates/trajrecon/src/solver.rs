//! Symmetric positive definite linear solves.
//!
//! Two routes: a dense Cholesky for full matrices and a banded Cholesky for
//! matrices whose nonzeros stay within a fixed half-bandwidth. Both detect
//! loss of positive definiteness through the pivot and report it instead of
//! regularizing.

use crate::error::{Error, Result};

/// Symmetric matrix stored as the full lower triangle, row-major.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, data: vec![0.0; dim * dim] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }

    /// Adds `value` at (i, j) and mirrors it at (j, i).
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        self.data[i * self.dim + j] += value;
        if i != j {
            self.data[j * self.dim + i] += value;
        }
    }

    /// Solves `self * x = rhs` by Cholesky factorization.
    ///
    /// `rel_pivot_tol` scales the largest diagonal entry to form the pivot
    /// floor; pivots at or below it count as rank deficiency.
    pub fn cholesky_solve(&self, rhs: &[f64], rel_pivot_tol: f64) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.dim);
        let n = self.dim;
        let mut l = self.data.clone();
        let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(l[i * n + i].abs()));
        let floor = rel_pivot_tol * max_diag.max(f64::MIN_POSITIVE);

        for i in 0..n {
            for j in 0..=i {
                let mut sum = l[i * n + j];
                for k in 0..j {
                    sum -= l[i * n + k] * l[j * n + k];
                }
                if i == j {
                    if sum <= floor {
                        return Err(Error::SingularSystem { row: i, pivot: sum });
                    }
                    l[i * n + i] = sum.sqrt();
                } else {
                    l[i * n + j] = sum / l[j * n + j];
                }
            }
        }

        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in 0..i {
                y[i] = y[i] - l[i * n + k] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        for i in (0..n).rev() {
            for k in i + 1..n {
                y[i] = y[i] - l[k * n + i] * y[k];
            }
            y[i] /= l[i * n + i];
        }
        Ok(y)
    }
}

/// Symmetric band matrix: only entries with |i - j| <= half_bw are stored.
///
/// Storage is by subdiagonal offset: entry (i, i - d) lives at
/// `data[i * (half_bw + 1) + d]`.
#[derive(Debug, Clone)]
pub struct SymBandMatrix {
    dim: usize,
    half_bw: usize,
    data: Vec<f64>,
}

impl SymBandMatrix {
    pub fn zeros(dim: usize, half_bw: usize) -> Self {
        Self { dim, half_bw, data: vec![0.0; dim * (half_bw + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn half_bandwidth(&self) -> usize {
        self.half_bw
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        if hi - lo > self.half_bw {
            0.0
        } else {
            self.data[hi * (self.half_bw + 1) + (hi - lo)]
        }
    }

    /// Adds `value` at (i, j); the mirrored entry is implied by storage.
    pub fn add(&mut self, i: usize, j: usize, value: f64) {
        let (hi, lo) = if i >= j { (i, j) } else { (j, i) };
        assert!(hi - lo <= self.half_bw, "entry ({i}, {j}) outside band");
        self.data[hi * (self.half_bw + 1) + (hi - lo)] += value;
    }

    /// Expands to full symmetric storage.
    pub fn to_dense(&self) -> SymMatrix {
        let mut m = SymMatrix::zeros(self.dim);
        for i in 0..self.dim {
            for j in i.saturating_sub(self.half_bw)..=i {
                let v = self.get(i, j);
                if i == j {
                    m.add(i, i, v);
                } else {
                    m.add(i, j, v);
                }
            }
        }
        m
    }

    /// Solves `self * x = rhs` by banded Cholesky in O(dim * half_bw^2).
    pub fn cholesky_solve(&self, rhs: &[f64], rel_pivot_tol: f64) -> Result<Vec<f64>> {
        assert_eq!(rhs.len(), self.dim);
        let n = self.dim;
        let hb = self.half_bw;
        let w = hb + 1;
        let mut l = self.data.clone();
        let max_diag = (0..n).fold(0.0_f64, |m, i| m.max(l[i * w].abs()));
        let floor = rel_pivot_tol * max_diag.max(f64::MIN_POSITIVE);

        for i in 0..n {
            let j_lo = i.saturating_sub(hb);
            for j in j_lo..=i {
                let mut sum = l[i * w + (i - j)];
                let k_lo = j_lo.max(j.saturating_sub(hb));
                for k in k_lo..j {
                    sum -= l[i * w + (i - k)] * l[j * w + (j - k)];
                }
                if i == j {
                    if sum <= floor {
                        return Err(Error::SingularSystem { row: i, pivot: sum });
                    }
                    l[i * w] = sum.sqrt();
                } else {
                    l[i * w + (i - j)] = sum / l[j * w];
                }
            }
        }

        let mut y = rhs.to_vec();
        for i in 0..n {
            for k in i.saturating_sub(hb)..i {
                y[i] = y[i] - l[i * w + (i - k)] * y[k];
            }
            y[i] /= l[i * w];
        }
        for i in (0..n).rev() {
            for k in i + 1..(i + hb + 1).min(n) {
                y[i] = y[i] - l[k * w + (k - i)] * y[k];
            }
            y[i] /= l[i * w];
        }
        Ok(y)
    }
}
