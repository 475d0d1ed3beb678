//! Direct solver for the banded symmetric systems produced by the
//! structured-grid assembly.
//!
//! Row-major node numbering keeps the half-bandwidth at roughly one node row,
//! so an in-place banded LDL^T factorization is both fast enough and fully
//! deterministic: repeated solves of the same system are bitwise identical,
//! independent of how many worker threads assembled it.

// Banded kernels index with explicit diagonal offsets throughout.
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("zero or near-zero pivot at equation {eq} (|d| = {pivot:.3e}, scale {scale:.3e})")]
    SingularPivot { eq: usize, pivot: f64, scale: f64 },
    #[error("right-hand side length {got} does not match system size {expected}")]
    SizeMismatch { got: usize, expected: usize },
}

/// Symmetric banded matrix, lower band stored column-major: entry `(i, j)`
/// with `j <= i <= j + hb` lives at `data[j * (hb + 1) + (i - j)]`.
#[derive(Debug, Clone)]
pub struct BandedSym {
    pub n: usize,
    /// Half-bandwidth (number of sub-diagonals).
    pub hb: usize,
    data: Vec<f64>,
}

impl BandedSym {
    pub fn zeros(n: usize, hb: usize) -> Self {
        let hb = hb.min(n.saturating_sub(1));
        Self {
            n,
            hb,
            data: vec![0.0; n * (hb + 1)],
        }
    }

    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        debug_assert!(hi - lo <= self.hb);
        self.data[lo * (self.hb + 1) + (hi - lo)] += v;
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        if hi - lo > self.hb {
            return 0.0;
        }
        self.data[lo * (self.hb + 1) + (hi - lo)]
    }

    #[inline]
    fn set(&mut self, i: usize, j: usize, v: f64) {
        let (lo, hi) = if i >= j { (j, i) } else { (i, j) };
        self.data[lo * (self.hb + 1) + (hi - lo)] = v;
    }

    /// Eliminates a Dirichlet equation: zeros its row and column, puts one on
    /// the diagonal and zeros the right-hand side entry.
    pub fn apply_dirichlet(&mut self, rhs: &mut [f64], dof: usize) {
        let lo = dof.saturating_sub(self.hb);
        let hi = (dof + self.hb).min(self.n - 1);
        for k in lo..=hi {
            if k != dof {
                self.set(k, dof, 0.0);
            }
        }
        self.set(dof, dof, 1.0);
        rhs[dof] = 0.0;
    }

    /// In-place LDL^T factorization (right-looking, column panels).
    pub fn factorize(&mut self) -> Result<(), SolveError> {
        let hb = self.hb;
        let scale = self
            .data
            .iter()
            .step_by(hb + 1)
            .fold(0.0f64, |m, d| m.max(d.abs()))
            .max(1.0);
        for j in 0..self.n {
            let jmax = (j + hb).min(self.n - 1);
            let djj = self.data[j * (hb + 1)];
            if !djj.is_finite() || djj.abs() <= 1e-14 * scale {
                return Err(SolveError::SingularPivot {
                    eq: j,
                    pivot: djj,
                    scale,
                });
            }
            // Scale the column below the pivot: L[i][j] = A[i][j] / d_j.
            for i in (j + 1)..=jmax {
                self.data[j * (hb + 1) + (i - j)] /= djj;
            }
            // Trailing update A[i][k] -= L[i][j] L[k][j] d_j for k <= i.
            for k in (j + 1)..=jmax {
                let w = self.data[j * (hb + 1) + (k - j)] * djj;
                if w == 0.0 {
                    continue;
                }
                let col_k = k * (hb + 1);
                let col_j = j * (hb + 1);
                for i in k..=jmax {
                    self.data[col_k + (i - k)] -= self.data[col_j + (i - j)] * w;
                }
            }
        }
        Ok(())
    }

    /// Solves with a previously factorized matrix.
    pub fn solve_factorized(&self, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
        if rhs.len() != self.n {
            return Err(SolveError::SizeMismatch {
                got: rhs.len(),
                expected: self.n,
            });
        }
        let hb = self.hb;
        let mut x = rhs.to_vec();
        // Forward: L z = b.
        for j in 0..self.n {
            let xj = x[j];
            if xj != 0.0 {
                let jmax = (j + hb).min(self.n - 1);
                let col = j * (hb + 1);
                for i in (j + 1)..=jmax {
                    x[i] -= self.data[col + (i - j)] * xj;
                }
            }
        }
        // Diagonal: z /= d.
        for j in 0..self.n {
            x[j] /= self.data[j * (hb + 1)];
        }
        // Backward: L^T x = z.
        for j in (0..self.n).rev() {
            let jmax = (j + hb).min(self.n - 1);
            let col = j * (hb + 1);
            let mut s = x[j];
            for i in (j + 1)..=jmax {
                s -= self.data[col + (i - j)] * x[i];
            }
            x[j] = s;
        }
        Ok(x)
    }
}

/// One-shot deterministic direct solve of a symmetric banded system. The
/// matrix is copied, factorized and discarded.
pub fn sparse_solve(matrix: &BandedSym, rhs: &[f64]) -> Result<Vec<f64>, SolveError> {
    let mut m = matrix.clone();
    m.factorize()?;
    m.solve_factorized(rhs)
}
