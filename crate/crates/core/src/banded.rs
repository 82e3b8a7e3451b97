//! Symmetric banded matrices and their Cholesky factorization.

use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
#[error("matrix is not positive definite (pivot {pivot} at row {row})")]
pub struct NotPositiveDefinite {
    pub row: usize,
    pub pivot: f64,
}

/// Lower band of a symmetric `n×n` matrix with half-bandwidth `bw`.
#[derive(Debug, Clone)]
pub struct SymmetricBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl SymmetricBanded {
    pub fn zeros(n: usize, bw: usize) -> Self {
        Self {
            n,
            bw,
            data: vec![0.0; n * (bw + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn index(&self, i: usize, j: usize) -> usize {
        debug_assert!(j <= i && i - j <= self.bw, "({i}, {j}) outside the band");
        i * (self.bw + 1) + (self.bw + j - i)
    }

    /// Adds `v` to entry `(i, j)`; either triangle may be addressed.
    #[inline]
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        let k = self.index(i, j);
        self.data[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if j > i { (j, i) } else { (i, j) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.index(i, j)]
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            for j in lo..i {
                let a = self.data[self.index(i, j)];
                y[i] += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += self.data[self.index(i, i)] * x[i];
        }
        y
    }

    /// In-place Cholesky factorization `A = L Lᵀ`; the band keeps `L`.
    pub fn cholesky(mut self) -> Result<BandedCholesky, NotPositiveDefinite> {
        let (n, bw) = (self.n, self.bw);
        let w = bw + 1;
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let k0 = lo.max(j.saturating_sub(bw));
                let mut sum = self.data[i * w + (bw + j - i)];
                let ri = i * w + bw - i;
                let rj = j * w + bw - j;
                for k in k0..j {
                    sum -= self.data[ri + k] * self.data[rj + k];
                }
                if i == j {
                    if !(sum > 0.0) {
                        return Err(NotPositiveDefinite { row: i, pivot: sum });
                    }
                    self.data[i * w + bw] = sum.sqrt();
                } else {
                    self.data[i * w + (bw + j - i)] = sum / self.data[j * w + bw];
                }
            }
        }
        Ok(BandedCholesky { factor: self })
    }
}

#[derive(Debug, Clone)]
pub struct BandedCholesky {
    factor: SymmetricBanded,
}

impl BandedCholesky {
    #[allow(clippy::needless_range_loop)]
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let l = &self.factor;
        let (n, bw) = (l.n, l.bw);
        let w = bw + 1;
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let row = i * w + bw - i;
            let mut s = y[i];
            for k in lo..i {
                s -= l.data[row + k] * y[k];
            }
            y[i] = s / l.data[i * w + bw];
        }
        for i in (0..n).rev() {
            y[i] /= l.data[i * w + bw];
            let yi = y[i];
            let lo = i.saturating_sub(bw);
            let row = i * w + bw - i;
            for k in lo..i {
                y[k] -= l.data[row + k] * yi;
            }
        }
        y
    }
}
