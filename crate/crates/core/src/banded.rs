//! Symmetric banded matrices and their Cholesky factors.
//!
//! Both FEM systems in this crate are stored this way: the 1D system is
//! tridiagonal and the structured 2D triangulation numbers nodes row by row,
//! giving a half-bandwidth of one grid row plus one.

use std::fmt;

use crate::compensated::Accumulator;

/// Symmetric matrix holding the lower band `0 <= i - j <= bandwidth`.
#[derive(Clone)]
pub struct SymBanded {
    n: usize,
    bw: usize,
    data: Vec<f64>,
}

impl fmt::Debug for SymBanded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymBanded").field("n", &self.n).field("bandwidth", &self.bw).finish()
    }
}

impl SymBanded {
    pub fn zeros(n: usize, bandwidth: usize) -> Self {
        Self { n, bw: bandwidth, data: vec![0.0; n * (bandwidth + 1)] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    #[inline]
    fn idx(&self, i: usize, j: usize) -> usize {
        debug_assert!(i >= j && i - j <= self.bw);
        i * (self.bw + 1) + (self.bw + j - i)
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        if i - j > self.bw {
            0.0
        } else {
            self.data[self.idx(i, j)]
        }
    }

    /// Adds `v` to entry `(i, j)` (and implicitly `(j, i)`).
    ///
    /// Panics if the entry lies outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        assert!(i - j <= self.bw, "entry ({i}, {j}) outside bandwidth {}", self.bw);
        let k = self.idx(i, j);
        self.data[k] += v;
    }

    /// `self + alpha * other`; both must share dimension and bandwidth.
    pub fn add_scaled(&self, alpha: f64, other: &SymBanded) -> SymBanded {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bw, other.bw);
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + alpha * b).collect();
        SymBanded { n: self.n, bw: self.bw, data }
    }

    /// Replaces row and column `i` by the identity row (homogeneous Dirichlet).
    pub fn constrain(&mut self, i: usize) {
        self.clear(i);
        let k = self.idx(i, i);
        self.data[k] = 1.0;
    }

    /// Zeroes row and column `i`.
    pub fn clear(&mut self, i: usize) {
        let lo = i.saturating_sub(self.bw);
        for j in lo..i {
            let k = self.idx(i, j);
            self.data[k] = 0.0;
        }
        let hi = (i + self.bw).min(self.n - 1);
        for r in (i + 1)..=hi {
            let k = self.idx(r, i);
            self.data[k] = 0.0;
        }
        let k = self.idx(i, i);
        self.data[k] = 0.0;
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![0.0; self.n];
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.data[i * (self.bw + 1)..(i + 1) * (self.bw + 1)];
            let off = self.bw - (i - lo);
            let mut acc = row[self.bw] * x[i];
            for (t, j) in (lo..i).enumerate() {
                let a = row[off + t];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
        y
    }

    /// `g - (self + lambda * other) x` accumulated in double-double, so the
    /// residual refers to the exact pencil rather than its rounded sum.
    pub fn pencil_residual(&self, lambda: f64, other: &SymBanded, x: &[f64], g: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, other.n);
        assert_eq!(self.bw, other.bw);
        let mut acc: Vec<Accumulator> = g
            .iter()
            .map(|&v| {
                let mut a = Accumulator::default();
                a.add(v);
                a
            })
            .collect();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let base = i * (self.bw + 1);
            let off = self.bw - (i - lo);
            for (t, j) in (lo..=i).enumerate() {
                let a = self.data[base + off + t];
                let m = other.data[base + off + t];
                acc[i].add_prod(-a, x[j]);
                acc[i].add_triple(-lambda, m, x[j]);
                if j != i {
                    acc[j].add_prod(-a, x[i]);
                    acc[j].add_triple(-lambda, m, x[i]);
                }
            }
        }
        acc.iter().map(Accumulator::value).collect()
    }

    /// Row sums, i.e. the lumped version of a mass matrix.
    pub fn row_sums(&self) -> Vec<f64> {
        let ones = vec![1.0; self.n];
        self.matvec(&ones)
    }

    /// Quadratic form `x^T A y`.
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        self.matvec(y).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// Band Cholesky factorization `A = L L^T`.
    ///
    /// Returns the failing row if a pivot is not strictly positive.
    pub fn cholesky(&self) -> Result<BandedCholesky, usize> {
        let w = self.bw + 1;
        let mut l = self.data.clone();
        for i in 0..self.n {
            let lo_i = i.saturating_sub(self.bw);
            for j in lo_i..=i {
                let lo = lo_i.max(j.saturating_sub(self.bw));
                let mut s = l[i * w + (self.bw + j - i)];
                if lo < j {
                    let ri = &l[i * w + (self.bw + lo - i)..i * w + (self.bw + j - i)];
                    let rj = &l[j * w + (self.bw + lo - j)..j * w + self.bw];
                    s -= ri.iter().zip(rj).map(|(a, b)| a * b).sum::<f64>();
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(i);
                    }
                    l[i * w + self.bw] = s.sqrt();
                } else {
                    l[i * w + (self.bw + j - i)] = s / l[j * w + self.bw];
                }
            }
        }
        Ok(BandedCholesky { n: self.n, bw: self.bw, l })
    }
}

/// Lower-triangular band factor produced by [`SymBanded::cholesky`].
#[derive(Clone)]
pub struct BandedCholesky {
    n: usize,
    bw: usize,
    l: Vec<f64>,
}

impl BandedCholesky {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        assert_eq!(b.len(), self.n);
        let w = self.bw + 1;
        let mut y = b.to_vec();
        for i in 0..self.n {
            let lo = i.saturating_sub(self.bw);
            let row = &self.l[i * w..(i + 1) * w];
            let mut s = y[i];
            for (t, j) in (lo..i).enumerate() {
                s -= row[self.bw - (i - lo) + t] * y[j];
            }
            y[i] = s / row[self.bw];
        }
        for i in (0..self.n).rev() {
            let lo = i.saturating_sub(self.bw);
            let row = &self.l[i * w..(i + 1) * w];
            y[i] /= row[self.bw];
            let xi = y[i];
            for (t, j) in (lo..i).enumerate() {
                y[j] -= row[self.bw - (i - lo) + t] * xi;
            }
        }
        y
    }
}
