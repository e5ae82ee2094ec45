//! Block Lanczos orthogonalization of `A = M^{-1} S` in the M-inner product,
//! started from the projected boundary functionals.
//!
//! Sign convention: the first block is a positive multiple of `d`; every
//! later block is the *negated* normalized residual, so the coupling blocks of
//! `T` have negative diagonals (negative off-diagonals when `K = 1`). This is
//! the sign pattern of a symmetrized three-point difference operator.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::compensated::congruence;
use crate::error::{Result, RomError};
use crate::rom::{DeltaProjection, GalerkinRom};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Columns whose M-norm after orthogonalization falls below this fraction
    /// of the block's leading norm are deflated.
    pub deflation_tol: f64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { deflation_tol: 1e-10 }
    }
}

/// Why the recurrence stopped before `m` blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Breakdown {
    pub block: usize,
    pub reason: String,
}

/// Orthonormalized ROM `(T + λI) ĉ = rhs_hat`.
#[derive(Debug, Clone)]
pub struct OrthoRom {
    pub m: usize,
    pub k: usize,
    /// Columns kept in each block; all equal `k` unless deflation occurred.
    pub block_sizes: Vec<usize>,
    pub t: DMatrix<f64>,
    /// `mK x n'`; column `(j, s)` holds the snapshot-basis coefficients of `û_j^s`.
    pub q: DMatrix<f64>,
    /// `n' x K`, nonzero only in the first block.
    pub rhs_hat: DMatrix<f64>,
    pub breakdown: Option<Breakdown>,
}

/// Runs block Lanczos in coordinates where the M-inner product is Euclidean
/// (`P^T M P = I`), which keeps the basis M-orthonormal to working precision
/// even when the snapshot Gram matrix is badly conditioned.
pub fn orthogonalize(rom: &GalerkinRom, delta: &DeltaProjection, opts: &LanczosOptions) -> Result<OrthoRom> {
    let n = rom.dim();
    if delta.d.shape() != (n, rom.k) {
        return Err(RomError::Structure(format!(
            "delta projection is {:?}, expected {n} x {}",
            delta.d.shape(),
            rom.k
        )));
    }
    let wh = rom.whitening();
    let rank = wh.op.nrows();
    // W^T d with M d = rhs, evaluated as P^T rhs to skip the round trip through M^{-1}
    let start = wh.p.transpose() * &rom.rhs;

    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(rank);
    let mut block_sizes = Vec::new();
    let mut breakdown = None;
    let mut candidates: Vec<DVector<f64>> = start.column_iter().map(|c| c.into_owned()).collect();
    let mut sign = 1.0;

    while block_sizes.len() < rom.m && basis.len() < rank {
        let scale = candidates.iter().map(|w| w.norm()).fold(0.0, f64::max);
        // full reorthogonalization, classical Gram-Schmidt applied twice
        for w in candidates.iter_mut() {
            for _ in 0..2 {
                let coeffs: Vec<f64> = basis.iter().map(|q| q.dot(w)).collect();
                for (q, c) in basis.iter().zip(coeffs) {
                    w.axpy(-c, q, 1.0);
                }
            }
        }
        let lead = candidates.iter().map(|w| w.norm()).fold(0.0, f64::max);
        if scale == 0.0 || !(lead > opts.deflation_tol * scale) {
            breakdown = Some(Breakdown {
                block: block_sizes.len(),
                reason: format!(
                    "Krylov space became invariant after {} blocks (residual norm {lead:e} vs {scale:e})",
                    block_sizes.len()
                ),
            });
            break;
        }
        // in-order Gram-Schmidt within the block, dropping dependent columns
        let mut accepted: Vec<DVector<f64>> = Vec::new();
        for mut w in candidates.drain(..) {
            if basis.len() + accepted.len() == rank {
                break;
            }
            for _ in 0..2 {
                let coeffs: Vec<f64> = accepted.iter().map(|q| q.dot(&w)).collect();
                for (q, c) in accepted.iter().zip(coeffs) {
                    w.axpy(-c, q, 1.0);
                }
            }
            let norm = w.norm();
            if norm < opts.deflation_tol * lead {
                continue;
            }
            accepted.push(w * (sign / norm));
        }
        block_sizes.push(accepted.len());
        candidates = accepted.iter().map(|q| &wh.op * q).collect();
        basis.extend(accepted);
        sign = -1.0;
    }
    if block_sizes.len() < rom.m && breakdown.is_none() {
        breakdown = Some(Breakdown {
            block: block_sizes.len(),
            reason: format!("snapshot space exhausted after {} blocks", block_sizes.len()),
        });
    }

    let y = DMatrix::from_columns(&basis);
    let t = y.transpose() * &wh.op * &y;
    let t = (&t + t.transpose()) * 0.5;
    let q = &wh.p * &y;
    let rhs_hat = y.transpose() * &start;
    Ok(OrthoRom { m: rom.m, k: rom.k, block_sizes, t, q, rhs_hat, breakdown })
}

/// Solves `(T + λI) ĉ = rhs_hat`.
pub fn solve_ortho(ortho: &OrthoRom, lambda: f64) -> Result<DMatrix<f64>> {
    solve_shifted(&ortho.t, &ortho.rhs_hat, lambda)
}

pub(crate) fn solve_shifted(t: &DMatrix<f64>, rhs: &DMatrix<f64>, lambda: f64) -> Result<DMatrix<f64>> {
    let shifted = t + DMatrix::identity(t.nrows(), t.ncols()) * lambda;
    let c = match shifted.clone().cholesky() {
        Some(ch) => ch.solve(rhs),
        None => shifted.lu().solve(rhs).ok_or(RomError::SingularPencil(lambda))?,
    };
    if c.iter().any(|v| !v.is_finite()) {
        return Err(RomError::SingularPencil(lambda));
    }
    Ok(c)
}

impl OrthoRom {
    pub fn dim(&self) -> usize {
        self.t.nrows()
    }

    /// Starting row of each block.
    pub fn block_offsets(&self) -> Vec<usize> {
        self.block_sizes
            .iter()
            .scan(0, |acc, &s| {
                let o = *acc;
                *acc += s;
                Some(o)
            })
            .collect()
    }

    fn block_of(&self, row: usize) -> usize {
        let offsets = self.block_offsets();
        offsets.iter().rposition(|&o| o <= row).unwrap_or(0)
    }

    /// `max |Q^T M Q - I|` for the mass matrix of the source ROM, with the
    /// congruence accumulated in double-double precision.
    pub fn orthonormality_error(&self, mass: &DMatrix<f64>) -> f64 {
        let g = congruence(&self.q, mass, &self.q);
        (g - DMatrix::identity(self.dim(), self.dim())).amax()
    }

    /// `max |T_ij|` over blocks more than one apart, relative to `max |T|`.
    pub fn off_tridiagonal(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                if self.block_of(i).abs_diff(self.block_of(j)) > 1 {
                    worst = worst.max(self.t[(i, j)].abs());
                }
            }
        }
        worst / self.t.amax()
    }

    /// Norm of `rhs_hat` beyond the first block relative to its full norm.
    pub fn rhs_tail(&self) -> f64 {
        let first = self.block_sizes.first().copied().unwrap_or(0);
        let tail = self.rhs_hat.rows(first, self.dim() - first).norm();
        tail / self.rhs_hat.norm()
    }

    /// Maps orthonormal-basis coefficients back to the snapshot basis.
    pub fn snapshot_coefficients(&self, c: &DMatrix<f64>) -> DMatrix<f64> {
        &self.q * c
    }

    /// Dumps `T`, `Q` and `rhs_hat` as `matrix,row,col,value` rows (0-based).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["matrix", "row", "col", "value"])?;
        for (name, mat) in [("T", &self.t), ("Q", &self.q), ("rhs_hat", &self.rhs_hat)] {
            for row in 0..mat.nrows() {
                for col in 0..mat.ncols() {
                    w.write_record([name.to_string(), row.to_string(), col.to_string(), mat[(row, col)].to_string()])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}
