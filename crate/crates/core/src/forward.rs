//! Shared driver for the 1D and 2D forward solvers: snapshot solves at the
//! spectral points and the boundary data they produce.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::banded::SymBanded;
use crate::data::{validate_spectral_points, TransferDataSet};
use crate::error::{Result, RomError};
use crate::mesh::{Field, Mesh, Snapshot};

/// A discretized `-Δu + qu + λu = 0` problem with `K` Neumann sources.
pub trait ForwardModel: Sync {
    type Mesh: Mesh;

    fn mesh(&self) -> &Arc<Self::Mesh>;

    /// Load vectors `∫_∂Ω g_r φ_j`, one per source.
    fn loads(&self) -> &[Vec<f64>];

    /// `(K + Q, M)` with Dirichlet nodes removed from `M` and replaced by the
    /// identity in `K + Q`.
    fn pencil(&self) -> (&SymBanded, &SymBanded);

    /// Assembled system matrix `K + Q + λM`.
    fn system(&self, lambda: f64) -> SymBanded {
        let (base, mass) = self.pencil();
        base.add_scaled(lambda, mass)
    }

    fn min_potential(&self) -> f64;

    fn n_sources(&self) -> usize {
        self.loads().len()
    }

    /// Solves for every source with one shared factorization.
    ///
    /// Two refinement steps against a double-double residual of the exact
    /// pencil make the snapshots accurate to working precision, so the
    /// identity `(b_i - b_j) <u_i, u_j> = F_j - F_i` behind the Loewner
    /// formulas holds to roundoff rather than to `eps * cond`.
    fn solve(&self, lambda: f64) -> Result<Vec<Snapshot<Self::Mesh>>> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(RomError::SpectralPoints(format!("lambda = {lambda} must be positive")));
        }
        let chol = self
            .system(lambda)
            .cholesky()
            .map_err(|_| RomError::NonCoercive { lambda, min_q: self.min_potential() })?;
        Ok(self
            .loads()
            .iter()
            .enumerate()
            .map(|(r, g)| {
                let (base, mass) = self.pencil();
                let mut u = chol.solve(g);
                for _ in 0..2 {
                    let res = base.pencil_residual(lambda, mass, &u, g);
                    for (x, d) in u.iter_mut().zip(chol.solve(&res)) {
                        *x += d;
                    }
                }
                Snapshot { field: Field::new(self.mesh().clone(), u), lambda, source: r }
            })
            .collect())
    }

    /// `∫_∂Ω u g_l` for every receiver `l`.
    fn pairings(&self, u: &[f64]) -> Vec<f64> {
        self.loads().iter().map(|g| g.iter().zip(u).map(|(a, b)| a * b).sum()).collect()
    }
}

/// Snapshots at all spectral points, indexed `[i][r]`.
pub fn snapshots<P: ForwardModel>(model: &P, b: &[f64]) -> Result<Vec<Vec<Snapshot<P::Mesh>>>> {
    validate_spectral_points(b)?;
    b.par_iter().map(|&lambda| model.solve(lambda)).collect()
}

/// Transfer data built from already computed snapshots.
///
/// `F^i_rl = ∫ u_i^r g_l`; `DF^i_rl = -∫ u_i^r u_i^l`, the exact lambda-derivative
/// of the discrete transfer function.
pub fn data_from_snapshots<P: ForwardModel>(model: &P, snaps: &[Vec<Snapshot<P::Mesh>>]) -> Result<TransferDataSet> {
    let k = model.n_sources();
    let mesh = model.mesh();
    let mut b = Vec::with_capacity(snaps.len());
    let mut f = Vec::with_capacity(snaps.len());
    let mut df = Vec::with_capacity(snaps.len());
    for row in snaps {
        b.push(row[0].lambda);
        let mut fi = DMatrix::zeros(k, k);
        let mut di = DMatrix::zeros(k, k);
        let mu: Vec<Vec<f64>> = row.iter().map(|s| mesh.mass().matvec(&s.field.values)).collect();
        for r in 0..k {
            let p = model.pairings(&row[r].field.values);
            for l in 0..k {
                fi[(r, l)] = p[l];
                di[(r, l)] = -mu[l].iter().zip(&row[r].field.values).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        f.push(fi);
        df.push(di);
    }
    TransferDataSet::new(b, f, df)
}

/// Solves at every `b_i` and returns the data set together with the snapshots.
pub fn boundary_data<P: ForwardModel>(model: &P, b: &[f64]) -> Result<(TransferDataSet, Vec<Vec<Snapshot<P::Mesh>>>)> {
    let snaps = snapshots(model, b)?;
    let data = data_from_snapshots(model, &snaps)?;
    Ok((data, snaps))
}
