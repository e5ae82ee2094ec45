//! Data-driven Galerkin ROM: mass and stiffness matrices of the snapshot
//! space assembled from transfer data alone, via Loewner divided differences.
//!
//! Rows and columns are indexed by `(i, r)` (spectral point, source) flattened
//! as `i * K + r` (0-based).

use std::io::Write;

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};

use crate::compensated::congruence;
use crate::data::{validate_spectral_points, TransferDataSet};
use crate::error::{Result, RomError};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RomOptions {
    /// Relative eigenvalue floor `τ`: mass eigenvalues below `τ λ_max(M)` are
    /// treated as zero, those below `-τ λ_max(M)` reject the data.
    pub eig_floor: f64,
}

impl Default for RomOptions {
    fn default() -> Self {
        Self { eig_floor: 1e-12 }
    }
}

#[derive(Debug, Clone)]
enum MassSolver {
    Cholesky(Cholesky<f64, Dyn>),
    /// Eigenvalue-floored pseudo-inverse `V diag(1/μ) V^T` for numerically
    /// rank-deficient mass matrices.
    Floored {
        vectors: DMatrix<f64>,
        inv: Vec<f64>,
    },
}

/// Galerkin pencil `(S + λM) c = rhs` on the snapshot space.
#[derive(Debug, Clone)]
pub struct GalerkinRom {
    pub m: usize,
    pub k: usize,
    pub b: Vec<f64>,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// `mK x K`; entry `((i, r), l)` is `F^i_rl`.
    pub rhs: DMatrix<f64>,
    /// Extreme eigenvalues of the mass matrix.
    pub mass_eigenvalues: (f64, f64),
    /// Number of mass eigenvalues below the floor.
    pub deflated: usize,
    solver: MassSolver,
}

fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Assembles `M`, `S` and the source block from transfer data.
pub fn build_rom(data: &TransferDataSet, opts: &RomOptions) -> Result<GalerkinRom> {
    validate_spectral_points(&data.b)?;
    let (m, k) = (data.m(), data.k());
    let n = m * k;
    let mut mass = DMatrix::zeros(n, n);
    let mut stiffness = DMatrix::zeros(n, n);
    let mut rhs = DMatrix::zeros(n, k);
    for i in 0..m {
        let (bi, fi, dfi) = (data.b[i], &data.f[i], &data.df[i]);
        for r in 0..k {
            for l in 0..k {
                rhs[(i * k + r, l)] = fi[(r, l)];
            }
        }
        for j in 0..m {
            let (bj, fj) = (data.b[j], &data.f[j]);
            for r in 0..k {
                for l in 0..k {
                    let (row, col) = (i * k + r, j * k + l);
                    if i == j {
                        mass[(row, col)] = -dfi[(r, l)];
                        stiffness[(row, col)] = fi[(r, l)] + bi * dfi[(r, l)];
                    } else {
                        mass[(row, col)] = (fj[(l, r)] - fi[(r, l)]) / (bi - bj);
                        stiffness[(row, col)] = (bj * fj[(l, r)] - bi * fi[(r, l)]) / (bj - bi);
                    }
                }
            }
        }
    }
    GalerkinRom::from_parts(data.b.clone(), k, mass, stiffness, rhs, opts)
}

impl GalerkinRom {
    /// Builds a ROM from explicit matrices; `mass` and `stiffness` are
    /// symmetrized and the mass spectrum is checked against the floor.
    pub fn from_parts(
        b: Vec<f64>,
        k: usize,
        mass: DMatrix<f64>,
        stiffness: DMatrix<f64>,
        rhs: DMatrix<f64>,
        opts: &RomOptions,
    ) -> Result<Self> {
        let n = b.len() * k;
        if k == 0 || mass.shape() != (n, n) || stiffness.shape() != (n, n) || rhs.shape() != (n, k) {
            return Err(RomError::Structure(format!("ROM blocks do not match m = {}, K = {k}", b.len())));
        }
        let mass = symmetrize(&mass);
        let stiffness = symmetrize(&stiffness);
        let eig = SymmetricEigen::new(mass.clone());
        let max = eig.eigenvalues.max();
        let min = eig.eigenvalues.min();
        if !(max > 0.0) {
            return Err(RomError::IllPosed { eigenvalue: max, floor: 0.0 });
        }
        let floor = opts.eig_floor * max;
        if min < -floor {
            return Err(RomError::IllPosed { eigenvalue: min, floor });
        }
        let deflated = eig.eigenvalues.iter().filter(|&&v| v < floor).count();
        let solver = match (deflated, Cholesky::new(mass.clone())) {
            (0, Some(chol)) => MassSolver::Cholesky(chol),
            _ => MassSolver::Floored {
                inv: eig.eigenvalues.iter().map(|&v| if v < floor { 0.0 } else { 1.0 / v }).collect(),
                vectors: eig.eigenvectors,
            },
        };
        Ok(GalerkinRom { m: b.len(), k, b, mass, stiffness, rhs, mass_eigenvalues: (min, max), deflated, solver })
    }

    pub fn dim(&self) -> usize {
        self.m * self.k
    }

    /// Applies `M^{-1}` (floored pseudo-inverse when `M` is numerically singular).
    pub fn mass_solve(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        match &self.solver {
            MassSolver::Cholesky(c) => c.solve(x),
            MassSolver::Floored { vectors, inv } => {
                let mut y = vectors.transpose() * x;
                for (mut row, &s) in y.row_iter_mut().zip(inv) {
                    row *= s;
                }
                vectors * y
            }
        }
    }

    /// `P` with `P^T M P = I` on the unfloored part of the spectrum and the
    /// whitened stiffness `P^T S P`.
    pub fn whitening(&self) -> Whitening {
        let p = match &self.solver {
            MassSolver::Cholesky(c) => {
                let l = c.l();
                let n = l.nrows();
                l.transpose()
                    .solve_upper_triangular(&DMatrix::identity(n, n))
                    .expect("Cholesky factor has a positive diagonal")
            }
            MassSolver::Floored { vectors, inv } => {
                let keep: Vec<usize> = (0..inv.len()).filter(|&i| inv[i] > 0.0).collect();
                DMatrix::from_fn(vectors.nrows(), keep.len(), |r, c| vectors[(r, keep[c])] * inv[keep[c]].sqrt())
            }
        };
        // the factor inherits a backward error of order eps*|M|, which in
        // the M-inner product is amplified by cond(M); two congruence
        // corrections with an accurately accumulated Gram matrix remove it
        let mut p = p;
        for _ in 0..2 {
            let g = symmetrize(&congruence(&p, &self.mass, &p));
            let eig = g.symmetric_eigen();
            let root = DMatrix::from_diagonal(&eig.eigenvalues.map(|v| 1.0 / v.sqrt()));
            p = &p * (&eig.eigenvectors * root * eig.eigenvectors.transpose());
        }
        let op = symmetrize(&congruence(&p, &self.stiffness, &p));
        Whitening { p, op }
    }

    /// `A x = M^{-1} S x`.
    pub fn apply_operator(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        self.mass_solve(&(&self.stiffness * x))
    }

    /// Largest `|S_(i,r)(j,l) + b_i M_(i,r)(j,l) - F^j_lr|` relative to `max |F|`.
    pub fn consistency_residual(&self, data: &TransferDataSet) -> f64 {
        let k = self.k;
        let fmax = data.f.iter().map(|f| f.amax()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for i in 0..self.m {
            for j in 0..self.m {
                for r in 0..k {
                    for l in 0..k {
                        let (row, col) = (i * k + r, j * k + l);
                        let res = self.stiffness[(row, col)] + data.b[i] * self.mass[(row, col)] - data.f[j][(l, r)];
                        worst = worst.max(res.abs());
                    }
                }
            }
        }
        worst / fmax
    }

    /// Dumps `M`, `S` and `rhs` as `matrix,m,K,row,col,value` rows (0-based).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["matrix", "m", "K", "row", "col", "value"])?;
        for (name, mat) in [("M", &self.mass), ("S", &self.stiffness), ("rhs", &self.rhs)] {
            for row in 0..mat.nrows() {
                for col in 0..mat.ncols() {
                    w.write_record([
                        name.to_string(),
                        self.m.to_string(),
                        self.k.to_string(),
                        row.to_string(),
                        col.to_string(),
                        mat[(row, col)].to_string(),
                    ])?;
                }
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Coordinates in which the mass inner product is Euclidean: `x = P y`, and
/// `A = M^{-1} S` becomes the symmetric `op = P^T S P`.
#[derive(Debug, Clone)]
pub struct Whitening {
    pub p: DMatrix<f64>,
    pub op: DMatrix<f64>,
}

/// Coefficients of the projected boundary functionals in the snapshot basis.
#[derive(Debug, Clone)]
pub struct DeltaProjection {
    /// `mK x K`, solves `M d = rhs`.
    pub d: DMatrix<f64>,
    /// `||M d - rhs|| / ||rhs||`
    pub residual: f64,
}

pub fn project_delta(rom: &GalerkinRom) -> Result<DeltaProjection> {
    let d = rom.mass_solve(&rom.rhs);
    let residual = (&rom.mass * &d - &rom.rhs).norm() / rom.rhs.norm();
    if !residual.is_finite() {
        return Err(RomError::IllPosed { eigenvalue: rom.mass_eigenvalues.0, floor: 0.0 });
    }
    Ok(DeltaProjection { d, residual })
}

/// Galerkin transfer function `rhs^T (S + λM)^{-1} rhs`.
pub fn rom_transfer(rom: &GalerkinRom, lambda: f64) -> Result<DMatrix<f64>> {
    let pencil = &rom.stiffness + &rom.mass * lambda;
    let lu = pencil.lu();
    let c = lu.solve(&rom.rhs).ok_or(RomError::SingularPencil(lambda))?;
    if c.iter().any(|v| !v.is_finite()) {
        return Err(RomError::SingularPencil(lambda));
    }
    Ok(rom.rhs.transpose() * c)
}
