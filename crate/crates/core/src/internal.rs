//! Internal solutions from boundary data and the differential-quotient
//! estimate of the potential.
//!
//! The data-driven orthonormal ROM gives the coefficients of the Galerkin
//! solution in an orthonormal basis that is unknown, but depends only weakly
//! on the medium; combining those coefficients with the orthonormal basis of
//! a known reference medium gives an internal solution `ũ`.

use std::io::Write;
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::data::TransferDataSet;
use crate::error::{Result, RomError};
use crate::forward::{boundary_data, ForwardModel};
use crate::lanczos::{orthogonalize, solve_ortho, LanczosOptions, OrthoRom};
use crate::mesh::{Field, Mesh, Snapshot};
use crate::rom::{build_rom, project_delta, GalerkinRom, RomOptions};

/// Orthonormal basis functions of a known medium, on that medium's mesh.
#[derive(Debug, Clone)]
pub struct ReferenceBasis<M: Mesh> {
    /// One field per column of `ortho.q`, ordered as the orthonormal ROM.
    pub fields: Vec<Field<M>>,
    pub ortho: OrthoRom,
    pub rom: GalerkinRom,
    pub data: TransferDataSet,
    /// `[i][r]`.
    pub snapshots: Vec<Vec<Snapshot<M>>>,
}

/// Solves the known medium at `b`, builds and orthogonalizes its ROM and
/// maps the orthonormal basis back onto the mesh.
pub fn reference_basis<P: ForwardModel>(
    model: &P,
    b: &[f64],
    rom_opts: &RomOptions,
    lanczos_opts: &LanczosOptions,
) -> Result<ReferenceBasis<P::Mesh>> {
    let (data, snapshots) = boundary_data(model, b)?;
    let rom = build_rom(&data, rom_opts)?;
    let ortho = orthogonalize(&rom, &project_delta(&rom)?, lanczos_opts)?;
    let flat: Vec<&Field<P::Mesh>> = snapshots.iter().flatten().map(|s| &s.field).collect();
    let fields = (0..ortho.q.ncols())
        .into_par_iter()
        .map(|c| {
            let w: Vec<f64> = ortho.q.column(c).iter().copied().collect();
            Field::combination(&flat, &w)
        })
        .collect();
    Ok(ReferenceBasis { fields, ortho, rom, data, snapshots })
}

impl<M: Mesh> ReferenceBasis<M> {
    pub fn len(&self) -> usize {
        self.fields.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fields.is_empty()
    }

    pub fn mesh(&self) -> &Arc<M> {
        &self.fields[0].mesh
    }

    /// `max |<û_a, û_b> - δ_ab|` by mesh quadrature.
    pub fn gram_error(&self) -> f64 {
        let n = self.fields.len();
        let mut worst: f64 = 0.0;
        for a in 0..n {
            for b in a..n {
                let target = if a == b { 1.0 } else { 0.0 };
                worst = worst.max((self.fields[a].inner(&self.fields[b]) - target).abs());
            }
        }
        worst
    }

    /// Relative L2 distance of each basis function from the matching function
    /// of `other` (same mesh and block structure).
    pub fn distances(&self, other: &ReferenceBasis<M>) -> Result<Vec<f64>> {
        check_structure(&self.ortho, &other.ortho)?;
        Ok(self.fields.iter().zip(&other.fields).map(|(a, b)| a.relative_distance(b)).collect())
    }

    /// `x[,y],j,s,value` rows for every basis function (1-based block and source).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let offsets = self.ortho.block_offsets();
        let mut w = csv::Writer::from_writer(writer);
        let dim = self.mesh().dimension();
        w.write_record(coordinate_header(dim).into_iter().chain(["j", "s", "value"]))?;
        for (c, field) in self.fields.iter().enumerate() {
            let j = offsets.partition_point(|&o| o <= c) - 1;
            let s = c - offsets[j];
            for node in 0..field.values.len() {
                let mut rec = coordinates(field.mesh.as_ref(), node);
                rec.extend([(j + 1).to_string(), (s + 1).to_string(), field.values[node].to_string()]);
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn check_structure(data: &OrthoRom, reference: &OrthoRom) -> Result<()> {
    if data.m != reference.m || data.k != reference.k {
        return Err(RomError::Structure(format!(
            "data ROM has m = {}, K = {}; reference has m = {}, K = {}",
            data.m, data.k, reference.m, reference.k
        )));
    }
    if data.block_sizes != reference.block_sizes {
        return Err(RomError::Structure(format!(
            "deflation differs: data blocks {:?}, reference blocks {:?}",
            data.block_sizes, reference.block_sizes
        )));
    }
    Ok(())
}

/// `ũ^r` for every right-hand side column at one spectral value.
#[derive(Debug, Clone)]
pub struct InternalSolution<M: Mesh> {
    pub lambda: f64,
    pub fields: Vec<Field<M>>,
    pub coefficients: DMatrix<f64>,
}

impl<M: Mesh> InternalSolution<M> {
    /// `x[,y],r,value` rows (1-based `r`).
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let dim = self.fields[0].mesh.dimension();
        w.write_record(coordinate_header(dim).into_iter().chain(["r", "value"]))?;
        for (r, field) in self.fields.iter().enumerate() {
            for node in 0..field.values.len() {
                let mut rec = coordinates(field.mesh.as_ref(), node);
                rec.extend([(r + 1).to_string(), field.values[node].to_string()]);
                w.write_record(&rec)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn synthesize<M: Mesh>(basis: &ReferenceBasis<M>, lambda: f64, c: DMatrix<f64>) -> InternalSolution<M> {
    let refs: Vec<&Field<M>> = basis.fields.iter().collect();
    let fields = (0..c.ncols())
        .map(|r| {
            let w: Vec<f64> = c.column(r).iter().copied().collect();
            Field::combination(&refs, &w)
        })
        .collect();
    InternalSolution { lambda, fields, coefficients: c }
}

/// `ũ^r = Σ ĉ^r_(j,s) û⁰_(j,s)` with `ĉ` from the data-driven orthonormal ROM.
pub fn internal_solution<M: Mesh>(
    data: &OrthoRom,
    basis: &ReferenceBasis<M>,
    lambda: f64,
) -> Result<InternalSolution<M>> {
    check_structure(data, &basis.ortho)?;
    let c = solve_ortho(data, lambda)?;
    Ok(synthesize(basis, lambda, c))
}

/// Internal solutions for sources that were not part of the data set.
///
/// `pairings` is `mK x n`; column `g` holds `∫ u_j^s g` for every data
/// snapshot `(j, s)`, which turns into the orthonormal right-hand side via the
/// same change of basis as the data.
pub fn internal_solution_new_source<M: Mesh>(
    data: &OrthoRom,
    basis: &ReferenceBasis<M>,
    pairings: &DMatrix<f64>,
    lambda: f64,
) -> Result<InternalSolution<M>> {
    check_structure(data, &basis.ortho)?;
    if pairings.nrows() != data.q.nrows() || pairings.ncols() == 0 {
        return Err(RomError::Input(format!(
            "source pairings are {} x {}, expected {} rows (one per data snapshot)",
            pairings.nrows(),
            pairings.ncols(),
            data.q.nrows()
        )));
    }
    let rhs = data.q.transpose() * pairings;
    let c = crate::lanczos::solve_shifted(&data.t, &rhs, lambda)?;
    Ok(synthesize(basis, lambda, c))
}

/// Internal solutions at several spectral values, in input order.
pub fn internal_solutions<M: Mesh>(
    data: &OrthoRom,
    basis: &ReferenceBasis<M>,
    lambdas: &[f64],
) -> Result<Vec<InternalSolution<M>>> {
    lambdas.par_iter().map(|&l| internal_solution(data, basis, l)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionOptions {
    /// Nodes closer than this many mesh layers to the boundary are masked.
    pub mask_layers: usize,
    /// Nodes where `|ũ|` falls below this value are skipped.
    pub floor: f64,
}

impl Default for InversionOptions {
    fn default() -> Self {
        Self { mask_layers: 2, floor: 1e-12 }
    }
}

/// Estimated potential with a 0/1 confidence mask.
#[derive(Debug, Clone)]
pub struct Reconstruction<M: Mesh> {
    pub q_est: Field<M>,
    pub mask: Vec<f64>,
}

impl<M: Mesh> Reconstruction<M> {
    /// Unmasked node indices.
    pub fn active(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i)
    }

    /// `max |q_est|` over unmasked nodes.
    pub fn max_abs(&self) -> f64 {
        self.active().map(|i| self.q_est.values[i].abs()).fold(0.0, f64::max)
    }

    /// Relative L2 error against `truth` sampled at the same nodes, measured
    /// with the mass-lumped quadrature over unmasked nodes.
    pub fn relative_error(&self, truth: &[f64]) -> f64 {
        let w = self.q_est.mesh.lumped_mass();
        let (mut num, mut den) = (0.0, 0.0);
        for i in self.active() {
            num += w[i] * (self.q_est.values[i] - truth[i]).powi(2);
            den += w[i] * truth[i].powi(2);
        }
        (num / den).sqrt()
    }

    /// `x[,y],q_est,mask` rows.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mesh = self.q_est.mesh.as_ref();
        w.write_record(coordinate_header(mesh.dimension()).into_iter().chain(["q_est", "mask"]))?;
        for node in 0..mesh.n_nodes() {
            let mut rec = coordinates(mesh, node);
            rec.extend([self.q_est.values[node].to_string(), self.mask[node].to_string()]);
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `q ≈ (Δũ − λũ)/ũ` per node, averaged over all sources and spectral values
/// with weights `ũ²`.
pub fn invert<M: Mesh>(solutions: &[InternalSolution<M>], opts: &InversionOptions) -> Result<Reconstruction<M>> {
    let first = solutions
        .first()
        .and_then(|s| s.fields.first())
        .ok_or_else(|| RomError::Input("inversion needs at least one internal solution".into()))?;
    let mesh = first.mesh.clone();
    let n = mesh.n_nodes();
    let mut num = vec![0.0; n];
    let mut den = vec![0.0; n];
    for s in solutions {
        if !(s.lambda > 0.0) {
            return Err(RomError::SpectralPoints(format!("lambda = {} must be positive", s.lambda)));
        }
        for f in &s.fields {
            if !Arc::ptr_eq(&f.mesh, &mesh) {
                return Err(RomError::Input("internal solutions live on different meshes".into()));
            }
            let lap = f.laplacian();
            for i in 0..n {
                let u = f.values[i];
                if u.abs() < opts.floor {
                    continue;
                }
                // w (lap - λu)/u with w = u²
                num[i] += u * (lap[i] - s.lambda * u);
                den[i] += u * u;
            }
        }
    }
    let depth = mesh.boundary_depth();
    let mut q = vec![0.0; n];
    let mut mask = vec![0.0; n];
    for i in 0..n {
        if depth[i] >= opts.mask_layers && den[i] > 0.0 {
            q[i] = num[i] / den[i];
            mask[i] = 1.0;
        }
    }
    Ok(Reconstruction { q_est: Field::new(mesh, q), mask })
}

fn coordinate_header(dim: usize) -> Vec<&'static str> {
    if dim == 1 {
        vec!["x"]
    } else {
        vec!["x", "y"]
    }
}

fn coordinates<M: Mesh + ?Sized>(mesh: &M, node: usize) -> Vec<String> {
    let p = mesh.point(node);
    (0..mesh.dimension()).map(|d| p[d].to_string()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward1d::{Medium1D, Profile1D, RightBc};
    use crate::mesh::Mesh1D;

    fn basis_1d(profile: Profile1D, n: usize, b: &[f64]) -> ReferenceBasis<Mesh1D> {
        let mesh = Arc::new(Mesh1D::uniform(n).unwrap());
        let medium = Medium1D::from_profile(mesh, &profile, RightBc::Dirichlet).unwrap();
        reference_basis(&medium, b, &RomOptions::default(), &LanczosOptions::default()).unwrap()
    }

    const B: [f64; 4] = [1.0, 3.0, 8.0, 20.0];

    #[test]
    fn basis_is_orthonormal() {
        let basis = basis_1d(Profile1D::Zero, 300, &B);
        assert_eq!(basis.len(), 4);
        assert!(basis.gram_error() < 1e-8);
    }

    #[test]
    fn same_medium_reproduces_snapshots() {
        let basis = basis_1d(Profile1D::Zero, 300, &B);
        for (i, &l) in B.iter().enumerate() {
            let u = internal_solution(&basis.ortho, &basis, l).unwrap();
            assert!(u.fields[0].relative_distance(&basis.snapshots[i][0].field) < 1e-8);
        }
    }

    #[test]
    fn new_source_pairings() {
        let basis = basis_1d(Profile1D::Zero, 300, &B);
        let ortho = &basis.ortho;
        let existing = basis.rom.rhs.clone();
        let a = internal_solution(ortho, &basis, 2.0).unwrap();
        let b = internal_solution_new_source(ortho, &basis, &existing, 2.0).unwrap();
        assert!(b.fields[0].relative_distance(&a.fields[0]) < 1e-10);

        let doubled = &existing * 2.0;
        let c = internal_solution_new_source(ortho, &basis, &doubled, 2.0).unwrap();
        let twice = Field::combination(&[&a.fields[0]], &[2.0]);
        assert!(c.fields[0].relative_distance(&twice) < 1e-10);

        let zero = DMatrix::zeros(existing.nrows(), 1);
        let z = internal_solution_new_source(ortho, &basis, &zero, 2.0).unwrap();
        assert!(z.fields[0].values.iter().all(|&v| v == 0.0));

        let short = DMatrix::zeros(2, 1);
        assert!(matches!(internal_solution_new_source(ortho, &basis, &short, 2.0), Err(RomError::Input(_))));
    }

    #[test]
    fn structure_mismatch_is_reported() {
        let basis = basis_1d(Profile1D::Zero, 200, &B);
        let other = basis_1d(Profile1D::Zero, 200, &B[..3]);
        assert!(matches!(internal_solution(&other.ortho, &basis, 2.0), Err(RomError::Structure(_))));
    }

    #[test]
    fn inversion_of_reference_data_is_flat() {
        let basis = basis_1d(Profile1D::Zero, 400, &B);
        let sols = internal_solutions(&basis.ortho, &basis, &B).unwrap();
        let rec = invert(&sols, &InversionOptions::default()).unwrap();
        assert_eq!(rec.mask[0], 0.0);
        assert_eq!(rec.mask[1], 0.0);
        assert_eq!(rec.mask[2], 1.0);
        assert!(rec.max_abs() < 5e-3, "{}", rec.max_abs());
    }

    #[test]
    fn empty_inversion_rejected() {
        let sols: Vec<InternalSolution<Mesh1D>> = Vec::new();
        assert!(matches!(invert(&sols, &InversionOptions::default()), Err(RomError::Input(_))));
    }

    #[test]
    fn csv_layout() {
        let basis = basis_1d(Profile1D::Zero, 4, &[1.0, 2.0]);
        let u = internal_solution(&basis.ortho, &basis, 1.5).unwrap();
        let mut out = Vec::new();
        u.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        assert!(text.starts_with("x,r,value\n0,1,"));
        assert_eq!(text.lines().count(), 6);
    }
}
