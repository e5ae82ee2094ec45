//! Pipeline stages shared by the subcommands, `verify` and the repro runs.

use std::fs::{self, File};
use std::io::BufWriter;
use std::path::Path;

use spectral_rom::forward::{boundary_data, ForwardModel};
use spectral_rom::{
    build_rom, orthogonalize, project_delta, reference_basis, Field, GalerkinRom, InversionOptions, LanczosOptions,
    Mesh, OrthoRom, Reconstruction, ReferenceBasis, RomOptions, Snapshot, TransferDataSet,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::setup::{read_measured, Models};

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub rom: RomOptions,
    pub lanczos: LanczosOptions,
    pub inversion: InversionOptions,
}

impl Options {
    pub fn from_config(cfg: &ExperimentConfig) -> Self {
        Self {
            rom: RomOptions { eig_floor: cfg.rom.eig_floor },
            lanczos: LanczosOptions { deflation_tol: cfg.rom.deflation_tol },
            inversion: InversionOptions { mask_layers: cfg.mask_layers(), floor: cfg.inversion.floor },
        }
    }
}

/// Boundary data of the true medium; snapshots are present only when the data
/// were simulated rather than read from a file.
pub struct Measured<M: Mesh> {
    pub data: TransferDataSet,
    pub snapshots: Option<Vec<Vec<Snapshot<M>>>>,
}

pub fn measure<P: ForwardModel>(cfg: &ExperimentConfig, models: &Models<P>) -> Result<Measured<P::Mesh>, CliError> {
    match &cfg.data.path {
        Some(path) => Ok(Measured { data: read_measured(path, models)?, snapshots: None }),
        None => simulate(&models.data, &models.b),
    }
}

pub fn simulate<P: ForwardModel>(model: &P, b: &[f64]) -> Result<Measured<P::Mesh>, CliError> {
    log::info!("solving {} spectral points on {} nodes", b.len(), model.mesh().n_nodes());
    let (data, snapshots) = boundary_data(model, b)?;
    Ok(Measured { data, snapshots: Some(snapshots) })
}

pub struct DataRom {
    pub rom: GalerkinRom,
    pub ortho: OrthoRom,
}

pub fn data_rom(data: &TransferDataSet, opts: &Options) -> Result<DataRom, CliError> {
    let rom = build_rom(data, &opts.rom)?;
    let ortho = orthogonalize(&rom, &project_delta(&rom)?, &opts.lanczos)?;
    if let Some(b) = &ortho.breakdown {
        log::warn!("Lanczos stopped at block {}: {}", b.block, b.reason);
    }
    Ok(DataRom { rom, ortho })
}

pub fn basis<P: ForwardModel>(model: &P, b: &[f64], opts: &Options) -> Result<ReferenceBasis<P::Mesh>, CliError> {
    log::info!("building reference basis on {} nodes", model.mesh().n_nodes());
    Ok(reference_basis(model, b, &opts.rom, &opts.lanczos)?)
}

/// `‖a − b‖ / ‖b‖` in L², summed over paired fields.
pub fn relative_error<M: Mesh>(a: &[Field<M>], b: &[Field<M>]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d: Vec<f64> = x.values.iter().zip(&y.values).map(|(p, q)| p - q).collect();
        num += y.mesh.inner(&d, &d);
        den += y.inner(y);
    }
    (num / den).sqrt()
}

/// Solutions of `model` at `lambda`, moved onto `target`.
pub fn solutions_on<P: ForwardModel, M: Mesh>(
    model: &P,
    lambda: f64,
    target: &std::sync::Arc<M>,
) -> Result<Vec<Field<M>>, CliError> {
    let mut out = Vec::new();
    for s in model.solve(lambda)? {
        out.push(s.field.transfer_to(target)?);
    }
    Ok(out)
}

/// A local maximum of `q_est`: the largest active value within `radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub value: f64,
    pub point: [f64; 2],
}

/// Local maxima of the estimate over the unmasked nodes, largest first.
pub fn peaks<M: Mesh>(rec: &Reconstruction<M>, radius: f64) -> Vec<Peak> {
    let mesh = &rec.q_est.mesh;
    let active: Vec<(usize, [f64; 2])> = rec.active().map(|i| (i, mesh.point(i))).collect();
    let q = &rec.q_est.values;
    let mut out: Vec<Peak> = active
        .iter()
        .filter(|&&(i, p)| {
            active.iter().all(|&(j, r)| {
                let d = (r[0] - p[0]).hypot(r[1] - p[1]);
                d > radius || q[j] < q[i] || (q[j] == q[i] && j >= i)
            })
        })
        .map(|&(i, p)| Peak { value: q[i], point: p })
        .collect();
    out.sort_by(|a, b| b.value.total_cmp(&a.value));
    out
}

/// Distance from each centre to the nearest of the `centers.len()` largest peaks.
pub fn localization(peaks: &[Peak], centers: &[[f64; 2]]) -> Vec<f64> {
    let top = &peaks[..peaks.len().min(centers.len())];
    centers
        .iter()
        .map(|c| top.iter().map(|p| (p.point[0] - c[0]).hypot(p.point[1] - c[1])).fold(f64::INFINITY, f64::min))
        .collect()
}

pub fn create(dir: &Path, name: &str) -> Result<BufWriter<File>, CliError> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}
