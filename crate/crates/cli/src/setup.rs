//! Turns a validated config into forward models.

use std::fs::File;
use std::path::Path;
use std::sync::Arc;

use serde::Deserialize;
use spectral_rom::forward::ForwardModel;
use spectral_rom::forward1d::Medium1D;
use spectral_rom::forward2d::{Medium2D, Problem2D, SourceSet};
use spectral_rom::{Mesh, Mesh1D, Mesh2D, TransferDataSet};

use crate::config::{ExperimentConfig, MediumSpec, MeshSpec};
use crate::error::CliError;

/// Forward models of an experiment. `data` and `background` (true and
/// reference media) live on the data mesh, `reference` and `truth` on the
/// reference mesh.
pub struct Models<P> {
    pub data: P,
    pub background: P,
    pub reference: P,
    pub truth: P,
    pub b: Vec<f64>,
}

pub enum Setup {
    One(Models<Medium1D>),
    Two(Models<Problem2D>),
}

impl Setup {
    pub fn build(cfg: &ExperimentConfig) -> Result<Self, CliError> {
        let b = cfg.spectral_points()?;
        Ok(match cfg.dimension {
            1 => Setup::One(build_1d(cfg, b)?),
            _ => Setup::Two(build_2d(cfg, b)?),
        })
    }
}

fn resolution(spec: &MeshSpec) -> usize {
    match spec {
        MeshSpec::Resolution(n) => *n,
        MeshSpec::Files { .. } => unreachable!("validated: 1D meshes are resolutions"),
    }
}

fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| CliError::Parse(format!("cannot open {}: {e}", path.display())))
}

fn medium_1d(cfg: &ExperimentConfig, spec: &MediumSpec, mesh: &Arc<Mesh1D>) -> Result<Medium1D, CliError> {
    let bc = cfg.right_bc.into();
    Ok(match spec {
        MediumSpec::File { path } => Medium1D::from_csv(open(path)?, mesh.clone(), bc)?,
        other => Medium1D::from_profile(mesh.clone(), &other.profile_1d().expect("validated 1D medium"), bc)?,
    })
}

fn build_1d(cfg: &ExperimentConfig, b: Vec<f64>) -> Result<Models<Medium1D>, CliError> {
    let fine = Arc::new(Mesh1D::uniform(resolution(&cfg.mesh.data))?);
    let coarse = Arc::new(Mesh1D::uniform(resolution(&cfg.mesh.reference))?);
    Ok(Models {
        data: medium_1d(cfg, &cfg.medium, &fine)?,
        background: medium_1d(cfg, &cfg.reference, &fine)?,
        reference: medium_1d(cfg, &cfg.reference, &coarse)?,
        truth: medium_1d(cfg, &cfg.medium, &coarse)?,
        b,
    })
}

#[derive(Deserialize)]
struct VertexRow {
    x: f64,
    y: f64,
}

#[derive(Deserialize)]
struct TriangleRow {
    a: usize,
    b: usize,
    c: usize,
}

fn read_rows<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let mut reader = csv::Reader::from_reader(open(path)?);
    let rows: Result<Vec<T>, csv::Error> = reader.deserialize().collect();
    rows.map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))
}

fn mesh_2d(spec: &MeshSpec) -> Result<Mesh2D, CliError> {
    Ok(match spec {
        MeshSpec::Resolution(n) => Mesh2D::unit_square(*n)?,
        MeshSpec::Files { vertices, triangles } => {
            let v: Vec<VertexRow> = read_rows(vertices)?;
            let t: Vec<TriangleRow> = read_rows(triangles)?;
            Mesh2D::new(v.iter().map(|r| [r.x, r.y]).collect(), t.iter().map(|r| [r.a, r.b, r.c]).collect())?
        }
    })
}

/// Bilinear interpolation of `x,y,q` samples on a rectilinear lattice,
/// clamped outside the sampled box.
struct Lattice {
    xs: Vec<f64>,
    ys: Vec<f64>,
    q: Vec<f64>,
}

#[derive(Deserialize)]
struct SampleRow {
    x: f64,
    y: f64,
    q: f64,
}

impl Lattice {
    fn read(path: &Path) -> Result<Self, CliError> {
        let rows: Vec<SampleRow> = read_rows(path)?;
        let axis = |f: fn(&SampleRow) -> f64| {
            let mut v: Vec<f64> = rows.iter().map(f).collect();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let xs = axis(|r| r.x);
        let ys = axis(|r| r.y);
        let bad = |msg: &str| CliError::Parse(format!("{}: {msg}", path.display()));
        if xs.len() < 2 || ys.len() < 2 || rows.len() != xs.len() * ys.len() {
            return Err(bad("samples must fill a rectilinear lattice with at least 2 x 2 points"));
        }
        let mut q = vec![f64::NAN; rows.len()];
        for r in &rows {
            let i = xs.partition_point(|&v| v < r.x);
            let j = ys.partition_point(|&v| v < r.y);
            q[j * xs.len() + i] = r.q;
        }
        if q.iter().any(|v| !v.is_finite()) {
            return Err(bad("lattice has missing or non-finite samples"));
        }
        Ok(Self { xs, ys, q })
    }

    fn eval(&self, p: [f64; 2]) -> f64 {
        let locate = |axis: &[f64], v: f64| {
            let k = axis.partition_point(|&a| a <= v).clamp(1, axis.len() - 1);
            let t = ((v - axis[k - 1]) / (axis[k] - axis[k - 1])).clamp(0.0, 1.0);
            (k - 1, t)
        };
        let (i, s) = locate(&self.xs, p[0]);
        let (j, t) = locate(&self.ys, p[1]);
        let nx = self.xs.len();
        let at = |i: usize, j: usize| self.q[j * nx + i];
        (1.0 - t) * ((1.0 - s) * at(i, j) + s * at(i + 1, j)) + t * ((1.0 - s) * at(i, j + 1) + s * at(i + 1, j + 1))
    }
}

fn medium_2d(spec: &MediumSpec, mesh: &Arc<Mesh2D>) -> Result<Medium2D, CliError> {
    Ok(match spec {
        MediumSpec::File { path } => {
            let lattice = Lattice::read(path)?;
            let q = (0..mesh.n_nodes()).map(|i| lattice.eval(mesh.point(i))).collect();
            Medium2D::new(mesh.clone(), q)?
        }
        other => Medium2D::from_profile(mesh.clone(), &other.profile_2d().expect("validated 2D medium"))?,
    })
}

fn build_2d(cfg: &ExperimentConfig, b: Vec<f64>) -> Result<Models<Problem2D>, CliError> {
    let fine = Arc::new(mesh_2d(&cfg.mesh.data)?);
    let coarse = Arc::new(mesh_2d(&cfg.mesh.reference)?);
    if fine.n_nodes() <= coarse.n_nodes() {
        return Err(CliError::Validation {
            field: "mesh.data".into(),
            message: format!(
                "data mesh ({} nodes) must be strictly finer than the reference mesh ({} nodes)",
                fine.n_nodes(),
                coarse.n_nodes()
            ),
        });
    }
    let sides = cfg.sides()?;
    let problem = |spec: &MediumSpec, mesh: &Arc<Mesh2D>| -> Result<Problem2D, CliError> {
        let sources = SourceSet::side_segments(mesh, &sides, cfg.sources.per_side)?;
        Ok(Problem2D::new(medium_2d(spec, mesh)?, sources)?)
    };
    Ok(Models {
        data: problem(&cfg.medium, &fine)?,
        background: problem(&cfg.reference, &fine)?,
        reference: problem(&cfg.reference, &coarse)?,
        truth: problem(&cfg.medium, &coarse)?,
        b,
    })
}

/// Reads measured data and checks it against the configured experiment.
pub fn read_measured<P: ForwardModel>(path: &Path, models: &Models<P>) -> Result<TransferDataSet, CliError> {
    let data = TransferDataSet::read_csv(open(path)?)?;
    let mismatch = |message: String| CliError::Validation { field: "data.path".into(), message };
    if data.k() != models.reference.n_sources() {
        return Err(mismatch(format!(
            "file has {} sources, the configuration defines {}",
            data.k(),
            models.reference.n_sources()
        )));
    }
    let same =
        data.b.len() == models.b.len() && data.b.iter().zip(&models.b).all(|(a, b)| (a - b).abs() <= 1e-12 * b.abs());
    if !same {
        return Err(mismatch(format!("file spectral points {:?} differ from configured {:?}", data.b, models.b)));
    }
    Ok(data)
}
