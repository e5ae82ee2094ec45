//! The invariant suite behind `verify`: every check compares one measured
//! residual against a configured tolerance.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_rom::forward::ForwardModel;
use spectral_rom::grid1d::equivalence_report;
use spectral_rom::{
    continued_fraction, internal_solution, interpolant_from_ortho, rom_transfer, GalerkinRom, Mesh, OrthoRom,
};

use crate::config::{ExperimentConfig, MeshSpec};
use crate::error::CliError;
use crate::pipeline::{basis, data_rom, measure, Options};
use crate::setup::{Models, Setup};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// `measured <= tolerance` passes; `None` for sign checks, which pass
    /// when `pass` says so.
    pub tolerance: Option<f64>,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, tolerance: f64) -> Self {
        Self { name: name.into(), measured, tolerance: Some(tolerance), pass: measured <= tolerance }
    }

    fn holds(name: &str, measured: f64, pass: bool) -> Self {
        Self { name: name.into(), measured, tolerance: None, pass }
    }
}

#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub header: Vec<(String, String)>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
}

impl VerifyReport {
    pub fn failures(&self) -> usize {
        self.checks.iter().filter(|c| !c.pass).count()
    }

    /// Deterministic text rendering: no timings, fixed float formats.
    pub fn render(&self) -> String {
        let mut s = String::from("# verify report\n");
        for (k, v) in &self.header {
            let _ = writeln!(s, "{k} = {v}");
        }
        s.push('\n');
        for c in &self.checks {
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            match c.tolerance {
                Some(t) => {
                    let _ =
                        writeln!(s, "{verdict} {:<26} measured = {:.6e}  tolerance = {:.6e}", c.name, c.measured, t);
                }
                None => {
                    let _ = writeln!(s, "{verdict} {:<26} measured = {:.6e}", c.name, c.measured);
                }
            }
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        let _ = writeln!(s, "\nsummary = {} passed, {} failed", self.checks.len() - self.failures(), self.failures());
        s
    }
}

fn describe_mesh(spec: &MeshSpec) -> String {
    match spec {
        MeshSpec::Resolution(n) => n.to_string(),
        MeshSpec::Files { vertices, triangles } => format!("{} + {}", vertices.display(), triangles.display()),
    }
}

fn header(cfg: &ExperimentConfig, b: &[f64]) -> Vec<(String, String)> {
    let mut h = vec![
        ("dimension".to_string(), cfg.dimension.to_string()),
        ("seed".into(), cfg.seed.to_string()),
        ("b".into(), format!("[{}]", b.iter().map(|v| format!("{v:.6e}")).collect::<Vec<_>>().join(", "))),
        ("mesh.data".into(), describe_mesh(&cfg.mesh.data)),
        ("mesh.reference".into(), describe_mesh(&cfg.mesh.reference)),
        ("rom.eig_floor".into(), format!("{:e}", cfg.rom.eig_floor)),
        ("rom.deflation_tol".into(), format!("{:e}", cfg.rom.deflation_tol)),
    ];
    h.extend(cfg.tolerances.entries().into_iter().map(|(k, v)| (format!("tolerances.{k}"), v)));
    h
}

pub fn run(cfg: &ExperimentConfig) -> Result<VerifyReport, CliError> {
    let opts = Options::from_config(cfg);
    let b = cfg.spectral_points()?;
    let mut report = VerifyReport { header: header(cfg, &b), checks: Vec::new(), notes: Vec::new() };
    match Setup::build(cfg)? {
        Setup::One(models) => {
            let (rom, ortho) = common(cfg, &models, &opts, &mut report)?;
            grid_checks(cfg, &rom, &ortho, &mut report)?;
            reference_checks(cfg, &models, &opts, &mut report)?;
        }
        Setup::Two(models) => {
            common(cfg, &models, &opts, &mut report)?;
            reference_checks(cfg, &models, &opts, &mut report)?;
        }
    }
    Ok(report)
}

fn relative(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

fn common<P: ForwardModel>(
    cfg: &ExperimentConfig,
    models: &Models<P>,
    opts: &Options,
    report: &mut VerifyReport,
) -> Result<(GalerkinRom, OrthoRom), CliError> {
    let tol = &cfg.tolerances;
    let measured = measure(cfg, models)?;
    let data = &measured.data;
    report.checks.push(Check::at_most("reciprocity", data.max_asymmetry(), tol.reciprocity));
    let gram = data.min_relative_gram_eigenvalue();
    report.checks.push(Check::holds("gram_semidefinite", gram, gram >= -cfg.rom.eig_floor));

    let roms = data_rom(data, opts)?;
    let (rom, ortho) = (roms.rom, roms.ortho);
    match &measured.snapshots {
        Some(snaps) => {
            let (base, mass) = models.data.pencil();
            let u: Vec<&[f64]> = snaps.iter().flatten().map(|s| s.field.values.as_slice()).collect();
            let n = u.len();
            let g = DMatrix::from_fn(n, n, |i, j| mass.bilinear(u[i], u[j]));
            let e = DMatrix::from_fn(n, n, |i, j| base.bilinear(u[i], u[j]));
            report.checks.push(Check::at_most("loewner_mass", relative(&rom.mass, &g), tol.loewner_oracle));
            report.checks.push(Check::at_most("loewner_stiffness", relative(&rom.stiffness, &e), tol.loewner_oracle));
        }
        None => report.notes.push("loewner oracle skipped: data read from file, no snapshots".into()),
    }

    let mut value: f64 = 0.0;
    let mut derivative: f64 = 0.0;
    for (i, &bi) in data.b.iter().enumerate() {
        value = value.max(relative(&rom_transfer(&rom, bi)?, &data.f[i]));
        let h = tol.hermite_step * bi;
        let df = (rom_transfer(&rom, bi + h)? - rom_transfer(&rom, bi - h)?) / (2.0 * h);
        derivative = derivative.max(relative(&df, &data.df[i]));
    }
    report.checks.push(Check::at_most("hermite_value", value, tol.hermite_value));
    report.checks.push(Check::at_most("hermite_derivative", derivative, tol.hermite_derivative));

    report.checks.push(Check::at_most("orthonormality", ortho.orthonormality_error(&rom.mass), tol.orthonormality));
    report.checks.push(Check::at_most("tridiagonality", ortho.off_tridiagonal(), tol.tridiagonality));
    report.checks.push(Check::at_most("rhs_sparsity", ortho.rhs_tail(), tol.rhs_sparsity));
    if let Some(b) = &ortho.breakdown {
        report.notes.push(format!("Lanczos breakdown at block {}: {}", b.block, b.reason));
    }
    if rom.deflated > 0 {
        report.notes.push(format!("{} mass eigenvalue(s) below the floor were deflated", rom.deflated));
    }
    Ok((rom, ortho))
}

fn grid_checks(
    cfg: &ExperimentConfig,
    rom: &GalerkinRom,
    ortho: &OrthoRom,
    report: &mut VerifyReport,
) -> Result<(), CliError> {
    let tol = &cfg.tolerances;
    if ortho.k != 1 {
        report.notes.push(format!("grid checks skipped: K = {}", ortho.k));
        return Ok(());
    }
    let eig = ortho.t.clone().symmetric_eigen();
    let u0 = ortho.rhs_hat[(0, 0)];
    let max_pole = eig.eigenvalues.iter().map(|v| -v).fold(f64::NEG_INFINITY, f64::max);
    let min_residue =
        (0..eig.eigenvalues.len()).map(|i| u0 * u0 * eig.eigenvectors[(0, i)].powi(2)).fold(f64::INFINITY, f64::min);
    report.checks.push(Check::holds("poles_negative", max_pole, max_pole < 0.0));
    report.checks.push(Check::holds("residues_positive", min_residue, min_residue > 0.0));
    let interp = match interpolant_from_ortho(ortho) {
        Ok(interp) => interp,
        Err(e) => {
            report.notes.push(format!("grid checks skipped: {e}"));
            return Ok(());
        }
    };

    let grid = continued_fraction(&interp)?;
    let (lo, hi) = (rom.b[0], rom.b[rom.b.len() - 1]);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut draw =
        |n: usize| -> Vec<f64> { (0..n).map(|_| if hi > lo { rng.random_range(lo..=hi) } else { lo }).collect() };
    let fraction_points = draw(tol.fraction_lambdas);
    let cf = fraction_points.iter().map(|&l| (grid.eval(l) - interp.eval(l)).abs()).fold(0.0, f64::max);
    report.checks.push(Check::at_most("continued_fraction", cf, tol.continued_fraction));

    let eq = equivalence_report(ortho, &grid, &draw(tol.random_lambdas))?;
    report.checks.push(Check::at_most("grid_operator", eq.operator / ortho.t.amax(), tol.grid_operator));
    report.checks.push(Check::at_most("grid_boundary", eq.boundary, tol.grid_boundary));
    report.checks.push(Check::at_most("grid_coefficients", eq.coefficients, tol.grid_coefficients));
    report.checks.push(Check::at_most("grid_first_value", eq.first_value, tol.grid_first_value));
    Ok(())
}

fn reference_checks<P: ForwardModel>(
    cfg: &ExperimentConfig,
    models: &Models<P>,
    opts: &Options,
    report: &mut VerifyReport,
) -> Result<(), CliError> {
    let tol = &cfg.tolerances;
    let reference = basis(&models.reference, &models.b, opts)?;
    let (lo, hi) = reference.rom.mass_eigenvalues;
    let condition = hi / lo.abs().max(f64::MIN_POSITIVE);
    report.checks.push(Check::at_most(
        "basis_orthonormality",
        reference.gram_error(),
        tol.basis_gram_per_condition * condition,
    ));
    let mut worst: f64 = 0.0;
    for (i, &bi) in models.b.iter().enumerate() {
        let u = internal_solution(&reference.ortho, &reference, bi)?;
        for (r, field) in u.fields.iter().enumerate() {
            worst = worst.max(field.relative_distance(&reference.snapshots[i][r].field));
        }
    }
    report.checks.push(Check::at_most("sample_exactness", worst, tol.sample_exactness));
    report.notes.push(format!(
        "reference mesh has {} nodes; snapshot Gram condition number {condition:.3e}",
        reference.mesh().n_nodes()
    ));
    Ok(())
}
