//! End-to-end analogs of the published experiments, as plot-ready CSVs and a
//! text report.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use spectral_rom::forward::ForwardModel;
use spectral_rom::forward1d::Medium1D;
use spectral_rom::forward2d::Problem2D;
use spectral_rom::{
    continued_fraction, internal_solution, internal_solutions, interpolant_from_ortho, invert, Field, Mesh, Mesh1D,
    Mesh2D, Reconstruction, ReferenceBasis, StaggeredGrid1D,
};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::pipeline::{
    basis, create, data_rom, localization, measure, peaks, relative_error, simulate, solutions_on, Options, Peak,
};
use crate::setup::Models;

/// Internal solution at one spectral value next to the true and reference
/// solutions, all on the reference mesh.
pub struct Comparison<M: Mesh> {
    pub lambda: f64,
    pub internal: Vec<Field<M>>,
    pub truth: Vec<Field<M>>,
    pub reference: Vec<Field<M>>,
    pub internal_error: f64,
    pub reference_error: f64,
}

impl<M: Mesh> Comparison<M> {
    pub fn ratio(&self) -> f64 {
        self.internal_error / self.reference_error
    }

    fn write_csv<W: Write>(&self, mut w: W) -> Result<(), CliError> {
        let mesh = self.truth[0].mesh.clone();
        let coords = if mesh.dimension() == 1 { "x" } else { "x,y" };
        writeln!(w, "{coords},r,internal,true,reference")?;
        for r in 0..self.truth.len() {
            for i in 0..mesh.n_nodes() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    point(&*mesh, i),
                    r + 1,
                    self.internal[r].values[i],
                    self.truth[r].values[i],
                    self.reference[r].values[i]
                )?;
            }
        }
        Ok(())
    }
}

fn point<M: Mesh + ?Sized>(mesh: &M, i: usize) -> String {
    let p = mesh.point(i);
    if mesh.dimension() == 1 {
        p[0].to_string()
    } else {
        format!("{},{}", p[0], p[1])
    }
}

fn compare<P: ForwardModel>(
    models: &Models<P>,
    ortho: &spectral_rom::OrthoRom,
    reference: &ReferenceBasis<P::Mesh>,
    lambda: f64,
) -> Result<Comparison<P::Mesh>, CliError> {
    let mesh = reference.mesh().clone();
    let internal = internal_solution(ortho, reference, lambda)?.fields;
    let truth = solutions_on(&models.data, lambda, &mesh)?;
    let background: Vec<Field<P::Mesh>> = models.reference.solve(lambda)?.into_iter().map(|s| s.field).collect();
    Ok(Comparison {
        lambda,
        internal_error: relative_error(&internal, &truth),
        reference_error: relative_error(&background, &truth),
        internal,
        truth,
        reference: background,
    })
}

fn write_reconstruction<M: Mesh, W: Write>(rec: &Reconstruction<M>, q_true: &[f64], mut w: W) -> Result<(), CliError> {
    let mesh = rec.q_est.mesh.clone();
    let coords = if mesh.dimension() == 1 { "x" } else { "x,y" };
    writeln!(w, "{coords},q_true,q_est,mask")?;
    for i in 0..mesh.n_nodes() {
        writeln!(w, "{},{},{},{}", point(&*mesh, i), q_true[i], rec.q_est.values[i], rec.mask[i])?;
    }
    Ok(())
}

/// Reconstruction from data of the reference medium itself, which should be
/// flat; returns it together with `max |q_est|` on the unmasked nodes.
fn background_reconstruction<P: ForwardModel>(
    models: &Models<P>,
    reference: &ReferenceBasis<P::Mesh>,
    lambdas: &[f64],
    opts: &Options,
) -> Result<(Reconstruction<P::Mesh>, Vec<(f64, f64)>), CliError> {
    let measured = simulate(&models.background, &models.b)?;
    let roms = data_rom(&measured.data, opts)?;
    let sols = internal_solutions(&roms.ortho, reference, lambdas)?;
    let mesh = reference.mesh().clone();
    let mut exactness = Vec::with_capacity(sols.len());
    for s in &sols {
        let truth = solutions_on(&models.background, s.lambda, &mesh)?;
        exactness.push((s.lambda, relative_error(&s.fields, &truth)));
    }
    Ok((invert(&sols, &opts.inversion)?, exactness))
}

fn exactness_lines(s: &mut String, exactness: &[(f64, f64)], tolerance: f64) {
    let worst = exactness.iter().map(|e| e.1).fold(0.0, f64::max);
    let verdict = if worst <= tolerance { "PASS" } else { "FAIL" };
    let _ = writeln!(s, "{verdict} background_internal_error_max = {worst:.6e} (tolerance {tolerance:.6e})");
    for (l, err) in exactness {
        let _ = writeln!(s, "background_internal_error[{l}] = {err:.6e}");
    }
}

pub struct Repro1D {
    pub comparison: Comparison<Mesh1D>,
    pub basis_distances: Vec<f64>,
    /// Data and reference grids, or why they do not exist (a zero pole,
    /// e.g. the homogeneous medium with a Neumann right end).
    pub grids: Result<(StaggeredGrid1D, StaggeredGrid1D), String>,
    pub reconstruction: Reconstruction<Mesh1D>,
    pub q_true: Vec<f64>,
    pub reconstruction_error: f64,
    pub background: Reconstruction<Mesh1D>,
    /// `(λ, ‖ũ − u‖/‖u‖)` for data of the reference medium.
    pub exactness: Vec<(f64, f64)>,
    true_basis: ReferenceBasis<Mesh1D>,
    reference_basis: ReferenceBasis<Mesh1D>,
}

pub fn repro_1d(cfg: &ExperimentConfig, models: &Models<Medium1D>) -> Result<Repro1D, CliError> {
    let opts = Options::from_config(cfg);
    let lambdas = cfg.evaluation_points()?;
    let measured = measure(cfg, models)?;
    let roms = data_rom(&measured.data, &opts)?;
    let reference = basis(&models.reference, &models.b, &opts)?;
    let true_basis = basis(&models.truth, &models.b, &opts)?;
    let comparison = compare(models, &roms.ortho, &reference, cfg.spectral.internal_lambda)?;

    let grid_of =
        |ortho| -> spectral_rom::Result<StaggeredGrid1D> { continued_fraction(&interpolant_from_ortho(ortho)?) };
    let grids = grid_of(&roms.ortho).and_then(|g| Ok((g, grid_of(&reference.ortho)?))).map_err(|e| e.to_string());

    let reconstruction = invert(&internal_solutions(&roms.ortho, &reference, &lambdas)?, &opts.inversion)?;
    let q_true = models.truth.q().to_vec();
    let reconstruction_error = reconstruction.relative_error(&q_true);
    let (background, exactness) = background_reconstruction(models, &reference, &lambdas, &opts)?;
    Ok(Repro1D {
        comparison,
        basis_distances: true_basis.distances(&reference)?,
        grids,
        reconstruction,
        q_true,
        reconstruction_error,
        background,
        exactness,
        true_basis,
        reference_basis: reference,
    })
}

impl Repro1D {
    pub fn max_basis_distance(&self) -> f64 {
        self.basis_distances.iter().copied().fold(0.0, f64::max)
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> String {
        let tol = &cfg.tolerances;
        let c = &self.comparison;
        let mut s = String::from("# repro-1d report\n");
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "lambda = {}", c.lambda);
        let _ = writeln!(s, "internal_error = {:.6e}", c.internal_error);
        let _ = writeln!(s, "reference_error = {:.6e}", c.reference_error);
        let _ = writeln!(s, "ratio = {:.6e}", c.ratio());
        match &self.grids {
            Ok((g, r)) => {
                let _ = writeln!(s, "grid_deviation = {:.6e}", g.relative_deviation(r).unwrap_or(f64::NAN));
            }
            Err(e) => {
                let _ = writeln!(s, "grid_deviation unavailable: {e}");
            }
        }
        let d = self.max_basis_distance();
        let _ = writeln!(
            s,
            "{} basis_distance = {d:.6e} (tolerance {:.6e})",
            verdict(d <= tol.basis_distance),
            tol.basis_distance
        );
        let e = self.reconstruction_error;
        if e.is_finite() {
            let _ = writeln!(
                s,
                "{} reconstruction_error = {e:.6e} (tolerance {:.6e})",
                verdict(e <= tol.reconstruction_error),
                tol.reconstruction_error
            );
        }
        let z = self.background.max_abs();
        let _ = writeln!(
            s,
            "{} background_q_max = {z:.6e} (tolerance {:.6e})",
            verdict(z <= tol.q_zero_max),
            tol.q_zero_max
        );
        exactness_lines(&mut s, &self.exactness, tol.sample_exactness);
        s
    }

    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
        self.comparison.write_csv(create(dir, "internal_comparison.csv")?)?;
        write_reconstruction(&self.reconstruction, &self.q_true, create(dir, "reconstruction_comparison.csv")?)?;
        let zeros = vec![0.0; self.q_true.len()];
        write_reconstruction(&self.background, &zeros, create(dir, "reconstruction_background.csv")?)?;

        let mut w = create(dir, "basis_comparison.csv")?;
        writeln!(w, "x,j,reference,true")?;
        let mesh = self.reference_basis.mesh().clone();
        for (j, (r, t)) in self.reference_basis.fields.iter().zip(&self.true_basis.fields).enumerate() {
            for (i, x) in mesh.nodes().iter().enumerate() {
                writeln!(w, "{x},{},{},{}", j + 1, r.values[i], t.values[i])?;
            }
        }

        if let Ok((grid, reference)) = &self.grids {
            let mut w = create(dir, "grid_comparison.csv")?;
            writeln!(w, "j,gamma,gamma_hat,gamma_reference,gamma_hat_reference")?;
            for j in 0..grid.m() {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    j + 1,
                    grid.gamma()[j],
                    grid.gamma_hat()[j],
                    reference.gamma()[j],
                    reference.gamma_hat()[j]
                )?;
            }
            grid.write_nodes_csv(create(dir, "grid_nodes.csv")?)?;
        }
        std::fs::write(dir.join("repro1d_report.txt"), self.report(cfg))?;
        Ok(())
    }
}

pub struct Repro2D {
    pub comparison: Comparison<Mesh2D>,
    pub reconstruction: Reconstruction<Mesh2D>,
    pub q_true: Vec<f64>,
    pub peaks: Vec<Peak>,
    pub centers: Vec<[f64; 2]>,
    /// Centre-to-peak distances in element widths.
    pub localization: Vec<f64>,
    pub element_width: f64,
    pub background: Reconstruction<Mesh2D>,
    pub exactness: Vec<(f64, f64)>,
}

pub fn repro_2d(cfg: &ExperimentConfig, models: &Models<Problem2D>) -> Result<Repro2D, CliError> {
    let opts = Options::from_config(cfg);
    let lambdas = cfg.evaluation_points()?;
    let measured = measure(cfg, models)?;
    let roms = data_rom(&measured.data, &opts)?;
    let reference = basis(&models.reference, &models.b, &opts)?;
    let comparison = compare(models, &roms.ortho, &reference, cfg.spectral.internal_lambda)?;
    let reconstruction = invert(&internal_solutions(&roms.ortho, &reference, &lambdas)?, &opts.inversion)?;
    let q_true = models.truth.medium().q.clone();
    let found = peaks(&reconstruction, cfg.inversion.peak_radius);
    let centers = cfg.medium.centers();
    let element_width = reference.mesh().min_edge();
    let localization = localization(&found, &centers).iter().map(|d| d / element_width).collect();
    let (background, exactness) = background_reconstruction(models, &reference, &lambdas, &opts)?;
    Ok(Repro2D {
        comparison,
        reconstruction,
        q_true,
        peaks: found,
        centers,
        localization,
        element_width,
        background,
        exactness,
    })
}

impl Repro2D {
    pub fn localized(&self, elements: f64) -> bool {
        !self.centers.is_empty() && self.localization.iter().all(|&d| d <= elements)
    }

    pub fn report(&self, cfg: &ExperimentConfig) -> String {
        let tol = &cfg.tolerances;
        let c = &self.comparison;
        let verdict = |ok: bool| if ok { "PASS" } else { "FAIL" };
        let mut s = String::from("# repro-2d report\n");
        let _ = writeln!(s, "lambda = {}", c.lambda);
        let _ = writeln!(s, "internal_error = {:.6e}", c.internal_error);
        let _ = writeln!(s, "reference_error = {:.6e}", c.reference_error);
        let r = c.ratio();
        let _ = writeln!(
            s,
            "{} ratio = {r:.6e} (tolerance {:.6e})",
            verdict(r <= tol.improvement_ratio),
            tol.improvement_ratio
        );
        for p in self.peaks.iter().take(self.centers.len().max(1) + 2) {
            let _ = writeln!(s, "peak = {:.6e} at ({:.6}, {:.6})", p.value, p.point[0], p.point[1]);
        }
        for (c, d) in self.centers.iter().zip(&self.localization) {
            let _ = writeln!(s, "center ({:.6}, {:.6}) nearest peak = {d:.3} element widths", c[0], c[1]);
        }
        let ok = self.localized(tol.peak_distance_elements);
        let _ = writeln!(s, "{} localization (tolerance {} element widths)", verdict(ok), tol.peak_distance_elements);
        let z = self.background.max_abs();
        let _ = writeln!(
            s,
            "{} background_q_max = {z:.6e} (tolerance {:.6e})",
            verdict(z <= tol.q_zero_max),
            tol.q_zero_max
        );
        exactness_lines(&mut s, &self.exactness, tol.sample_exactness);
        s
    }

    pub fn write(&self, cfg: &ExperimentConfig, dir: &Path) -> Result<(), CliError> {
        self.comparison.write_csv(create(dir, "internal_comparison.csv")?)?;
        write_reconstruction(&self.reconstruction, &self.q_true, create(dir, "reconstruction_comparison.csv")?)?;
        let zeros = vec![0.0; self.q_true.len()];
        write_reconstruction(&self.background, &zeros, create(dir, "reconstruction_background.csv")?)?;
        std::fs::write(dir.join("repro2d_report.txt"), self.report(cfg))?;
        Ok(())
    }
}
