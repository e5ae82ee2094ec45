//! Experiment configuration: a TOML document with one table per concern.
//!
//! ```toml
//! dimension = 1
//! seed = 7
//! right_bc = "neumann"
//!
//! [spectral]
//! range = [1.0, 100.0]
//! count = 6
//! spacing = "geometric"
//!
//! [mesh]
//! data = 32000
//! reference = 8000
//!
//! [medium]
//! kind = "cubic"
//! amplitude = 0.2
//! left = 0.0
//! peak = 0.5
//! right = 1.0
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;
use spectral_rom::data::validate_spectral_points;
use spectral_rom::forward1d::{Profile1D, RightBc};
use spectral_rom::forward2d::{Bump, Profile2D};
use spectral_rom::mesh::Side;

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dimension: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub right_bc: BoundaryKind,
    pub spectral: SpectralConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub medium: MediumSpec,
    #[serde(default)]
    pub reference: MediumSpec,
    #[serde(default)]
    pub sources: SourceConfig,
    #[serde(default)]
    pub data: DataConfig,
    #[serde(default)]
    pub rom: RomConfig,
    #[serde(default)]
    pub inversion: InversionConfig,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

fn default_seed() -> u64 {
    20_240_601
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundaryKind {
    #[default]
    Neumann,
    Dirichlet,
}

impl From<BoundaryKind> for RightBc {
    fn from(b: BoundaryKind) -> Self {
        match b {
            BoundaryKind::Neumann => RightBc::Neumann,
            BoundaryKind::Dirichlet => RightBc::Dirichlet,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Geometric,
    Linear,
}

/// Spectral points: either listed in `b` or generated from `range` and `count`.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectralConfig {
    pub b: Option<Vec<f64>>,
    pub range: Option<[f64; 2]>,
    pub count: Option<usize>,
    #[serde(default)]
    pub spacing: Spacing,
    /// Evaluation points for `internal` and `invert`; defaults to `b` and the
    /// midpoints of consecutive `b`.
    pub lambdas: Option<Vec<f64>>,
    /// Spectral value at which the repro pipelines compare internal solutions.
    #[serde(default = "default_internal_lambda")]
    pub internal_lambda: f64,
}

fn default_internal_lambda() -> f64 {
    3.0
}

/// A mesh is a resolution (cells in 1D, squares per side of the unit square
/// in 2D) or, in 2D, a pair of CSV files.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum MeshSpec {
    Resolution(usize),
    Files { vertices: PathBuf, triangles: PathBuf },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeshConfig {
    pub data: MeshSpec,
    pub reference: MeshSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpSpec {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LayerSpec {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MediumSpec {
    #[default]
    Zero,
    Constant {
        value: f64,
    },
    /// 1D smoothstep bump.
    Cubic {
        amplitude: f64,
        left: f64,
        peak: f64,
        right: f64,
    },
    /// 1D Gaussian.
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
    /// 2D sum of isotropic Gaussians.
    Bumps {
        bumps: Vec<BumpSpec>,
    },
    /// 2D Gaussians in `x`, constant in `y`.
    Layered {
        layers: Vec<LayerSpec>,
    },
    /// Nodal samples: `x,q` in 1D, `x,y,q` on a rectilinear lattice in 2D.
    File {
        path: PathBuf,
    },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceConfig {
    #[serde(default = "default_per_side")]
    pub per_side: usize,
    #[serde(default = "default_sides")]
    pub sides: Vec<String>,
}

fn default_per_side() -> usize {
    2
}

fn default_sides() -> Vec<String> {
    ["bottom", "right", "top", "left"].map(String::from).to_vec()
}

impl Default for SourceConfig {
    fn default() -> Self {
        Self { per_side: default_per_side(), sides: default_sides() }
    }
}

/// Measured data to use instead of simulating the true medium.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataConfig {
    pub path: Option<PathBuf>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RomConfig {
    #[serde(default = "default_eig_floor")]
    pub eig_floor: f64,
    #[serde(default = "default_deflation")]
    pub deflation_tol: f64,
}

fn default_eig_floor() -> f64 {
    1e-12
}

fn default_deflation() -> f64 {
    1e-10
}

impl Default for RomConfig {
    fn default() -> Self {
        Self { eig_floor: default_eig_floor(), deflation_tol: default_deflation() }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InversionConfig {
    /// Boundary layers zeroed in the estimate; 2 in 1D and 1 in 2D when unset.
    pub mask_layers: Option<usize>,
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Radius within which a peak of `q_est` must be the largest value.
    #[serde(default = "default_peak_radius")]
    pub peak_radius: f64,
}

fn default_floor() -> f64 {
    1e-12
}

fn default_peak_radius() -> f64 {
    0.1
}

impl Default for InversionConfig {
    fn default() -> Self {
        Self { mask_layers: None, floor: default_floor(), peak_radius: default_peak_radius() }
    }
}

/// Thresholds used by `verify` and the repro reports.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    pub reciprocity: f64,
    pub loewner_oracle: f64,
    pub hermite_value: f64,
    pub hermite_derivative: f64,
    pub hermite_step: f64,
    pub orthonormality: f64,
    pub tridiagonality: f64,
    pub rhs_sparsity: f64,
    pub grid_operator: f64,
    pub grid_boundary: f64,
    pub grid_coefficients: f64,
    pub grid_first_value: f64,
    pub continued_fraction: f64,
    pub random_lambdas: usize,
    pub fraction_lambdas: usize,
    /// Quadrature orthonormality of the reference basis, per unit of the
    /// snapshot Gram condition number.
    pub basis_gram_per_condition: f64,
    pub sample_exactness: f64,
    pub basis_distance: f64,
    pub improvement_ratio: f64,
    pub q_zero_max: f64,
    pub reconstruction_error: f64,
    pub peak_distance_elements: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            reciprocity: 1e-10,
            loewner_oracle: 1e-7,
            hermite_value: 1e-8,
            hermite_derivative: 1e-5,
            hermite_step: 1e-5,
            orthonormality: 1e-10,
            tridiagonality: 1e-10,
            rhs_sparsity: 1e-12,
            grid_operator: 1e-8,
            grid_boundary: 1e-8,
            grid_coefficients: 1e-8,
            grid_first_value: 1e-10,
            continued_fraction: 1e-10,
            random_lambdas: 20,
            fraction_lambdas: 10,
            basis_gram_per_condition: 1e-15,
            sample_exactness: 1e-6,
            basis_distance: 0.05,
            improvement_ratio: 0.2,
            q_zero_max: 5e-3,
            reconstruction_error: 0.15,
            peak_distance_elements: 2.0,
        }
    }
}

impl Tolerances {
    /// `(name, value)` for every field, in declaration order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let f = |v: f64| format!("{v:e}");
        vec![
            ("reciprocity", f(self.reciprocity)),
            ("loewner_oracle", f(self.loewner_oracle)),
            ("hermite_value", f(self.hermite_value)),
            ("hermite_derivative", f(self.hermite_derivative)),
            ("hermite_step", f(self.hermite_step)),
            ("orthonormality", f(self.orthonormality)),
            ("tridiagonality", f(self.tridiagonality)),
            ("rhs_sparsity", f(self.rhs_sparsity)),
            ("grid_operator", f(self.grid_operator)),
            ("grid_boundary", f(self.grid_boundary)),
            ("grid_coefficients", f(self.grid_coefficients)),
            ("grid_first_value", f(self.grid_first_value)),
            ("continued_fraction", f(self.continued_fraction)),
            ("random_lambdas", self.random_lambdas.to_string()),
            ("fraction_lambdas", self.fraction_lambdas.to_string()),
            ("basis_gram_per_condition", f(self.basis_gram_per_condition)),
            ("sample_exactness", f(self.sample_exactness)),
            ("basis_distance", f(self.basis_distance)),
            ("improvement_ratio", f(self.improvement_ratio)),
            ("q_zero_max", f(self.q_zero_max)),
            ("reconstruction_error", f(self.reconstruction_error)),
            ("peak_distance_elements", f(self.peak_distance_elements)),
        ]
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { dir: default_out() }
    }
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation { field: field.to_string(), message: message.into() }
}

impl ExperimentConfig {
    /// Parses and validates; relative paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self, CliError> {
        let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        cfg.resolve_paths(base);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text, path.parent().unwrap_or(Path::new(".")))
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for spec in [&mut self.medium, &mut self.reference] {
            if let MediumSpec::File { path } = spec {
                fix(path);
            }
        }
        for mesh in [&mut self.mesh.data, &mut self.mesh.reference] {
            if let MeshSpec::Files { vertices, triangles } = mesh {
                fix(vertices);
                fix(triangles);
            }
        }
        if let Some(p) = &mut self.data.path {
            fix(p);
        }
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.dimension != 1 && self.dimension != 2 {
            return Err(invalid("dimension", format!("must be 1 or 2, got {}", self.dimension)));
        }
        let b = self.spectral_points()?;
        validate_spectral_points(&b).map_err(|e| invalid("spectral.b", e.to_string()))?;
        if let Some(l) = &self.spectral.lambdas {
            if l.is_empty() || l.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
                return Err(invalid("spectral.lambdas", "evaluation points must be positive and finite"));
            }
        }
        if !(self.spectral.internal_lambda > 0.0) {
            return Err(invalid("spectral.internal_lambda", "must be positive"));
        }
        self.validate_meshes()?;
        for (field, spec) in [("medium", &self.medium), ("reference", &self.reference)] {
            self.validate_medium(field, spec)?;
        }
        if self.dimension == 2 {
            if self.sources.per_side == 0 {
                return Err(invalid("sources.per_side", "must be at least 1"));
            }
            self.sides()?;
            if self.right_bc == BoundaryKind::Dirichlet {
                return Err(invalid("right_bc", "only meaningful in 1D"));
            }
        }
        if !(self.rom.eig_floor >= 0.0) || !(self.rom.deflation_tol > 0.0) {
            return Err(invalid("rom", "eig_floor must be >= 0 and deflation_tol > 0"));
        }
        if !(self.inversion.floor >= 0.0) || !(self.inversion.peak_radius > 0.0) {
            return Err(invalid("inversion", "floor must be >= 0 and peak_radius > 0"));
        }
        for (name, value) in self.tolerances.entries() {
            let v: f64 = value.parse().unwrap_or(f64::NAN);
            if !(v > 0.0) {
                return Err(invalid(&format!("tolerances.{name}"), "must be positive"));
            }
        }
        Ok(())
    }

    fn validate_meshes(&self) -> Result<(), CliError> {
        match (&self.mesh.data, &self.mesh.reference) {
            (MeshSpec::Resolution(d), MeshSpec::Resolution(r)) => {
                if *r == 0 {
                    return Err(invalid("mesh.reference", "resolution must be positive"));
                }
                if d <= r {
                    return Err(invalid(
                        "mesh.data",
                        format!("data mesh ({d}) must be strictly finer than the reference mesh ({r})"),
                    ));
                }
                if self.dimension == 1 && *d < 4 * r {
                    log::warn!("data mesh is less than 4x finer than the reference mesh");
                }
            }
            _ if self.dimension == 1 => return Err(invalid("mesh", "mesh files are only supported in 2D")),
            // File meshes are compared by node count once read.
            _ => {}
        }
        Ok(())
    }

    fn validate_medium(&self, field: &str, spec: &MediumSpec) -> Result<(), CliError> {
        let one_d_only = matches!(spec, MediumSpec::Cubic { .. } | MediumSpec::Gaussian { .. });
        let two_d_only = matches!(spec, MediumSpec::Bumps { .. } | MediumSpec::Layered { .. });
        if (self.dimension == 2 && one_d_only) || (self.dimension == 1 && two_d_only) {
            return Err(invalid(&format!("{field}.kind"), format!("not available in {}D", self.dimension)));
        }
        match spec {
            MediumSpec::Cubic { left, peak, right, .. } if !(left < peak && peak < right) => {
                Err(invalid(&format!("{field}.peak"), "need left < peak < right"))
            }
            MediumSpec::Gaussian { width, .. } if !(*width > 0.0) => {
                Err(invalid(&format!("{field}.width"), "must be positive"))
            }
            MediumSpec::Bumps { bumps } if bumps.iter().any(|b| !(b.width > 0.0)) => {
                Err(invalid(&format!("{field}.bumps"), "every width must be positive"))
            }
            MediumSpec::Layered { layers } if layers.iter().any(|l| !(l.width > 0.0)) => {
                Err(invalid(&format!("{field}.layers"), "every width must be positive"))
            }
            _ => Ok(()),
        }
    }

    /// Spectral points `b`, listed or generated.
    pub fn spectral_points(&self) -> Result<Vec<f64>, CliError> {
        let s = &self.spectral;
        match (&s.b, s.range, s.count) {
            (Some(b), None, None) => Ok(b.clone()),
            (None, Some([lo, hi]), Some(count)) => {
                if count == 0 {
                    return Err(invalid("spectral.count", "must be at least 1"));
                }
                if !(lo > 0.0 && hi > lo) && !(count == 1 && lo > 0.0) {
                    return Err(invalid("spectral.range", "need 0 < low < high"));
                }
                if count == 1 {
                    return Ok(vec![lo]);
                }
                let t = |i: usize| i as f64 / (count - 1) as f64;
                Ok((0..count)
                    .map(|i| match s.spacing {
                        Spacing::Geometric => lo * (hi / lo).powf(t(i)),
                        Spacing::Linear => lo + (hi - lo) * t(i),
                    })
                    .collect())
            }
            _ => Err(invalid("spectral", "give either `b` or both `range` and `count`")),
        }
    }

    /// Evaluation points: configured, else `b` followed by the midpoints.
    pub fn evaluation_points(&self) -> Result<Vec<f64>, CliError> {
        if let Some(l) = &self.spectral.lambdas {
            return Ok(l.clone());
        }
        let b = self.spectral_points()?;
        let mut out = b.clone();
        out.extend(b.windows(2).map(|w| 0.5 * (w[0] + w[1])));
        Ok(out)
    }

    pub fn sides(&self) -> Result<Vec<Side>, CliError> {
        let mut sides = Vec::new();
        for name in &self.sources.sides {
            let side = Side::parse(name).ok_or_else(|| invalid("sources.sides", format!("unknown side `{name}`")))?;
            if sides.contains(&side) {
                return Err(invalid("sources.sides", format!("side `{name}` listed twice")));
            }
            sides.push(side);
        }
        if sides.is_empty() {
            return Err(invalid("sources.sides", "need at least one side"));
        }
        Ok(sides)
    }

    pub fn mask_layers(&self) -> usize {
        self.inversion.mask_layers.unwrap_or(if self.dimension == 1 { 2 } else { 1 })
    }
}

impl MediumSpec {
    /// Analytic 1D profile, `None` for file media.
    pub fn profile_1d(&self) -> Option<Profile1D> {
        Some(match *self {
            MediumSpec::Zero => Profile1D::Zero,
            MediumSpec::Constant { value } => Profile1D::Constant(value),
            MediumSpec::Cubic { amplitude, left, peak, right } => Profile1D::CubicBump { amplitude, left, peak, right },
            MediumSpec::Gaussian { amplitude, center, width } => Profile1D::Gaussian { amplitude, center, width },
            _ => return None,
        })
    }

    /// Analytic 2D profile, `None` for file media.
    pub fn profile_2d(&self) -> Option<Profile2D> {
        Some(match self {
            MediumSpec::Zero => Profile2D::Zero,
            MediumSpec::Constant { value } => Profile2D::Constant(*value),
            MediumSpec::Bumps { bumps } => Profile2D::Bumps(
                bumps.iter().map(|b| Bump { amplitude: b.amplitude, center: b.center, width: b.width }).collect(),
            ),
            MediumSpec::Layered { layers } => {
                Profile2D::Layered(layers.iter().map(|l| (l.amplitude, l.center, l.width)).collect())
            }
            _ => return None,
        })
    }

    /// Bump centres of a `bumps` medium.
    pub fn centers(&self) -> Vec<[f64; 2]> {
        match self {
            MediumSpec::Bumps { bumps } => bumps.iter().map(|b| b.center).collect(),
            _ => Vec::new(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
dimension = 1
[spectral]
range = [1.0, 100.0]
count = 6
[mesh]
data = 400
reference = 100
"#;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        ExperimentConfig::from_toml(text, Path::new("."))
    }

    #[test]
    fn defaults_fill_in() {
        let cfg = parse(BASE).unwrap();
        let b = cfg.spectral_points().unwrap();
        assert_eq!(b.len(), 6);
        assert!((b[5] - 100.0).abs() < 1e-12);
        assert_eq!(cfg.evaluation_points().unwrap().len(), 11);
        assert_eq!(cfg.mask_layers(), 2);
        assert_eq!(cfg.medium, MediumSpec::Zero);
        assert_eq!(cfg.tolerances.random_lambdas, 20);
    }

    #[test]
    fn duplicate_points_cite_the_divided_differences() {
        let text = BASE.replace("range = [1.0, 100.0]\ncount = 6", "b = [1.0, 2.0, 2.0]");
        let err = parse(&text).unwrap_err();
        assert_eq!(err.exit_code(), 1);
        let msg = err.to_string();
        assert!(msg.contains("spectral.b") && msg.contains("b_i - b_j"), "{msg}");
    }

    #[test]
    fn coarse_data_mesh_rejected() {
        let err = parse(&BASE.replace("data = 400", "data = 100")).unwrap_err();
        assert!(err.to_string().contains("mesh.data"));
    }

    #[test]
    fn unknown_field_is_named() {
        let err = parse(&format!("{BASE}\n[rom]\nfloor = 1.0\n")).unwrap_err();
        assert!(err.to_string().contains("floor"), "{err}");
    }

    #[test]
    fn medium_must_fit_dimension() {
        let text = format!("{BASE}\n[medium]\nkind = \"bumps\"\nbumps = []\n");
        let err = parse(&text).unwrap_err();
        assert!(err.to_string().contains("medium.kind"));
    }

    #[test]
    fn two_dimensional_bumps_parse() {
        let text = r#"
dimension = 2
[spectral]
b = [3.0, 10.0]
[mesh]
data = 16
reference = 8
[medium]
kind = "bumps"
[[medium.bumps]]
amplitude = 5.0
center = [0.35, 0.4]
width = 0.1
[sources]
per_side = 1
"#;
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.medium.centers(), vec![[0.35, 0.4]]);
        assert_eq!(cfg.mask_layers(), 1);
        assert_eq!(cfg.sides().unwrap().len(), 4);
    }
}
