//! P1 finite elements for `-Δu + q u + λ u = 0` on a rectangle with `K`
//! piecewise-constant Neumann sources.

use std::sync::Arc;

use crate::banded::SymBanded;
use crate::data::TransferDataSet;
use crate::error::{Result, RomError};
use crate::forward::{boundary_data, ForwardModel};
use crate::mesh::{Mesh, Mesh2D, Side, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bump {
    pub amplitude: f64,
    pub center: [f64; 2],
    pub width: f64,
}

impl Bump {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        let r2 = (p[0] - self.center[0]).powi(2) + (p[1] - self.center[1]).powi(2);
        self.amplitude * (-r2 / (self.width * self.width)).exp()
    }
}

/// Potential profiles on the rectangle.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile2D {
    Zero,
    Constant(f64),
    /// Sum of isotropic Gaussian bumps.
    Bumps(Vec<Bump>),
    /// Gaussian bumps in `x` only, constant along `y`.
    Layered(Vec<(f64, f64, f64)>),
}

impl Profile2D {
    pub fn eval(&self, p: [f64; 2]) -> f64 {
        match self {
            Profile2D::Zero => 0.0,
            Profile2D::Constant(c) => *c,
            Profile2D::Bumps(bumps) => bumps.iter().map(|b| b.eval(p)).sum(),
            Profile2D::Layered(layers) => layers.iter().map(|&(a, c, w)| a * (-((p[0] - c) / w).powi(2)).exp()).sum(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Medium2D {
    pub mesh: Arc<Mesh2D>,
    pub q: Vec<f64>,
}

impl Medium2D {
    pub fn new(mesh: Arc<Mesh2D>, q: Vec<f64>) -> Result<Self> {
        if q.len() != mesh.n_nodes() {
            return Err(RomError::Medium(format!("{} potential values for {} vertices", q.len(), mesh.n_nodes())));
        }
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(RomError::Medium(format!("q is not finite at vertex {i}")));
        }
        Ok(Self { mesh, q })
    }

    pub fn from_profile(mesh: Arc<Mesh2D>, profile: &Profile2D) -> Result<Self> {
        let q = mesh.vertices().iter().map(|&p| profile.eval(p)).collect();
        Self::new(mesh, q)
    }
}

/// Piecewise-constant Neumann sources on sets of boundary edges.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceSet {
    pub supports: Vec<Vec<usize>>,
    pub amplitudes: Vec<f64>,
}

impl SourceSet {
    pub fn new(mesh: &Mesh2D, supports: Vec<Vec<usize>>, amplitudes: Vec<f64>) -> Result<Self> {
        if supports.is_empty() || supports.len() != amplitudes.len() {
            return Err(RomError::Input("need one amplitude per non-empty source list".into()));
        }
        for (r, s) in supports.iter().enumerate() {
            if s.is_empty() {
                return Err(RomError::Input(format!("source {r} has an empty support")));
            }
            if let Some(e) = s.iter().find(|&&e| e >= mesh.boundary_edges().len()) {
                return Err(RomError::Input(format!("source {r} references missing boundary edge {e}")));
            }
        }
        Ok(Self { supports, amplitudes })
    }

    /// Splits each listed side into `per_side` equal segments, one source per
    /// segment, each normalized to unit total flux. Sources are ordered by side
    /// and then by increasing coordinate along the side.
    pub fn side_segments(mesh: &Mesh2D, sides: &[Side], per_side: usize) -> Result<Self> {
        if per_side == 0 || sides.is_empty() {
            return Err(RomError::Input("need at least one side and one segment per side".into()));
        }
        let [x0, x1, y0, y1] = mesh.bounding_box();
        let mut supports = Vec::new();
        let mut amplitudes = Vec::new();
        for &side in sides {
            let (lo, len) = match side {
                Side::Bottom | Side::Top => (x0, x1 - x0),
                Side::Left | Side::Right => (y0, y1 - y0),
            };
            for k in 0..per_side {
                let a = lo + len * k as f64 / per_side as f64;
                let b = lo + len * (k + 1) as f64 / per_side as f64;
                let support: Vec<usize> = mesh
                    .boundary_edges()
                    .iter()
                    .enumerate()
                    .filter(|(_, e)| e.side == side)
                    .filter(|(_, e)| {
                        let mid = e.midpoint(mesh);
                        let t = if matches!(side, Side::Bottom | Side::Top) { mid[0] } else { mid[1] };
                        t >= a && t < b
                    })
                    .map(|(i, _)| i)
                    .collect();
                let covered: f64 = support.iter().map(|&i| mesh.boundary_edges()[i].length).sum();
                if support.is_empty() {
                    return Err(RomError::Input(format!("segment {k} of side {side:?} contains no boundary edge")));
                }
                supports.push(support);
                amplitudes.push(1.0 / covered);
            }
        }
        Self::new(mesh, supports, amplitudes)
    }

    pub fn len(&self) -> usize {
        self.supports.len()
    }

    pub fn is_empty(&self) -> bool {
        self.supports.is_empty()
    }

    /// Load vector of each source: `∫_∂Ω g_r φ_j`.
    pub fn load_vectors(&self, mesh: &Mesh2D) -> Vec<Vec<f64>> {
        self.supports
            .iter()
            .zip(&self.amplitudes)
            .map(|(support, &amp)| {
                let mut load = vec![0.0; mesh.n_nodes()];
                for &e in support {
                    let edge = &mesh.boundary_edges()[e];
                    for &v in &edge.nodes {
                        load[v] += amp * edge.length / 2.0;
                    }
                }
                load
            })
            .collect()
    }
}

/// A medium probed by a source set.
#[derive(Debug, Clone)]
pub struct Problem2D {
    medium: Medium2D,
    sources: SourceSet,
    base: SymBanded,
    loads: Vec<Vec<f64>>,
}

impl Problem2D {
    pub fn new(medium: Medium2D, sources: SourceSet) -> Result<Self> {
        let mesh = &medium.mesh;
        let max_edge = sources.supports.iter().flatten().copied().max().unwrap_or(0);
        if max_edge >= mesh.boundary_edges().len() {
            return Err(RomError::Structure("source set was built for another mesh".into()));
        }
        // elementwise mean of q times the consistent element mass
        let mut qterm = SymBanded::zeros(mesh.n_nodes(), mesh.mass().bandwidth());
        for tri in mesh.triangles() {
            let p = tri.map(|v| mesh.vertices()[v]);
            let area = 0.5 * ((p[1][0] - p[0][0]) * (p[2][1] - p[0][1]) - (p[2][0] - p[0][0]) * (p[1][1] - p[0][1]));
            let qbar = (medium.q[tri[0]] + medium.q[tri[1]] + medium.q[tri[2]]) / 3.0;
            for a in 0..3 {
                for b in 0..=a {
                    let m = if a == b { area / 6.0 } else { area / 12.0 };
                    qterm.add(tri[a], tri[b], qbar * m);
                }
            }
        }
        let loads = sources.load_vectors(mesh);
        let base = mesh.stiffness().add_scaled(1.0, &qterm);
        Ok(Self { medium, sources, base, loads })
    }

    pub fn medium(&self) -> &Medium2D {
        &self.medium
    }

    pub fn sources(&self) -> &SourceSet {
        &self.sources
    }
}

impl ForwardModel for Problem2D {
    type Mesh = Mesh2D;

    fn mesh(&self) -> &Arc<Mesh2D> {
        &self.medium.mesh
    }

    fn loads(&self) -> &[Vec<f64>] {
        &self.loads
    }

    fn pencil(&self) -> (&SymBanded, &SymBanded) {
        (&self.base, self.medium.mesh.mass())
    }

    fn min_potential(&self) -> f64 {
        self.medium.q.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Solutions for all sources at one spectral value.
pub fn solve_2d(problem: &Problem2D, lambda: f64) -> Result<Vec<Snapshot<Mesh2D>>> {
    problem.solve(lambda)
}

/// `F^i_rl = ∫_∂Ω u_i^r g_l` and `DF^i_rl = -∫_Ω u_i^r u_i^l`.
pub fn boundary_data_2d(problem: &Problem2D, b: &[f64]) -> Result<TransferDataSet> {
    Ok(boundary_data(problem, b)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn problem(n: usize, profile: Profile2D, per_side: usize) -> Problem2D {
        let mesh = Arc::new(Mesh2D::unit_square(n).unwrap());
        let sources = SourceSet::side_segments(&mesh, &Side::ALL, per_side).unwrap();
        Problem2D::new(Medium2D::from_profile(mesh, &profile).unwrap(), sources).unwrap()
    }

    #[test]
    fn side_segments_have_unit_flux() {
        let mesh = Mesh2D::unit_square(16).unwrap();
        let s = SourceSet::side_segments(&mesh, &Side::ALL, 2).unwrap();
        assert_eq!(s.len(), 8);
        for load in s.load_vectors(&mesh) {
            assert!((load.iter().sum::<f64>() - 1.0).abs() < 1e-13);
        }
        assert!(SourceSet::side_segments(&mesh, &[Side::Bottom], 32).is_err());
    }

    #[test]
    fn flux_balance() {
        // integrating the PDE with q = 0 gives λ ∫ u = ∫_∂Ω g
        let mesh = Arc::new(Mesh2D::unit_square(20).unwrap());
        let all: Vec<usize> = (0..mesh.boundary_edges().len()).collect();
        let sources = SourceSet::new(&mesh, vec![all], vec![0.25]).unwrap();
        let p = Problem2D::new(Medium2D::from_profile(mesh.clone(), &Profile2D::Zero).unwrap(), sources).unwrap();
        let lambda = 3.0;
        let u = &solve_2d(&p, lambda).unwrap()[0];
        let ones = vec![1.0; mesh.n_nodes()];
        assert!((lambda * mesh.inner(&ones, &u.field.values) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn one_field_per_source() {
        let p = problem(8, Profile2D::Zero, 1);
        let mesh = Arc::new(Mesh2D::unit_square(8).unwrap());
        let two = SourceSet::side_segments(&mesh, &[Side::Bottom], 2).unwrap();
        let p2 = Problem2D::new(Medium2D::from_profile(mesh, &Profile2D::Zero).unwrap(), two).unwrap();
        assert_eq!(solve_2d(&p2, 1.0).unwrap().len(), 2);
        assert_eq!(solve_2d(&p, 1.0).unwrap().len(), 4);
    }

    #[test]
    fn constant_potential_shifts_lambda() {
        let shifted = problem(12, Profile2D::Constant(0.7), 1);
        let plain = problem(12, Profile2D::Zero, 1);
        let a = solve_2d(&shifted, 2.0).unwrap();
        let b = solve_2d(&plain, 2.7).unwrap();
        for (x, y) in a.iter().zip(&b) {
            for (u, v) in x.field.values.iter().zip(&y.field.values) {
                assert!((u - v).abs() < 1e-12 * v.abs().max(1.0));
            }
        }
    }

    #[test]
    fn transfer_matrices_are_reciprocal_and_gram() {
        let bumps = Profile2D::Bumps(vec![Bump { amplitude: 1.0, center: [0.3, 0.6], width: 0.15 }]);
        let p = problem(16, bumps, 2);
        let data = boundary_data_2d(&p, &[1.0, 2.0, 4.0, 8.0, 16.0, 32.0]).unwrap();
        assert_eq!((data.m(), data.k()), (6, 8));
        assert_eq!(data.m() * data.k(), 48);
        for (f, df) in data.f.iter().zip(&data.df) {
            assert!((f - f.transpose()).norm() <= 1e-10 * f.norm());
            assert!((df - df.transpose()).norm() <= 1e-10 * df.norm());
            let ev = SymmetricEigen::new(-df.clone()).eigenvalues;
            assert!(ev.min() > 0.0);
        }
    }

    #[test]
    fn refinement_is_second_order() {
        let bumps = Profile2D::Bumps(vec![Bump { amplitude: 2.0, center: [0.5, 0.4], width: 0.2 }]);
        let f = |n| boundary_data_2d(&problem(n, bumps.clone(), 1), &[3.0]).unwrap().f[0].clone();
        let (a, b, c) = (f(8), f(16), f(32));
        let ratio = (&a - &b).norm() / (&b - &c).norm();
        assert!(ratio > 3.3 && ratio < 4.7, "ratio {ratio}");
    }
}
