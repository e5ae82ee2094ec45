//! P1 finite elements for `-u'' + q u + λ u = 0` on `(0, 1)` with unit
//! outward flux at `x = 0` and a Dirichlet or Neumann condition at `x = 1`.

use std::io::Read;
use std::sync::Arc;

use crate::banded::SymBanded;
use crate::data::TransferDataSet;
use crate::error::{Result, RomError};
use crate::forward::{boundary_data, ForwardModel};
use crate::mesh::{Mesh, Mesh1D, Snapshot};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RightBc {
    Dirichlet,
    Neumann,
}

/// Potential profiles on the unit interval.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile1D {
    Zero,
    Constant(f64),
    /// Cubic smoothstep up from `left` to `peak` and back down to zero at `right`.
    CubicBump {
        amplitude: f64,
        left: f64,
        peak: f64,
        right: f64,
    },
    Gaussian {
        amplitude: f64,
        center: f64,
        width: f64,
    },
}

impl Profile1D {
    pub fn eval(&self, x: f64) -> f64 {
        match *self {
            Profile1D::Zero => 0.0,
            Profile1D::Constant(c) => c,
            Profile1D::CubicBump { amplitude, left, peak, right } => {
                let s = |t: f64| t * t * (3.0 - 2.0 * t);
                if x <= left || x >= right {
                    0.0
                } else if x <= peak {
                    amplitude * s((x - left) / (peak - left))
                } else {
                    amplitude * s((right - x) / (right - peak))
                }
            }
            Profile1D::Gaussian { amplitude, center, width } => amplitude * (-((x - center) / width).powi(2)).exp(),
        }
    }
}

/// Potential and boundary condition on an interval mesh.
#[derive(Debug, Clone)]
pub struct Medium1D {
    mesh: Arc<Mesh1D>,
    q: Vec<f64>,
    right_bc: RightBc,
    base: SymBanded,
    mass: SymBanded,
    loads: Vec<Vec<f64>>,
}

impl Medium1D {
    pub fn new(mesh: Arc<Mesh1D>, q: Vec<f64>, right_bc: RightBc) -> Result<Self> {
        if q.len() != mesh.n_nodes() {
            return Err(RomError::Medium(format!("{} potential values for {} nodes", q.len(), mesh.n_nodes())));
        }
        if let Some(i) = q.iter().position(|v| !v.is_finite()) {
            return Err(RomError::Medium(format!("q is not finite at node {i}")));
        }
        // trapezoid rule for the potential term
        let mut qterm = SymBanded::zeros(mesh.n_nodes(), 1);
        for (i, (qi, w)) in q.iter().zip(mesh.trapezoid_weights()).enumerate() {
            qterm.add(i, i, qi * w);
        }
        let mut base = mesh.stiffness().add_scaled(1.0, &qterm);
        let mut mass = mesh.mass().clone();
        if right_bc == RightBc::Dirichlet {
            let last = mesh.n_nodes() - 1;
            base.constrain(last);
            mass.clear(last);
        }
        let mut load = vec![0.0; mesh.n_nodes()];
        load[0] = 1.0;
        Ok(Self { mesh, q, right_bc, base, mass, loads: vec![load] })
    }

    pub fn from_profile(mesh: Arc<Mesh1D>, profile: &Profile1D, right_bc: RightBc) -> Result<Self> {
        let q = mesh.nodes().iter().map(|&x| profile.eval(x)).collect();
        Self::new(mesh, q, right_bc)
    }

    /// Reads nodal samples from a CSV with header `x,q` and interpolates them
    /// linearly onto `mesh` (constant beyond the sampled range).
    pub fn from_csv<R: Read>(reader: R, mesh: Arc<Mesh1D>, right_bc: RightBc) -> Result<Self> {
        let samples = read_xq(reader)?;
        let q = mesh
            .nodes()
            .iter()
            .map(|&x| {
                let k = samples.partition_point(|s| s.0 <= x);
                if k == 0 {
                    samples[0].1
                } else if k == samples.len() {
                    samples[k - 1].1
                } else {
                    let (x0, q0) = samples[k - 1];
                    let (x1, q1) = samples[k];
                    q0 + (q1 - q0) * (x - x0) / (x1 - x0)
                }
            })
            .collect();
        Self::new(mesh, q, right_bc)
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn right_bc(&self) -> RightBc {
        self.right_bc
    }
}

fn read_xq<R: Read>(reader: R) -> Result<Vec<(f64, f64)>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let names: Vec<&str> = headers.iter().map(str::trim).collect();
    if names != ["x", "q"] {
        return Err(RomError::Input(format!("medium file header must be `x,q`, found `{}`", names.join(","))));
    }
    let mut samples = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let parse = |s: &str| {
            s.trim().parse::<f64>().map_err(|e| RomError::Input(format!("bad number `{s}` in medium file: {e}")))
        };
        samples.push((parse(&rec[0])?, parse(&rec[1])?));
    }
    if samples.is_empty() {
        return Err(RomError::Input("medium file has no samples".into()));
    }
    if samples.windows(2).any(|w| w[1].0 <= w[0].0) {
        return Err(RomError::Input("medium file x values must be strictly increasing".into()));
    }
    Ok(samples)
}

impl ForwardModel for Medium1D {
    type Mesh = Mesh1D;

    fn mesh(&self) -> &Arc<Mesh1D> {
        &self.mesh
    }

    fn loads(&self) -> &[Vec<f64>] {
        &self.loads
    }

    fn pencil(&self) -> (&SymBanded, &SymBanded) {
        (&self.base, &self.mass)
    }

    fn min_potential(&self) -> f64 {
        self.q.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Solution `u(x; λ)` for the unit flux source.
pub fn solve_1d(medium: &Medium1D, lambda: f64) -> Result<Snapshot<Mesh1D>> {
    Ok(medium.solve(lambda)?.remove(0))
}

/// `F(b_i) = u(0; b_i)` and `F'(b_i) = -∫ u_i^2`.
pub fn boundary_data_1d(medium: &Medium1D, b: &[f64]) -> Result<TransferDataSet> {
    Ok(boundary_data(medium, b)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn medium(n: usize, profile: Profile1D, bc: RightBc) -> Medium1D {
        Medium1D::from_profile(Arc::new(Mesh1D::uniform(n).unwrap()), &profile, bc).unwrap()
    }

    fn exact_dirichlet_u0(lambda: f64) -> f64 {
        let s = lambda.sqrt();
        s.tanh() / s
    }

    #[test]
    fn reference_boundary_value() {
        let m = medium(2000, Profile1D::Zero, RightBc::Dirichlet);
        let u = solve_1d(&m, 1.0).unwrap();
        assert!((u.field.values[0] - 0.761594).abs() < 1e-6);
        assert_eq!(*u.field.values.last().unwrap(), 0.0);
        let u = solve_1d(&m, 37.0).unwrap();
        assert_eq!(*u.field.values.last().unwrap(), 0.0);
    }

    #[test]
    fn neumann_boundary_value() {
        let m = medium(2000, Profile1D::Zero, RightBc::Neumann);
        let lambda: f64 = 2.5;
        let s = lambda.sqrt();
        let u = solve_1d(&m, lambda).unwrap();
        assert!((u.field.values[0] - 1.0 / (s * s.tanh())).abs() < 1e-6);
    }

    #[test]
    fn constant_potential_shifts_lambda() {
        let m = medium(2000, Profile1D::Constant(0.2), RightBc::Dirichlet);
        let u = solve_1d(&m, 1.0).unwrap();
        let expected = exact_dirichlet_u0(1.2);
        assert!((expected - 0.7292532634501074).abs() < 1e-15);
        assert!((u.field.values[0] - expected).abs() < 1e-6);
    }

    #[test]
    fn second_order_convergence() {
        let err = |n| {
            let m = medium(n, Profile1D::Zero, RightBc::Dirichlet);
            (solve_1d(&m, 9.0).unwrap().field.values[0] - exact_dirichlet_u0(9.0)).abs()
        };
        let (e1, e2, e3) = (err(50), err(100), err(200));
        for ratio in [e1 / e2, e2 / e3] {
            assert!((ratio - 4.0).abs() < 0.1, "ratio {ratio}");
        }
    }

    #[test]
    fn data_values_match_closed_form() {
        let m = medium(2000, Profile1D::Zero, RightBc::Dirichlet);
        let data = boundary_data_1d(&m, &[1.0]).unwrap();
        assert_eq!((data.m(), data.k()), (1, 1));
        let c = 1f64.cosh();
        let df = -((2f64.sinh() / 2.0 - 1.0) / 2.0) / (c * c);
        assert!((df + 0.170810).abs() < 1e-6);
        assert!((data.f[0][(0, 0)] - 0.761594).abs() < 1e-6);
        assert!((data.df[0][(0, 0)] - df).abs() < 1e-6);
    }

    #[test]
    fn derivative_identity_matches_centered_difference() {
        let m =
            medium(400, Profile1D::CubicBump { amplitude: 0.2, left: 0.2, peak: 0.45, right: 0.7 }, RightBc::Dirichlet);
        for lambda in [1.0, 4.0, 30.0] {
            let h = 1e-3 * lambda;
            let fp = solve_1d(&m, lambda + h).unwrap().field.values[0];
            let fm = solve_1d(&m, lambda - h).unwrap().field.values[0];
            let fd = (fp - fm) / (2.0 * h);
            let df = boundary_data_1d(&m, &[lambda]).unwrap().df[0][(0, 0)];
            assert!((fd - df).abs() < 1e-6 * df.abs(), "{fd} vs {df}");
        }
    }

    #[test]
    fn self_adjoint_pairing() {
        let m = medium(600, Profile1D::Gaussian { amplitude: 0.3, center: 0.4, width: 0.1 }, RightBc::Neumann);
        let (la, lb) = (2.0, 11.0);
        let ua = solve_1d(&m, la).unwrap().field.values;
        let ub = solve_1d(&m, lb).unwrap().field.values;
        let mesh = m.mesh();
        let grad: f64 = mesh
            .nodes()
            .windows(2)
            .enumerate()
            .map(|(c, w)| (ua[c + 1] - ua[c]) * (ub[c + 1] - ub[c]) / (w[1] - w[0]))
            .sum();
        let pot: f64 = (0..ua.len()).map(|i| m.q()[i] * mesh.trapezoid_weights()[i] * ua[i] * ub[i]).sum();
        let mass = mesh.inner(&ua, &ub);
        let scale = grad.abs() + lb * mass.abs();
        assert!((grad + pot + la * mass - ub[0]).abs() < 1e-10 * scale);
        assert!((grad + pot + lb * mass - ua[0]).abs() < 1e-10 * scale);
    }

    #[test]
    fn csv_medium_is_interpolated() {
        let text = "x,q\n0,0\n0.5,0.2\n1,0\n";
        let mesh = Arc::new(Mesh1D::uniform(4).unwrap());
        let m = Medium1D::from_csv(text.as_bytes(), mesh, RightBc::Dirichlet).unwrap();
        assert_eq!(m.q(), &[0.0, 0.1, 0.2, 0.1, 0.0]);
        assert!(Medium1D::from_csv("x,p\n0,1\n".as_bytes(), Arc::new(Mesh1D::uniform(2).unwrap()), RightBc::Neumann)
            .is_err());
    }

    #[test]
    fn non_coercive_system_reported() {
        let m = medium(50, Profile1D::Constant(-20.0), RightBc::Neumann);
        match solve_1d(&m, 1.0) {
            Err(RomError::NonCoercive { lambda, min_q }) => {
                assert_eq!(lambda, 1.0);
                assert_eq!(min_q, -20.0);
            }
            other => panic!("expected non-coercive error, got {other:?}"),
        }
    }

    #[test]
    fn duplicate_spectral_points_rejected() {
        let m = medium(50, Profile1D::Zero, RightBc::Dirichlet);
        assert!(matches!(boundary_data_1d(&m, &[1.0, 1.0]), Err(RomError::CoincidentPoints { .. })));
    }
}
