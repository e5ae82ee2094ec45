//! Spectrally matched staggered finite-difference grids in 1D.
//!
//! A Stieltjes function `F(λ) = Σ y_i² / (λ − θ_i)` with negative poles and
//! positive residues is written as the continued fraction
//!
//! ```text
//! F(λ) = 1 / (γ̂_1 λ + 1 / (γ_1 + 1 / (γ̂_2 λ + ... + 1 / (γ̂_m λ + 1 / γ_m))))
//! ```
//!
//! which is the impedance at the first node of the three-point scheme
//! `−(1/γ̂_j) ((U_{j+1} − U_j)/γ_j − (U_j − U_{j−1})/γ_{j−1}) + λ U_j = 0`
//! driven by a unit flux at the left and terminated by `U_{m+1} = 0`.

use std::io::Write;

use nalgebra::{DMatrix, DVector};

use crate::error::{Result, RomError};
use crate::lanczos::{solve_ortho, OrthoRom};

/// `F_m(λ) = Σ residues_i / (λ − poles_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalInterpolant {
    poles: Vec<f64>,
    residues: Vec<f64>,
}

impl RationalInterpolant {
    pub fn new(poles: Vec<f64>, residues: Vec<f64>) -> Result<Self> {
        if poles.len() != residues.len() || poles.is_empty() {
            return Err(RomError::InvalidInterpolant(format!("{} poles and {} residues", poles.len(), residues.len())));
        }
        for (i, (&p, &r)) in poles.iter().zip(&residues).enumerate() {
            if !(p < 0.0) {
                return Err(RomError::InvalidInterpolant(format!("pole {i} = {p} is not negative")));
            }
            if !(r > 0.0) {
                return Err(RomError::InvalidInterpolant(format!("residue {i} = {r} is not positive")));
            }
        }
        let mut sorted = poles.clone();
        sorted.sort_by(f64::total_cmp);
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(RomError::InvalidInterpolant("repeated pole".into()));
        }
        Ok(Self { poles, residues })
    }

    pub fn order(&self) -> usize {
        self.poles.len()
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn residues(&self) -> &[f64] {
        &self.residues
    }

    pub fn eval(&self, lambda: f64) -> f64 {
        self.poles.iter().zip(&self.residues).map(|(p, r)| r / (lambda - p)).sum()
    }

    /// `dF/dλ`.
    pub fn derivative(&self, lambda: f64) -> f64 {
        self.poles.iter().zip(&self.residues).map(|(p, r)| -r / (lambda - p).powi(2)).sum()
    }
}

/// Pole/residue form of a scalar orthonormalized ROM: the transfer function is
/// `rhs_hat^T (T + λ)^{-1} rhs_hat` with `rhs_hat = û_1(0) e_1`.
pub fn interpolant_from_ortho(ortho: &OrthoRom) -> Result<RationalInterpolant> {
    if ortho.k != 1 {
        return Err(RomError::Structure(format!("pole/residue form needs K = 1, got K = {}", ortho.k)));
    }
    let u0 = ortho.rhs_hat[(0, 0)];
    let eig = ortho.t.clone().symmetric_eigen();
    let poles: Vec<f64> = eig.eigenvalues.iter().map(|v| -v).collect();
    let residues: Vec<f64> = (0..poles.len()).map(|i| u0 * u0 * eig.eigenvectors[(0, i)].powi(2)).collect();
    RationalInterpolant::new(poles, residues)
}

/// Primal steps `γ_1..γ_m` and dual steps `γ̂_1..γ̂_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct StaggeredGrid1D {
    gamma: Vec<f64>,
    gamma_hat: Vec<f64>,
}

impl StaggeredGrid1D {
    pub fn new(gamma: Vec<f64>, gamma_hat: Vec<f64>) -> Result<Self> {
        if gamma.len() != gamma_hat.len() || gamma.is_empty() {
            return Err(RomError::DegenerateInterpolant(format!(
                "{} primal and {} dual steps",
                gamma.len(),
                gamma_hat.len()
            )));
        }
        if let Some(v) = gamma.iter().chain(&gamma_hat).find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(RomError::DegenerateInterpolant(format!("non-positive grid step {v}")));
        }
        Ok(Self { gamma, gamma_hat })
    }

    pub fn m(&self) -> usize {
        self.gamma.len()
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn gamma_hat(&self) -> &[f64] {
        &self.gamma_hat
    }

    /// Evaluates the continued fraction from the bottom up.
    pub fn eval(&self, lambda: f64) -> f64 {
        let m = self.m();
        let mut z = 0.0;
        for j in (0..m).rev() {
            z = 1.0 / (self.gamma_hat[j] * lambda + 1.0 / (self.gamma[j] + z));
        }
        z
    }

    /// Difference operator `L_m` acting on `U`.
    pub fn operator(&self) -> DMatrix<f64> {
        let m = self.m();
        let (g, gh) = (&self.gamma, &self.gamma_hat);
        let mut l = DMatrix::zeros(m, m);
        for j in 0..m {
            let left = if j > 0 { 1.0 / g[j - 1] } else { 0.0 };
            l[(j, j)] = (left + 1.0 / g[j]) / gh[j];
            if j + 1 < m {
                l[(j, j + 1)] = -1.0 / (gh[j] * g[j]);
                l[(j + 1, j)] = -1.0 / (gh[j + 1] * g[j]);
            }
        }
        l
    }

    /// `diag(√γ̂) L_m diag(1/√γ̂)`, acting on `V_j = √γ̂_j U_j`.
    pub fn symmetrized_operator(&self) -> DMatrix<f64> {
        let m = self.m();
        let (g, gh) = (&self.gamma, &self.gamma_hat);
        let mut l = DMatrix::zeros(m, m);
        for j in 0..m {
            let left = if j > 0 { 1.0 / g[j - 1] } else { 0.0 };
            l[(j, j)] = (left + 1.0 / g[j]) / gh[j];
            if j + 1 < m {
                let off = -1.0 / (g[j] * (gh[j] * gh[j + 1]).sqrt());
                l[(j, j + 1)] = off;
                l[(j + 1, j)] = off;
            }
        }
        l
    }

    /// Primal node positions `0, γ_1, γ_1 + γ_2, ...` (m + 1 values).
    pub fn primal_nodes(&self) -> Vec<f64> {
        cumulative(&self.gamma)
    }

    /// Dual node positions `0, γ̂_1, γ̂_1 + γ̂_2, ...` (m + 1 values).
    pub fn dual_nodes(&self) -> Vec<f64> {
        cumulative(&self.gamma_hat)
    }

    /// Largest relative step deviation from another grid of the same size.
    pub fn relative_deviation(&self, other: &StaggeredGrid1D) -> Result<f64> {
        if self.m() != other.m() {
            return Err(RomError::Structure(format!("grids of size {} and {}", self.m(), other.m())));
        }
        let pairs = self.gamma.iter().zip(&other.gamma).chain(self.gamma_hat.iter().zip(&other.gamma_hat));
        Ok(pairs.map(|(a, b)| ((a - b) / b).abs()).fold(0.0, f64::max))
    }

    /// `j,gamma,gamma_hat` rows, 1-based.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["j", "gamma", "gamma_hat"])?;
        for j in 0..self.m() {
            w.write_record([(j + 1).to_string(), self.gamma[j].to_string(), self.gamma_hat[j].to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `kind,j,position` rows for the primal and dual nodes.
    pub fn write_nodes_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["kind", "j", "position"])?;
        for (kind, nodes) in [("primal", self.primal_nodes()), ("dual", self.dual_nodes())] {
            for (j, x) in nodes.iter().enumerate() {
                w.write_record([kind.to_string(), j.to_string(), x.to_string()])?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

fn cumulative(steps: &[f64]) -> Vec<f64> {
    std::iter::once(0.0)
        .chain(steps.iter().scan(0.0, |acc, s| {
            *acc += s;
            Some(*acc)
        }))
        .collect()
}

/// Steps of the continued fraction of `interp`, read off the Lanczos
/// tridiagonalization of `diag(−θ)` started from `y / |y|`.
pub fn continued_fraction(interp: &RationalInterpolant) -> Result<StaggeredGrid1D> {
    let m = interp.order();
    let mu = DVector::from_iterator(m, interp.poles().iter().map(|p| -p));
    let total: f64 = interp.residues().iter().sum();
    let start = DVector::from_iterator(m, interp.residues().iter().map(|r| (r / total).sqrt()));
    let scale = mu.amax();

    let mut basis: Vec<DVector<f64>> = vec![start];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m.saturating_sub(1));
    for j in 0..m {
        let q = &basis[j];
        let mut r = mu.component_mul(q);
        alpha.push(q.dot(&r));
        if j + 1 == m {
            break;
        }
        for _ in 0..2 {
            for v in &basis {
                let c = v.dot(&r);
                r.axpy(-c, v, 1.0);
            }
        }
        let b = r.norm();
        if b <= 1e-13 * scale {
            return Err(RomError::DegenerateInterpolant(format!("recurrence broke down after {} steps", j + 1)));
        }
        beta.push(b);
        basis.push(r / b);
    }

    let mut gamma = Vec::with_capacity(m);
    let mut gamma_hat = Vec::with_capacity(m);
    gamma_hat.push(1.0 / total);
    for j in 0..m {
        let left = if j > 0 { 1.0 / gamma[j - 1] } else { 0.0 };
        let inv = gamma_hat[j] * alpha[j] - left;
        if !(inv > 0.0) {
            return Err(RomError::DegenerateInterpolant(format!("primal step {} is not positive", j + 1)));
        }
        gamma.push(1.0 / inv);
        if j + 1 < m {
            let b = beta[j];
            gamma_hat.push(1.0 / (gamma[j] * gamma[j] * b * b * gamma_hat[j]));
        }
    }
    StaggeredGrid1D::new(gamma, gamma_hat)
}

/// Solves `(L_m + λ) U = e_1 / γ̂_1`; `U_1` is the continued fraction value.
pub fn solve_staggered(grid: &StaggeredGrid1D, lambda: f64) -> Result<Vec<f64>> {
    let m = grid.m();
    let l = grid.operator();
    // Thomas algorithm on the tridiagonal system
    let mut diag: Vec<f64> = (0..m).map(|j| l[(j, j)] + lambda).collect();
    let mut rhs = vec![0.0; m];
    rhs[0] = 1.0 / grid.gamma_hat()[0];
    for j in 1..m {
        if diag[j - 1] == 0.0 {
            return Err(RomError::SingularPencil(lambda));
        }
        let f = l[(j, j - 1)] / diag[j - 1];
        diag[j] -= f * l[(j - 1, j)];
        rhs[j] -= f * rhs[j - 1];
    }
    if diag[m - 1] == 0.0 {
        return Err(RomError::SingularPencil(lambda));
    }
    let mut u = vec![0.0; m];
    u[m - 1] = rhs[m - 1] / diag[m - 1];
    for j in (0..m - 1).rev() {
        u[j] = (rhs[j] - l[(j, j + 1)] * u[j + 1]) / diag[j];
    }
    Ok(u)
}

/// Residuals of the identification of a scalar orthonormal ROM with a
/// staggered grid.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    /// `max |L − T|` entrywise, `L` the symmetrized grid operator.
    pub operator: f64,
    /// `max_λ |û_1(0) ĉ_1 − U_1|`.
    pub boundary: f64,
    /// `max_λ max_i |ĉ_i − √γ̂_i U_i|`.
    pub coefficients: f64,
    /// `|û_1(0) − 1/√γ̂_1|`.
    pub first_value: f64,
}

impl EquivalenceReport {
    pub fn max(&self) -> f64 {
        self.operator.max(self.boundary).max(self.coefficients).max(self.first_value)
    }
}

pub fn equivalence_report(ortho: &OrthoRom, grid: &StaggeredGrid1D, lambdas: &[f64]) -> Result<EquivalenceReport> {
    if ortho.k != 1 {
        return Err(RomError::Structure(format!("grid equivalence needs K = 1, got K = {}", ortho.k)));
    }
    if ortho.t.nrows() != grid.m() {
        return Err(RomError::Structure(format!(
            "ROM of order {} against a grid with {} steps",
            ortho.t.nrows(),
            grid.m()
        )));
    }
    let operator = (grid.symmetrized_operator() - &ortho.t).amax();
    let u0 = ortho.rhs_hat[(0, 0)];
    let mut boundary: f64 = 0.0;
    let mut coefficients: f64 = 0.0;
    for &l in lambdas {
        let c = solve_ortho(ortho, l)?;
        let u = solve_staggered(grid, l)?;
        boundary = boundary.max((u0 * c[(0, 0)] - u[0]).abs());
        for (i, ui) in u.iter().enumerate() {
            coefficients = coefficients.max((c[(i, 0)] - grid.gamma_hat()[i].sqrt() * ui).abs());
        }
    }
    Ok(EquivalenceReport {
        operator,
        boundary,
        coefficients,
        first_value: (u0 - 1.0 / grid.gamma_hat()[0].sqrt()).abs(),
    })
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::lanczos::{orthogonalize, LanczosOptions};
    use crate::rom::{build_rom, project_delta, RomOptions};
    use crate::testkit::diagonal_model_data;

    fn random_interpolant(rng: &mut ChaCha8Rng, m: usize) -> RationalInterpolant {
        let mut poles: Vec<f64> = (0..m).map(|_| -rng.random_range(0.1..50.0)).collect();
        poles.sort_by(f64::total_cmp);
        let residues = (0..m).map(|_| rng.random_range(0.1..2.0)).collect();
        RationalInterpolant::new(poles, residues).unwrap()
    }

    #[test]
    fn one_term_fraction() {
        let g = continued_fraction(&RationalInterpolant::new(vec![-1.0], vec![1.0]).unwrap()).unwrap();
        assert!((g.gamma_hat()[0] - 1.0).abs() < 1e-15);
        assert!((g.gamma()[0] - 1.0).abs() < 1e-15);
        let g = continued_fraction(&RationalInterpolant::new(vec![-3.0], vec![2.0]).unwrap()).unwrap();
        assert!((g.gamma_hat()[0] - 0.5).abs() < 1e-15);
        assert!((g.gamma()[0] - 2.0 / 3.0).abs() < 1e-15);
        let u = solve_staggered(&g, 1.5).unwrap();
        assert!((u[0] - 2.0 / 4.5).abs() < 1e-15);
    }

    #[test]
    fn one_by_one_rom() {
        // T = [1.5], û_1(0) = 2
        let ortho = OrthoRom {
            m: 1,
            k: 1,
            block_sizes: vec![1],
            t: DMatrix::from_element(1, 1, 1.5),
            q: DMatrix::identity(1, 1),
            rhs_hat: DMatrix::from_element(1, 1, 2.0),
            breakdown: None,
        };
        let f = interpolant_from_ortho(&ortho).unwrap();
        assert_eq!(f.poles(), &[-1.5]);
        assert!((f.residues()[0] - 4.0).abs() < 1e-15);
    }

    #[test]
    fn random_fraction_matches_pole_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let f = random_interpolant(&mut rng, 4);
        let g = continued_fraction(&f).unwrap();
        for _ in 0..10 {
            let l = rng.random_range(0.01..100.0);
            assert!((g.eval(l) - f.eval(l)).abs() <= 1e-10 * f.eval(l));
        }
        for _ in 0..20 {
            let l = rng.random_range(0.01..100.0);
            let u = solve_staggered(&g, l).unwrap();
            assert!((u[0] - f.eval(l)).abs() <= 1e-10 * f.eval(l));
        }
    }

    #[test]
    fn rom_interpolant_reproduces_data() {
        let mu = [0.8, 2.5, 7.0, 20.0, 60.0];
        let y2 = [1.0, 0.6, 0.3, 0.2, 0.05];
        let b = [1.0, 4.0, 15.0];
        let data = diagonal_model_data(&mu, &y2, &b);
        let rom = build_rom(&data, &RomOptions::default()).unwrap();
        let ortho = orthogonalize(&rom, &project_delta(&rom).unwrap(), &LanczosOptions::default()).unwrap();
        let f = interpolant_from_ortho(&ortho).unwrap();
        for (i, &l) in b.iter().enumerate() {
            assert!((f.eval(l) - data.f[i][(0, 0)]).abs() < 1e-8);
            assert!((f.derivative(l) - data.df[i][(0, 0)]).abs() < 1e-8);
        }
        let sum: f64 = f.residues().iter().sum();
        assert!((sum - ortho.rhs_hat[(0, 0)].powi(2)).abs() < 1e-12 * sum);

        let grid = continued_fraction(&f).unwrap();
        let report = equivalence_report(&ortho, &grid, &[0.5, 2.0, 9.0, 40.0]).unwrap();
        assert!(report.max() < 1e-8, "{report:?}");
    }

    #[test]
    fn invalid_interpolants_rejected() {
        assert!(matches!(RationalInterpolant::new(vec![1.0], vec![1.0]), Err(RomError::InvalidInterpolant(_))));
        assert!(matches!(RationalInterpolant::new(vec![-1.0], vec![-1.0]), Err(RomError::InvalidInterpolant(_))));
        assert!(matches!(
            RationalInterpolant::new(vec![-1.0, -1.0], vec![1.0, 1.0]),
            Err(RomError::InvalidInterpolant(_))
        ));
    }

    #[test]
    fn mismatched_orders_rejected() {
        let ortho = OrthoRom {
            m: 1,
            k: 1,
            block_sizes: vec![1],
            t: DMatrix::from_element(1, 1, 1.5),
            q: DMatrix::identity(1, 1),
            rhs_hat: DMatrix::from_element(1, 1, 2.0),
            breakdown: None,
        };
        let grid = StaggeredGrid1D::new(vec![1.0, 1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(equivalence_report(&ortho, &grid, &[1.0]), Err(RomError::Structure(_))));
    }

    #[test]
    fn node_positions_accumulate() {
        let grid = StaggeredGrid1D::new(vec![0.5, 0.25], vec![0.1, 0.4]).unwrap();
        assert_eq!(grid.primal_nodes(), vec![0.0, 0.5, 0.75]);
        assert_eq!(grid.dual_nodes(), vec![0.0, 0.1, 0.5]);
        let mut out = Vec::new();
        grid.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "j,gamma,gamma_hat\n1,0.5,0.1\n2,0.25,0.4\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn round_trip_through_grid(seed in 0u64..10_000, m in 1usize..8) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_interpolant(&mut rng, m);
            let grid = continued_fraction(&f).unwrap();
            prop_assert!(grid.gamma().iter().chain(grid.gamma_hat()).all(|&v| v > 0.0));
            let eig = grid.symmetrized_operator().symmetric_eigen();
            let total: f64 = f.residues().iter().sum();
            let mut back: Vec<(f64, f64)> = (0..m)
                .map(|i| (-eig.eigenvalues[i], total * eig.eigenvectors[(0, i)].powi(2)))
                .collect();
            back.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut orig: Vec<(f64, f64)> = f.poles().iter().copied().zip(f.residues().iter().copied()).collect();
            orig.sort_by(|a, b| a.0.total_cmp(&b.0));
            for (a, b) in back.iter().zip(&orig) {
                prop_assert!((a.0 - b.0).abs() <= 1e-9 * b.0.abs());
                prop_assert!((a.1 - b.1).abs() <= 1e-9 * b.1);
            }
        }
    }
}
