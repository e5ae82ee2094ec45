use std::sync::Arc;

use nalgebra::DMatrix;
use proptest::prelude::*;

use spectral_rom::forward::{boundary_data, ForwardModel};
use spectral_rom::forward1d::{Medium1D, Profile1D, RightBc};
use spectral_rom::forward2d::{Bump, Medium2D, Problem2D, Profile2D, SourceSet};
use spectral_rom::grid1d::equivalence_report;
use spectral_rom::mesh::Side;
use spectral_rom::*;

fn geometric(lo: f64, hi: f64, m: usize) -> Vec<f64> {
    (0..m).map(|i| lo * (hi / lo).powf(i as f64 / (m - 1) as f64)).collect()
}

fn medium(n: usize, profile: &Profile1D) -> Medium1D {
    Medium1D::from_profile(Arc::new(Mesh1D::uniform(n).unwrap()), profile, RightBc::Neumann).unwrap()
}

fn cubic() -> Profile1D {
    Profile1D::CubicBump { amplitude: 0.2, left: 0.0, peak: 0.5, right: 1.0 }
}

fn problem(n: usize, profile: &Profile2D) -> Problem2D {
    let mesh = Arc::new(Mesh2D::unit_square(n).unwrap());
    let sources = SourceSet::side_segments(&mesh, &Side::ALL, 1).unwrap();
    Problem2D::new(Medium2D::from_profile(mesh, profile).unwrap(), sources).unwrap()
}

fn rel(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn loewner_matrices_match_snapshot_quadrature() {
    let b = geometric(1.0, 100.0, 6);
    for profile in [Profile1D::Zero, cubic()] {
        let model = medium(2000, &profile);
        let (data, snaps) = boundary_data(&model, &b).unwrap();
        let rom = build_rom(&data, &RomOptions::default()).unwrap();
        let (base, mass) = model.pencil();
        let u: Vec<&[f64]> = snaps.iter().map(|row| row[0].field.values.as_slice()).collect();
        let gram = DMatrix::from_fn(6, 6, |i, j| mass.bilinear(u[i], u[j]));
        let energy = DMatrix::from_fn(6, 6, |i, j| base.bilinear(u[i], u[j]));
        assert!(rel(&rom.mass, &gram) < 1e-7, "mass {:e}", rel(&rom.mass, &gram));
        assert!(rel(&rom.stiffness, &energy) < 1e-7, "stiffness {:e}", rel(&rom.stiffness, &energy));
    }
}

#[test]
fn block_rom_interpolates_two_dimensional_data() {
    let bumps = Profile2D::Bumps(vec![Bump { amplitude: 2.0, center: [0.4, 0.5], width: 0.15 }]);
    let model = problem(16, &bumps);
    let b = geometric(2.0, 60.0, 4);
    let (data, _) = boundary_data(&model, &b).unwrap();
    let rom = build_rom(&data, &RomOptions::default()).unwrap();
    for (i, &bi) in b.iter().enumerate() {
        let f = rom_transfer(&rom, bi).unwrap();
        assert!(rel(&f, &data.f[i]) < 1e-8);
        let h = 1e-5 * bi;
        let df = (rom_transfer(&rom, bi + h).unwrap() - rom_transfer(&rom, bi - h).unwrap()) / (2.0 * h);
        assert!(rel(&df, &data.df[i]) < 1e-5);
    }
}

#[test]
fn fem_data_grid_is_equivalent_to_lanczos_rom() {
    let b = geometric(1.0, 100.0, 6);
    let (data, _) = boundary_data(&medium(2000, &cubic()), &b).unwrap();
    let rom = build_rom(&data, &RomOptions::default()).unwrap();
    let ortho = orthogonalize(&rom, &project_delta(&rom).unwrap(), &LanczosOptions::default()).unwrap();
    let interp = interpolant_from_ortho(&ortho).unwrap();
    assert!(interp.poles().iter().all(|&p| p < 0.0));
    assert!(interp.residues().iter().all(|&r| r > 0.0));
    let grid = continued_fraction(&interp).unwrap();
    let lambdas: Vec<f64> = (0..20).map(|i| 1.0 + 99.0 * i as f64 / 19.0).collect();
    let report = equivalence_report(&ortho, &grid, &lambdas).unwrap();
    assert!(report.operator <= 1e-8 * ortho.t.amax());
    assert!(report.boundary <= 1e-8 && report.coefficients <= 1e-8);
    assert!(report.first_value <= 1e-10);
}

#[test]
fn reference_basis_refines_toward_the_source() {
    let b = geometric(1.0, 100.0, 6);
    let basis =
        reference_basis(&medium(2000, &Profile1D::Zero), &b, &RomOptions::default(), &LanczosOptions::default())
            .unwrap();
    assert_eq!(basis.len(), 6);
    // Quadrature orthonormality is limited by the data precision times the
    // conditioning of the snapshot Gram matrix.
    let kappa = basis.rom.mass_eigenvalues.1 / basis.rom.mass_eigenvalues.0;
    assert!(basis.gram_error() < 1e-15 * kappa, "{:e} at kappa {kappa:e}", basis.gram_error());
    // Centre of mass of û_j² moves away from x = 0 as j grows.
    let nodes = basis.mesh().nodes().to_vec();
    let centres: Vec<f64> = basis
        .fields
        .iter()
        .map(|f| {
            let sq: Vec<f64> = f.values.iter().map(|v| v * v).collect();
            let x_sq: Vec<f64> = sq.iter().zip(&nodes).map(|(s, x)| s * x).collect();
            let w = basis.mesh().trapezoid_weights();
            let num: f64 = x_sq.iter().zip(w).map(|(a, b)| a * b).sum();
            let den: f64 = sq.iter().zip(w).map(|(a, b)| a * b).sum();
            num / den
        })
        .collect();
    assert!(centres.windows(2).all(|w| w[0] < w[1]), "{centres:?}");
}

#[test]
fn internal_solutions_are_linear_in_the_source() {
    let b = geometric(2.0, 60.0, 3);
    let opts = (RomOptions::default(), LanczosOptions::default());
    let reference = reference_basis(&problem(12, &Profile2D::Zero), &b, &opts.0, &opts.1).unwrap();
    let bumps = Profile2D::Bumps(vec![Bump { amplitude: 1.0, center: [0.5, 0.5], width: 0.2 }]);
    let measured = reference_basis(&problem(24, &bumps), &b, &opts.0, &opts.1).unwrap();
    let lambda = 7.0;
    let direct = internal_solution(&measured.ortho, &reference, lambda).unwrap();
    // Pairings of the snapshots with g_0 + g_2 are the sum of the data columns.
    let rhs = &measured.rom.rhs;
    let pairing = rhs.column(0) + rhs.column(2);
    let combined = internal_solution_new_source(
        &measured.ortho,
        &reference,
        &DMatrix::from_column_slice(rhs.nrows(), 1, pairing.as_slice()),
        lambda,
    )
    .unwrap();
    let expected: Vec<f64> = direct.fields[0].values.iter().zip(&direct.fields[2].values).map(|(a, c)| a + c).collect();
    let scale = expected.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for (a, e) in combined.fields[0].values.iter().zip(&expected) {
        assert!((a - e).abs() <= 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    // Exact up to the lumped potential term, which is second order in h.
    fn constant_potential_is_a_spectral_shift(c in 0.0f64..2.0, lambda in 0.1f64..50.0) {
        let shifted = medium(400, &Profile1D::Constant(c)).solve(lambda).unwrap();
        let plain = medium(400, &Profile1D::Zero).solve(lambda + c).unwrap();
        let d = shifted[0].field.relative_distance(&plain[0].field);
        prop_assert!(d < 1e-6, "relative distance {d:e}");
    }

    #[test]
    fn reciprocity_holds_for_random_bumps(
        amp in 0.0f64..4.0, cx in 0.2f64..0.8, cy in 0.2f64..0.8, lambda in 0.5f64..40.0,
    ) {
        let bumps = Profile2D::Bumps(vec![Bump { amplitude: amp, center: [cx, cy], width: 0.15 }]);
        let (data, _) = boundary_data(&problem(8, &bumps), &[lambda]).unwrap();
        prop_assert!(data.max_asymmetry() <= 1e-10);
    }
}
