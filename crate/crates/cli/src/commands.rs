use std::io::Write;
use std::path::Path;

use spectral_rom::forward::ForwardModel;
use spectral_rom::{continued_fraction, internal_solutions, interpolant_from_ortho, invert};

use crate::config::ExperimentConfig;
use crate::error::CliError;
use crate::pipeline::{basis, create, data_rom, measure, simulate, Options};
use crate::repro::{repro_1d, repro_2d};
use crate::setup::{Models, Setup};
use crate::verify;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Rom,
    Grid,
    Internal,
    Invert,
    Verify,
    Repro1d,
    Repro2d,
}

/// Runs one subcommand, writing its artifacts under `out`.
pub fn run(cmd: Command, cfg: &ExperimentConfig, out: &Path) -> Result<(), CliError> {
    match cmd {
        Command::Verify => {
            let report = verify::run(cfg)?;
            let text = report.render();
            std::fs::create_dir_all(out)?;
            std::fs::write(out.join("verify_report.txt"), &text)?;
            print!("{text}");
            match report.failures() {
                0 => Ok(()),
                n => Err(CliError::Verification(n)),
            }
        }
        Command::Repro1d => match Setup::build(&require(cfg, 1, "repro-1d")?)? {
            Setup::One(models) => {
                let r = repro_1d(cfg, &models)?;
                r.write(cfg, out)?;
                print!("{}", r.report(cfg));
                Ok(())
            }
            Setup::Two(_) => unreachable!(),
        },
        Command::Repro2d => match Setup::build(&require(cfg, 2, "repro-2d")?)? {
            Setup::Two(models) => {
                let r = repro_2d(cfg, &models)?;
                r.write(cfg, out)?;
                print!("{}", r.report(cfg));
                Ok(())
            }
            Setup::One(_) => unreachable!(),
        },
        _ => match Setup::build(cfg)? {
            Setup::One(models) => stage(cmd, cfg, &models, out),
            Setup::Two(models) => {
                if cmd == Command::Grid {
                    return Err(CliError::Validation {
                        field: "dimension".into(),
                        message: "the staggered grid exists only in 1D".into(),
                    });
                }
                stage(cmd, cfg, &models, out)
            }
        },
    }
}

fn require(cfg: &ExperimentConfig, dimension: usize, name: &str) -> Result<ExperimentConfig, CliError> {
    if cfg.dimension != dimension {
        return Err(CliError::Validation {
            field: "dimension".into(),
            message: format!("{name} needs dimension = {dimension}, got {}", cfg.dimension),
        });
    }
    Ok(cfg.clone())
}

fn stage<P: ForwardModel>(
    cmd: Command,
    cfg: &ExperimentConfig,
    models: &Models<P>,
    out: &Path,
) -> Result<(), CliError> {
    let opts = Options::from_config(cfg);
    match cmd {
        Command::Simulate => {
            simulate(&models.data, &models.b)?.data.write_csv(create(out, "data.csv")?)?;
            simulate(&models.reference, &models.b)?.data.write_csv(create(out, "reference_data.csv")?)?;
        }
        Command::Rom => {
            let roms = data_rom(&measure(cfg, models)?.data, &opts)?;
            roms.rom.write_csv(create(out, "rom.csv")?)?;
            roms.ortho.write_csv(create(out, "ortho.csv")?)?;
        }
        Command::Grid => {
            let roms = data_rom(&measure(cfg, models)?.data, &opts)?;
            let grid = continued_fraction(&interpolant_from_ortho(&roms.ortho)?)?;
            grid.write_csv(create(out, "grid.csv")?)?;
            grid.write_nodes_csv(create(out, "grid_nodes.csv")?)?;
            let reference = basis(&models.reference, &models.b, &opts)?;
            match interpolant_from_ortho(&reference.ortho).and_then(|i| continued_fraction(&i)) {
                Ok(g) => g.write_csv(create(out, "reference_grid.csv")?)?,
                Err(e) => log::warn!("no grid for the reference medium: {e}"),
            }
        }
        Command::Internal => {
            let roms = data_rom(&measure(cfg, models)?.data, &opts)?;
            let reference = basis(&models.reference, &models.b, &opts)?;
            reference.write_csv(create(out, "basis.csv")?)?;
            let lambdas = cfg.evaluation_points()?;
            let mut index = create(out, "internal_lambdas.csv")?;
            writeln!(index, "k,lambda,file")?;
            for (k, s) in internal_solutions(&roms.ortho, &reference, &lambdas)?.iter().enumerate() {
                let name = format!("internal_{}.csv", k + 1);
                s.write_csv(create(out, &name)?)?;
                writeln!(index, "{},{},{name}", k + 1, s.lambda)?;
            }
        }
        Command::Invert => {
            let roms = data_rom(&measure(cfg, models)?.data, &opts)?;
            let reference = basis(&models.reference, &models.b, &opts)?;
            let sols = internal_solutions(&roms.ortho, &reference, &cfg.evaluation_points()?)?;
            let rec = invert(&sols, &opts.inversion)?;
            rec.write_csv(create(out, "reconstruction.csv")?)?;
            println!("max |q_est| on active nodes = {:.6e}", rec.max_abs());
        }
        Command::Verify | Command::Repro1d | Command::Repro2d => unreachable!(),
    }
    Ok(())
}
