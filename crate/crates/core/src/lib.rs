//! Data-driven reduced order models for the spectral-domain Schrödinger
//! inverse problem.
//!
//! The pipeline: boundary transfer data `{F(b_i), F'(b_i)}` give the Galerkin
//! mass and stiffness matrices of the (unknown) snapshot space ([`rom`]);
//! block Lanczos in the mass inner product makes the ROM block tridiagonal
//! ([`lanczos`]); embedding the orthonormal coefficients into a reference
//! medium's basis yields internal solutions and a direct estimate of `q`
//! ([`internal`]). In 1D the tridiagonal ROM coincides with a staggered
//! three-point scheme on a spectrally matched grid ([`grid1d`]).

pub mod banded;
pub mod compensated;
pub mod data;
pub mod error;
pub mod forward;
pub mod forward1d;
pub mod forward2d;
pub mod grid1d;
pub mod internal;
pub mod lanczos;
pub mod mesh;
pub mod rom;

#[cfg(test)]
mod testkit;

pub use data::TransferDataSet;
pub use error::{Result, RomError};
pub use forward::ForwardModel;
pub use grid1d::{continued_fraction, interpolant_from_ortho, solve_staggered, RationalInterpolant, StaggeredGrid1D};
pub use internal::{
    internal_solution, internal_solution_new_source, internal_solutions, invert, reference_basis, InternalSolution,
    InversionOptions, Reconstruction, ReferenceBasis,
};
pub use lanczos::{orthogonalize, solve_ortho, LanczosOptions, OrthoRom};
pub use mesh::{Field, Mesh, Mesh1D, Mesh2D, Snapshot};
pub use rom::{build_rom, project_delta, rom_transfer, DeltaProjection, GalerkinRom, RomOptions};
