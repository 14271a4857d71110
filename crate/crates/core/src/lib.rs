//! Numerical laboratory for the semilinear Calderón-type inverse problem
//! on a rectangle: forward solves of `Δu + q·uᵐ = 0` with small Dirichlet
//! data, the nonlinear Dirichlet-to-Neumann map and its higher-order
//! linearizations, and explicit Fourier reconstruction of the potential
//! `q` from boundary data.
//!
//! The crate is `no_std` (alloc only); all IO, file formats, and the CLI
//! live in the companion `calderon-lab` crate.
//!
//! Design notes that matter for exactness:
//!
//! * All integrals are trapezoid sums on a uniform square-cell grid.
//! * Boundary fluxes are computed by ghost elimination of the 5-point
//!   stencil, closing the stencil with the prescribed Laplacian value on
//!   the boundary ring. With that convention, the discrete Green identity
//!   holds to linear-algebra precision, not just to truncation order, and
//!   every integration-by-parts identity used here becomes a
//!   machine-precision test.

#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod error;
pub mod field;
pub mod grid;
pub mod harmonic;
pub mod linalg;
pub mod linearization;
pub mod reconstruction;
pub mod semilinear;
pub mod verification;

pub use error::Error;
pub use field::Field;
pub use grid::{BoundaryFunction, Edge, Grid, GridFunction, Rect};
pub use harmonic::{linear_dn, solve_laplace_dirichlet, CalderonPair, ExtensionMode, LaplaceOperator};
pub use linearization::{
    mixed_fd_dn, mth_linearization_direct, suggest_eps, verify_vanishing_orders,
    LinearizationRequest,
};
pub use reconstruction::{
    recover_fourier_sample, reconstruct_potential, stability_probe, FourierSample, FreqLattice,
    ReconstructionResult, SampleMethod, StabilityRow,
};
pub use semilinear::{
    estimate_delta, nonlinear_dn, solve_semilinear, solve_semilinear_from, solve_semilinear_with,
    InitialGuess, SemilinearProblem, SolveReport,
};
pub use verification::{completeness_smin, gauge_check, ConformalFactor};

/// Crate-wide result type.
pub type Result<T> = core::result::Result<T, Error>;
