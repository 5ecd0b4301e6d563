//! Numerical engine for the z-sliced Hamiltonian formalism of a free
//! scalar quantum field.
//!
//! The usual Hamiltonian formalism evolves states between constant-time
//! hyperplanes. Here the z coordinate plays that role instead: states live
//! on constant-z hyperplanes and evolve under a non-hermitian operator H'.
//! The crate provides
//!
//! - [`dispersion`]: the frequency omega and the z-direction wavenumber
//!   lambda, with the P1/P2 region split and the i-epsilon branch rule;
//! - [`mode_algebra`]: the modified ladder algebra (conjugation rules,
//!   commutators, H' coefficients) and finite matrix realizations;
//! - [`field_ops`]: grid and Fock realizations of phi, Pi, H and H' with
//!   canonical-commutator and evolution-commutator checks;
//! - [`zevolution`]: z-evolution under non-hermitian H', biorthogonal
//!   left/right state pairs, pseudo-hermiticity checks;
//! - [`propagator`]: the Feynman propagator computed three independent
//!   ways (z-ordered, t-ordered, 4D momentum integral);
//! - [`transfer_oracle`]: a discretized Gaussian path integral proving
//!   that t-sliced and z-sliced factorizations agree with direct
//!   whole-lattice evaluation.

pub mod cli;
pub mod dispersion;
pub mod field_ops;
pub mod linalg;
pub mod mode_algebra;
pub mod propagator;
pub mod rng;
pub mod transfer_oracle;
pub mod zevolution;

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("mode lies in the wrong region: {0}")]
    WrongRegion(String),
    #[error("degenerate mode (lambda = 0 on the P1/P2 boundary)")]
    DegenerateMode,
    #[error("pole on the integration contour: {0}")]
    Pole(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("eigenvector matrix too ill-conditioned (cond = {0:.3e})")]
    Conditioning(f64),
    #[error("interior matrix singular; regulator delta too small")]
    RegulatorTooSmall,
    #[error("lattice exceeds the desk-scale site cap: {0} sites")]
    LatticeTooLarge(usize),
    #[error("linear algebra backend error: {0}")]
    Backend(String),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Backend(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
