//! Numerical lab for the SYZ correspondence on projective toric manifolds:
//! invariant hermitian metric potentials on divisor line bundles, their
//! transform to Lagrangian sections of the mirror fibration, the asymptotic
//! growth conditions characterizing the image, and the slope / harmonic /
//! special-Lagrangian analysis on top.
//!
//! Layering: `toric` (integer lattice data) -> `kaehler` (potential and
//! Legendre duality) -> `field` (scalar fields with exact derivatives) ->
//! `metrics` / `syz` (the transform) -> `growth` (tail verification and
//! class inference) -> `analysis` (slopes, solvers, residuals).

pub mod analysis;
pub mod config;
pub mod error;
pub mod field;
pub mod growth;
pub mod kaehler;
pub mod linalg;
pub mod metrics;
pub mod report;
pub mod syz;
pub mod toric;

pub use error::{Error, Result};
