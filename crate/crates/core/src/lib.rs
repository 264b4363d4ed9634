//! Pairwise quantum and classical correlations of the anisotropic XY
//! spin-1/2 chain in a transverse field, in the thermodynamic limit.
//!
//! The pipeline is `correlators` (Brillouin-zone integrals and Toeplitz
//! determinants) -> `state` (two-site density matrix) -> `measures`
//! (mutual information, classical correlation, discord, concurrence, EoF).
//! `scan` sweeps parameter grids and locates the critical point from
//! lambda-derivatives; `ed` is an exact-diagonalization oracle for small
//! periodic rings.

pub mod cli;
pub mod correlators;
pub mod ed;
pub mod error;
pub mod linalg;
pub mod measures;
pub mod params;
pub mod quadrature;
pub mod scan;
pub mod state;

pub use correlators::{correlator_set, CorrelatorSet, GCache};
pub use error::{Error, Result};
pub use measures::{report, CorrelationReport, MeasurementAngles};
pub use params::{ModelParams, QuadratureConfig, Temperature};
pub use state::{build_state, TwoSiteState};
