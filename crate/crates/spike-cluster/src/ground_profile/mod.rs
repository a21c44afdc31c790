//! Radial ground state, reduction constants and the interaction kernel ξ.

mod cache;
mod constants;
mod interaction;
mod nondegeneracy;
mod nonlinearity;
mod profile;
mod tail;

pub use cache::{cache_file_name, read_profile, write_profile, CACHE_VERSION};
pub use constants::{compute_constants, pohozaev_defect, ReducedConstants};
pub use interaction::{c3_by_extrapolation, Interaction};
pub use nondegeneracy::{verify_nondegeneracy, ModeReport, NondegeneracyReport};
pub use nonlinearity::Nonlinearity;
pub use profile::{ode_residual, solve_profile, solve_profile_with_step, Profile, R_STAR_LEVEL};

pub(crate) use profile::sphere_area;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ProfileError {
    #[error("invalid profile input: {0}")]
    InvalidInput(String),
    #[error("no ground state: shooting bracket not found for w(0) in (0, 1e3)")]
    NoGroundState,
    #[error("ODE residual {achieved:e} did not reach tolerance {tol:e}")]
    ToleranceNotReached { achieved: f64, tol: f64 },
    #[error("tail amplitude has no plateau (flatness {flatness:e})")]
    NoPlateau { flatness: f64 },
    #[error("c3 integrand not integrable for p = {p} <= 2")]
    DivergentIntegral { p: f64 },
    #[error("nondegeneracy check failed: {0}")]
    NondegeneracyFailed(String),
    #[error("profile cache: {0}")]
    Cache(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
