//! Reduced energy `J_ε` on spike configurations, the configuration families,
//! critical-point search and max-min sampling.

mod energy;
mod families;
mod maxmin;
mod search;

pub use energy::{reduced_energy, KernelMode, ReducedEval, ReducedModel};
pub use families::{chain_seeds, generate, h_map, ConfigFamily, FamilyKind};
pub use maxmin::{maxmin_report, MaxminOptions, MaxminReport, MaxminSample};
pub use search::{find_critical_point, multi_start, CriticalDiagnostics, HessianSignature, SearchOptions};

use thiserror::Error;

use crate::potential_model::PotentialError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReducedError {
    #[error("configuration is outside Γ_ε")]
    NotAdmissible,
    #[error("unsupported family shape: {0}")]
    BadShape(String),
    #[error("no earlier opposite-sign point for index {0}")]
    NoOppositePair(usize),
    #[error("critical-point search did not converge after {iterations} iterations (|grad J| = {grad_norm:e})")]
    NotConverged { iterations: usize, grad_norm: f64 },
    #[error("search iterates left Γ_ε")]
    LeftDomain,
    #[error("family domain is empty at ε = {eps}")]
    EmptyFamily { eps: f64 },
    #[error(transparent)]
    Potential(#[from] PotentialError),
}
