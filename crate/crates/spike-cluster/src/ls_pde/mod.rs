//! Direct grid realization of `S_ε`, the energy, the projected correction
//! problem and a full Newton solver on a square Dirichlet box in two dimensions.

mod ansatz;
mod grid;
mod ladder;
mod minres;
mod peaks;
mod problem;
mod solve;

pub use ansatz::{ansatz_derivative, assemble_ansatz, moment_check, weighted_norm, z_functions, MomentReport};
pub use grid::{Grid, GridField};
pub use ladder::{
    canonical_pair, cluster_run, expansion_row, problem_for, problem_on, separation_for_level, ClusterRun, ExpansionRow,
};
pub use peaks::{extract_peaks, Peak};
pub use problem::{energy, residual, LsParameters, PdeProblem};
pub use solve::{
    discrete_c1, expansion_formula, log_json_lines, newton_solve, projected_solve, reduced_energy_numeric,
    CorrectionResult, NewtonResult, SolverLogEntry, LINEAR_RTOL,
};

use thiserror::Error;

use crate::potential_model::PotentialError;

#[derive(Debug, Error)]
pub enum LsError {
    #[error("grid spacing {h} exceeds ε/8 (ε = {eps})")]
    UnderResolved { h: f64, eps: f64 },
    #[error("spike {index} is {clearance} from the boundary, need {required}")]
    SpikeNearBoundary { index: usize, clearance: f64, required: f64 },
    #[error("MINRES stalled after {iterations} iterations (relative residual {rel_residual:e})")]
    LinearSolveStagnation { iterations: usize, rel_residual: f64 },
    #[error("Newton iteration diverged after {iterations} steps (residual {residual:e})")]
    NewtonDiverged { iterations: usize, residual: f64 },
    #[error("Newton iteration collapsed to the trivial solution (max |v| = {max_norm:e})")]
    TrivialCollapse { max_norm: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
