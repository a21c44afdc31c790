use serde::Serialize;

use super::grid::{Grid, GridField};
use super::peaks::{extract_peaks, Peak};
use super::problem::{LsParameters, PdeProblem};
use super::solve::{expansion_formula, CorrectionResult, newton_solve, projected_solve, reduced_energy_numeric, SolverLogEntry};
use super::{assemble_ansatz, LsError};
use crate::ground_profile::{Interaction, Profile, ReducedConstants};
use crate::potential_model::{SaddlePotential, SpikeConfig};

/// `ρ` with `w(ρ) = level`, by bisection on the monotone profile.
pub fn separation_for_level(pr: &Profile, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 80.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if pr.eval_w(m) > level {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

/// Two spikes centred on the `e₁` axis, `|P₁ − P₂| = ερ` with
/// `w(ρ) = ½ε^{2β}`: the interaction sits at half the admissibility level.
pub fn canonical_pair(pr: &Profile, eps: f64, beta: f64, signs: [i8; 2]) -> SpikeConfig {
    let d = eps * separation_for_level(pr, 0.5 * eps.powf(2.0 * beta));
    SpikeConfig::new(eps, beta, vec![vec![-0.5 * d, 0.0], vec![0.5 * d, 0.0]], signs.to_vec())
}

/// Box sized for `cfg` at `h = κε` (see [`Grid::for_config`]) with the canonical cutoff radii.
pub fn problem_for(cfg: &SpikeConfig, pr: &Profile, pot: &SaddlePotential, kappa: f64) -> Result<PdeProblem, LsError> {
    problem_on(Grid::for_config(cfg, kappa)?, cfg, pr, pot)
}

pub fn problem_on(grid: Grid, cfg: &SpikeConfig, pr: &Profile, pot: &SaddlePotential) -> Result<PdeProblem, LsError> {
    let params = LsParameters::canonical(cfg, pr.nl.sigma(), &grid)?;
    PdeProblem::new(grid, params, pot, pr.nl)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpansionRow {
    pub eps: f64,
    pub n: usize,
    pub h: f64,
    /// `ε^{2β}`.
    pub level: f64,
    pub formula: f64,
    pub ansatz_energy: f64,
    pub corrected_energy: f64,
    /// `|J[ansatz] − J_formula| / ε^{2β}`.
    pub ansatz_defect: f64,
    /// `|J[ansatz + φ] − J_formula| / ε^{2β}`.
    pub corrected_defect: f64,
    pub phi_max: f64,
    pub eta: f64,
    /// `‖φ‖∞ / ε^η`.
    pub phi_scaled: f64,
    pub orthogonality_rel: f64,
    pub newton_steps: usize,
    pub alphas: Vec<[f64; 2]>,
}

/// Everything measured at one ladder point for a given configuration.
/// `c1_ref` is the self-energy subtracted per spike (see `discrete_c1`).
/// Also returns the correction itself.
#[allow(clippy::too_many_arguments)]
pub fn expansion_row(
    cfg: &SpikeConfig,
    problem: &PdeProblem,
    pr: &Profile,
    rc: &ReducedConstants,
    inter: &Interaction,
    pot: &SaddlePotential,
    c1_ref: f64,
    tol: f64,
) -> Result<(ExpansionRow, CorrectionResult), LsError> {
    let ansatz = assemble_ansatz(cfg, pr, &problem.params, &problem.grid)?;
    let formula = expansion_formula(cfg, pot, rc, inter);
    let ansatz_energy = reduced_energy_numeric(&ansatz, problem, cfg.len(), c1_ref)?;
    let corr = projected_solve(cfg, pr, problem, tol, 40)?;
    let corrected_energy = reduced_energy_numeric(&corr.solution(), problem, cfg.len(), c1_ref)?;
    let level = cfg.level();
    let phi_max = corr.phi.max_norm();
    let eta = problem.params.eta;
    let row = ExpansionRow {
        eps: cfg.eps,
        n: problem.grid.n,
        h: problem.grid.h(),
        level,
        formula,
        ansatz_energy,
        corrected_energy,
        ansatz_defect: (ansatz_energy - formula).abs() / level,
        corrected_defect: (corrected_energy - formula).abs() / level,
        phi_max,
        eta,
        phi_scaled: phi_max / cfg.eps.powf(eta),
        orthogonality_rel: corr.orthogonality_rel,
        newton_steps: corr.newton_steps(),
        alphas: corr.alphas.clone(),
    };
    Ok((row, corr))
}

#[derive(Debug, Clone)]
pub struct ClusterRun {
    pub solution: GridField,
    pub newton_iterations: usize,
    pub residual: f64,
    pub peaks: Vec<Peak>,
    /// Per spike: distance from the predicted point to the nearest peak of the same sign.
    pub offsets: Vec<f64>,
    pub correction_log: Vec<SolverLogEntry>,
    pub newton_log: Vec<SolverLogEntry>,
}

impl ClusterRun {
    pub fn signs_match(&self, cfg: &SpikeConfig) -> bool {
        let mut want: Vec<i8> = cfg.signs.clone();
        let mut got: Vec<i8> = self.peaks.iter().map(|p| p.sign).collect();
        want.sort_unstable();
        got.sort_unstable();
        want == got
    }
}

/// Projected correction at `cfg`, then full Newton from `ansatz + φ`, then peaks
/// above half the profile height.
pub fn cluster_run(
    cfg: &SpikeConfig,
    problem: &PdeProblem,
    pr: &Profile,
    tol: f64,
    max_iter: usize,
) -> Result<ClusterRun, LsError> {
    let corr = projected_solve(cfg, pr, problem, tol, max_iter)?;
    let nr = newton_solve(&corr.solution(), problem, tol, max_iter)?;
    let peaks = extract_peaks(&nr.v, 0.5 * pr.w0);
    let offsets = cfg
        .points
        .iter()
        .zip(&cfg.signs)
        .map(|(p, &s)| {
            peaks
                .iter()
                .filter(|pk| pk.sign == s)
                .map(|pk| (pk.position[0] - p[0]).hypot(pk.position[1] - p[1]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ClusterRun {
        solution: nr.v,
        newton_iterations: nr.iterations,
        residual: nr.residual,
        peaks,
        offsets,
        correction_log: corr.log,
        newton_log: nr.log,
    })
}
