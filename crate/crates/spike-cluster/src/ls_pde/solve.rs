use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use super::ansatz::{assemble_ansatz, z_functions};
use super::grid::{dot, Grid, GridField};
use super::minres::minres;
use super::problem::PdeProblem;
use super::{LsError, LsParameters};
use crate::ground_profile::{Interaction, Profile, ReducedConstants};
use crate::potential_model::{QuadForm, SaddlePotential, SpikeConfig};

/// Relative residual demanded from every inner MINRES solve.
pub const LINEAR_RTOL: f64 = 1e-10;
const LINEAR_MAX_ITER: usize = 50_000;
const MAX_BACKTRACKS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolverLogEntry {
    pub iteration: usize,
    pub residual: f64,
    pub damping: f64,
    pub linear_iterations: usize,
}

/// JSON-lines rendering of a solver log.
pub fn log_json_lines(log: &[SolverLogEntry]) -> String {
    log.iter()
        .map(|e| serde_json::to_string(e).expect("log entries serialize") + "\n")
        .collect()
}

#[derive(Debug, Clone)]
pub struct CorrectionResult {
    pub ansatz: GridField,
    pub phi: GridField,
    /// `α_{in}`, one row per spike.
    pub alphas: Vec<[f64; 2]>,
    /// `‖S_ε[χw_P + φ] − Σ α Z‖∞`.
    pub residual: f64,
    /// `∫ φ Z_{P_i,n}`, ordered like the Z list.
    pub orthogonality: Vec<f64>,
    /// `|∫ φ Z| / (‖φ‖ ‖Z‖)`, worst over the Z list.
    pub orthogonality_rel: f64,
    pub log: Vec<SolverLogEntry>,
}

impl CorrectionResult {
    pub fn newton_steps(&self) -> usize {
        self.log.len().saturating_sub(1)
    }

    pub fn solution(&self) -> GridField {
        let values = self.ansatz.values.iter().zip(&self.phi.values).map(|(a, p)| a + p).collect();
        GridField { grid: self.ansatz.grid, values }
    }
}

struct Projector {
    z: Vec<Vec<f64>>,
    gram_inv: DMatrix<f64>,
}

impl Projector {
    fn new(z: Vec<Vec<f64>>) -> Result<Self, LsError> {
        let k = z.len();
        let gram = DMatrix::from_fn(k, k, |i, j| dot(&z[i], &z[j]));
        let gram_inv = gram
            .try_inverse()
            .ok_or_else(|| LsError::InvalidParameters("Z functions are linearly dependent".into()))?;
        Ok(Projector { z, gram_inv })
    }

    /// `G⁻¹ Zᵀ u`.
    fn coefficients(&self, u: &[f64]) -> DVector<f64> {
        let zt = DVector::from_iterator(self.z.len(), self.z.iter().map(|z| dot(z, u)));
        &self.gram_inv * zt
    }

    fn project(&self, u: &mut [f64]) {
        let c = self.coefficients(u);
        for (zk, ck) in self.z.iter().zip(c.iter()) {
            for (ui, zi) in u.iter_mut().zip(zk) {
                *ui -= ck * zi;
            }
        }
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Newton iteration for `S_ε[χw_P + φ] = Σ α_{in} Z_{P_i,n}`, `∫φ Z_{P_i,n} = 0`.
///
/// Each step solves `Π L Π δφ = −Π R` by MINRES (Π the orthogonal projector
/// onto span(Z)^⊥, L the linearization at `χw_P + φ`), then recovers
/// `δα = (ZᵀZ)⁻¹ Zᵀ(L δφ + R)`.
pub fn projected_solve(
    cfg: &SpikeConfig,
    pr: &Profile,
    problem: &PdeProblem,
    tol: f64,
    max_iter: usize,
) -> Result<CorrectionResult, LsError> {
    let ansatz = assemble_ansatz(cfg, pr, &problem.params, &problem.grid)?;
    let zf = z_functions(cfg, pr, problem)?;
    let proj = Projector::new(zf.iter().map(|z| z.values.clone()).collect())?;
    let m = problem.grid.len();
    let kz = zf.len();
    let mut phi = vec![0.0; m];
    let mut alpha = DVector::<f64>::zeros(kz);
    let mut log = Vec::new();
    let mut u = ansatz.values.clone();
    let mut lin_its = 0;
    let mut first = None;
    for iteration in 0.. {
        for (k, ui) in u.iter_mut().enumerate() {
            *ui = ansatz.values[k] + phi[k];
        }
        let mut r = problem.residual_values(&u);
        for (zk, ak) in proj.z.iter().zip(alpha.iter()) {
            for (ri, zi) in r.iter_mut().zip(zk) {
                *ri -= ak * zi;
            }
        }
        let rn = max_abs(&r);
        log.push(SolverLogEntry { iteration, residual: rn, damping: 1.0, linear_iterations: lin_its });
        let r0 = *first.get_or_insert(rn);
        if rn <= tol {
            break;
        }
        if iteration == max_iter || !rn.is_finite() || rn > 1e3 * r0.max(tol) {
            return Err(LsError::NewtonDiverged { iterations: iteration, residual: rn });
        }
        let d = problem.fprime(&u);
        let mut b: Vec<f64> = r.iter().map(|x| -x).collect();
        proj.project(&mut b);
        let op = |x: &[f64], out: &mut [f64]| {
            let mut px = x.to_vec();
            proj.project(&mut px);
            problem.apply_shifted(&px, Some(&d), out);
            proj.project(out);
        };
        let sol = minres(op, &b, LINEAR_RTOL, LINEAR_MAX_ITER);
        if !sol.converged {
            return Err(LsError::LinearSolveStagnation {
                iterations: sol.iterations,
                rel_residual: sol.rel_residual,
            });
        }
        lin_its = sol.iterations;
        let mut dphi = sol.x;
        proj.project(&mut dphi);
        let mut ld = vec![0.0; m];
        problem.apply_shifted(&dphi, Some(&d), &mut ld);
        for (l, ri) in ld.iter_mut().zip(&r) {
            *l += ri;
        }
        alpha += proj.coefficients(&ld);
        for (p, dp) in phi.iter_mut().zip(&dphi) {
            *p += dp;
        }
    }
    let grid = problem.grid;
    let phi = GridField { grid, values: phi };
    let orthogonality: Vec<f64> = zf.iter().map(|z| phi.dot(z)).collect();
    let pn = phi.l2_norm();
    let orthogonality_rel = orthogonality
        .iter()
        .zip(&zf)
        .map(|(o, z)| if pn == 0.0 { 0.0 } else { o.abs() / (pn * z.l2_norm()) })
        .fold(0.0, f64::max);
    let residual = log.last().map_or(0.0, |e| e.residual);
    Ok(CorrectionResult {
        ansatz,
        phi,
        alphas: alpha.as_slice().chunks(2).map(|c| [c[0], c[1]]).collect(),
        residual,
        orthogonality,
        orthogonality_rel,
        log,
    })
}

#[derive(Debug, Clone)]
pub struct NewtonResult {
    pub v: GridField,
    pub iterations: usize,
    pub residual: f64,
    pub log: Vec<SolverLogEntry>,
}

/// Damped Newton on `S_ε[v] = 0` (Dirichlet), backtracking on the residual max-norm.
pub fn newton_solve(
    v0: &GridField,
    problem: &PdeProblem,
    tol: f64,
    max_iter: usize,
) -> Result<NewtonResult, LsError> {
    let mut v = v0.values.clone();
    if v0.grid != problem.grid {
        return Err(LsError::InvalidParameters("seed lives on a different grid".into()));
    }
    let mut log = Vec::new();
    let mut s = problem.residual_values(&v);
    let mut rn = max_abs(&s);
    let mut lin_its = 0;
    let mut damping = 1.0;
    for iteration in 0.. {
        log.push(SolverLogEntry { iteration, residual: rn, damping, linear_iterations: lin_its });
        if rn <= tol {
            let vmax = max_abs(&v);
            if vmax < 1e-3 {
                return Err(LsError::TrivialCollapse { max_norm: vmax });
            }
            return Ok(NewtonResult {
                v: GridField { grid: problem.grid, values: v },
                iterations: iteration,
                residual: rn,
                log,
            });
        }
        if iteration == max_iter || !rn.is_finite() {
            return Err(LsError::NewtonDiverged { iterations: iteration, residual: rn });
        }
        let d = problem.fprime(&v);
        let b: Vec<f64> = s.iter().map(|x| -x).collect();
        let sol = minres(|x, out| problem.apply_shifted(x, Some(&d), out), &b, LINEAR_RTOL, LINEAR_MAX_ITER);
        if !sol.converged {
            return Err(LsError::LinearSolveStagnation {
                iterations: sol.iterations,
                rel_residual: sol.rel_residual,
            });
        }
        lin_its = sol.iterations;
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..=MAX_BACKTRACKS {
            let trial: Vec<f64> = v.iter().zip(&sol.x).map(|(a, b)| a + t * b).collect();
            let st = problem.residual_values(&trial);
            let rt = max_abs(&st);
            if rt < rn {
                v = trial;
                s = st;
                rn = rt;
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if !accepted {
            return Err(LsError::NewtonDiverged { iterations: iteration, residual: rn });
        }
        damping = t;
    }
    unreachable!()
}

/// `ε^{-2} I_h[v] − ℓ c1_ref`.
pub fn reduced_energy_numeric(
    v: &GridField,
    problem: &PdeProblem,
    ell: usize,
    c1_ref: f64,
) -> Result<f64, LsError> {
    let eps = problem.params.eps;
    Ok(super::energy(v, problem)? / (eps * eps) - ell as f64 * c1_ref)
}

/// `ε^{-2} I_h[w(·/ε)]` for a single spike at a node with `V ≡ 1` and `h = κε`.
/// It depends on κ only; subtracting it instead of `c1_unit` removes the
/// `O(κ²)` discretization offset of the self-energy.
pub fn discrete_c1(pr: &Profile, kappa: f64) -> Result<f64, LsError> {
    let half = (20.0 / kappa).ceil() as usize;
    let grid = Grid::new(half as f64 * kappa, 2 * half + 1)?;
    let sigma = pr.nl.sigma();
    let l = grid.half_width;
    let params = LsParameters::new(1.0, 0.5, sigma, 0.5 * sigma, 2.0 * l, 3.0 * l)?;
    let problem = PdeProblem::unit_potential(grid, params, pr.nl)?;
    let v = GridField::from_fn(grid, |x, y| pr.eval_w(x.hypot(y)));
    super::energy(&v, &problem)
}

/// `J` from the two-term expansion with the ξ kernel:
/// `½c2 Σ M[P_i]² − ½ Σ_{i≠j} τ_iτ_j ξ(|P_i − P_j|/ε)`.
pub fn expansion_formula(cfg: &SpikeConfig, pot: &SaddlePotential, rc: &ReducedConstants, inter: &Interaction) -> f64 {
    let mut j = 0.0;
    for i in 0..cfg.len() {
        j += 0.5 * rc.c2 * pot.quad(QuadForm::M, &cfg.points[i], None).unwrap_or(f64::NAN);
        for k in i + 1..cfg.len() {
            j -= f64::from(cfg.signs[i] * cfg.signs[k]) * inter.xi(cfg.distance(i, k) / cfg.eps);
        }
    }
    j
}
