use serde::Serialize;

use super::grid::{Grid, GridField};
use super::problem::{check_resolution, PdeProblem};
use super::{LsError, LsParameters};
use crate::ground_profile::Profile;
use crate::potential_model::{SaddlePotential, SpikeConfig};

pub(crate) fn check_config(cfg: &SpikeConfig, pr: &Profile, grid: &Grid) -> Result<(), LsError> {
    if pr.dim != 2 {
        return Err(LsError::DimensionMismatch { expected: 2, got: pr.dim });
    }
    if cfg.dim() != 2 {
        return Err(LsError::DimensionMismatch { expected: 2, got: cfg.dim() });
    }
    let required = 5.0 * cfg.eps * (1.0 / cfg.eps).ln();
    for (index, p) in cfg.points.iter().enumerate() {
        let clearance = grid.half_width - p.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if clearance < required * (1.0 - 1e-12) {
            return Err(LsError::SpikeNearBoundary { index, clearance, required });
        }
    }
    Ok(())
}

/// `χ(x) Σ τ_i w((x − P_i)/ε)`.
pub fn assemble_ansatz(
    cfg: &SpikeConfig,
    pr: &Profile,
    params: &LsParameters,
    grid: &Grid,
) -> Result<GridField, LsError> {
    check_config(cfg, pr, grid)?;
    let eps = cfg.eps;
    Ok(GridField::from_fn(*grid, |x, y| {
        let chi = params.chi(x.hypot(y)).0;
        if chi == 0.0 {
            return 0.0;
        }
        let s: f64 = cfg
            .points
            .iter()
            .zip(&cfg.signs)
            .map(|(p, &t)| f64::from(t) * pr.eval_w((x - p[0]).hypot(y - p[1]) / eps))
            .sum();
        chi * s
    }))
}

/// Analytic `∂(χ w_{P_i})/∂x_n` sampled on the grid.
pub fn ansatz_derivative(
    cfg: &SpikeConfig,
    pr: &Profile,
    params: &LsParameters,
    grid: &Grid,
    i: usize,
    axis: usize,
) -> GridField {
    let eps = cfg.eps;
    let p = &cfg.points[i];
    GridField::from_fn(*grid, |x, y| {
        let r = x.hypot(y);
        let (chi, dchi) = params.chi(r);
        let (dx, dy) = (x - p[0], y - p[1]);
        let rho = dx.hypot(dy);
        let w = pr.eval_w(rho / eps);
        let xn = if axis == 0 { x } else { y };
        let dn = if axis == 0 { dx } else { dy };
        let chi_part = if r > 0.0 { dchi * xn / r * w } else { 0.0 };
        let w_part = if rho > 0.0 { chi * pr.eval_w_prime(rho / eps) * dn / (eps * rho) } else { 0.0 };
        chi_part + w_part
    })
}

/// `Z_{P_i,n} = (V − ε²Δ_h) ∂(χ w_{P_i})/∂x_n`, ordered `(i, n)` with `n` fastest.
pub fn z_functions(
    cfg: &SpikeConfig,
    pr: &Profile,
    problem: &PdeProblem,
) -> Result<Vec<GridField>, LsError> {
    check_config(cfg, pr, &problem.grid)?;
    let mut out = Vec::with_capacity(2 * cfg.len());
    for i in 0..cfg.len() {
        for axis in 0..2 {
            let d = ansatz_derivative(cfg, pr, &problem.params, &problem.grid, i, axis);
            out.push(GridField { grid: problem.grid, values: problem.apply_v_minus_lap(&d.values) });
        }
    }
    Ok(out)
}

/// `ln w(r)`, continued by the tail asymptotics where `w` underflows.
fn ln_w(pr: &Profile, r: f64) -> f64 {
    let w = pr.eval_w(r);
    if w > 1e-280 {
        w.ln()
    } else {
        pr.tail_amplitude.ln() - 0.5 * (pr.dim as f64 - 1.0) * r.ln() - r
    }
}

/// `sup_x (Σ_i w_{P_i}(x))^{−μ} |v(x)|`.
pub fn weighted_norm(v: &GridField, cfg: &SpikeConfig, pr: &Profile, mu: f64) -> f64 {
    let g = v.grid;
    let mut best = 0.0f64;
    for iy in 0..g.n {
        let y = g.coord(iy);
        for ix in 0..g.n {
            let a = v.at(ix, iy).abs();
            if a == 0.0 {
                continue;
            }
            let x = g.coord(ix);
            let logs: Vec<f64> = cfg
                .points
                .iter()
                .map(|p| ln_w(pr, (x - p[0]).hypot(y - p[1]) / cfg.eps))
                .collect();
            let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let lse = m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
            best = best.max((a.ln() - mu * lse).exp());
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MomentReport {
    pub index: usize,
    /// `∫ V χ² w_{P_i} ∇w_{P_i}` on the grid.
    pub integral: Vec<f64>,
    /// `−ε^N c2 M P_i`.
    pub predicted: Vec<f64>,
    /// `|integral − predicted| / ε^{N+β}`.
    pub normalized_deviation: f64,
}

/// Grid value of `∫ V χ² w_{P_i} ∇w_{P_i}` against `−(ε^N/2) M P_i ∫w²`.
pub fn moment_check(
    cfg: &SpikeConfig,
    pr: &Profile,
    pot: &SaddlePotential,
    c2: f64,
    params: &LsParameters,
    grid: &Grid,
    index: usize,
) -> Result<MomentReport, LsError> {
    check_resolution(grid, cfg.eps)?;
    check_config(cfg, pr, grid)?;
    if index >= cfg.len() {
        return Err(LsError::InvalidParameters(format!("spike index {index} out of range")));
    }
    let eps = cfg.eps;
    let p = &cfg.points[index];
    let mut integral = vec![0.0; 2];
    let n = grid.n;
    for iy in 1..n - 1 {
        let y = grid.coord(iy);
        let mut row = [0.0; 2];
        for ix in 1..n - 1 {
            let x = grid.coord(ix);
            let chi = params.chi(x.hypot(y)).0;
            let (dx, dy) = (x - p[0], y - p[1]);
            let rho = dx.hypot(dy);
            if rho == 0.0 || chi == 0.0 {
                continue;
            }
            let c = pot.value(&[x, y]) * chi * chi * pr.eval_w(rho / eps) * pr.eval_w_prime(rho / eps)
                / (eps * rho);
            row[0] += c * dx;
            row[1] += c * dy;
        }
        integral[0] += row[0];
        integral[1] += row[1];
    }
    integral.iter_mut().for_each(|v| *v *= grid.cell());
    let en = eps * eps;
    let predicted: Vec<f64> = (0..2).map(|k| -en * c2 * pot.lambdas[k] * p[k]).collect();
    let dev = integral
        .iter()
        .zip(&predicted)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(MomentReport {
        index,
        integral,
        predicted,
        normalized_deviation: dev / eps.powf(2.0 + cfg.beta),
    })
}
