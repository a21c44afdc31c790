use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rayon::prelude::*;
use serde::Serialize;

use super::energy::{gradient_only, value_only};
use super::{KernelMode, ReducedError, ReducedModel};
use crate::potential_model::{in_d, in_gamma, SpikeConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchOptions {
    pub gtol: f64,
    pub max_iter: usize,
    pub mode: KernelMode,
    /// Finite-difference step for the Hessian, in units of ε.
    pub fd_step: f64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions { gtol: 1e-9, max_iter: 200, mode: KernelMode::XiExact, fd_step: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HessianSignature {
    pub positive: usize,
    pub negative: usize,
    pub near_null: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CriticalDiagnostics {
    pub iterations: usize,
    pub value: f64,
    pub grad_norm: f64,
    pub hessian_eigenvalues: Vec<f64>,
    pub signature: HessianSignature,
    pub in_gamma: bool,
    pub in_d: bool,
}

/// Central-difference Hessian of `J` from the analytic gradient, symmetrized.
pub(crate) fn fd_hessian(cfg: &SpikeConfig, model: &ReducedModel, mode: KernelMode, step: f64) -> DMatrix<f64> {
    let x = cfg.flat();
    let m = x.len();
    let mut hess = DMatrix::zeros(m, m);
    let mut xp = x.clone();
    for c in 0..m {
        xp[c] = x[c] + step;
        let gp = gradient_only(&cfg.with_flat(&xp), model, mode);
        xp[c] = x[c] - step;
        let gm = gradient_only(&cfg.with_flat(&xp), model, mode);
        xp[c] = x[c];
        for r in 0..m {
            hess[(r, c)] = (gp[r] - gm[r]) / (2.0 * step);
        }
    }
    (&hess + hess.transpose()) * 0.5
}

/// Counts of eigenvalues above, below and within `10⁻³‖H‖` of zero.
pub(crate) fn classify(eig: &[f64]) -> HessianSignature {
    let scale = eig.iter().fold(0.0f64, |m, e| m.max(e.abs()));
    let thr = 1e-3 * scale;
    let mut s = HessianSignature { positive: 0, negative: 0, near_null: 0 };
    for &e in eig {
        if e.abs() < thr || scale == 0.0 {
            s.near_null += 1;
        } else if e > 0.0 {
            s.positive += 1;
        } else {
            s.negative += 1;
        }
    }
    s
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Levenberg–Marquardt on `∇J = 0` (i.e. minimization of `‖∇J‖²`), with the
/// Jacobian of `∇J` taken as a finite-difference Hessian. Trial steps that leave
/// Γ_ε are rejected; if the damping saturates while every step leaves Γ_ε the
/// search reports `LeftDomain`.
pub fn find_critical_point(
    seed: &SpikeConfig,
    model: &ReducedModel,
    opts: &SearchOptions,
) -> Result<(SpikeConfig, CriticalDiagnostics), ReducedError> {
    let mode = opts.mode;
    let step = opts.fd_step * seed.eps;
    let mut cfg = seed.clone();
    if !in_gamma(&cfg, &model.profile, &model.pot) {
        return Err(ReducedError::NotAdmissible);
    }
    let mut g = gradient_only(&cfg, model, mode);
    let mut gn = norm(&g);
    let mut mu: Option<f64> = None;
    let mut iterations = 0;
    while gn > opts.gtol {
        if iterations == opts.max_iter {
            return Err(ReducedError::NotConverged { iterations, grad_norm: gn });
        }
        iterations += 1;
        let h = fd_hessian(&cfg, model, mode, step);
        let m = h.nrows();
        let hth = h.transpose() * &h;
        let scale = hth.diagonal().max().max(f64::MIN_POSITIVE);
        let mut lam = mu.unwrap_or(1e-12 * scale);
        let rhs = -(h.transpose() * DVector::from_column_slice(&g));
        let x = cfg.flat();
        let mut left = false;
        loop {
            let a = &hth + DMatrix::identity(m, m) * lam;
            let s = a.cholesky().map(|c| c.solve(&rhs));
            if let Some(s) = s {
                let xt: Vec<f64> = x.iter().zip(s.iter()).map(|(xi, si)| xi + si).collect();
                let trial = cfg.with_flat(&xt);
                if in_gamma(&trial, &model.profile, &model.pot) {
                    let gt = gradient_only(&trial, model, mode);
                    let gtn = norm(&gt);
                    if gtn < gn {
                        cfg = trial;
                        g = gt;
                        gn = gtn;
                        mu = Some((lam / 10.0).max(1e-15 * scale));
                        break;
                    }
                    left = false;
                } else {
                    left = true;
                }
            }
            lam *= 8.0;
            if lam > 1e12 * scale {
                return Err(if left {
                    ReducedError::LeftDomain
                } else {
                    ReducedError::NotConverged { iterations, grad_norm: gn }
                });
            }
        }
    }
    let diag = diagnostics(&cfg, model, mode, step, iterations, gn);
    Ok((cfg, diag))
}

fn diagnostics(
    cfg: &SpikeConfig,
    model: &ReducedModel,
    mode: KernelMode,
    step: f64,
    iterations: usize,
    grad_norm: f64,
) -> CriticalDiagnostics {
    let h = fd_hessian(cfg, model, mode, step);
    let mut eig: Vec<f64> = SymmetricEigen::new(h).eigenvalues.iter().copied().collect();
    eig.sort_by(f64::total_cmp);
    CriticalDiagnostics {
        iterations,
        value: value_only(cfg, model, mode),
        grad_norm,
        signature: classify(&eig),
        hessian_eigenvalues: eig,
        in_gamma: in_gamma(cfg, &model.profile, &model.pot),
        in_d: in_d(cfg, &model.profile, &model.pot, &model.rc),
    }
}

/// Runs [`find_critical_point`] from every seed (in parallel) and returns the
/// converged results ordered by gradient norm; failed starts are returned
/// alongside their seed index.
pub fn multi_start(
    seeds: &[SpikeConfig],
    model: &ReducedModel,
    opts: &SearchOptions,
) -> (Vec<(SpikeConfig, CriticalDiagnostics)>, Vec<(usize, ReducedError)>) {
    let results: Vec<_> = seeds.par_iter().map(|s| find_critical_point(s, model, opts)).collect();
    let mut ok = Vec::new();
    let mut failed = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(x) => ok.push(x),
            Err(e) => failed.push((i, e)),
        }
    }
    ok.sort_by(|a, b| a.1.grad_norm.total_cmp(&b.1.grad_norm));
    (ok, failed)
}
