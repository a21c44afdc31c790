use serde::{Deserialize, Serialize};

use super::ReducedError;
use crate::ground_profile::{Interaction, Profile, ReducedConstants};
use crate::potential_model::{in_gamma, QuadForm, SaddlePotential, SpikeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KernelMode {
    /// kernel(d) = c3 w(d)
    Asymptotic,
    /// kernel(d) = ξ(d)
    XiExact,
}

/// Profile, potential, constants and the ξ quadrature, bundled.
#[derive(Debug, Clone)]
pub struct ReducedModel {
    pub profile: Profile,
    pub pot: SaddlePotential,
    pub rc: ReducedConstants,
    inter: Interaction,
}

impl ReducedModel {
    pub fn new(profile: Profile, pot: SaddlePotential, rc: ReducedConstants) -> Self {
        let inter = Interaction::new(&profile);
        ReducedModel { profile, pot, rc, inter }
    }

    pub fn interaction(&self) -> &Interaction {
        &self.inter
    }

    /// `(kernel(ρ), kernel'(ρ))`.
    pub fn kernel(&self, rho: f64, mode: KernelMode) -> (f64, f64) {
        match mode {
            KernelMode::Asymptotic => (
                self.rc.c3 * self.profile.eval_w(rho),
                self.rc.c3 * self.profile.eval_w_prime(rho),
            ),
            KernelMode::XiExact => (self.inter.xi(rho), self.inter.xi_prime(rho)),
        }
    }

    pub fn kernel_value(&self, rho: f64, mode: KernelMode) -> f64 {
        match mode {
            KernelMode::Asymptotic => self.rc.c3 * self.profile.eval_w(rho),
            KernelMode::XiExact => self.inter.xi(rho),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReducedEval {
    pub value: f64,
    pub gradient: Vec<f64>,
    pub mode: KernelMode,
    /// ½ c2 Σ M[P_i]²
    pub potential_term: f64,
    /// −½ Σ_{i≠j} τ_i τ_j kernel(|P_i − P_j|/ε)
    pub interaction_term: f64,
    pub admissible: bool,
}

impl ReducedEval {
    pub fn grad_norm(&self) -> f64 {
        self.gradient.iter().map(|g| g * g).sum::<f64>().sqrt()
    }

    /// Err(NotAdmissible) when the configuration is outside Γ_ε.
    pub fn check_admissible(&self) -> Result<(), ReducedError> {
        if self.admissible {
            Ok(())
        } else {
            Err(ReducedError::NotAdmissible)
        }
    }
}

/// `J = ½c2 Σ M[P_i]² − ½ Σ_{i≠j} τ_iτ_j kernel(|P_i−P_j|/ε)` and its gradient.
pub fn reduced_energy(cfg: &SpikeConfig, model: &ReducedModel, mode: KernelMode) -> ReducedEval {
    let (value, gradient, potential_term, interaction_term) = value_and_gradient(cfg, model, mode, true);
    ReducedEval {
        value,
        gradient,
        mode,
        potential_term,
        interaction_term,
        admissible: in_gamma(cfg, &model.profile, &model.pot),
    }
}

pub(crate) fn value_only(cfg: &SpikeConfig, model: &ReducedModel, mode: KernelMode) -> f64 {
    value_and_gradient(cfg, model, mode, false).0
}

pub(crate) fn gradient_only(cfg: &SpikeConfig, model: &ReducedModel, mode: KernelMode) -> Vec<f64> {
    value_and_gradient(cfg, model, mode, true).1
}

fn value_and_gradient(
    cfg: &SpikeConfig,
    model: &ReducedModel,
    mode: KernelMode,
    with_gradient: bool,
) -> (f64, Vec<f64>, f64, f64) {
    let n = cfg.dim();
    let l = cfg.len();
    let c2 = model.rc.c2;
    let lam = &model.pot.lambdas;
    let mut grad = vec![0.0; n * l];
    let mut pot_term = 0.0;
    for (i, p) in cfg.points.iter().enumerate() {
        pot_term += 0.5 * c2 * model.pot.quad(QuadForm::M, p, None).unwrap_or(f64::NAN);
        for k in 0..n {
            grad[i * n + k] = c2 * lam[k] * p[k];
        }
    }
    let mut inter_term = 0.0;
    for i in 0..l {
        for j in i + 1..l {
            let d = cfg.distance(i, j);
            let tt = f64::from(cfg.signs[i] * cfg.signs[j]);
            if with_gradient {
                let (k, kp) = model.kernel(d / cfg.eps, mode);
                inter_term -= tt * k;
                if d > 0.0 {
                    for c in 0..n {
                        let u = (cfg.points[i][c] - cfg.points[j][c]) / d;
                        let g = tt * kp / cfg.eps * u;
                        grad[i * n + c] -= g;
                        grad[j * n + c] += g;
                    }
                }
            } else {
                inter_term -= tt * model.kernel_value(d / cfg.eps, mode);
            }
        }
    }
    (pot_term + inter_term, grad, pot_term, inter_term)
}
