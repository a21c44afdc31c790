use serde::{Deserialize, Serialize};

use super::{sphere_area, Interaction, Profile, ProfileError};
use crate::gauss;

/// Coefficients of the reduced energy; `c1_unit` is the energy of one spike.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedConstants {
    pub c1_unit: f64,
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl ReducedConstants {
    pub fn c1(&self, ell: usize) -> f64 {
        ell as f64 * self.c1_unit
    }
}

/// `|S^{N-1}| ∫_0^∞ g(r) r^{N-1} dr` over the profile range plus a margin.
pub(crate) fn radial_integral(pr: &Profile, g: impl Fn(f64) -> f64) -> f64 {
    let area = sphere_area(pr.dim);
    let nm1 = pr.dim as i32 - 1;
    gauss::composite(0.0, pr.r_star + 15.0, 0.25, 10)
        .iter()
        .map(|&(r, wt)| wt * g(r) * r.powi(nm1))
        .sum::<f64>()
        * area
}

pub fn compute_constants(pr: &Profile) -> Result<ReducedConstants, ProfileError> {
    if !(pr.nl.p > 2.0) {
        return Err(ProfileError::DivergentIntegral { p: pr.nl.p });
    }
    let nl = pr.nl;
    let grad2 = radial_integral(pr, |r| pr.eval_w_prime(r).powi(2));
    let mass = radial_integral(pr, |r| pr.eval_w(r).powi(2));
    let pot = radial_integral(pr, |r| nl.big_f(pr.eval_w(r)));
    let c1_unit = 0.5 * (grad2 + mass) - pot;
    let c2 = 0.5 * mass;
    let c3 = Interaction::new(pr).c3();
    Ok(ReducedConstants { c1_unit, c2, c3, c4: c2.min(c3) })
}

/// Relative defect of `∫|∇w|² + ∫w² = ∫f(w)w`.
pub fn pohozaev_defect(pr: &Profile) -> f64 {
    let lhs = radial_integral(pr, |r| pr.eval_w_prime(r).powi(2) + pr.eval_w(r).powi(2));
    let rhs = radial_integral(pr, |r| {
        let w = pr.eval_w(r);
        pr.nl.f(w) * w
    });
    (lhs - rhs).abs() / rhs
}
