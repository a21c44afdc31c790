// ξ(ρ) = ∫ f(w(|x|)) w(|x + ρe₁|) dx in cylindrical coordinates (s, t) with
// s = x₁ and t = |x'|; the weights G absorb f(w), |S^{N−2}| t^{N−2} and the rule.

use super::Profile;
use crate::gauss;

#[derive(Debug, Clone)]
pub struct Interaction {
    s: Vec<f64>,
    t2: Vec<f64>,
    g: Vec<f64>,
    profile: Profile,
}

const PANEL: f64 = 2.0;
const ORDER: usize = 10;

impl Interaction {
    pub fn new(pr: &Profile) -> Self {
        Self::with_resolution(pr, PANEL, ORDER)
    }

    pub fn with_resolution(pr: &Profile, panel: f64, order: usize) -> Self {
        let nl = pr.nl;
        // truncation radius: f(w(r)) e^r bounds the integrand of both c3 and
        // ξ(ρ)/w(ρ), since w(|x+ρe₁|)/w(ρ) ≲ e^{|x|}
        let bound = |r: f64| nl.f(pr.eval_w(r)) * r.exp() * r.max(1.0).powi(pr.dim as i32 - 1);
        let mut rc = 5.0;
        while bound(rc) > 1e-14 && rc < 400.0 {
            rc += 0.5;
        }
        let (mut s, mut t2, mut g) = (Vec::new(), Vec::new(), Vec::new());
        let sn = gauss::composite(-rc, rc, panel, order);
        if pr.dim == 1 {
            for &(si, wi) in &sn {
                s.push(si);
                t2.push(0.0);
                g.push(wi * nl.f(pr.eval_w(si.abs())));
            }
        } else {
            let tn = gauss::composite(0.0, rc, panel, order);
            let meas = match pr.dim {
                2 => 2.0,
                _ => 2.0 * std::f64::consts::PI,
            };
            for &(si, wi) in &sn {
                for &(ti, wj) in &tn {
                    let r = (si * si + ti * ti).sqrt();
                    if r > rc + panel {
                        continue;
                    }
                    let val = nl.f(pr.eval_w(r));
                    if val == 0.0 {
                        continue;
                    }
                    s.push(si);
                    t2.push(ti * ti);
                    g.push(wi * wj * meas * ti.powi(pr.dim as i32 - 2) * val);
                }
            }
        }
        Interaction { s, t2, g, profile: pr.clone() }
    }

    pub fn nodes(&self) -> usize {
        self.g.len()
    }

    pub fn profile(&self) -> &Profile {
        &self.profile
    }

    /// `c3 = ∫ f(w) e^{x₁}`, evaluated with the even part `cosh(x₁)`.
    pub fn c3(&self) -> f64 {
        self.s.iter().zip(&self.g).map(|(s, g)| g * s.cosh()).sum()
    }

    pub fn xi(&self, rho: f64) -> f64 {
        let pr = &self.profile;
        let mut acc = 0.0;
        for i in 0..self.g.len() {
            let a = self.s[i] + rho;
            acc += self.g[i] * pr.eval_w((a * a + self.t2[i]).sqrt());
        }
        acc
    }

    /// `ξ'(ρ) = ∫ f(w) w'(|x+ρe₁|) (x₁+ρ)/|x+ρe₁| dx`.
    pub fn xi_prime(&self, rho: f64) -> f64 {
        let pr = &self.profile;
        let mut acc = 0.0;
        for i in 0..self.g.len() {
            let a = self.s[i] + rho;
            let d = (a * a + self.t2[i]).sqrt();
            if d > 0.0 {
                acc += self.g[i] * pr.eval_w_prime(d) * a / d;
            }
        }
        acc
    }
}

/// Second route to `c3`: the limit of ξ(ρ)/w(ρ), Aitken-accelerated.
pub fn c3_by_extrapolation(inter: &Interaction) -> f64 {
    let pr = inter.profile();
    let q: Vec<f64> = [12.0, 14.0, 16.0].iter().map(|&r| inter.xi(r) / pr.eval_w(r)).collect();
    let d1 = q[1] - q[0];
    let d2 = q[2] - q[1];
    let den = d2 - d1;
    if den != 0.0 && (d2 / d1).abs() < 0.9 {
        q[2] - d2 * d2 / den
    } else {
        q[2]
    }
}
