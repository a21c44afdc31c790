//! Saddle potential `V = 1 + ½Σλ_n x_n² (+ c Σ x_n³)`, its diagonal forms and the
//! admissible configuration sets Γ_ε and D_ε.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ground_profile::{Profile, ReducedConstants};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PotentialError {
    #[error("not a nondegenerate saddle: {0}")]
    NotASaddle(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("V is not positive on the box of half-width {half_width} (min {min_v})")]
    NotPositiveOnBox { half_width: f64, min_v: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddlePotential {
    pub lambdas: Vec<f64>,
    /// Number of positive eigenvalues (the dimension of A).
    pub signature: usize,
    /// Coefficient of the optional cubic term `c Σ x_n³`.
    pub cubic: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadForm {
    /// `diag(λ)`
    M,
    /// positive part
    MPlus,
    /// `|negative part|`
    MMinus,
    /// `diag(|λ|)`
    MBar,
}

pub fn make_saddle(lambdas: &[f64]) -> Result<SaddlePotential, PotentialError> {
    if lambdas.iter().any(|&l| l == 0.0 || !l.is_finite()) {
        return Err(PotentialError::NotASaddle("zero or non-finite eigenvalue".into()));
    }
    let r = lambdas.iter().take_while(|&&l| l > 0.0).count();
    if r == 0 || r == lambdas.len() {
        return Err(PotentialError::NotASaddle("all eigenvalues share a sign".into()));
    }
    if lambdas[r..].iter().any(|&l| l > 0.0) {
        return Err(PotentialError::NotASaddle("positive eigenvalues must come first".into()));
    }
    Ok(SaddlePotential { lambdas: lambdas.to_vec(), signature: r, cubic: 0.0 })
}

impl SaddlePotential {
    pub fn with_cubic(mut self, c: f64) -> Self {
        self.cubic = c;
        self
    }

    pub fn dim(&self) -> usize {
        self.lambdas.len()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        1.0 + x
            .iter()
            .zip(&self.lambdas)
            .map(|(&xi, &l)| 0.5 * l * xi * xi + self.cubic * xi * xi * xi)
            .sum::<f64>()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.lambdas).map(|(&xi, &l)| l * xi + 3.0 * self.cubic * xi * xi).collect()
    }

    /// Diagonal of D²V (the Hessian is diagonal).
    pub fn hessian_diag(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.lambdas).map(|(&xi, &l)| l + 6.0 * self.cubic * xi).collect()
    }

    fn coeff(&self, form: QuadForm, l: f64) -> f64 {
        match form {
            QuadForm::M => l,
            QuadForm::MPlus => l.max(0.0),
            QuadForm::MMinus => (-l).max(0.0),
            QuadForm::MBar => l.abs(),
        }
    }

    /// `form[P]²`, or `form[P, Q]` when `q` is given.
    pub fn quad(&self, form: QuadForm, p: &[f64], q: Option<&[f64]>) -> Result<f64, PotentialError> {
        let n = self.dim();
        for v in std::iter::once(p).chain(q) {
            if v.len() != n {
                return Err(PotentialError::DimensionMismatch { expected: n, got: v.len() });
            }
        }
        let q = q.unwrap_or(p);
        Ok((0..n).map(|i| self.coeff(form, self.lambdas[i]) * p[i] * q[i]).sum())
    }

    /// Minimum of V over `[-l, l]^N` (the potential is separable).
    pub fn min_on_box(&self, l: f64) -> f64 {
        let mut total = 1.0;
        for &lam in &self.lambdas {
            let g = |x: f64| 0.5 * lam * x * x + self.cubic * x * x * x;
            let mut m = g(-l).min(g(l)).min(0.0);
            if self.cubic != 0.0 {
                let xc = -lam / (3.0 * self.cubic);
                if xc.abs() <= l {
                    m = m.min(g(xc));
                }
            }
            total += m;
        }
        total
    }

    pub fn check_box(&self, l: f64) -> Result<(), PotentialError> {
        let min_v = self.min_on_box(l);
        if min_v > 0.0 {
            Ok(())
        } else {
            Err(PotentialError::NotPositiveOnBox { half_width: l, min_v })
        }
    }

    /// Orthogonal projection onto A = span(e_1..e_r).
    pub fn project_a(&self, x: &[f64]) -> Vec<f64> {
        x[..self.signature].to_vec()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpikeConfig {
    pub eps: f64,
    pub beta: f64,
    pub points: Vec<Vec<f64>>,
    pub signs: Vec<i8>,
}

impl SpikeConfig {
    pub fn new(eps: f64, beta: f64, points: Vec<Vec<f64>>, signs: Vec<i8>) -> Self {
        SpikeConfig { eps, beta, points, signs }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.points.first().map_or(0, Vec::len)
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(&self.points[i], &self.points[j])
    }

    /// Flattened coordinates `(P_1, …, P_ℓ)`.
    pub fn flat(&self) -> Vec<f64> {
        self.points.iter().flatten().copied().collect()
    }

    pub fn with_flat(&self, x: &[f64]) -> SpikeConfig {
        let n = self.dim();
        let points = x.chunks(n).map(<[f64]>::to_vec).collect();
        SpikeConfig { points, ..self.clone() }
    }

    /// The threshold `ε^{2β}` used by both admissible sets.
    pub fn level(&self) -> f64 {
        self.eps.powf(2.0 * self.beta)
    }
}

pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Γ_ε: `M̄[P_i]² < ε^{2β}` and `w(|P_i − P_j|/ε) < ε^{2β}`.
pub fn in_gamma(cfg: &SpikeConfig, pr: &Profile, pot: &SaddlePotential) -> bool {
    let level = cfg.level();
    let l = cfg.len();
    for i in 0..l {
        match pot.quad(QuadForm::MBar, &cfg.points[i], None) {
            Ok(v) if v < level => {}
            _ => return false,
        }
        for j in i + 1..l {
            if !(pr.eval_w(cfg.distance(i, j) / cfg.eps) < level) {
                return false;
            }
        }
    }
    true
}

/// D_ε: `c2 Σ M̄[P_i]² + c3 Σ_{i≠j} w(|P_i − P_j|/ε) < c4 ε^{2β}`.
pub fn in_d(cfg: &SpikeConfig, pr: &Profile, pot: &SaddlePotential, rc: &ReducedConstants) -> bool {
    d_functional(cfg, pr, pot, rc).is_some_and(|v| v < rc.c4 * cfg.level())
}

/// Left-hand side of the D_ε inequality (None on dimension mismatch).
pub fn d_functional(
    cfg: &SpikeConfig,
    pr: &Profile,
    pot: &SaddlePotential,
    rc: &ReducedConstants,
) -> Option<f64> {
    let l = cfg.len();
    let mut pot_sum = 0.0;
    let mut inter = 0.0;
    for i in 0..l {
        pot_sum += pot.quad(QuadForm::MBar, &cfg.points[i], None).ok()?;
        for j in i + 1..l {
            inter += 2.0 * pr.eval_w(cfg.distance(i, j) / cfg.eps);
        }
    }
    Some(rc.c2 * pot_sum + rc.c3 * inter)
}
