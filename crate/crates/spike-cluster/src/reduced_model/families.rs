use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::ReducedError;
use crate::potential_model::{SaddlePotential, SpikeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FamilyKind {
    LinearChain,
    PolygonStar,
    Cross,
}

/// A parameterized configuration shape `P(a, r)`.
///
/// `k = 0` is the all-positive cluster: the parameters are `(a_1, …, a_ℓ) ∈ A^ℓ`
/// and each point carries a fixed offset `b_i ∈ B`. Otherwise the parameters
/// are `a ∈ A` and `r = (r_2, …, r_ℓ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigFamily {
    pub kind: FamilyKind,
    pub h: usize,
    pub k: usize,
    pub beta: f64,
    pub dim: usize,
    /// dim A
    pub signature: usize,
    pub signs: Vec<i8>,
    /// Unit direction attached to `r_i`, `i = 2..ℓ` (empty for `k = 0`).
    pub directions: Vec<Vec<f64>>,
}

fn unit(dim: usize, axis: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[axis] = 1.0;
    v
}

impl ConfigFamily {
    pub fn new(
        kind: FamilyKind,
        h: usize,
        k: usize,
        beta: f64,
        pot: &SaddlePotential,
    ) -> Result<Self, ReducedError> {
        let ell = h + k;
        let dim = pot.dim();
        let r = pot.signature;
        let bad = |msg: String| Err(ReducedError::BadShape(msg));
        if h == 0 {
            return bad("need at least one positive peak".into());
        }
        if k > 0 && ell > 6 {
            return bad(format!("(h, k) = ({h}, {k}): ℓ = {ell} > 6"));
        }
        let (signs, directions): (Vec<i8>, Vec<Vec<f64>>) = match kind {
            FamilyKind::LinearChain => {
                if k == 0 {
                    (vec![1; ell], Vec::new())
                } else if k == h || k + 1 == h {
                    let signs = (0..ell).map(|i| if i % 2 == 0 { 1 } else { -1 }).collect();
                    (signs, vec![unit(dim, 0); ell - 1])
                } else {
                    return bad(format!("chain needs k ∈ {{h−1, h}}, got (h, k) = ({h}, {k})"));
                }
            }
            FamilyKind::PolygonStar => {
                if k != 1 || !(2..=5).contains(&h) {
                    return bad(format!("star needs k = 1, 2 ≤ h ≤ 5, got (h, k) = ({h}, {k})"));
                }
                if r < 2 {
                    return bad("star needs dim A ≥ 2".into());
                }
                let mut signs = vec![1; ell];
                signs[0] = -1;
                let dirs = (0..h)
                    .map(|j| {
                        let th = 2.0 * PI * j as f64 / h as f64;
                        let mut v = vec![0.0; dim];
                        v[0] = th.cos();
                        v[1] = th.sin();
                        v
                    })
                    .collect();
                (signs, dirs)
            }
            FamilyKind::Cross => {
                if (h, k) != (4, 2) {
                    return bad(format!("cross needs (h, k) = (4, 2), got ({h}, {k})"));
                }
                if r < 2 {
                    return bad("cross needs dim A ≥ 2".into());
                }
                let e1 = unit(dim, 0);
                let e2 = unit(dim, 1);
                let minus_e2: Vec<f64> = e2.iter().map(|x| -x).collect();
                (vec![-1, 1, -1, 1, 1, 1], vec![e1.clone(), e1.clone(), e1, e2, minus_e2])
            }
        };
        Ok(ConfigFamily { kind, h, k, beta, dim, signature: r, signs, directions })
    }

    pub fn ell(&self) -> usize {
        self.h + self.k
    }

    pub fn is_positive_case(&self) -> bool {
        self.k == 0
    }

    /// Lengths of the `a` and `r` parameter blocks.
    pub fn param_lens(&self) -> (usize, usize) {
        if self.is_positive_case() {
            (self.signature * self.ell(), 0)
        } else {
            (self.signature, self.ell() - 1)
        }
    }

    pub fn param_dim(&self) -> usize {
        let (na, nr) = self.param_lens();
        na + nr
    }

    /// B-offsets of the positive case: spaced `2ε log(1/ε)` along `e_{r+1}`, centred.
    pub fn b_offsets(&self, eps: f64) -> Vec<Vec<f64>> {
        let ell = self.ell();
        let step = 2.0 * eps * (1.0 / eps).ln();
        (0..ell)
            .map(|i| {
                let mut b = vec![0.0; self.dim];
                b[self.signature] = (i as f64 - (ell as f64 - 1.0) / 2.0) * step;
                b
            })
            .collect()
    }

    /// `r_ε = (2ε log(1/ε), …)`.
    pub fn r_eps(&self, eps: f64) -> Vec<f64> {
        vec![2.0 * eps * (1.0 / eps).ln(); self.param_lens().1]
    }
}

fn embed(a: &[f64], dim: usize) -> Vec<f64> {
    let mut p = vec![0.0; dim];
    p[..a.len()].copy_from_slice(a);
    p
}

fn axpy(p: &[f64], t: f64, v: &[f64]) -> Vec<f64> {
    p.iter().zip(v).map(|(x, y)| x + t * y).collect()
}

/// The configuration `P(a, r)` of the family.
pub fn generate(
    family: &ConfigFamily,
    a: &[f64],
    r: &[f64],
    eps: f64,
) -> Result<SpikeConfig, ReducedError> {
    let (na, nr) = family.param_lens();
    if a.len() != na || r.len() != nr {
        return Err(ReducedError::BadShape(format!(
            "expected |a| = {na}, |r| = {nr}, got {}, {}",
            a.len(),
            r.len()
        )));
    }
    let dim = family.dim;
    let ell = family.ell();
    let points: Vec<Vec<f64>> = if family.is_positive_case() {
        let s = family.signature;
        family
            .b_offsets(eps)
            .iter()
            .enumerate()
            .map(|(i, b)| axpy(&embed(&a[i * s..(i + 1) * s], dim), 1.0, b))
            .collect()
    } else {
        let base = embed(a, dim);
        let mut pts = vec![base.clone()];
        match family.kind {
            FamilyKind::LinearChain => {
                let mut s = 0.0;
                for (ri, v) in r.iter().zip(&family.directions) {
                    s += ri;
                    pts.push(axpy(&base, s, v));
                }
            }
            FamilyKind::PolygonStar => {
                for (ri, v) in r.iter().zip(&family.directions) {
                    pts.push(axpy(&base, *ri, v));
                }
            }
            FamilyKind::Cross => {
                let d = &family.directions;
                pts.push(axpy(&base, r[0], &d[0]));
                pts.push(axpy(&base, r[0] + r[1], &d[1]));
                pts.push(axpy(&base, r[0] + r[1] + r[2], &d[2]));
                pts.push(axpy(&base, r[3], &d[3]));
                pts.push(axpy(&base, r[4], &d[4]));
            }
        }
        pts
    };
    debug_assert_eq!(points.len(), ell);
    Ok(SpikeConfig::new(eps, family.beta, points, family.signs.clone()))
}

/// Inverse of [`generate`] on the family: `a = π_A(P_1)` and
/// `r_i = min_{j<i, τ_j = −τ_i} |P_i − P_j|`; for a single-sign pattern
/// `a = (π_A P_1, …, π_A P_ℓ)` and `r` is empty.
pub fn h_map(
    cfg: &SpikeConfig,
    pot: &SaddlePotential,
) -> Result<(Vec<f64>, Vec<f64>), ReducedError> {
    let single_sign = cfg.signs.iter().all(|&s| s == cfg.signs[0]);
    if single_sign {
        let a = cfg.points.iter().flat_map(|p| pot.project_a(p)).collect();
        return Ok((a, Vec::new()));
    }
    let a = pot.project_a(&cfg.points[0]);
    let mut r = Vec::with_capacity(cfg.len() - 1);
    for i in 1..cfg.len() {
        let mut best: Option<f64> = None;
        for j in 0..i {
            if cfg.signs[j] != -cfg.signs[i] {
                continue;
            }
            let d = cfg.distance(i, j);
            // ties within 1e-12 keep the smaller j
            if best.is_none_or(|b| d < b - 1e-12) {
                best = Some(d);
            }
        }
        r.push(best.ok_or(ReducedError::NoOppositePair(i + 1))?);
    }
    Ok((a, r))
}

/// Start points for critical-point searches: the family point at `(0, r_ε)`,
/// followed by the same signs on a centred straight chain along each
/// coordinate axis with spacing `2ε log(1/ε)`.
pub fn chain_seeds(family: &ConfigFamily, eps: f64) -> Result<Vec<SpikeConfig>, ReducedError> {
    let (na, _) = family.param_lens();
    let mut seeds = vec![generate(family, &vec![0.0; na], &family.r_eps(eps), eps)?];
    let ell = family.ell();
    let step = 2.0 * eps * (1.0 / eps).ln();
    for axis in 0..family.dim {
        let points = (0..ell)
            .map(|i| {
                let mut p = vec![0.0; family.dim];
                p[axis] = (i as f64 - (ell as f64 - 1.0) / 2.0) * step;
                p
            })
            .collect();
        seeds.push(SpikeConfig::new(eps, family.beta, points, family.signs.clone()));
    }
    Ok(seeds)
}
