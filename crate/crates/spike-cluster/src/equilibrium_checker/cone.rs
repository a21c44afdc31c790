use std::f64::consts::TAU;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{BalanceKernel, UnitConfig, KERNEL_RTOL};

/// Lawson–Hanson non-negative least squares: `min ‖Ax − b‖` over `x ≥ 0`.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let mut x = DVector::zeros(n);
    let mut passive = vec![false; n];
    let tol = 1e-12 * a.norm().max(1.0) * b.norm().max(1.0);
    for _outer in 0..3 * n + 3 {
        let w = a.transpose() * (b - a * &x);
        let pick = (0..n).filter(|&j| !passive[j]).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = pick else { break };
        if w[j] <= tol {
            break;
        }
        passive[j] = true;
        loop {
            let s = restricted_lstsq(a, b, &passive);
            let violating: Vec<usize> = (0..n).filter(|&i| passive[i] && s[i] <= 0.0).collect();
            if violating.is_empty() {
                x = s;
                break;
            }
            let alpha = violating.iter().map(|&i| x[i] / (x[i] - s[i])).fold(f64::INFINITY, f64::min);
            x += (&s - &x) * alpha;
            for i in 0..n {
                if passive[i] && x[i] <= 1e-15 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if !passive.iter().any(|&p| p) {
                break;
            }
        }
    }
    x
}

fn restricted_lstsq(a: &DMatrix<f64>, b: &DVector<f64>, passive: &[bool]) -> DVector<f64> {
    let cols: Vec<usize> = (0..a.ncols()).filter(|&j| passive[j]).collect();
    let mut out = DVector::zeros(a.ncols());
    if cols.is_empty() {
        return out;
    }
    let sub = a.select_columns(&cols);
    let sol = sub.svd(true, true).solve(b, 1e-13).expect("SVD with both factors");
    for (k, &j) in cols.iter().enumerate() {
        out[j] = sol[k];
    }
    out
}

/// Discretization of the unit circle of `(μ₁, μ₂) = (cos θ, sin θ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConeSweep {
    pub angles: usize,
}

impl Default for ConeSweep {
    fn default() -> Self {
        Self { angles: 360 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeWitness {
    pub theta: f64,
    pub mu: [f64; 2],
    /// Edge weights `a_ij = (μ₂ − μ₁τ_iτ_j) b_ij`.
    pub weights: Vec<f64>,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SignConstrainedKernel {
    pub feasible: bool,
    pub angles_tested: usize,
    pub feasible_angles: Vec<f64>,
    pub witness: Option<ConeWitness>,
    /// Span of all witnesses found over the sweep.
    pub kernel: BalanceKernel,
}

/// Searches the cone `a_ij = (μ₂ − μ₁τ_iτ_j) b_ij`, `b ≥ 0`, for a nonzero
/// balanced weight, one angle at a time.
pub fn sign_constrained_kernel(uc: &UnitConfig, tau: &[i8], sweep: ConeSweep) -> SignConstrainedKernel {
    assert_eq!(tau.len(), uc.len(), "one sign per point");
    let m = uc.balance_matrix();
    let ne = uc.edges.len();
    let rows = m.nrows();
    let mut feasible_angles = Vec::new();
    let mut witnesses: Vec<ConeWitness> = Vec::new();

    for k in 0..sweep.angles.max(1) {
        let theta = TAU * k as f64 / sweep.angles.max(1) as f64;
        let mu = [theta.cos(), theta.sin()];
        let s: Vec<f64> = uc
            .edges
            .iter()
            .map(|&(i, j)| mu[1] - mu[0] * f64::from(tau[i] * tau[j]))
            .collect();
        if ne == 0 || s.iter().all(|x| x.abs() < 1e-12) {
            continue;
        }
        // Balance rows plus the normalization Σ|s_e| b_e = 1.
        let mut a = DMatrix::zeros(rows + 1, ne);
        for e in 0..ne {
            for r in 0..rows {
                a[(r, e)] = m[(r, e)] * s[e];
            }
            a[(rows, e)] = s[e].abs();
        }
        let mut rhs = DVector::zeros(rows + 1);
        rhs[rows] = 1.0;
        let b = nnls(&a, &rhs);
        let weights: Vec<f64> = s.iter().zip(b.iter()).map(|(s, b)| s * b).collect();
        let norm = weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        let defect = uc.balance_defect(&weights);
        if norm > 1e-9 && defect <= KERNEL_RTOL * norm {
            feasible_angles.push(theta);
            witnesses.push(ConeWitness { theta, mu, weights, defect });
        }
    }

    let kernel = span(&witnesses, ne);
    SignConstrainedKernel {
        feasible: !witnesses.is_empty(),
        angles_tested: sweep.angles.max(1),
        feasible_angles,
        witness: witnesses.into_iter().next(),
        kernel,
    }
}

fn span(witnesses: &[ConeWitness], ne: usize) -> BalanceKernel {
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for w in witnesses {
        let mut v = w.weights.clone();
        for q in &basis {
            let c: f64 = v.iter().zip(q).map(|(a, b)| a * b).sum();
            v.iter_mut().zip(q).for_each(|(a, b)| *a -= c * b);
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let scale = w.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-6 * scale && basis.len() < ne {
            v.iter_mut().for_each(|x| *x /= n);
            basis.push(v);
        }
    }
    BalanceKernel { dim: basis.len(), basis, singular_values: Vec::new() }
}
