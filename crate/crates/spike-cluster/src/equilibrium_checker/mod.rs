//! Balance systems on unit-distance point configurations.
//!
//! For points `Q_1..Q_ℓ` with pairwise distances `≥ 1` and edge weights `a_ij`
//! supported on unit contacts, the balance system asks
//! `Σ_j a_ij (Q_i − Q_j)/|Q_i − Q_j| = 0` for every `i`. Everything here is an
//! absence-of-counterexample check, never a proof.

mod canonical;
mod cone;
mod search;

pub use canonical::{canonical_form, CanonicalGraph};
pub use cone::{nnls, sign_constrained_kernel, ConeSweep, ConeWitness, SignConstrainedKernel};
pub use search::{hexagon_with_center, search_equilibria, EquilibriumReport, GraphRecord, SearchEquilibriaOptions};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const DEFAULT_CONTACT_TOL: f64 = 1e-6;
/// Relative singular-value cutoff for the numerical kernel.
pub const KERNEL_RTOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EquilibriumError {
    #[error("points {i} and {j} are at distance {dist} < 1 − tol")]
    TooClose { i: usize, j: usize, dist: f64 },
    #[error("points must share one dimension in {{2, 3}}, got {0}")]
    BadDimension(usize),
    #[error("invalid search request: {0}")]
    InvalidRequest(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitConfig {
    pub dim: usize,
    pub points: Vec<Vec<f64>>,
    /// Unit contacts `(i, j)` with `i < j`, lexicographically sorted.
    pub edges: Vec<(usize, usize)>,
    pub tol: f64,
}

impl UnitConfig {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn distance(&self, i: usize, j: usize) -> f64 {
        dist(&self.points[i], &self.points[j])
    }

    /// The `(d·ℓ) × |E|` map `a ↦ (balance_1, …, balance_ℓ)`.
    pub fn balance_matrix(&self) -> DMatrix<f64> {
        let d = self.dim;
        let mut m = DMatrix::zeros(d * self.len(), self.edges.len());
        for (e, &(i, j)) in self.edges.iter().enumerate() {
            let r = self.distance(i, j);
            for k in 0..d {
                let u = (self.points[i][k] - self.points[j][k]) / r;
                m[(i * d + k, e)] += u;
                m[(j * d + k, e)] -= u;
            }
        }
        m
    }

    /// Per-point balance vectors for edge weights `a`.
    pub fn balance(&self, a: &[f64]) -> Vec<Vec<f64>> {
        assert_eq!(a.len(), self.edges.len(), "one weight per edge");
        let d = self.dim;
        let mut out = vec![vec![0.0; d]; self.len()];
        for (&(i, j), &w) in self.edges.iter().zip(a) {
            let r = self.distance(i, j);
            for k in 0..d {
                let u = w * (self.points[i][k] - self.points[j][k]) / r;
                out[i][k] += u;
                out[j][k] -= u;
            }
        }
        out
    }

    /// `max_i |balance_i|` for weights `a`.
    pub fn balance_defect(&self, a: &[f64]) -> f64 {
        self.balance(a)
            .iter()
            .map(|b| b.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut deg = vec![0; self.len()];
        for &(i, j) in &self.edges {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }
}

fn dist(p: &[f64], q: &[f64]) -> f64 {
    p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
}

pub fn contact_graph(points: &[Vec<f64>], tol: f64) -> Result<UnitConfig, EquilibriumError> {
    let dim = points.first().map_or(2, Vec::len);
    if !(2..=3).contains(&dim) || points.iter().any(|p| p.len() != dim) {
        return Err(EquilibriumError::BadDimension(dim));
    }
    let mut edges = Vec::new();
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let r = dist(&points[i], &points[j]);
            if r < 1.0 - tol {
                return Err(EquilibriumError::TooClose { i, j, dist: r });
            }
            if r <= 1.0 + tol {
                edges.push((i, j));
            }
        }
    }
    Ok(UnitConfig { dim, points: points.to_vec(), edges, tol })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceKernel {
    pub dim: usize,
    /// Orthonormal basis vectors over the edge list of the source config.
    pub basis: Vec<Vec<f64>>,
    pub singular_values: Vec<f64>,
}

impl BalanceKernel {
    pub fn is_trivial(&self) -> bool {
        self.dim == 0
    }
}

/// Numerical kernel of the balance map: right singular vectors whose singular
/// value is below `KERNEL_RTOL · σ_max`.
pub fn balance_kernel(uc: &UnitConfig) -> BalanceKernel {
    let n = uc.edges.len();
    if n == 0 {
        return BalanceKernel { dim: 0, basis: Vec::new(), singular_values: Vec::new() };
    }
    let m = uc.balance_matrix();
    // Pad with zero rows so the thin SVD always yields all n right vectors.
    let rows = m.nrows().max(n);
    let mut padded = DMatrix::zeros(rows, n);
    padded.view_mut((0, 0), (m.nrows(), n)).copy_from(&m);
    let svd = padded.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let sv: Vec<f64> = svd.singular_values.iter().copied().collect();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let mut basis = Vec::new();
    for (k, &s) in sv.iter().enumerate() {
        if s <= KERNEL_RTOL * smax || smax == 0.0 {
            let mut v: Vec<f64> = v_t.row(k).iter().copied().collect();
            // Fix the sign so that the largest-magnitude component is positive.
            let lead = v.iter().copied().fold(0.0_f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if lead < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            basis.push(v);
        }
    }
    let mut singular_values = sv;
    singular_values.sort_by(|a, b| b.total_cmp(a));
    BalanceKernel { dim: basis.len(), basis, singular_values }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DilationValue {
    /// `Σ_{i<j} a_ij |Q_i − Q_j|`.
    pub value: f64,
    /// `Σ_i balance_i · Q_i`.
    pub contraction: f64,
}

pub fn dilation_value(uc: &UnitConfig, a: &[f64]) -> DilationValue {
    let value = uc.edges.iter().zip(a).map(|(&(i, j), &w)| w * uc.distance(i, j)).sum();
    let contraction = uc
        .balance(a)
        .iter()
        .zip(&uc.points)
        .map(|(b, q)| b.iter().zip(q).map(|(x, y)| x * y).sum::<f64>())
        .sum();
    DilationValue { value, contraction }
}

/// Relative residual `‖M a‖ / (‖M‖·‖a‖)`, for definitional checks.
pub fn kernel_residual(uc: &UnitConfig, a: &[f64]) -> f64 {
    let m = uc.balance_matrix();
    let v = DVector::from_column_slice(a);
    let norm = m.norm() * v.norm();
    if norm == 0.0 {
        0.0
    } else {
        (&m * &v).norm() / norm
    }
}
