use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{balance_kernel, canonical_form, CanonicalGraph, contact_graph, EquilibriumError, DEFAULT_CONTACT_TOL};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchEquilibriaOptions {
    pub ell: usize,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    /// Also evaluate the hexagon-with-center configuration when `ℓ = 7, d = 2`.
    pub known_seeds: bool,
}

impl SearchEquilibriaOptions {
    pub fn new(ell: usize, dim: usize, trials: usize, seed: u64) -> Self {
        Self { ell, dim, trials, seed, tol: DEFAULT_CONTACT_TOL, known_seeds: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphRecord {
    pub graph_id: String,
    pub degrees: Vec<usize>,
    /// Where the representative came from: `trial <k>` or a named seed.
    pub source: String,
    pub hits: usize,
    pub points: Vec<Vec<f64>>,
    pub edges: Vec<(usize, usize)>,
    pub kernel_dim: usize,
    pub kernel_basis: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub ell: usize,
    pub dim: usize,
    pub trials: usize,
    pub seed: u64,
    pub tol: f64,
    pub seeded: Vec<String>,
    /// Trials whose polished configuration violated `|Q_i − Q_j| ≥ 1 − tol`
    /// or had no contact at all.
    pub discarded_trials: usize,
    pub graphs: Vec<GraphRecord>,
    pub nontrivial: Vec<String>,
    pub verdict: String,
}

impl EquilibriumReport {
    pub fn found_nontrivial(&self) -> bool {
        !self.nontrivial.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Unit hexagon around a center point; 12 unit contacts.
pub fn hexagon_with_center() -> Vec<Vec<f64>> {
    let mut pts = vec![vec![0.0, 0.0]];
    for k in 0..6 {
        let t = std::f64::consts::PI / 3.0 * k as f64;
        pts.push(vec![t.cos(), t.sin()]);
    }
    pts
}

struct Hit {
    order: (usize, usize),
    source: String,
    points: Vec<Vec<f64>>,
    edges: Vec<(usize, usize)>,
    kernel_dim: usize,
    kernel_basis: Vec<Vec<f64>>,
    degrees: Vec<usize>,
    bits: u64,
}

/// Random multi-start: sticky-contact relaxation, exact unit-contact polish,
/// then the balance kernel of every distinct contact graph.
pub fn search_equilibria(opts: &SearchEquilibriaOptions) -> Result<EquilibriumReport, EquilibriumError> {
    if !(2..=7).contains(&opts.ell) {
        return Err(EquilibriumError::InvalidRequest(format!("ell = {} outside 2..=7", opts.ell)));
    }
    if !(2..=3).contains(&opts.dim) {
        return Err(EquilibriumError::BadDimension(opts.dim));
    }

    let mut seeded = Vec::new();
    let mut hits: Vec<Option<Hit>> = Vec::new();
    if opts.known_seeds && opts.ell == 7 && opts.dim == 2 {
        seeded.push("hexagon+center".to_string());
        hits.push(analyse(hexagon_with_center(), opts.tol, (0, 0), "hexagon+center".into()));
    }
    let random: Vec<Option<Hit>> = (0..opts.trials)
        .into_par_iter()
        .map(|trial| {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            rng.set_stream(trial as u64);
            let pts = relax(random_points(&mut rng, opts.ell, opts.dim));
            polish(pts, opts.tol).and_then(|p| analyse(p, opts.tol, (1, trial), format!("trial {trial}")))
        })
        .collect();
    hits.extend(random);

    let discarded = hits.iter().skip(seeded.len()).filter(|h| h.is_none()).count();
    let mut merged: BTreeMap<String, (Hit, usize)> = BTreeMap::new();
    for hit in hits.into_iter().flatten() {
        let id = CanonicalGraph {
            vertices: opts.ell,
            degrees: hit.degrees.clone(),
            bits: hit.bits,
        }
        .id();
        match merged.get_mut(&id) {
            None => {
                merged.insert(id, (hit, 1));
            }
            Some((best, count)) => {
                *count += 1;
                // Keep the largest kernel; ties go to the earliest source.
                if (hit.kernel_dim, std::cmp::Reverse(hit.order)) > (best.kernel_dim, std::cmp::Reverse(best.order)) {
                    *best = hit;
                }
            }
        }
    }

    let graphs: Vec<GraphRecord> = merged
        .into_iter()
        .map(|(graph_id, (h, count))| GraphRecord {
            graph_id,
            degrees: h.degrees,
            source: h.source,
            hits: count,
            points: h.points,
            edges: h.edges,
            kernel_dim: h.kernel_dim,
            kernel_basis: h.kernel_basis,
        })
        .collect();
    let nontrivial: Vec<String> = graphs.iter().filter(|g| g.kernel_dim > 0).map(|g| g.graph_id.clone()).collect();
    let verdict = if nontrivial.is_empty() {
        format!(
            "no nontrivial kernel found over {} distinct contact graphs from {} trials (absence of counterexample, not a proof)",
            graphs.len(),
            opts.trials
        )
    } else {
        let sources: Vec<&str> = graphs.iter().filter(|g| g.kernel_dim > 0).map(|g| g.source.as_str()).collect();
        format!("nontrivial kernel found ({})", sources.join(", "))
    };
    Ok(EquilibriumReport {
        ell: opts.ell,
        dim: opts.dim,
        trials: opts.trials,
        seed: opts.seed,
        tol: opts.tol,
        seeded,
        discarded_trials: discarded,
        graphs,
        nontrivial,
        verdict,
    })
}

fn analyse(points: Vec<Vec<f64>>, tol: f64, order: (usize, usize), source: String) -> Option<Hit> {
    let uc = contact_graph(&points, tol).ok()?;
    if uc.edges.is_empty() {
        return None;
    }
    let canon = canonical_form(uc.len(), &uc.edges);
    let k = balance_kernel(&uc);
    Some(Hit {
        order,
        source,
        degrees: canon.degrees,
        bits: canon.bits,
        kernel_dim: k.dim,
        kernel_basis: k.basis,
        edges: uc.edges,
        points,
    })
}

fn random_points(rng: &mut ChaCha8Rng, ell: usize, dim: usize) -> Vec<Vec<f64>> {
    let side = 1.5 * (ell as f64).powf(1.0 / dim as f64);
    (0..ell).map(|_| (0..dim).map(|_| rng.random_range(0.0..side)).collect()).collect()
}

const STIFF: f64 = 100.0;
const REACH: f64 = 1.6;
const PULL: f64 = 0.02;

/// Pair potential: stiff repulsion below 1, a smooth well of depth 1 and
/// reach `REACH` above it. Returns `(φ, φ')`.
fn pair(r: f64) -> (f64, f64) {
    if r < 1.0 {
        (STIFF * (r - 1.0).powi(2) - 1.0, 2.0 * STIFF * (r - 1.0))
    } else if r < REACH {
        let s = (r - 1.0) / (REACH - 1.0);
        let q = 1.0 - s * s;
        (-q * q, 4.0 * q * s / (REACH - 1.0))
    } else {
        (0.0, 0.0)
    }
}

fn energy_grad(x: &[f64], ell: usize, dim: usize, grad: &mut [f64]) -> f64 {
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut c = vec![0.0; dim];
    for i in 0..ell {
        for k in 0..dim {
            c[k] += x[i * dim + k] / ell as f64;
        }
    }
    let mut e = 0.0;
    for i in 0..ell {
        for k in 0..dim {
            let d = x[i * dim + k] - c[k];
            e += PULL * d * d;
            grad[i * dim + k] += 2.0 * PULL * d;
        }
        for j in i + 1..ell {
            let r = (0..dim).map(|k| (x[i * dim + k] - x[j * dim + k]).powi(2)).sum::<f64>().sqrt();
            let (p, dp) = pair(r);
            e += p;
            if r > 0.0 {
                for k in 0..dim {
                    let u = dp * (x[i * dim + k] - x[j * dim + k]) / r;
                    grad[i * dim + k] += u;
                    grad[j * dim + k] -= u;
                }
            }
        }
    }
    e
}

/// Gradient descent with backtracking on the sticky-contact energy.
fn relax(points: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let ell = points.len();
    let dim = points[0].len();
    let mut x: Vec<f64> = points.concat();
    let mut g = vec![0.0; x.len()];
    let mut trial_g = vec![0.0; x.len()];
    let mut e = energy_grad(&x, ell, dim, &mut g);
    let mut step = 0.05;
    for _ in 0..2000 {
        let gn2: f64 = g.iter().map(|v| v * v).sum();
        if gn2 < 1e-20 {
            break;
        }
        let mut accepted = false;
        for _ in 0..30 {
            let trial: Vec<f64> = x.iter().zip(&g).map(|(a, b)| a - step * b).collect();
            let et = energy_grad(&trial, ell, dim, &mut trial_g);
            if et <= e - 1e-4 * step * gn2 {
                x = trial;
                e = et;
                std::mem::swap(&mut g, &mut trial_g);
                step *= 1.5;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    x.chunks(dim).map(<[f64]>::to_vec).collect()
}

/// Gauss–Newton on `|Q_i − Q_j| = 1` for near-contacts; drops the worst
/// candidate when the contact set is inconsistent.
fn polish(points: Vec<Vec<f64>>, tol: f64) -> Option<Vec<Vec<f64>>> {
    let ell = points.len();
    let dim = points[0].len();
    let dist = |x: &[f64], i: usize, j: usize| (0..dim).map(|k| (x[i * dim + k] - x[j * dim + k]).powi(2)).sum::<f64>().sqrt();
    let x0: Vec<f64> = points.concat();
    let mut cand: Vec<(usize, usize)> = Vec::new();
    for i in 0..ell {
        for j in i + 1..ell {
            if dist(&x0, i, j) < 1.05 {
                cand.push((i, j));
            }
        }
    }
    while !cand.is_empty() {
        let mut x = x0.clone();
        let mut ok = false;
        for _ in 0..60 {
            let f: Vec<f64> = cand.iter().map(|&(i, j)| dist(&x, i, j) - 1.0).collect();
            if f.iter().all(|v| v.abs() < 1e-13) {
                ok = true;
                break;
            }
            let mut jac = DMatrix::zeros(cand.len(), x.len());
            for (row, &(i, j)) in cand.iter().enumerate() {
                let r = dist(&x, i, j);
                for k in 0..dim {
                    let u = (x[i * dim + k] - x[j * dim + k]) / r;
                    jac[(row, i * dim + k)] = u;
                    jac[(row, j * dim + k)] = -u;
                }
            }
            let Ok(step) = jac.svd(true, true).solve(&DVector::from_vec(f), 1e-10) else {
                break;
            };
            x.iter_mut().zip(step.iter()).for_each(|(a, s)| *a -= s);
        }
        if ok {
            let clear = (0..ell).all(|i| (i + 1..ell).all(|j| dist(&x, i, j) >= 1.0 - tol));
            return clear.then(|| x.chunks(dim).map(<[f64]>::to_vec).collect());
        }
        let worst = (0..cand.len())
            .max_by(|&a, &b| {
                let da = (dist(&x0, cand[a].0, cand[a].1) - 1.0).abs();
                let db = (dist(&x0, cand[b].0, cand[b].1) - 1.0).abs();
                da.total_cmp(&db)
            })
            .expect("nonempty");
        cand.remove(worst);
    }
    None
}
