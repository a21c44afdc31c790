use rayon::prelude::*;

use super::grid::{Grid, GridField};
use super::LsError;
use crate::ground_profile::Nonlinearity;
use crate::potential_model::{SaddlePotential, SpikeConfig};

/// `ε, β`, `η = β²(1+σ)`, the weight exponent `μ ∈ (0, σ)` and the χ radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsParameters {
    pub eps: f64,
    pub beta: f64,
    pub eta: f64,
    pub mu: f64,
    pub r0: f64,
    pub r1: f64,
}

impl LsParameters {
    pub fn new(eps: f64, beta: f64, sigma: f64, mu: f64, r0: f64, r1: f64) -> Result<Self, LsError> {
        if !(eps > 0.0) || !(beta > 0.0 && beta < 1.0) {
            return Err(LsError::InvalidParameters(format!("ε = {eps}, β = {beta}")));
        }
        if !(mu > 0.0 && mu < sigma) {
            return Err(LsError::InvalidParameters(format!("μ = {mu} not in (0, {sigma})")));
        }
        if !(r0 > 0.0 && r0 < r1) {
            return Err(LsError::InvalidParameters(format!("cutoff radii ({r0}, {r1})")));
        }
        Ok(LsParameters { eps, beta, eta: beta * beta * (1.0 + sigma), mu, r0, r1 })
    }

    /// χ ≡ 1 up to `3ε log(1/ε)` beyond the outermost spike and vanishes at the
    /// inscribed circle of the box; `μ = σ/2`.
    pub fn canonical(cfg: &SpikeConfig, sigma: f64, grid: &Grid) -> Result<Self, LsError> {
        let eps = cfg.eps;
        let reach = cfg
            .points
            .iter()
            .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
            .fold(0.0, f64::max);
        let r0 = reach + 3.0 * eps * (1.0 / eps).ln();
        Self::new(eps, cfg.beta, sigma, 0.5 * sigma, r0, grid.half_width)
    }

    /// `C²` radial cutoff: quintic smoothstep from 1 at `r0` to 0 at `r1`.
    pub fn chi(&self, r: f64) -> (f64, f64) {
        if r <= self.r0 {
            return (1.0, 0.0);
        }
        if r >= self.r1 {
            return (0.0, 0.0);
        }
        let w = self.r1 - self.r0;
        let t = (r - self.r0) / w;
        let s = t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
        let ds = 30.0 * t * t * (1.0 - t) * (1.0 - t) / w;
        (1.0 - s, -ds)
    }
}

/// Grid, potential samples and nonlinearity for `S_ε[v] = ε²Δv − Vv + f(v)`.
#[derive(Debug, Clone)]
pub struct PdeProblem {
    pub grid: Grid,
    pub params: LsParameters,
    pub nl: Nonlinearity,
    pub potential: Vec<f64>,
}

impl PdeProblem {
    pub fn new(
        grid: Grid,
        params: LsParameters,
        pot: &SaddlePotential,
        nl: Nonlinearity,
    ) -> Result<Self, LsError> {
        if pot.dim() != 2 {
            return Err(LsError::DimensionMismatch { expected: 2, got: pot.dim() });
        }
        check_resolution(&grid, params.eps)?;
        pot.check_box(grid.half_width)?;
        let potential = GridField::from_fn(grid, |x, y| pot.value(&[x, y])).values;
        Ok(PdeProblem { grid, params, nl, potential })
    }

    /// `V ≡ 1`, the limiting problem.
    pub fn unit_potential(grid: Grid, params: LsParameters, nl: Nonlinearity) -> Result<Self, LsError> {
        check_resolution(&grid, params.eps)?;
        Ok(PdeProblem { grid, params, nl, potential: vec![1.0; grid.len()] })
    }

    fn check_field(&self, v: &GridField) -> Result<(), LsError> {
        if v.grid != self.grid {
            return Err(LsError::InvalidParameters("field lives on a different grid".into()));
        }
        Ok(())
    }

    /// `out = ε²Δ_h u + (d − V) u` on interior nodes, 0 on the boundary.
    pub(crate) fn apply_shifted(&self, u: &[f64], d: Option<&[f64]>, out: &mut [f64]) {
        let n = self.grid.n;
        let c = self.params.eps * self.params.eps / self.grid.cell();
        out.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            if iy == 0 || iy == n - 1 {
                row.fill(0.0);
                return;
            }
            row[0] = 0.0;
            row[n - 1] = 0.0;
            for ix in 1..n - 1 {
                let k = iy * n + ix;
                let lap = u[k - 1] + u[k + 1] + u[k - n] + u[k + n] - 4.0 * u[k];
                let diag = d.map_or(0.0, |d| d[k]) - self.potential[k];
                row[ix] = c * lap + diag * u[k];
            }
        });
    }

    /// `(V − ε²Δ_h) u`.
    pub(crate) fn apply_v_minus_lap(&self, u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; u.len()];
        self.apply_shifted(u, None, &mut out);
        out.iter_mut().for_each(|x| *x = -*x);
        out
    }

    /// `f'(u)` at every node.
    pub(crate) fn fprime(&self, u: &[f64]) -> Vec<f64> {
        u.par_iter().map(|&x| self.nl.f_prime(x)).collect()
    }

    /// The linearized operator `L_u = ε²Δ_h − V + f'(u)` applied to `w`.
    pub fn linearized(&self, u: &GridField, w: &GridField) -> Result<GridField, LsError> {
        self.check_field(u)?;
        self.check_field(w)?;
        let d = self.fprime(&u.values);
        let mut out = vec![0.0; w.values.len()];
        self.apply_shifted(&w.values, Some(&d), &mut out);
        Ok(GridField { grid: self.grid, values: out })
    }

    pub(crate) fn residual_values(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        self.apply_shifted(v, None, &mut out);
        let n = self.grid.n;
        out.par_chunks_mut(n).enumerate().for_each(|(iy, row)| {
            if iy == 0 || iy == n - 1 {
                return;
            }
            for ix in 1..n - 1 {
                row[ix] += self.nl.f(v[iy * n + ix]);
            }
        });
        out
    }

    pub(crate) fn energy_values(&self, v: &[f64]) -> f64 {
        let n = self.grid.n;
        let e2 = self.params.eps * self.params.eps;
        // interior-node sums and all edges (boundary values are zero)
        let rows: Vec<f64> = (0..n)
            .into_par_iter()
            .map(|iy| {
                let mut s = 0.0;
                for ix in 0..n {
                    let k = iy * n + ix;
                    if ix + 1 < n {
                        let d = v[k + 1] - v[k];
                        s += 0.5 * e2 * d * d / self.grid.cell();
                    }
                    if iy + 1 < n {
                        let d = v[k + n] - v[k];
                        s += 0.5 * e2 * d * d / self.grid.cell();
                    }
                    if !self.grid.is_boundary(ix, iy) {
                        s += 0.5 * self.potential[k] * v[k] * v[k] - self.nl.big_f(v[k]);
                    }
                }
                s
            })
            .collect();
        self.grid.cell() * rows.iter().sum::<f64>()
    }
}

pub(crate) fn check_resolution(grid: &Grid, eps: f64) -> Result<(), LsError> {
    let h = grid.h();
    if h > eps / 8.0 * (1.0 + 1e-12) {
        return Err(LsError::UnderResolved { h, eps });
    }
    Ok(())
}

/// `S_ε[v]` on interior nodes (5-point Laplacian), 0 on the boundary.
pub fn residual(v: &GridField, problem: &PdeProblem) -> Result<GridField, LsError> {
    problem.check_field(v)?;
    Ok(GridField { grid: problem.grid, values: problem.residual_values(&v.values) })
}

/// `I_ε[v] = ½∫(ε²|∇v|² + Vv²) − ∫F(v)`, with the gradient term summed over
/// grid edges. Its exact nodal gradient is `−h² S_ε[v]`.
pub fn energy(v: &GridField, problem: &PdeProblem) -> Result<f64, LsError> {
    problem.check_field(v)?;
    Ok(problem.energy_values(&v.values))
}
