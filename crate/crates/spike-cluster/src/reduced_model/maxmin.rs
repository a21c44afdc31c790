use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::energy::value_only;
use super::{generate, ConfigFamily, KernelMode, ReducedError, ReducedModel};
use crate::potential_model::{QuadForm, SpikeConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaxminOptions {
    pub mode: KernelMode,
    /// Number of rays from the centre.
    pub directions: usize,
    /// Interior samples per ray (K), excluding the boundary point (K₀).
    pub radial: usize,
    /// Seed for ray directions when the parameter space has dimension ≥ 3.
    pub seed: u64,
}

impl Default for MaxminOptions {
    fn default() -> Self {
        MaxminOptions { mode: KernelMode::XiExact, directions: 64, radial: 8, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxminSample {
    pub boundary: bool,
    pub a: Vec<f64>,
    pub r: Vec<f64>,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MaxminReport {
    pub eps: f64,
    pub beta: f64,
    pub mode: KernelMode,
    /// `c4 ε^{2β}/2`, the level defining the sampled domain.
    pub level: f64,
    /// `c4 ε^{2β}/4`, the asymptotic value of J on K₀.
    pub target: f64,
    /// Whether `(0, r_ε)` (or `a = 0` in the positive case) is in the domain.
    pub r_eps_inside: bool,
    /// Star centre of the sampled region.
    pub center: Vec<f64>,
    pub k_min: f64,
    pub k_max: f64,
    pub k0_min: f64,
    pub k0_max: f64,
    pub k0_mean: f64,
    /// `max |J/target − 1|` over K₀.
    pub k0_max_rel_dev: f64,
    pub k0_mean_rel_dev: f64,
    #[serde(skip)]
    pub samples: Vec<MaxminSample>,
}

impl MaxminReport {
    /// One row per sample: `set,a_1..,r_2..,J`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let (na, nr) = self
            .samples
            .first()
            .map_or((0, 0), |s| (s.a.len(), s.r.len()));
        out.push_str("set");
        for i in 0..na {
            out.push_str(&format!(",a{}", i + 1));
        }
        for i in 0..nr {
            out.push_str(&format!(",r{}", i + 2));
        }
        out.push_str(",J\n");
        for s in &self.samples {
            out.push_str(if s.boundary { "K0" } else { "K" });
            for x in s.a.iter().chain(&s.r) {
                out.push_str(&format!(",{x:e}"));
            }
            out.push_str(&format!(",{:e}\n", s.value));
        }
        out
    }
}

/// `c2 Σ M̄[P_i]² + c3 Σ_{i≠j} w(|P_i−P_j|/ε)` (mixed case) or
/// `c2 Σ M⁺[a_i]²` (positive case), on parameters; `+∞` outside `r > 0`.
fn phi(family: &ConfigFamily, model: &ReducedModel, x: &[f64], eps: f64) -> f64 {
    let (na, _) = family.param_lens();
    let (a, r) = x.split_at(na);
    let c2 = model.rc.c2;
    if family.is_positive_case() {
        let s = family.signature;
        return c2
            * a.chunks(s)
                .map(|ai| ai.iter().zip(&model.pot.lambdas).map(|(x, l)| l.max(0.0) * x * x).sum::<f64>())
                .sum::<f64>();
    }
    if r.iter().any(|&ri| !(ri > 0.0)) {
        return f64::INFINITY;
    }
    let cfg = match generate(family, a, r, eps) {
        Ok(c) => c,
        Err(_) => return f64::INFINITY,
    };
    phi_config(&cfg, model)
}

fn phi_config(cfg: &SpikeConfig, model: &ReducedModel) -> f64 {
    let mut pot_sum = 0.0;
    let mut inter = 0.0;
    for i in 0..cfg.len() {
        pot_sum += model.pot.quad(QuadForm::MBar, &cfg.points[i], None).unwrap_or(f64::INFINITY);
        for j in i + 1..cfg.len() {
            inter += 2.0 * model.profile.eval_w(cfg.distance(i, j) / cfg.eps);
        }
    }
    model.rc.c2 * pot_sum + model.rc.c3 * inter
}

/// Damped Newton with finite differences, in scaled coordinates.
fn minimize_phi(f: &dyn Fn(&[f64]) -> f64, x0: &[f64], scale: &[f64]) -> Vec<f64> {
    let m = x0.len();
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut lam = 1e-3;
    for _ in 0..200 {
        let hstep = 1e-4;
        let at = |x: &[f64], i: usize, t: f64| {
            let mut y = x.to_vec();
            y[i] += t * scale[i];
            y
        };
        let mut g = nalgebra::DVector::zeros(m);
        let mut h = nalgebra::DMatrix::zeros(m, m);
        for i in 0..m {
            let fp = f(&at(&x, i, hstep));
            let fm = f(&at(&x, i, -hstep));
            g[i] = (fp - fm) / (2.0 * hstep);
            h[(i, i)] = (fp - 2.0 * fx + fm) / (hstep * hstep);
            for j in 0..i {
                let mut y = at(&x, i, hstep);
                y[j] += hstep * scale[j];
                let fpp = f(&y);
                y[i] -= 2.0 * hstep * scale[i];
                let fmp = f(&y);
                y[j] -= 2.0 * hstep * scale[j];
                let fmm = f(&y);
                y[i] += 2.0 * hstep * scale[i];
                let fpm = f(&y);
                let v = (fpp - fmp - fpm + fmm) / (4.0 * hstep * hstep);
                h[(i, j)] = v;
                h[(j, i)] = v;
            }
        }
        if !g.iter().all(|v| v.is_finite()) || g.norm() < 1e-12 * fx.abs().max(1e-300) {
            break;
        }
        let mut improved = false;
        for _ in 0..40 {
            let hd = &h + nalgebra::DMatrix::identity(m, m) * (lam * h.diagonal().abs().max().max(1e-300));
            let step = match hd.lu().solve(&(-&g)) {
                Some(s) => s,
                None => {
                    lam *= 10.0;
                    continue;
                }
            };
            let xt: Vec<f64> = (0..m).map(|i| x[i] + step[i] * scale[i]).collect();
            let ft = f(&xt);
            if ft < fx {
                let rel = (fx - ft) / fx.abs().max(1e-300);
                x = xt;
                fx = ft;
                lam = (lam / 4.0).max(1e-9);
                improved = rel > 1e-14;
                break;
            }
            lam *= 4.0;
        }
        if !improved {
            break;
        }
    }
    x
}

fn directions(m: usize, count: usize, seed: u64) -> Vec<Vec<f64>> {
    match m {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count)
            .map(|k| {
                let th = 2.0 * std::f64::consts::PI * k as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut dirs: Vec<Vec<f64>> = Vec::with_capacity(count.max(2 * m));
            for i in 0..m {
                for s in [1.0, -1.0] {
                    let mut v = vec![0.0; m];
                    v[i] = s;
                    dirs.push(v);
                }
            }
            while dirs.len() < count.max(2 * m) {
                let v: Vec<f64> = (0..m)
                    .map(|_| {
                        // Box–Muller
                        let u1: f64 = 1.0 - rng.random::<f64>();
                        let u2: f64 = rng.random();
                        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
                    })
                    .collect();
                let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                if n > 1e-8 {
                    dirs.push(v.iter().map(|x| x / n).collect());
                }
            }
            dirs
        }
    }
}

fn sample(
    family: &ConfigFamily,
    model: &ReducedModel,
    x: &[f64],
    na: usize,
    eps: f64,
    mode: KernelMode,
    boundary: bool,
) -> Result<MaxminSample, ReducedError> {
    let cfg = generate(family, &x[..na], &x[na..], eps)?;
    Ok(MaxminSample {
        boundary,
        a: x[..na].to_vec(),
        r: x[na..].to_vec(),
        value: value_only(&cfg, model, mode),
    })
}

/// Samples K and K₀ for the family at this ε.
///
/// The domain `{Φ < c4ε^{2β}/2}` is sampled as a star around a centre: `(0, r_ε)`
/// when it lies in the domain, otherwise the minimizer of Φ reached from
/// `(0, r_ε)`. Each ray is followed to its first exit (bisected to full
/// precision) which gives a K₀ point; K points are equally spaced on the ray.
/// Connectivity of the sampled set to the centre holds by construction; other
/// components of the domain are not explored.
pub fn maxmin_report(
    family: &ConfigFamily,
    model: &ReducedModel,
    eps: f64,
    opts: &MaxminOptions,
) -> Result<MaxminReport, ReducedError> {
    let level = 0.5 * model.rc.c4 * eps.powf(2.0 * family.beta);
    let target = 0.5 * level;
    let (na, nr) = family.param_lens();
    let f = |x: &[f64]| phi(family, model, x, eps);
    let mut x0 = vec![0.0; na];
    x0.extend(family.r_eps(eps));
    let r_eps_inside = f(&x0) < level;
    let scale: Vec<f64> = (0..na + nr)
        .map(|i| if i < na { eps.powf(family.beta) } else { eps })
        .collect();
    let center = if r_eps_inside { x0 } else { minimize_phi(&f, &x0, &scale) };
    if !(f(&center) < level) {
        return Err(ReducedError::EmptyFamily { eps });
    }
    let m = na + nr;
    let mut samples = Vec::new();
    let point = |t: f64, d: &[f64]| -> Vec<f64> {
        (0..m).map(|i| center[i] + t * d[i] * scale[i]).collect()
    };
    for d in directions(m, opts.directions, opts.seed) {
        let dt = 0.01;
        let mut lo = 0.0;
        let mut hi = dt;
        let mut steps = 0usize;
        while f(&point(hi, &d)) < level {
            lo = hi;
            hi += dt;
            steps += 1;
            if steps > 10_000_000 {
                return Err(ReducedError::EmptyFamily { eps });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if f(&point(mid, &d)) < level {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let tb = lo;
        for j in 0..=opts.radial {
            let x = point(tb * j as f64 / opts.radial.max(1) as f64, &d);
            let boundary = j == opts.radial;
            if opts.radial == 0 {
                // boundary only
                let x = point(tb, &d);
                samples.push(sample(family, model, &x, na, eps, opts.mode, true)?);
                break;
            }
            samples.push(sample(family, model, &x, na, eps, opts.mode, boundary)?);
        }
    }
    let stat = |boundary: Option<bool>| {
        let v: Vec<f64> = samples
            .iter()
            .filter(|s| boundary.is_none_or(|b| s.boundary == b))
            .map(|s| s.value)
            .collect();
        v
    };
    let all = stat(None);
    let k0 = stat(Some(true));
    let min = |v: &[f64]| v.iter().copied().fold(f64::INFINITY, f64::min);
    let max = |v: &[f64]| v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let devs: Vec<f64> = k0.iter().map(|v| (v / target - 1.0).abs()).collect();
    Ok(MaxminReport {
        eps,
        beta: family.beta,
        mode: opts.mode,
        level,
        target,
        r_eps_inside,
        center,
        k_min: min(&all),
        k_max: max(&all),
        k0_min: min(&k0),
        k0_max: max(&k0),
        k0_mean: k0.iter().sum::<f64>() / k0.len() as f64,
        k0_max_rel_dev: max(&devs),
        k0_mean_rel_dev: devs.iter().sum::<f64>() / devs.len() as f64,
        samples,
    })
}
