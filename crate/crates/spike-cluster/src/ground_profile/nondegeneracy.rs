// Radial linearization Δ − 1 + f'(w) on angular modes m = 0, 1, discretized by
// cell-centered finite volumes (symmetric after mass scaling). Eigenvalues are
// those of −L, Richardson-extrapolated from spacings h and h/2.

use serde::Serialize;

use super::{Profile, ProfileError};

#[derive(Debug, Clone, Serialize)]
pub struct ModeReport {
    pub mode: u32,
    /// Eigenvalue of −L closest to zero (extrapolated).
    pub nearest_zero: f64,
    /// The three smallest eigenvalues at the finer spacing.
    pub lowest: Vec<f64>,
    /// Overlap of the nearest-zero eigenfunction with w' (mode 1 only).
    pub overlap_with_wprime: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NondegeneracyReport {
    pub modes: Vec<ModeReport>,
    pub kernel_threshold: f64,
}

pub const KERNEL_THRESHOLD: f64 = 1e-4;

struct Tridiag {
    d: Vec<f64>,
    e: Vec<f64>, // e[i] couples i and i+1
    rad: Vec<f64>,
    mass: Vec<f64>,
}

fn assemble(pr: &Profile, mode: u32, hf: f64) -> Tridiag {
    let n = pr.dim as i32;
    let big_r = pr.r_star;
    let cells = (big_r / hf).round() as usize;
    let kang = (mode as f64) * (mode as f64 + n as f64 - 2.0);
    let face = |i: usize| ((i as f64) * hf).powi(n - 1); // face i sits at r = i·hf
    let mut d = vec![0.0; cells];
    let mut e = vec![0.0; cells - 1];
    let mut rad = vec![0.0; cells];
    let mut mass = vec![0.0; cells];
    for i in 0..cells {
        let r = (i as f64 + 0.5) * hf;
        let b = r.powi(n - 1);
        rad[i] = r;
        mass[i] = b;
        let c = kang / (r * r) + 1.0 - pr.nl.f_prime(pr.eval_w(r));
        let right = if i + 1 == cells { 2.0 * face(cells) } else { face(i + 1) };
        let a = (face(i) + right) / (hf * hf) + c * b;
        d[i] = a / b;
        if i + 1 < cells {
            let off = -face(i + 1) / (hf * hf);
            e[i] = off / (b * ((i as f64 + 1.5) * hf).powi(n - 1)).sqrt();
        }
    }
    Tridiag { d, e, rad, mass }
}

impl Tridiag {
    /// Number of eigenvalues below x (Sturm count via LDLᵀ pivots).
    fn count_below(&self, x: f64) -> usize {
        let mut q = self.d[0] - x;
        let mut cnt = usize::from(q < 0.0);
        for i in 1..self.d.len() {
            let q_prev = if q == 0.0 { 1e-300 } else { q };
            q = self.d[i] - x - self.e[i - 1] * self.e[i - 1] / q_prev;
            if q < 0.0 {
                cnt += 1;
            }
        }
        cnt
    }

    /// k-th smallest eigenvalue (0-based) by bisection.
    fn eigenvalue(&self, k: usize) -> f64 {
        let bound = self
            .d
            .iter()
            .enumerate()
            .map(|(i, &di)| {
                let l = if i > 0 { self.e[i - 1].abs() } else { 0.0 };
                let r = if i < self.e.len() { self.e[i].abs() } else { 0.0 };
                di.abs() + l + r
            })
            .fold(0.0, f64::max);
        let (mut lo, mut hi) = (-bound, bound);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.count_below(mid) > k {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Eigenvector of the symmetrized matrix by inverse iteration.
    fn eigenvector(&self, mu: f64) -> Vec<f64> {
        let n = self.d.len();
        let shift = mu + 1e-10 * (1.0 + mu.abs());
        let mut y = vec![1.0; n];
        for _ in 0..4 {
            // Thomas solve of (T − shift) x = y
            let mut c = vec![0.0; n];
            let mut z = vec![0.0; n];
            let mut den = self.d[0] - shift;
            c[0] = if n > 1 { self.e[0] / den } else { 0.0 };
            z[0] = y[0] / den;
            for i in 1..n {
                den = self.d[i] - shift - self.e[i - 1] * c[i - 1];
                if i + 1 < n {
                    c[i] = self.e[i] / den;
                }
                z[i] = (y[i] - self.e[i - 1] * z[i - 1]) / den;
            }
            for i in (0..n - 1).rev() {
                z[i] -= c[i] * z[i + 1];
            }
            let norm = z.iter().map(|v| v * v).sum::<f64>().sqrt();
            y = z.into_iter().map(|v| v / norm).collect();
        }
        y
    }
}

fn nearest_zero_index(t: &Tridiag) -> (usize, f64) {
    let below = t.count_below(0.0);
    let mut best = (below, t.eigenvalue(below));
    if below > 0 {
        let lam = t.eigenvalue(below - 1);
        if lam.abs() < best.1.abs() {
            best = (below - 1, lam);
        }
    }
    best
}

fn mode_report(pr: &Profile, mode: u32) -> ModeReport {
    let hc = 0.02;
    let coarse = assemble(pr, mode, hc);
    let fine = assemble(pr, mode, hc / 2.0);
    let (k, mu_f) = nearest_zero_index(&fine);
    let mu_c = coarse.eigenvalue(k);
    let nearest_zero = (4.0 * mu_f - mu_c) / 3.0;
    let lowest = (0..3).map(|i| fine.eigenvalue(i)).collect();
    let overlap_with_wprime = (mode == 1).then(|| {
        let y = fine.eigenvector(mu_f);
        let (mut uv, mut uu, mut vv) = (0.0, 0.0, 0.0);
        for i in 0..y.len() {
            let b = fine.mass[i];
            let u = y[i] / b.sqrt();
            let v = pr.eval_w_prime(fine.rad[i]);
            uv += b * u * v;
            uu += b * u * u;
            vv += b * v * v;
        }
        (uv / (uu * vv).sqrt()).abs()
    });
    ModeReport { mode, nearest_zero, lowest, overlap_with_wprime }
}

pub fn verify_nondegeneracy(pr: &Profile) -> Result<NondegeneracyReport, ProfileError> {
    if pr.dim < 2 {
        return Err(ProfileError::InvalidInput("nondegeneracy check needs N >= 2".into()));
    }
    let m0 = mode_report(pr, 0);
    let m1 = mode_report(pr, 1);
    if m0.nearest_zero.abs() <= KERNEL_THRESHOLD {
        return Err(ProfileError::NondegeneracyFailed(format!(
            "radial mode has eigenvalue {:e} near zero",
            m0.nearest_zero
        )));
    }
    if m1.nearest_zero.abs() > KERNEL_THRESHOLD {
        return Err(ProfileError::NondegeneracyFailed(format!(
            "translation mode eigenvalue {:e} exceeds {KERNEL_THRESHOLD:e}",
            m1.nearest_zero
        )));
    }
    if m1.overlap_with_wprime.unwrap_or(0.0) < 0.999 {
        return Err(ProfileError::NondegeneracyFailed(format!(
            "translation eigenfunction overlap {:?} with w' below 0.999",
            m1.overlap_with_wprime
        )));
    }
    Ok(NondegeneracyReport { modes: vec![m0, m1], kernel_threshold: KERNEL_THRESHOLD })
}
