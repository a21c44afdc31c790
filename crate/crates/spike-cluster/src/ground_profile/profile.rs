use super::tail;
use super::{Nonlinearity, ProfileError};

/// Radial ground state `w` of `Δw − w + f(w) = 0` on a uniform node table,
/// continued by `A r^{-(N-1)/2} e^{-r}` beyond `r_star`.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile {
    pub dim: usize,
    pub nl: Nonlinearity,
    pub w0: f64,
    /// Node spacing; node k sits at `k as f64 * h`.
    pub h: f64,
    pub r: Vec<f64>,
    pub w: Vec<f64>,
    pub wp: Vec<f64>,
    pub tail_amplitude: f64,
    pub r_star: f64,
    pub tol: f64,
}

/// Threshold defining `r_star`.
pub const R_STAR_LEVEL: f64 = 1e-8;
const SERIES_START: f64 = 1e-4;
const MATCH_LEVEL: f64 = 1e-3;
const FAR_LEVEL: f64 = 1e-12;
const W0_MAX: f64 = 1e3;

pub(crate) fn sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        1 => 2.0,
        2 => 2.0 * PI,
        3 => 4.0 * PI,
        _ => unreachable!(),
    }
}

fn validate(n: usize, nl: &Nonlinearity, tol: f64) -> Result<(), ProfileError> {
    if !(1..=3).contains(&n) {
        return Err(ProfileError::InvalidInput(format!("dimension {n} not in 1..=3")));
    }
    if !(nl.p > 2.0) || !nl.p.is_finite() {
        return Err(ProfileError::InvalidInput(format!("exponent p = {} must exceed 2", nl.p)));
    }
    if n == 3 && nl.p >= 6.0 {
        return Err(ProfileError::InvalidInput(format!("p = {} is not subcritical for N = 3", nl.p)));
    }
    if !(tol > 0.0) {
        return Err(ProfileError::InvalidInput(format!("tolerance {tol} must be positive")));
    }
    Ok(())
}

// --- Dormand–Prince 5(4) on the radial system ---------------------------

struct Ode {
    n: f64,
    nl: Nonlinearity,
    rtol: f64,
}

impl Ode {
    #[inline]
    fn rhs(&self, r: f64, y: [f64; 2]) -> [f64; 2] {
        [y[1], -(self.n - 1.0) / r * y[1] + y[0] - self.nl.f(y[0])]
    }

    fn step(&self, r: f64, y: [f64; 2], h: f64) -> ([f64; 2], f64) {
        const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
        const A: [[f64; 6]; 6] = [
            [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
            [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
            [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
            [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
            [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
            [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
        ];
        const E: [f64; 7] = [
            71.0 / 57600.0,
            0.0,
            -71.0 / 16695.0,
            71.0 / 1920.0,
            -17253.0 / 339200.0,
            22.0 / 525.0,
            -1.0 / 40.0,
        ];
        let mut k = [[0.0; 2]; 7];
        k[0] = self.rhs(r, y);
        for s in 0..6 {
            let mut ys = y;
            for (j, kj) in k.iter().enumerate().take(s + 1) {
                ys[0] += h * A[s][j] * kj[0];
                ys[1] += h * A[s][j] * kj[1];
            }
            k[s + 1] = self.rhs(r + C[s] * h, ys);
        }
        // FSAL: stage 7 is evaluated at the 5th-order solution
        let mut y5 = y;
        for (j, kj) in k.iter().enumerate().take(6) {
            y5[0] += h * A[5][j] * kj[0];
            y5[1] += h * A[5][j] * kj[1];
        }
        let mut err: f64 = 0.0;
        for i in 0..2 {
            let e: f64 = (0..7).map(|j| E[j] * k[j][i]).sum::<f64>() * h;
            let sc = self.rtol * (1e-300 + y[i].abs().max(y5[i].abs()));
            err = err.max(e.abs() / sc);
        }
        (y5, err)
    }

    /// Integrate from `r0` to `r1` (either direction); `hh` carries the step size.
    fn advance(&self, r0: f64, y0: [f64; 2], r1: f64, hh: &mut f64) -> [f64; 2] {
        let dir = (r1 - r0).signum();
        let (mut r, mut y) = (r0, y0);
        let mut guard = 0;
        while (r1 - r) * dir > 0.0 {
            guard += 1;
            let mut h = hh.abs().min((r1 - r).abs());
            let last = h == (r1 - r).abs();
            let (yn, err) = self.step(r, y, dir * h);
            if err <= 1.0 || h < 1e-12 || guard > 100_000 {
                r = if last { r1 } else { r + dir * h };
                y = yn;
                let grow = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                if !last {
                    *hh = h * grow;
                }
            } else {
                h *= (0.9 * err.powf(-0.2)).clamp(0.1, 0.5);
                *hh = h;
            }
        }
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shot {
    Over,
    Under,
    Undecided,
}

fn series_start(n: usize, nl: &Nonlinearity, w0: f64) -> [f64; 2] {
    let c = w0 - nl.f(w0);
    let d = SERIES_START;
    [w0 + c * d * d / (2.0 * n as f64), c * d / n as f64]
}

fn shoot(ode: &Ode, n: usize, w0: f64, h: f64) -> Shot {
    let mut y = series_start(n, &ode.nl, w0);
    let mut r = SERIES_START;
    let mut hh = h;
    let mut k = 1;
    while r < 80.0 {
        let rn = k as f64 * h;
        y = ode.advance(r, y, rn, &mut hh);
        r = rn;
        k += 1;
        if y[0] < 0.0 {
            return Shot::Over;
        }
        if y[1] > 0.0 {
            return Shot::Under;
        }
        if !y[0].is_finite() {
            return Shot::Over;
        }
    }
    Shot::Undecided
}

fn bisect_center(ode: &Ode, n: usize, h: f64) -> Result<f64, ProfileError> {
    let mut lo = 0.5;
    if shoot(ode, n, lo, h) != Shot::Under {
        return Err(ProfileError::NoGroundState);
    }
    let mut hi = 2.0;
    loop {
        match shoot(ode, n, hi, h) {
            Shot::Over => break,
            Shot::Under => lo = hi,
            Shot::Undecided => return Ok(hi),
        }
        hi *= 2.0;
        if hi >= W0_MAX {
            return Err(ProfileError::NoGroundState);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        match shoot(ode, n, mid, h) {
            Shot::Over => hi = mid,
            Shot::Under => lo = mid,
            Shot::Undecided => return Ok(mid),
        }
    }
    Ok(lo)
}

/// Tables for a fixed spacing; no residual check.
fn build_table(n: usize, nl: Nonlinearity, tol: f64, h: f64) -> Result<Profile, ProfileError> {
    let ode = Ode { n: n as f64, nl, rtol: (1e-3 * tol).clamp(1e-13, 1e-8) };
    let w0 = bisect_center(&ode, n, h)?;

    // forward leg down to the matching level
    let mut rs = vec![0.0];
    let mut ws = vec![w0];
    let mut vs = vec![0.0];
    let mut y = series_start(n, &nl, w0);
    let mut r = SERIES_START;
    let mut hh = h;
    let mut k = 1;
    loop {
        let rn = k as f64 * h;
        y = ode.advance(r, y, rn, &mut hh);
        r = rn;
        if y[0] <= 0.0 || y[1] >= 0.0 || r > 80.0 {
            return Err(ProfileError::NoGroundState);
        }
        rs.push(rn);
        ws.push(y[0]);
        vs.push(y[1]);
        if y[0] < MATCH_LEVEL {
            break;
        }
        k += 1;
    }
    let km = k;
    let (wm, vm) = (y[0], y[1]);
    let rm = km as f64 * h;

    // far radius where the tail has dropped to FAR_LEVEL
    let half = (n as f64 - 1.0) / 2.0;
    let g_est = wm * rm.powf(half) * rm.exp();
    let mut kf = km + 1;
    loop {
        let rf = kf as f64 * h;
        if rf >= 20.0 && g_est * rf.powf(-half) * (-rf).exp() < FAR_LEVEL {
            break;
        }
        kf += 1;
    }
    let rf = kf as f64 * h;

    // inward leg from the linear tail, amplitude fixed by matching w at rm
    let inward = |a: f64| -> Vec<[f64; 2]> {
        let (u, up) = tail::decaying(n, rf);
        let mut y = [a * u, a * up];
        let mut out = vec![y];
        let mut hh = -h;
        for j in (km..kf).rev() {
            y = ode.advance((j + 1) as f64 * h, y, j as f64 * h, &mut hh);
            out.push(y);
        }
        out.reverse(); // index 0 ↔ node km
        out
    };
    let (u_m, _) = tail::decaying(n, rm);
    let mut a0 = wm / u_m;
    let mut f0 = inward(a0)[0][0] - wm;
    let mut a1 = a0 * 1.01;
    let mut f1 = inward(a1)[0][0] - wm;
    for _ in 0..60 {
        if f1 == f0 || f1.abs() <= 1e-15 * wm {
            break;
        }
        let a2 = a1 - f1 * (a1 - a0) / (f1 - f0);
        a0 = a1;
        f0 = f1;
        a1 = a2;
        f1 = inward(a1)[0][0] - wm;
    }
    let back = inward(a1);
    // the inward leg takes over at the matching node; its slope there replaces the
    // forward one (the difference is the seam defect)
    let _seam = (back[0][1] - vm).abs();
    vs[km] = back[0][1];
    for (j, yb) in back.iter().enumerate().skip(1) {
        rs.push((km + j) as f64 * h);
        ws.push(yb[0]);
        vs.push(yb[1]);
    }

    let ks = ws
        .iter()
        .position(|&w| w < R_STAR_LEVEL)
        .ok_or(ProfileError::NoGroundState)?;
    rs.truncate(ks + 1);
    ws.truncate(ks + 1);
    vs.truncate(ks + 1);
    for i in 1..ws.len() {
        if !(ws[i] > 0.0 && vs[i] < 0.0 && ws[i] < ws[i - 1]) {
            return Err(ProfileError::NoGroundState);
        }
    }
    let r_star = rs[ks];
    let tail_amplitude = ws[ks] * r_star.powf(half) * r_star.exp();
    Ok(Profile { dim: n, nl, w0, h, r: rs, w: ws, wp: vs, tail_amplitude, r_star, tol })
}

/// Shooting solve with bisection on `w(0)`, refining the node spacing until the
/// finite-difference ODE residual is below `tol · max w`.
pub fn solve_profile(n: usize, nl: Nonlinearity, tol: f64) -> Result<Profile, ProfileError> {
    solve_profile_with_step(n, nl, tol, 0.01)
}

pub fn solve_profile_with_step(
    n: usize,
    nl: Nonlinearity,
    tol: f64,
    h0: f64,
) -> Result<Profile, ProfileError> {
    validate(n, &nl, tol)?;
    let mut h = h0;
    let mut best = f64::INFINITY;
    for _ in 0..5 {
        let pr = build_table(n, nl, tol, h)?;
        let res = ode_residual(&pr);
        if res <= tol * pr.w0 {
            return Ok(pr);
        }
        if res >= 0.9 * best {
            break; // refinement no longer helps
        }
        best = res;
        h *= 0.5;
    }
    Err(ProfileError::ToleranceNotReached { achieved: best, tol })
}

/// Max over interior nodes of |w'' + (N−1)/r w' − w + f(w)|, with w'' from a
/// fourth-order central difference of the stored slopes.
pub fn ode_residual(pr: &Profile) -> f64 {
    let n = pr.dim as f64;
    let m = pr.w.len();
    let mut worst: f64 = 0.0;
    for k in 2..m.saturating_sub(2) {
        let wpp = (-pr.wp[k + 2] + 8.0 * pr.wp[k + 1] - 8.0 * pr.wp[k - 1] + pr.wp[k - 2])
            / (12.0 * pr.h);
        let res = wpp + (n - 1.0) / pr.r[k] * pr.wp[k] - pr.w[k] + pr.nl.f(pr.w[k]);
        worst = worst.max(res.abs());
    }
    worst
}

impl Profile {
    #[inline]
    fn interval(&self, r: f64) -> (usize, f64) {
        let last = self.w.len() - 1;
        let k = ((r / self.h) as usize).min(last - 1);
        (k, (r - self.r[k]) / self.h)
    }

    // Fritsch–Carlson limited slopes for interval k (scaled by h).
    #[inline]
    fn slopes(&self, k: usize) -> (f64, f64) {
        let d = self.w[k + 1] - self.w[k];
        let (mut m0, mut m1) = (self.wp[k] * self.h, self.wp[k + 1] * self.h);
        if d != 0.0 {
            let (a, b) = (m0 / d, m1 / d);
            let s = a * a + b * b;
            if s > 9.0 {
                let t = 3.0 / s.sqrt();
                m0 *= t;
                m1 *= t;
            }
        }
        (m0, m1)
    }

    /// `w(r)`, total on `r ≥ 0`.
    #[inline]
    pub fn eval_w(&self, r: f64) -> f64 {
        if r > self.r_star {
            return self.tail_amplitude * r.powf(-(self.dim as f64 - 1.0) / 2.0) * (-r).exp();
        }
        let (k, t) = self.interval(r);
        let (m0, m1) = self.slopes(k);
        let (y0, y1) = (self.w[k], self.w[k + 1]);
        let t2 = t * t;
        let t3 = t2 * t;
        (2.0 * t3 - 3.0 * t2 + 1.0) * y0
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * y1
            + (t3 - t2) * m1
    }

    /// `w'(r)`: derivative of the interpolant, and of the tail law beyond `r_star`.
    #[inline]
    pub fn eval_w_prime(&self, r: f64) -> f64 {
        if r > self.r_star {
            let half = (self.dim as f64 - 1.0) / 2.0;
            let tail = self.tail_amplitude * r.powf(-half) * (-r).exp();
            return -tail * (1.0 + half / r);
        }
        let (k, t) = self.interval(r);
        let (m0, m1) = self.slopes(k);
        let (y0, y1) = (self.w[k], self.w[k + 1]);
        let t2 = t * t;
        ((6.0 * t2 - 6.0 * t) * y0
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * y1
            + (3.0 * t2 - 2.0 * t) * m1)
            / self.h
    }

    /// Plateau of `g(r) = w r^{(N-1)/2} e^r` over the last decade of the table.
    pub fn decay_amplitude(&self) -> Result<f64, ProfileError> {
        let last = self.w.len() - 1;
        if self.w[last] >= R_STAR_LEVEL {
            return Err(ProfileError::NoPlateau { flatness: f64::INFINITY });
        }
        let half = (self.dim as f64 - 1.0) / 2.0;
        let cut = 10.0 * self.w[last];
        let g: Vec<f64> = (0..=last)
            .filter(|&k| self.w[k] <= cut)
            .map(|k| self.w[k] * self.r[k].powf(half) * self.r[k].exp())
            .collect();
        let mean = g.iter().sum::<f64>() / g.len() as f64;
        let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
        let flatness = (hi - lo) / mean;
        if g.len() < 3 || flatness > 1e-2 {
            return Err(ProfileError::NoPlateau { flatness });
        }
        Ok(mean)
    }
}
