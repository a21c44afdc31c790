use super::grid::dot;

pub(crate) struct MinresOutcome {
    pub x: Vec<f64>,
    pub iterations: usize,
    /// Recurrence estimate of `‖b − Ax‖ / ‖b‖`.
    pub rel_residual: f64,
    pub converged: bool,
}

fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// MINRES (Paige–Saunders) for a symmetric, possibly indefinite operator.
pub(crate) fn minres(
    apply: impl Fn(&[f64], &mut [f64]),
    b: &[f64],
    rtol: f64,
    max_iter: usize,
) -> MinresOutcome {
    let m = b.len();
    let mut x = vec![0.0; m];
    let beta1 = norm(b);
    if beta1 == 0.0 {
        return MinresOutcome { x, iterations: 0, rel_residual: 0.0, converged: true };
    }
    let mut r1 = b.to_vec();
    let mut r2 = b.to_vec();
    let mut y = b.to_vec();
    let mut v = vec![0.0; m];
    let mut w = vec![0.0; m];
    let mut w1 = vec![0.0; m];
    let mut w2 = vec![0.0; m];
    let (mut oldb, mut beta) = (0.0, beta1);
    let (mut dbar, mut epsln, mut phibar) = (0.0, 0.0, beta1);
    let (mut cs, mut sn) = (-1.0f64, 0.0f64);
    let mut rel = 1.0;
    for itn in 1..=max_iter {
        let s = 1.0 / beta;
        for (vi, yi) in v.iter_mut().zip(&y) {
            *vi = s * yi;
        }
        apply(&v, &mut y);
        if itn >= 2 {
            let c = beta / oldb;
            for (yi, ri) in y.iter_mut().zip(&r1) {
                *yi -= c * ri;
            }
        }
        let alfa = dot(&v, &y);
        let c = alfa / beta;
        for (yi, ri) in y.iter_mut().zip(&r2) {
            *yi -= c * ri;
        }
        std::mem::swap(&mut r1, &mut r2);
        r2.copy_from_slice(&y);
        oldb = beta;
        beta = norm(&r2);
        let oldeps = epsln;
        let delta = cs * dbar + sn * alfa;
        let gbar = sn * dbar - cs * alfa;
        epsln = sn * beta;
        dbar = -cs * beta;
        let gamma = gbar.hypot(beta).max(f64::EPSILON);
        cs = gbar / gamma;
        sn = beta / gamma;
        let phi = cs * phibar;
        phibar *= sn;
        let denom = 1.0 / gamma;
        std::mem::swap(&mut w1, &mut w2);
        std::mem::swap(&mut w2, &mut w);
        for k in 0..m {
            w[k] = (v[k] - oldeps * w1[k] - delta * w2[k]) * denom;
            x[k] += phi * w[k];
        }
        rel = phibar / beta1;
        if rel <= rtol || beta == 0.0 {
            return MinresOutcome { x, iterations: itn, rel_residual: rel, converged: true };
        }
    }
    MinresOutcome { x, iterations: max_iter, rel_residual: rel, converged: false }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_indefinite_diagonal_plus_coupling() {
        // tridiagonal with diagonal crossing zero
        let m = 50;
        let diag: Vec<f64> = (0..m).map(|i| i as f64 - 20.5).collect();
        let apply = |u: &[f64], out: &mut [f64]| {
            for i in 0..m {
                let mut s = diag[i] * u[i];
                if i > 0 {
                    s += u[i - 1];
                }
                if i + 1 < m {
                    s += u[i + 1];
                }
                out[i] = s;
            }
        };
        let b: Vec<f64> = (0..m).map(|i| ((i * 7) % 5) as f64 - 2.0).collect();
        let out = minres(apply, &b, 1e-12, 500);
        assert!(out.converged);
        let mut ax = vec![0.0; m];
        apply(&out.x, &mut ax);
        let err: f64 = ax.iter().zip(&b).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
        assert!(err < 1e-10 * norm(&b), "{err}");
    }
}
