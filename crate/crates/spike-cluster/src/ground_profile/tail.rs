// Decaying solution of the linearized radial equation u'' + (N-1)/r u' - u = 0,
// normalized so that u ~ r^{-(N-1)/2} e^{-r}.

fn bessel_k_series(nu: f64, r: f64) -> f64 {
    // asymptotic series of K_nu(r) / (sqrt(pi/(2r)) e^{-r}), valid for r >= 15
    let mu = 4.0 * nu * nu;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..60 {
        let odd = (2 * k - 1) as f64;
        let next = term * (mu - odd * odd) / (k as f64 * 8.0 * r);
        if next.abs() >= term.abs() {
            break;
        }
        term = next;
        sum += term;
        if term.abs() < 1e-18 {
            break;
        }
    }
    sum
}

/// `(u(r), u'(r))` for the exact decaying linear solution in dimension `n`.
pub fn decaying(n: usize, r: f64) -> (f64, f64) {
    let e = (-r).exp();
    match n {
        1 => (e, -e),
        2 => {
            let s = r.powf(-0.5) * e;
            (s * bessel_k_series(0.0, r), -s * bessel_k_series(1.0, r))
        }
        3 => (e / r, -e * (1.0 / r + 1.0 / (r * r))),
        _ => unreachable!("dimension checked by caller"),
    }
}
