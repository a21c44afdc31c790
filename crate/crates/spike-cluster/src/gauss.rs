// Gauss–Legendre rules and composite panels.

/// Nodes and weights of the `n`-point rule on [-1, 1].
pub fn legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, z);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            if n == 1 {
                p1 = z;
                p0 = 1.0;
            }
            dp = n as f64 * (z * p1 - p0) / (z * z - 1.0);
            let dz = p1 / dp;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

/// Composite rule on [a, b] split into panels of width at most `width`.
pub fn composite(a: f64, b: f64, width: f64, order: usize) -> Vec<(f64, f64)> {
    let (x, w) = legendre(order);
    let panels = (((b - a) / width).ceil() as usize).max(1);
    let hw = (b - a) / panels as f64;
    let mut out = Vec::with_capacity(panels * order);
    for k in 0..panels {
        let lo = a + k as f64 * hw;
        let mid = lo + 0.5 * hw;
        for (xi, wi) in x.iter().zip(&w) {
            out.push((mid + 0.5 * hw * xi, 0.5 * hw * wi));
        }
    }
    out
}
