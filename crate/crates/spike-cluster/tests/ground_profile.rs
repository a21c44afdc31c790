use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spike_cluster::ground_profile::*;
use std::sync::OnceLock;

fn p3(n: usize) -> &'static Profile {
    static P: [OnceLock<Profile>; 3] = [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    P[n - 1].get_or_init(|| solve_profile(n, Nonlinearity::new(3.0), 1e-9).unwrap())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn one_dimensional_cubic_closed_form() {
    let pr = p3(1);
    assert!((pr.w0 - 1.5).abs() < 1e-6);
    let a = pr.decay_amplitude().unwrap();
    assert!(rel(a, 6.0) < 1e-2);
    let rc = compute_constants(pr).unwrap();
    assert!(rel(rc.c2, 3.0) < 1e-6);
    assert!(rel(rc.c3, 12.0) < 1e-4);
    assert_eq!(rc.c4, rc.c2);
    // w = (3/2) sech²(r/2) everywhere on the table and beyond
    for k in 0..=40 {
        let r = 0.5 * k as f64;
        let exact = 1.5 / (r / 2.0).cosh().powi(2);
        assert!((pr.eval_w(r) - exact).abs() < 1e-8 * exact.max(1e-3), "r={r}");
    }
    assert!(rel(pr.eval_w(20.0), 6.0 * (-20f64).exp()) < 1e-3);
    assert_eq!(pr.eval_w(0.0), pr.w0);
    assert_eq!(pr.eval_w_prime(0.0), 0.0);
}

#[test]
fn one_dimensional_quartic_closed_form() {
    let pr = solve_profile(1, Nonlinearity::new(4.0), 1e-9).unwrap();
    assert!((pr.w0 - 2f64.sqrt()).abs() < 1e-6);
    assert!(rel(pr.decay_amplitude().unwrap(), 2.0 * 2f64.sqrt()) < 1e-2);
    let rc = compute_constants(&pr).unwrap();
    // ½∫2 sech² = 2, ∫ f(w) e^x = 2√2·∫ sech³(x) eˣ dx = 2√2 · 2
    assert!(rel(rc.c2, 2.0) < 1e-6);
    assert!(rel(rc.c3, 4.0 * 2f64.sqrt()) < 1e-4);
}

// Oracle values from an independent scipy solve (LSODA/RK45 at rtol 1e-13, half
// the node spacing), frozen here.
#[test]
fn planar_cubic_regression() {
    let pr = p3(2);
    assert!((pr.w0 - 2.391956403224116).abs() < 1e-9, "w0 = {}", pr.w0);
    let rc = compute_constants(pr).unwrap();
    assert!(rel(rc.c2, 15.501586325) < 1e-8, "c2 = {}", rc.c2);
    assert!(rel(rc.c3, 54.451104078) < 1e-6, "c3 = {}", rc.c3);
    assert!(rel(pr.decay_amplitude().unwrap(), 10.788) < 1e-3);
    assert!(rel(rc.c1_unit, 7.7508) < 1e-4, "c1 = {}", rc.c1_unit);
}

#[test]
fn profile_invariants() {
    for n in 1..=3 {
        let pr = p3(n);
        for k in 1..pr.w.len() {
            assert!(pr.w[k] < pr.w[k - 1] && pr.w[k] > 0.0 && pr.wp[k] < 0.0);
        }
        let half = (n as f64 - 1.0) / 2.0;
        let tail = pr.tail_amplitude * pr.r_star.powf(-half) * (-pr.r_star).exp();
        let w_star = *pr.w.last().unwrap();
        assert!((w_star - tail).abs() <= 1e-6 * w_star);
        assert!(w_star < R_STAR_LEVEL && pr.w[pr.w.len() - 2] >= R_STAR_LEVEL);
        assert!(ode_residual(pr) <= 1e-9 * pr.w0);
        assert!(pohozaev_defect(pr) < 1e-6);
        // eval_w' against central differences of eval_w
        let d = 1e-5;
        let mut r = 0.1;
        while r < pr.r_star - d {
            let fd = (pr.eval_w(r + d) - pr.eval_w(r - d)) / (2.0 * d);
            let wp = pr.eval_w_prime(r);
            assert!((fd - wp).abs() <= 1e-4 * wp.abs(), "N={n} r={r}: {fd} vs {wp}");
            r += 0.173;
        }
    }
}

#[test]
fn c3_routes_agree() {
    for n in 1..=3 {
        let pr = p3(n);
        let inter = Interaction::new(pr);
        let direct = inter.c3();
        let extrap = c3_by_extrapolation(&inter);
        assert!(rel(extrap, direct) < 1e-3, "N={n}: {direct} vs {extrap}");
    }
}

#[test]
fn domination_constant_is_finite_and_stable() {
    let pr = p3(2);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = [0.0f64; 2];
    for (slot, range) in [30.0, 60.0].iter().enumerate() {
        for _ in 0..200 {
            let z: [f64; 2] = [rng.random_range(-1.0..1.0) * range, rng.random_range(-1.0..1.0) * range];
            let x: [f64; 2] = [rng.random_range(-1.0..1.0) * range, rng.random_range(-1.0..1.0) * range];
            let nz = z[0].hypot(z[1]);
            let nzx = (z[0] + x[0]).hypot(z[1] + x[1]);
            let nx = x[0].hypot(x[1]);
            let c = pr.eval_w(nz) * pr.eval_w(nzx) / pr.eval_w(nx);
            worst[slot] = worst[slot].max(c);
        }
    }
    assert!(worst[0].is_finite() && worst[1].is_finite());
    assert!(worst[1] <= 2.0 * worst[0].max(pr.w0), "{worst:?}");
}

#[test]
fn interaction_kernel_limits() {
    let pr = p3(2);
    let rc = compute_constants(pr).unwrap();
    let inter = Interaction::new(pr);
    let x: Vec<f64> = [10.0, 12.0, 14.0].iter().map(|&r| inter.xi(r)).collect();
    assert!(x[0] > x[1] && x[1] > x[2]);
    let mut prev = (f64::INFINITY, f64::INFINITY);
    for rho in [8.0, 10.0, 12.0, 15.0] {
        let a = (inter.xi(rho) / (rc.c3 * pr.eval_w(rho)) - 1.0).abs();
        let b = (inter.xi_prime(rho) / (rc.c3 * pr.eval_w_prime(rho)) - 1.0).abs();
        assert!(a < prev.0 && b < prev.1);
        prev = (a, b);
    }
    assert!(prev.0 < 0.05 && prev.1 < 0.05);
    // scipy oracle: ξ(8) = 0.068712 (same cylindrical integral, adaptive rule)
    assert!(rel(inter.xi(8.0), 0.068712) < 1e-4);
    // derivative against central differences of ξ
    let d = 1e-4;
    let fd = (inter.xi(6.0 + d) - inter.xi(6.0 - d)) / (2.0 * d);
    assert!(rel(inter.xi_prime(6.0), fd) < 1e-6);
    // refining the rule leaves ξ unchanged
    let fine = Interaction::with_resolution(pr, 0.5, 10);
    for rho in [2.0, 6.0, 15.0] {
        assert!(rel(fine.xi(rho), inter.xi(rho)) < 1e-9);
    }
}

#[test]
fn planar_ground_state_is_nondegenerate() {
    let rep = verify_nondegeneracy(p3(2)).unwrap();
    let m0 = &rep.modes[0];
    let m1 = &rep.modes[1];
    assert!(m1.nearest_zero.abs() <= 1e-4);
    assert!(m0.nearest_zero.abs() >= 0.1);
    assert!(m1.overlap_with_wprime.unwrap() >= 0.999);
    assert!(verify_nondegeneracy(p3(3)).is_ok());
    assert!(matches!(verify_nondegeneracy(p3(1)), Err(ProfileError::InvalidInput(_))));
}

#[test]
fn invalid_inputs_are_rejected() {
    let nl = Nonlinearity::new(3.0);
    assert!(matches!(solve_profile(4, nl, 1e-9), Err(ProfileError::InvalidInput(_))));
    assert!(matches!(solve_profile(2, Nonlinearity::new(2.0), 1e-9), Err(ProfileError::InvalidInput(_))));
    assert!(matches!(solve_profile(3, Nonlinearity::new(6.5), 1e-9), Err(ProfileError::InvalidInput(_))));
    assert!(matches!(
        solve_profile(1, nl, 1e-16),
        Err(ProfileError::ToleranceNotReached { .. })
    ));
    let mut bad = p3(1).clone();
    bad.nl = Nonlinearity::new(2.0);
    assert!(matches!(compute_constants(&bad), Err(ProfileError::DivergentIntegral { .. })));
    let mut short = p3(1).clone();
    let keep = short.w.len() - 600;
    short.w.truncate(keep);
    assert!(matches!(short.decay_amplitude(), Err(ProfileError::NoPlateau { .. })));
}

#[test]
fn cache_round_trip_is_bit_exact() {
    let pr = p3(2);
    let dir = std::env::temp_dir().join(format!("spike-cache-{}", std::process::id()));
    let path = dir.join(cache_file_name(2, 3.0, 1e-9));
    write_profile(&path, pr).unwrap();
    let bytes = std::fs::read(&path).unwrap();
    let back = read_profile(&path, 1e-9).unwrap();
    assert_eq!(&back, pr);
    write_profile(&path, &back).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), bytes);
    let head = String::from_utf8(bytes).unwrap();
    assert!(head.starts_with("# spike-cluster profile v1, 2, 3, "));
    std::fs::remove_dir_all(&dir).ok();
}
