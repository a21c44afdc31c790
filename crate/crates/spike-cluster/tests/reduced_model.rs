use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spike_cluster::ground_profile::*;
use spike_cluster::potential_model::*;
use spike_cluster::reduced_model::*;
use std::sync::OnceLock;

fn model() -> &'static ReducedModel {
    static M: OnceLock<ReducedModel> = OnceLock::new();
    M.get_or_init(|| {
        let pr = solve_profile(2, Nonlinearity::new(3.0), 1e-9).unwrap();
        let rc = compute_constants(&pr).unwrap();
        ReducedModel::new(pr, make_saddle(&[1.0, -1.0]).unwrap(), rc)
    })
}

const MODES: [KernelMode; 2] = [KernelMode::Asymptotic, KernelMode::XiExact];

fn pair(eps: f64, beta: f64, p: [f64; 2], q: [f64; 2], signs: [i8; 2]) -> SpikeConfig {
    SpikeConfig::new(eps, beta, vec![p.to_vec(), q.to_vec()], signs.to_vec())
}

#[test]
fn single_spike_at_saddle() {
    let m = model();
    for mode in MODES {
        let e = reduced_energy(&SpikeConfig::new(0.05, 0.5, vec![vec![0.0, 0.0]], vec![1]), m, mode);
        assert_eq!(e.value, 0.0);
        assert!(e.gradient.iter().all(|&g| g == 0.0));
        assert!(e.admissible);
    }
}

#[test]
fn two_term_hand_evaluation() {
    let m = model();
    let cfg = pair(0.05, 0.5, [0.0, 0.15], [0.0, -0.15], [1, 1]);
    let c2 = m.rc.c2;
    for (mode, kernel6) in [
        (KernelMode::Asymptotic, m.rc.c3 * m.profile.eval_w(6.0)),
        (KernelMode::XiExact, m.interaction().xi(6.0)),
    ] {
        let e = reduced_energy(&cfg, m, mode);
        let want = -c2 * 0.0225 - kernel6;
        assert!((e.value - want).abs() < 1e-14, "{mode:?}: {} vs {want}", e.value);
        assert!((e.potential_term + e.interaction_term - e.value).abs() < 1e-15);
        let swapped = pair(0.05, 0.5, [0.0, -0.15], [0.0, 0.15], [1, 1]);
        assert_eq!(reduced_energy(&swapped, m, mode).value, e.value);
    }
}

/// Random members of Γ_ε (N = 2, λ = (1, −1)) with ℓ ∈ {2, 3} and mixed signs.
fn admissible_samples(count: usize, seed: u64) -> Vec<SpikeConfig> {
    let m = model();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let eps: f64 = rng.random_range(0.05..0.1);
        let beta = 0.5;
        let ell = rng.random_range(2..=3);
        let rad = eps.powf(beta);
        let points: Vec<Vec<f64>> = (0..ell)
            .map(|_| vec![rng.random_range(-rad..rad), rng.random_range(-rad..rad)])
            .collect();
        let signs: Vec<i8> = (0..ell).map(|_| if rng.random_bool(0.5) { 1 } else { -1 }).collect();
        let cfg = SpikeConfig::new(eps, beta, points, signs);
        if in_gamma(&cfg, &m.profile, &m.pot) {
            out.push(cfg);
        }
    }
    out
}

#[test]
fn gradient_matches_central_differences() {
    let m = model();
    for mode in MODES {
        let mut worst = 0.0f64;
        for cfg in admissible_samples(50, 11) {
            let e = reduced_energy(&cfg, m, mode);
            assert!(e.admissible);
            let x = cfg.flat();
            let h = 1e-5 * cfg.eps;
            let mut err2 = 0.0;
            for c in 0..x.len() {
                let mut xp = x.clone();
                xp[c] += h;
                let mut xm = x.clone();
                xm[c] -= h;
                let fd = (reduced_energy(&cfg.with_flat(&xp), m, mode).value
                    - reduced_energy(&cfg.with_flat(&xm), m, mode).value)
                    / (2.0 * h);
                err2 += (fd - e.gradient[c]).powi(2);
            }
            worst = worst.max(err2.sqrt() / e.grad_norm());
        }
        assert!(worst < 1e-6, "{mode:?}: worst relative gradient error {worst:e}");
    }
}

#[test]
fn kernel_modes_agree_along_ladder() {
    let m = model();
    let pot = &m.pot;
    let fam = ConfigFamily::new(FamilyKind::LinearChain, 1, 1, 0.5, pot).unwrap();
    let mut prev = f64::INFINITY;
    for eps in [0.1, 0.07, 0.05, 0.035] {
        let r = fam.r_eps(eps);
        let cfg = generate(&fam, &[-r[0] / 2.0], &r, eps).unwrap();
        let ja = reduced_energy(&cfg, m, KernelMode::Asymptotic).value;
        let jx = reduced_energy(&cfg, m, KernelMode::XiExact).value;
        let d = (ja - jx).abs() / cfg.level();
        assert!(d < prev, "eps {eps}: {d} !< {prev}");
        prev = d;
    }
    assert!(prev < 0.5);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn interaction_is_translation_invariant(
        idx in 0usize..200, tx in -0.05f64..0.05, ty in -0.05f64..0.05,
    ) {
        let m = model();
        let cfg = &admissible_samples(200, 3)[idx];
        let moved = SpikeConfig::new(
            cfg.eps,
            cfg.beta,
            cfg.points.iter().map(|p| vec![p[0] + tx, p[1] + ty]).collect(),
            cfg.signs.clone(),
        );
        for mode in MODES {
            let a = reduced_energy(cfg, m, mode);
            let b = reduced_energy(&moved, m, mode);
            prop_assert!((a.interaction_term - b.interaction_term).abs() <= 1e-12 * a.interaction_term.abs().max(1e-12));
            let pot: f64 = moved.points.iter().map(|p| 0.5 * m.rc.c2 * (p[0] * p[0] - p[1] * p[1])).sum();
            prop_assert!((b.potential_term - pot).abs() < 1e-13);
        }
    }

    #[test]
    fn flipping_all_signs_preserves_energy(idx in 0usize..200) {
        let m = model();
        let cfg = &admissible_samples(200, 3)[idx];
        let flipped = SpikeConfig { signs: cfg.signs.iter().map(|s| -s).collect(), ..cfg.clone() };
        for mode in MODES {
            let a = reduced_energy(cfg, m, mode);
            let b = reduced_energy(&flipped, m, mode);
            prop_assert_eq!(a.value, b.value);
            prop_assert_eq!(a.gradient, b.gradient);
        }
    }
}

#[test]
fn generated_shapes() {
    let pot2 = make_saddle(&[1.0, -1.0]).unwrap();
    let pot3 = make_saddle(&[1.0, 2.0, -1.0]).unwrap();
    let d = 0.3;
    let chain = ConfigFamily::new(FamilyKind::LinearChain, 1, 1, 0.5, &pot2).unwrap();
    let c = generate(&chain, &[0.0], &[d], 0.05).unwrap();
    assert_eq!(c.points, vec![vec![0.0, 0.0], vec![d, 0.0]]);
    assert_eq!(c.signs, vec![1, -1]);

    let star = ConfigFamily::new(FamilyKind::PolygonStar, 3, 1, 0.5, &pot3).unwrap();
    let s = generate(&star, &[0.0, 0.0], &[d, d, d], 0.05).unwrap();
    assert_eq!(s.signs, vec![-1, 1, 1, 1]);
    for i in 1..4 {
        assert!((s.distance(0, i) - d).abs() < 1e-15);
        for j in i + 1..4 {
            assert!((s.distance(i, j) - d * 3f64.sqrt()).abs() < 1e-14);
        }
    }

    let cross = ConfigFamily::new(FamilyKind::Cross, 4, 2, 0.5, &pot3).unwrap();
    let x = generate(&cross, &[0.0, 0.0], &[d; 5], 0.05).unwrap();
    let want = [
        [0.0, 0.0, 0.0],
        [d, 0.0, 0.0],
        [2.0 * d, 0.0, 0.0],
        [3.0 * d, 0.0, 0.0],
        [0.0, d, 0.0],
        [0.0, -d, 0.0],
    ];
    for (p, w) in x.points.iter().zip(want) {
        assert!(p.iter().zip(w).all(|(a, b)| (a - b).abs() < 1e-15), "{p:?} vs {w:?}");
    }
    assert_eq!(x.signs, vec![-1, 1, -1, 1, 1, 1]);
}

#[test]
fn bad_shapes_rejected() {
    let pot2 = make_saddle(&[1.0, -1.0]).unwrap();
    let pot3 = make_saddle(&[1.0, 2.0, -1.0]).unwrap();
    let bad = |r: Result<ConfigFamily, ReducedError>| matches!(r, Err(ReducedError::BadShape(_)));
    assert!(bad(ConfigFamily::new(FamilyKind::LinearChain, 4, 3, 0.5, &pot2)));
    assert!(bad(ConfigFamily::new(FamilyKind::LinearChain, 3, 1, 0.5, &pot2)));
    assert!(bad(ConfigFamily::new(FamilyKind::LinearChain, 1, 2, 0.5, &pot2)));
    assert!(bad(ConfigFamily::new(FamilyKind::PolygonStar, 3, 1, 0.5, &pot2)));
    assert!(bad(ConfigFamily::new(FamilyKind::PolygonStar, 6, 1, 0.5, &pot3)));
    assert!(bad(ConfigFamily::new(FamilyKind::PolygonStar, 3, 2, 0.5, &pot3)));
    assert!(bad(ConfigFamily::new(FamilyKind::Cross, 4, 2, 0.5, &pot2)));
    assert!(bad(ConfigFamily::new(FamilyKind::Cross, 3, 2, 0.5, &pot3)));
    assert!(ConfigFamily::new(FamilyKind::LinearChain, 3, 3, 0.5, &pot2).is_ok());
    assert!(ConfigFamily::new(FamilyKind::LinearChain, 9, 0, 0.5, &pot2).is_ok());
    let chain = ConfigFamily::new(FamilyKind::LinearChain, 2, 1, 0.5, &pot2).unwrap();
    assert!(bad(generate(&chain, &[0.0], &[0.1], 0.05).map(|_| chain.clone())));
}

fn all_families() -> Vec<(ConfigFamily, SaddlePotential)> {
    let pot2 = make_saddle(&[1.0, -1.0]).unwrap();
    let pot3 = make_saddle(&[1.0, 2.0, -1.0]).unwrap();
    let mut out = Vec::new();
    for (h, k) in [(1, 1), (2, 1), (2, 2), (3, 2), (3, 3)] {
        out.push((ConfigFamily::new(FamilyKind::LinearChain, h, k, 0.5, &pot2).unwrap(), pot2.clone()));
    }
    for h in 2..=5 {
        out.push((ConfigFamily::new(FamilyKind::PolygonStar, h, 1, 0.5, &pot3).unwrap(), pot3.clone()));
    }
    out.push((ConfigFamily::new(FamilyKind::Cross, 4, 2, 0.5, &pot3).unwrap(), pot3.clone()));
    for h in [1, 3] {
        out.push((ConfigFamily::new(FamilyKind::LinearChain, h, 0, 0.5, &pot3).unwrap(), pot3.clone()));
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn h_map_inverts_generate(
        fam_idx in 0usize..12,
        raw in prop::collection::vec(0.0f64..1.0, 13),
    ) {
        let fams = all_families();
        let (fam, pot) = &fams[fam_idx % fams.len()];
        let (na, nr) = fam.param_lens();
        let a: Vec<f64> = raw[..na].iter().map(|x| 0.2 * (x - 0.5)).collect();
        let r: Vec<f64> = raw[na..na + nr].iter().map(|x| 0.05 + 0.2 * x).collect();
        let cfg = generate(fam, &a, &r, 0.05).unwrap();
        let (a2, r2) = h_map(&cfg, pot).unwrap();
        prop_assert_eq!(a2.len(), a.len());
        prop_assert_eq!(r2.len(), r.len());
        for (x, y) in a.iter().zip(&a2) {
            prop_assert!((x - y).abs() < 1e-15);
        }
        for (x, y) in r.iter().zip(&r2) {
            prop_assert!((x - y).abs() < 1e-13 * x.max(1.0), "{} vs {}", x, y);
        }
        // same-sign separation bound of the family
        if nr > 0 {
            let rmin = r.iter().copied().fold(f64::INFINITY, f64::min);
            let factor = match fam.kind {
                FamilyKind::LinearChain => 2.0,
                FamilyKind::PolygonStar => (2.0 - 2.0 * (2.0 * std::f64::consts::PI / fam.h as f64).cos()).sqrt(),
                FamilyKind::Cross => 2f64.sqrt(),
            };
            for i in 0..cfg.len() {
                for j in 0..i {
                    if cfg.signs[i] == cfg.signs[j] {
                        prop_assert!(cfg.distance(i, j) >= factor * rmin * (1.0 - 1e-12));
                    }
                }
            }
        }
    }
}

#[test]
fn h_map_errors_and_ties() {
    let pot = make_saddle(&[1.0, -1.0]).unwrap();
    let cfg = SpikeConfig::new(0.05, 0.5, vec![vec![0.0, 0.0], vec![0.1, 0.0], vec![0.3, 0.0]], vec![1, 1, -1]);
    assert_eq!(h_map(&cfg, &pot), Err(ReducedError::NoOppositePair(2)));
    // P₄ is equidistant from the two earlier opposite-sign points
    let tie = SpikeConfig::new(
        0.05,
        0.5,
        vec![vec![0.0, 0.0], vec![-0.1, 0.3], vec![0.1, 0.3], vec![0.0, 0.5]],
        vec![1, -1, -1, 1],
    );
    let (a, r) = h_map(&tie, &pot).unwrap();
    assert_eq!(a, vec![0.0]);
    assert_eq!(r[2], tie.distance(3, 1));
    assert_eq!(tie.distance(3, 1), tie.distance(3, 2));
}

/// Root of `c2 d/2 + kernel'(d/ε)/ε` by dense scan then bisection: both the
/// `(+,−)` pair on the A axis and the `(+,+)` pair on the B axis reduce to it.
fn scalar_oracle(m: &ReducedModel, eps: f64, mode: KernelMode) -> f64 {
    let g = |d: f64| m.rc.c2 * d / 2.0 + m.kernel(d / eps, mode).1 / eps;
    let mut lo = 2.0 * eps;
    let mut hi = lo;
    let step = eps / 100.0;
    while g(hi) < 0.0 {
        lo = hi;
        hi += step;
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn critical_pairs_match_scalar_scan() {
    let m = model();
    let eps: f64 = 0.05;
    let beta = 0.5;
    let d0 = 2.0 * eps * (1.0 / eps).ln();
    for mode in MODES {
        let d_star = scalar_oracle(m, eps, mode);
        for (signs, axis) in [([1i8, -1], 0usize), ([1, 1], 1)] {
            let mut p = [0.0; 2];
            p[axis] = d0 / 2.0;
            let q = p.map(|x| -x);
            let opts = SearchOptions { mode, ..Default::default() };
            let (c, diag) = find_critical_point(&pair(eps, beta, q, p, signs), m, &opts).unwrap();
            assert!(diag.grad_norm <= opts.gtol);
            let sep = c.distance(0, 1);
            assert!((sep - d_star).abs() < 1e-9, "{mode:?} {signs:?}: {sep} vs {d_star}");
            for pt in &c.points {
                assert!(pt[1 - axis].abs() < 1e-12);
            }
            assert!((c.points[0][axis] + c.points[1][axis]).abs() < 1e-12);
            let lg = (1.0 / eps).ln();
            assert!(sep >= 2.0 * beta * beta * eps * lg && sep <= 4.0 * eps * lg);
            assert_eq!(diag.signature, HessianSignature { positive: 2, negative: 2, near_null: 0 });
            assert!(diag.in_gamma);
        }
    }
}

#[test]
fn search_edge_cases() {
    let m = model();
    let one = SpikeConfig::new(0.05, 0.5, vec![vec![0.0, 0.0]], vec![1]);
    let (c, d) = find_critical_point(&one, m, &SearchOptions::default()).unwrap();
    assert_eq!(c.points, one.points);
    assert_eq!(d.iterations, 0);
    // same-sign pair on the A axis: attraction and confinement both pull inward
    let p = pair(0.05, 0.5, [-0.15, 0.0], [0.15, 0.0], [1, 1]);
    let r = find_critical_point(&p, m, &SearchOptions { max_iter: 40, ..Default::default() });
    assert!(
        matches!(r, Err(ReducedError::LeftDomain) | Err(ReducedError::NotConverged { .. })),
        "{r:?}"
    );
    let outside = pair(0.05, 0.5, [-0.01, 0.0], [0.01, 0.0], [1, -1]);
    assert_eq!(
        find_critical_point(&outside, m, &SearchOptions::default()).unwrap_err(),
        ReducedError::NotAdmissible
    );
}

#[test]
fn multi_start_orders_by_gradient() {
    let m = model();
    let seeds: Vec<SpikeConfig> = [0.25, 0.3, 0.4]
        .iter()
        .map(|&d| pair(0.05, 0.5, [-d / 2.0, 0.0], [d / 2.0, 0.0], [1, -1]))
        .collect();
    let opts = SearchOptions { mode: KernelMode::Asymptotic, ..Default::default() };
    let (ok, failed) = multi_start(&seeds, m, &opts);
    assert!(failed.is_empty());
    assert_eq!(ok.len(), 3);
    assert!(ok.windows(2).all(|w| w[0].1.grad_norm <= w[1].1.grad_norm));
    for (c, _) in &ok {
        assert!((c.distance(0, 1) - ok[0].0.distance(0, 1)).abs() < 1e-9);
    }
}

#[test]
fn maxmin_chain_boundary_values() {
    let m = model();
    let fam = ConfigFamily::new(FamilyKind::LinearChain, 1, 1, 0.1, &m.pot).unwrap();
    let opts = MaxminOptions { directions: 16, radial: 4, ..Default::default() };
    // asymptotic kernel on a chain in A: J = Φ/2 exactly, so J ≡ c4ε^{2β}/4 on K₀
    let asym = maxmin_report(&fam, m, 0.05, &MaxminOptions { mode: KernelMode::Asymptotic, ..opts }).unwrap();
    assert!(asym.k0_max_rel_dev < 1e-9, "{}", asym.k0_max_rel_dev);
    let r = maxmin_report(&fam, m, 0.05, &opts).unwrap();
    assert!(r.r_eps_inside);
    assert!(r.k0_max_rel_dev < 0.3);
    assert!(r.k_max <= r.k0_max * (1.0 + 1e-9));
    assert_eq!(r.samples.iter().filter(|s| s.boundary).count(), 16);
    assert_eq!(r.samples.len(), 16 * 5);
    let csv = r.to_csv();
    assert!(csv.starts_with("set,a1,r2,J\n"));
    assert_eq!(csv.lines().count(), 81);
    // Ũ is empty once ε^{2β} is too small for the confinement cost of r_ε
    let tight = ConfigFamily::new(FamilyKind::LinearChain, 1, 1, 0.9, &m.pot).unwrap();
    assert_eq!(
        maxmin_report(&tight, m, 0.1, &opts).unwrap_err(),
        ReducedError::EmptyFamily { eps: 0.1 }
    );
}

#[test]
fn maxmin_positive_cluster() {
    let m = model();
    let fam = ConfigFamily::new(FamilyKind::LinearChain, 2, 0, 0.5, &m.pot).unwrap();
    let r = maxmin_report(&fam, m, 0.05, &MaxminOptions { directions: 24, radial: 3, ..Default::default() })
        .unwrap();
    assert!(r.r_eps_inside);
    assert_eq!(r.center, vec![0.0, 0.0]);
    // on K₀: c2 Σ a_i² = c4ε^{2β}/2, so J = c4ε^{2β}/4 − c2 Σ b_i²/2 − ξ(|P_1 − P_2|/ε)
    let eps: f64 = 0.05;
    let b = eps * (1.0 / eps).ln();
    for s in r.samples.iter().filter(|s| s.boundary) {
        let c2a = m.rc.c2 * (s.a[0] * s.a[0] + s.a[1] * s.a[1]);
        assert!((c2a / r.level - 1.0).abs() < 1e-12);
        let sep = ((s.a[0] - s.a[1]).powi(2) + 4.0 * b * b).sqrt();
        let want = 0.5 * c2a - m.rc.c2 * b * b - m.interaction().xi(sep / eps);
        assert!((s.value - want).abs() < 1e-12 * r.target, "{} vs {want}", s.value);
    }
}
