use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use spike_cluster::equilibrium_checker::*;

fn triangle() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]]
}

fn square() -> Vec<Vec<f64>> {
    vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![1.0, 1.0], vec![0.0, 1.0]]
}

/// Edge weights +1 on spokes, −1 on the ring.
fn hexagon_stress(uc: &UnitConfig) -> Vec<f64> {
    uc.edges.iter().map(|&(i, _)| if i == 0 { 1.0 } else { -1.0 }).collect()
}

#[test]
fn contact_graph_examples() {
    let two = contact_graph(&[vec![0.0, 0.0], vec![1.0, 0.0]], DEFAULT_CONTACT_TOL).unwrap();
    assert_eq!(two.edges, vec![(0, 1)]);
    assert_eq!(contact_graph(&triangle(), DEFAULT_CONTACT_TOL).unwrap().edges.len(), 3);
    let sq = contact_graph(&square(), DEFAULT_CONTACT_TOL).unwrap();
    assert_eq!(sq.edges, vec![(0, 1), (0, 3), (1, 2), (2, 3)]);

    let err = contact_graph(&[vec![0.0, 0.0], vec![0.9, 0.0]], 1e-6).unwrap_err();
    assert!(matches!(err, EquilibriumError::TooClose { i: 0, j: 1, .. }));
    // Near-misses outside tol are not contacts.
    let near = contact_graph(&[vec![0.0, 0.0], vec![1.0 + 1e-4, 0.0]], 1e-6).unwrap();
    assert!(near.edges.is_empty());
    assert!(matches!(
        contact_graph(&[vec![0.0], vec![1.0]], 1e-6),
        Err(EquilibriumError::BadDimension(1))
    ));
}

#[test]
fn balance_kernel_small_examples() {
    let two = contact_graph(&[vec![0.0, 0.0], vec![1.0, 0.0]], 1e-6).unwrap();
    assert_eq!(balance_kernel(&two).dim, 0);

    // Triangle: 6×3 map of rank 3 (columns are independent: each edge is the
    // only one joining its pair, and the unit directions at a vertex differ).
    let tri = contact_graph(&triangle(), 1e-6).unwrap();
    let k = balance_kernel(&tri);
    assert_eq!(k.dim, 0);
    assert_eq!(k.singular_values.len(), 3);
    // Gram matrix M^T M = [[2, ½, −½], …] for this edge order has eigenvalues 3, 3/2, 3/2.
    let mut sv: Vec<f64> = k.singular_values.iter().map(|s| s * s).collect();
    sv.sort_by(f64::total_cmp);
    for (got, want) in sv.iter().zip([1.5, 1.5, 3.0]) {
        assert!((got - want).abs() < 1e-12, "{got} vs {want}");
    }

    // Square: 4 edges, 8 equations, still no stress.
    assert_eq!(balance_kernel(&contact_graph(&square(), 1e-6).unwrap()).dim, 0);
}

#[test]
fn hexagon_with_center_kernel() {
    let uc = contact_graph(&hexagon_with_center(), DEFAULT_CONTACT_TOL).unwrap();
    assert_eq!(uc.edges.len(), 12);
    let a = hexagon_stress(&uc);
    // The stated vector balances every point.
    assert!(uc.balance_defect(&a) < 1e-14);
    let k = balance_kernel(&uc);
    assert_eq!(k.dim, 1);
    let b = &k.basis[0];
    let norm = (12f64).sqrt();
    for (x, y) in b.iter().zip(&a) {
        assert!((x - y / norm).abs() < 1e-12, "basis {b:?}");
    }
    assert!(kernel_residual(&uc, b) < 1e-8);
}

#[test]
fn dilation_examples() {
    let uc = contact_graph(&hexagon_with_center(), 1e-6).unwrap();
    let zero = dilation_value(&uc, &vec![0.0; 12]);
    assert_eq!(zero.value, 0.0);
    assert_eq!(zero.contraction, 0.0);

    let pos = dilation_value(&uc, &vec![0.3; 12]);
    assert!(pos.value > 0.0);
    assert!((pos.value - 3.6).abs() < 1e-12);

    let stress = dilation_value(&uc, &hexagon_stress(&uc));
    assert!(stress.value.abs() < 1e-14);
    assert!(stress.contraction.abs() < 1e-14);
}

fn rigid_motion(points: &[Vec<f64>], theta: f64, shift: [f64; 2]) -> Vec<Vec<f64>> {
    let (s, c) = theta.sin_cos();
    points
        .iter()
        .map(|p| vec![c * p[0] - s * p[1] + shift[0], s * p[0] + c * p[1] + shift[1]])
        .collect()
}

#[test]
fn kernel_dimension_is_rigid_motion_invariant() {
    let configs = [triangle(), square(), hexagon_with_center()];
    for pts in &configs {
        let base = balance_kernel(&contact_graph(pts, 1e-6).unwrap()).dim;
        for k in 0..10 {
            let t = 0.37 + 0.61 * k as f64;
            let moved = rigid_motion(pts, t, [3.0 * t.cos(), -2.0 + t]);
            let uc = contact_graph(&moved, 1e-6).unwrap();
            assert_eq!(balance_kernel(&uc).dim, base);
            for b in &balance_kernel(&uc).basis {
                assert!(uc.balance_defect(b) <= 1e-8);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dilation_identity_on_random_weights(
        coords in prop::collection::vec(-3.0f64..3.0, 14),
        a in prop::collection::vec(-5.0f64..5.0, 12),
    ) {
        // Random points with the hexagon's edge list: the identity needs no
        // unit lengths, only the pairing of balance terms with positions.
        let pts: Vec<Vec<f64>> = coords.chunks(2).map(<[f64]>::to_vec).collect();
        let template = contact_graph(&hexagon_with_center(), 1e-6).unwrap();
        let uc = UnitConfig { dim: 2, points: pts, edges: template.edges.clone(), tol: 1e-6 };
        prop_assume!(uc.edges.iter().all(|&(i, j)| uc.distance(i, j) > 1e-3));
        let d = dilation_value(&uc, &a);
        let scale = a.iter().map(|x| x.abs()).sum::<f64>() * 10.0;
        prop_assert!((d.value - d.contraction).abs() <= 1e-12 * scale);
    }

    #[test]
    fn canonical_form_is_relabeling_invariant(
        edges in prop::collection::btree_set((0usize..7, 0usize..7), 1..15),
        perm in Just((0..7).collect::<Vec<usize>>()).prop_shuffle(),
    ) {
        let edges: Vec<(usize, usize)> = edges.into_iter().filter(|(i, j)| i != j).collect();
        let relabeled: Vec<(usize, usize)> = edges.iter().map(|&(i, j)| (perm[i], perm[j])).collect();
        let a = canonical_form(7, &edges);
        let b = canonical_form(7, &relabeled);
        prop_assert_eq!(&a, &b);
        // The canonical edge list is itself a fixed point.
        prop_assert_eq!(canonical_form(7, &a.edges()), a);
    }

    #[test]
    fn nnls_matches_kkt(m in prop::collection::vec(-1.0f64..1.0, 20), b in prop::collection::vec(-1.0f64..1.0, 5)) {
        let a = DMatrix::from_row_slice(5, 4, &m);
        let b = DVector::from_vec(b);
        let x = nnls(&a, &b);
        let w = a.transpose() * (&b - &a * &x);
        for j in 0..4 {
            prop_assert!(x[j] >= 0.0);
            // KKT: gradient non-positive on the active set, zero on the passive set.
            if x[j] > 1e-12 {
                prop_assert!(w[j].abs() < 1e-9);
            } else {
                prop_assert!(w[j] < 1e-9);
            }
        }
    }
}

#[test]
fn canonical_form_distinguishes_path_and_star() {
    let path = canonical_form(4, &[(0, 1), (1, 2), (2, 3)]);
    let star = canonical_form(4, &[(0, 1), (0, 2), (0, 3)]);
    assert_ne!(path, star);
    assert_eq!(path.degrees, vec![2, 2, 1, 1]);
    assert_eq!(star.degrees, vec![3, 1, 1, 1]);
    assert_ne!(path.id(), star.id());
}

#[test]
fn sign_constrained_examples() {
    let two = contact_graph(&[vec![0.0, 0.0], vec![1.0, 0.0]], 1e-6).unwrap();
    for tau in [[1i8, 1], [1, -1]] {
        assert!(!sign_constrained_kernel(&two, &tau, ConeSweep::default()).feasible);
    }

    let hex = contact_graph(&hexagon_with_center(), 1e-6).unwrap();
    // Center −, ring +: spokes get μ₂ + μ₁, ring edges μ₂ − μ₁.
    let mut tau = vec![1i8; 7];
    tau[0] = -1;
    let out = sign_constrained_kernel(&hex, &tau, ConeSweep { angles: 8 });
    assert!(out.feasible);
    let w = out.witness.as_ref().unwrap();
    let unconstrained = &balance_kernel(&hex).basis[0];
    let norm = w.weights.iter().map(|x| x * x).sum::<f64>().sqrt();
    let cos: f64 = w.weights.iter().zip(unconstrained).map(|(a, b)| a * b).sum::<f64>() / norm;
    assert!((cos.abs() - 1.0).abs() < 1e-9, "witness parallel to the stress, cos = {cos}");
    assert_eq!(out.kernel.dim, 1);
    // Feasible exactly when spoke and ring coefficients have opposite signs:
    // θ ∈ (−π/4, π/4) ∪ (3π/4, 5π/4). On the 8-point sweep that is {0, π};
    // at θ = ±π/4 one coefficient vanishes.
    let pi = std::f64::consts::PI;
    assert_eq!(out.feasible_angles.len(), 2, "{:?}", out.feasible_angles);
    assert!(out.feasible_angles[0].abs() < 1e-12);
    assert!((out.feasible_angles[1] - pi).abs() < 1e-12);
    let fine = sign_constrained_kernel(&hex, &tau, ConeSweep::default());
    for t in &fine.feasible_angles {
        let c = t.cos();
        assert!(c.abs() > std::f64::consts::FRAC_1_SQRT_2, "θ = {t}");
    }
    assert_eq!(fine.feasible_angles.len(), 178);

    // Same τ everywhere: one common sign on all edges, excluded by dilation.
    let same = sign_constrained_kernel(&hex, &[1; 7], ConeSweep::default());
    assert!(!same.feasible);
    assert_eq!(same.kernel.dim, 0);
}

#[test]
fn search_three_points() {
    let r = search_equilibria(&SearchEquilibriaOptions::new(3, 2, 2000, 11)).unwrap();
    assert!(!r.found_nontrivial());
    assert!(r.verdict.starts_with("no nontrivial kernel found"));
    // Single edge, path and triangle are the only contact graphs on 3 points.
    let ids: Vec<&str> = r.graphs.iter().map(|g| g.graph_id.as_str()).collect();
    assert!(ids.iter().all(|id| ["l3e1-4", "l3e2-6", "l3e3-7"].contains(id)), "{ids:?}");
    assert!(ids.contains(&"l3e3-7"));
    for g in &r.graphs {
        let uc = contact_graph(&g.points, r.tol).unwrap();
        assert_eq!(uc.edges, g.edges);
        assert_eq!(balance_kernel(&uc).dim, g.kernel_dim);
    }
}

#[test]
fn search_seven_points_seeded() {
    let r = search_equilibria(&SearchEquilibriaOptions::new(7, 2, 200, 3)).unwrap();
    assert_eq!(r.seeded, vec!["hexagon+center".to_string()]);
    assert!(r.found_nontrivial());
    assert!(r.verdict.contains("nontrivial kernel found (hexagon+center"));
    let hex = r.graphs.iter().find(|g| g.source == "hexagon+center").unwrap();
    assert_eq!(hex.edges.len(), 12);
    assert_eq!(hex.kernel_dim, 1);

    let mut no_seed = SearchEquilibriaOptions::new(7, 2, 0, 3);
    no_seed.known_seeds = false;
    let empty = search_equilibria(&no_seed).unwrap();
    assert!(empty.graphs.is_empty() && !empty.found_nontrivial());
}

#[test]
fn search_is_deterministic_and_serializes() {
    let opts = SearchEquilibriaOptions::new(5, 2, 300, 42);
    let a = search_equilibria(&opts).unwrap();
    let b = search_equilibria(&opts).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    let v: serde_json::Value = serde_json::from_str(&a.to_json()).unwrap();
    assert_eq!(v["trials"], 300);
    assert_eq!(v["seed"], 42);
    for key in ["graph_id", "points", "edges", "kernel_dim", "kernel_basis"] {
        assert!(v["graphs"][0].get(key).is_some(), "missing {key}");
    }
    let other = search_equilibria(&SearchEquilibriaOptions::new(5, 2, 300, 43)).unwrap();
    assert_ne!(a.to_json(), other.to_json());
}

#[test]
fn search_in_three_dimensions_and_bad_requests() {
    let r = search_equilibria(&SearchEquilibriaOptions::new(4, 3, 300, 5)).unwrap();
    assert!(!r.found_nontrivial());
    assert!(r.graphs.iter().all(|g| g.points[0].len() == 3));
    assert!(search_equilibria(&SearchEquilibriaOptions::new(8, 2, 1, 0)).is_err());
    assert!(search_equilibria(&SearchEquilibriaOptions::new(3, 4, 1, 0)).is_err());
}
