//! Independent oracles for the graph atlas: exhaustive enumeration counts,
//! canonical-form invariance under relabeling, and deterministic grid
//! quadrature for the d=1 configuration integrals that the atlas estimates
//! by Monte Carlo.

use rand::seq::SliceRandom;
use rand::Rng;

use rgg_extremes::graph_atlas::{
    enumerate_candidates, k2, k3, p3, Atlas, Feasibility, SmallGraph,
};
use rgg_extremes::sampling::{Density, RngStream};
use rgg_extremes::NormSpec;

#[test]
fn candidate_class_counts() {
    // connected graphs on k+1 vertices with a vertex of degree k, up to
    // isomorphism: 1 (K2), 2 (P3, K3), 4 (star, paw-ish chains, ..., K4)
    let counts: Vec<usize> = (1..=3).map(|k| enumerate_candidates(k).unwrap().len()).collect();
    assert_eq!(counts, vec![1, 2, 4]);

    // q = number of degree-k vertices per class
    let mut q2: Vec<u32> = enumerate_candidates(2).unwrap().iter().map(|c| c.q).collect();
    q2.sort_unstable();
    assert_eq!(q2, vec![1, 3]); // P3 has one center, K3 has three

    for k in 1..=3 {
        for class in enumerate_candidates(k).unwrap() {
            assert!(class.canonical.is_connected());
            assert_eq!(class.canonical.vertex_count(), k + 1);
            assert!((0..=k).any(|v| class.canonical.degree(v) == k));
            assert!(class.q >= 1);
        }
    }
}

#[test]
fn canonical_form_is_relabeling_invariant() {
    let mut rng = RngStream::new(0xA7145, 0).rng();
    for _ in 0..300 {
        let n = rng.gen_range(2..=6);
        let mut g = SmallGraph::empty(n).unwrap();
        for a in 0..n {
            for b in (a + 1)..n {
                if rng.gen_bool(0.5) {
                    g.set_edge(a, b, true);
                }
            }
        }
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut h = SmallGraph::empty(n).unwrap();
        for a in 0..n {
            for b in (a + 1)..n {
                if g.has_edge(a, b) {
                    h.set_edge(perm[a], perm[b], true);
                }
            }
        }
        assert_eq!(g.canonical_form(), h.canonical_form());
        assert!(g.is_isomorphic(&h));
        assert_eq!(g.is_connected(), h.is_connected());
        assert_eq!(g.max_independent_set(), h.max_independent_set());
        // bitstring round trip
        let back = SmallGraph::from_bitstring(&g.bitstring()).unwrap();
        assert_eq!(back, g);
    }
}

/// Deterministic midpoint quadrature for
/// `I_Γ = ∫∫ 1{G({0,y₁,y₂}; 1) ≅ Γ} dy₁ dy₂` in d = 1, where the support
/// is contained in [−2,2]². The three possible edges are |y₁|≤1, |y₂|≤1,
/// |y₁−y₂|≤1, so the classification is explicit boolean logic.
fn quadrature_i_gamma_d1() -> (f64, f64) {
    let cells = 4000;
    let w = 4.0 / cells as f64;
    let (mut i_p3, mut i_k3) = (0.0, 0.0);
    for a in 0..cells {
        let y1 = -2.0 + (a as f64 + 0.5) * w;
        for b in 0..cells {
            let y2 = -2.0 + (b as f64 + 0.5) * w;
            let e01 = y1.abs() <= 1.0;
            let e02 = y2.abs() <= 1.0;
            let e12 = (y1 - y2).abs() <= 1.0;
            let edges = e01 as u8 + e02 as u8 + e12 as u8;
            if edges == 3 {
                i_k3 += w * w;
            } else if edges == 2 {
                i_p3 += w * w; // any two of three edges form a path
            }
        }
    }
    (i_p3, i_k3)
}

#[test]
fn mu_constants_match_quadrature_d1() {
    let (i_p3, i_k3) = quadrature_i_gamma_d1();
    // μ_Γ = (1/3!)·∫f³·I_Γ = I_Γ/6 for the uniform density in d = 1
    let (mu_p3_quad, mu_k3_quad) = (i_p3 / 6.0, i_k3 / 6.0);
    assert!((mu_p3_quad - 0.5).abs() < 2e-3, "quadrature μ_P3 = {mu_p3_quad}");
    assert!((mu_k3_quad - 0.5).abs() < 2e-3, "quadrature μ_K3 = {mu_k3_quad}");

    let atlas = Atlas::build(
        2,
        1,
        NormSpec::Euclidean,
        Density::UniformCube,
        2_000_000,
        RngStream::new(0xA7145, 1),
    )
    .unwrap();
    for class in &atlas.classes {
        let reference = if class.canonical == k3().canonical_form() {
            mu_k3_quad
        } else {
            assert_eq!(class.canonical, p3().canonical_form());
            mu_p3_quad
        };
        assert!(
            (class.mu - reference).abs() <= 5.0 * class.se + 2e-3,
            "MC μ = {} ± {} vs quadrature {reference}",
            class.mu,
            class.se
        );
    }
    assert!((atlas.mu_dk() - (mu_p3_quad + mu_k3_quad)).abs() < 0.01);
}

#[test]
fn k2_mu_is_exact_in_d1_and_d2() {
    // d=1: I_{K2} = |[-1,1]| = 2, μ = (1/2!)·∫f²·2 = 1, zero variance
    let a1 = Atlas::build(
        1,
        1,
        NormSpec::Euclidean,
        Density::UniformCube,
        100_000,
        RngStream::new(0xA7145, 2),
    )
    .unwrap();
    assert_eq!(a1.classes.len(), 1);
    assert_eq!(a1.classes[0].canonical, k2().canonical_form());
    assert_eq!(a1.mu_dk(), 1.0);
    assert_eq!(a1.classes[0].se, 0.0);

    // d=2: I_{K2} = θ₂ = π, μ = π/2 exactly by the same argument
    let a2 = Atlas::build(
        1,
        2,
        NormSpec::Euclidean,
        Density::UniformCube,
        100_000,
        RngStream::new(0xA7145, 3),
    )
    .unwrap();
    assert_eq!(a2.mu_dk(), std::f64::consts::PI / 2.0);
}

#[test]
fn d1_star_is_infeasible_by_certificate() {
    // K_{1,3}: three leaves at pairwise distance > 1 cannot exist in d=1
    let atlas = Atlas::build(
        3,
        1,
        NormSpec::Euclidean,
        Density::UniformCube,
        100_000,
        RngStream::new(0xA7145, 4),
    )
    .unwrap();
    let star = SmallGraph::from_edges(4, &[(0, 1), (0, 2), (0, 3)]).unwrap().canonical_form();
    let class = atlas.classes.iter().find(|c| c.canonical == star).expect("star enumerated");
    assert_eq!(class.feasible, Feasibility::No);
    assert_eq!(class.mu, 0.0);
    assert_eq!(class.se, 0.0);
}

#[test]
fn atlas_cache_round_trip() {
    let atlas = Atlas::build(
        2,
        2,
        NormSpec::MaxCoordinate,
        Density::RadialPeak { s: 2.0 },
        100_000,
        RngStream::new(0xA7145, 5),
    )
    .unwrap();
    let mut buf = Vec::new();
    atlas.save(&mut buf).unwrap();
    let loaded = Atlas::load(buf.as_slice()).unwrap();
    assert_eq!(loaded.k, atlas.k);
    assert_eq!(loaded.d, atlas.d);
    assert_eq!(loaded.classes.len(), atlas.classes.len());
    for (a, b) in atlas.classes.iter().zip(&loaded.classes) {
        assert_eq!(a.canonical, b.canonical);
        assert_eq!(a.q, b.q);
        assert_eq!(a.mu.to_bits(), b.mu.to_bits());
        assert_eq!(a.n_samples, b.n_samples);
    }
    assert_eq!(loaded.mu_dk().to_bits(), atlas.mu_dk().to_bits());
}

#[test]
fn configuration_graph_matches_pairwise_distances() {
    let mut rng = RngStream::new(0xA7145, 6).rng();
    for _ in 0..200 {
        let d = rng.gen_range(1..=3);
        let j = rng.gen_range(2..=5);
        let pts: Vec<Vec<f64>> =
            (0..j).map(|_| (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect()).collect();
        let refs: Vec<&[f64]> = pts.iter().map(|p| p.as_slice()).collect();
        let r = rng.gen_range(0.2..2.0);
        let g = SmallGraph::from_configuration(&refs, r, NormSpec::Euclidean).unwrap();
        for a in 0..j {
            for b in (a + 1)..j {
                let expect = NormSpec::Euclidean.dist(&pts[a], &pts[b]) <= r;
                assert_eq!(g.has_edge(a, b), expect);
            }
        }
    }
}
