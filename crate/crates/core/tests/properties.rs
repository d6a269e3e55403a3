use std::collections::BTreeSet;

use fpp_lab::fluctuations::{fit_exponent, outside_cylinder_count};
use fpp_lab::geodesic::{brute_force_passage_time, passage_time, shortest_path, shortest_path_with, SearchOptions};
use fpp_lab::influence::{estimate_influence_range, influence_set, smooth_envelope};
use fpp_lab::lattice::{confinement_region, edge_center_distance, Edge, Point};
use fpp_lab::perturbation::{f_statistic, TauField};
use fpp_lab::weights::{nice_set, EdgeEnvironment, GaussianRepresentation, WeightDistribution};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn p(c: &[i64]) -> Point {
    Point::new(c).unwrap()
}

fn laws() -> impl Strategy<Value = WeightDistribution> {
    prop_oneof![
        Just(WeightDistribution::default()),
        (0.2f64..2.0, 0.5f64..3.0).prop_map(|(a, w)| WeightDistribution::uniform(a, a + w).unwrap()),
        (0.5f64..1.5, -0.9f64..3.0).prop_map(|(a, t)| WeightDistribution::truncated_linear(a, a + 1.5, t).unwrap()),
    ]
}

proptest! {
    #[test]
    fn gplus_stays_in_its_band(dist in laws(), u in 0.0f64..=1.0, tau in 0.0f64..=1.0) {
        let rep = GaussianRepresentation::new(dist);
        let w = dist.a + u * (dist.b - dist.a);
        let g = rep.map(tau).unwrap();
        let y = g.apply(w).unwrap();
        prop_assert!(w <= y);
        prop_assert!(y <= dist.b.min(w + rep.c0() * tau));
        prop_assert!((g.inverse(y) - w).abs() <= 1e-9);
    }

    #[test]
    fn gplus_gains_on_nice_set(u in 0.0f64..=1.0, tau in 0.0f64..=1.0, k in 0usize..3) {
        let dist = WeightDistribution::default();
        let rep = GaussianRepresentation::new(dist);
        let delta = [0.01, 0.05, 0.1][k];
        let b = nice_set(&rep, delta).unwrap();
        let w = 1.0 + u;
        if b.contains(w) {
            prop_assert!(rep.map(tau).unwrap().apply(w).unwrap() >= w + delta * tau);
        }
    }

    #[test]
    fn gplus_is_monotone(tau in 0.0f64..=1.0, u in 0.0f64..1.0, du in 0.0f64..0.5) {
        let rep = GaussianRepresentation::new(WeightDistribution::default());
        let g = rep.map(tau).unwrap();
        let w1 = 1.0 + u;
        let w2 = (w1 + du).min(2.0);
        prop_assert!(g.apply(w1).unwrap() <= g.apply(w2).unwrap());
    }

    #[test]
    fn clipped_search_matches_exhaustive(seed in any::<u64>(), a in 0usize..16, b in 0usize..16) {
        prop_assume!(a != b);
        let env = EdgeEnvironment::new(WeightDistribution::default(), seed);
        let pts: Vec<Point> = (0..16).map(|k| p(&[k / 4, k % 4])).collect();
        let opts = SearchOptions { clip: Some((vec![0, 0], vec![3, 3])), ..SearchOptions::default() };
        let fast = shortest_path_with(&env, &pts[a], &pts[b], &opts).unwrap();
        let (slow, _) = brute_force_passage_time(&env, &pts[a], &pts[b], &pts).unwrap();
        prop_assert_eq!(fast.time, slow);
    }

    #[test]
    fn search_matches_sweep_over_confinement(seed in any::<u64>(), x in -6i64..=6, y in -4i64..=4) {
        prop_assume!(x != 0 || y != 0);
        let dist = WeightDistribution::default();
        let env = EdgeEnvironment::new(dist, seed);
        let o = p(&[0, 0]);
        let v = p(&[x, y]);
        let region = confinement_region(&o, &v, dist.a, dist.b).unwrap();
        let (lo, hi) = region.bounding_box();
        let mut pts = Vec::new();
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                let q = p(&[i, j]);
                if region.contains(&q) {
                    pts.push(q);
                }
            }
        }
        let (slow, _) = brute_force_passage_time(&env, &o, &v, &pts).unwrap();
        prop_assert_eq!(passage_time(&env, &o, &v).unwrap(), slow);
    }

    #[test]
    fn confinement_is_sound(seed in any::<u64>(), x in 1i64..=20, y in -8i64..=8) {
        let env = EdgeEnvironment::new(WeightDistribution::default(), seed);
        let o = p(&[0, 0]);
        let v = p(&[x, y]);
        let wide = SearchOptions { budget_scale: 2.0, ..SearchOptions::default() };
        let g1 = shortest_path(&env, &o, &v).unwrap();
        let g2 = shortest_path_with(&env, &o, &v, &wide).unwrap();
        prop_assert_eq!(g1.time, g2.time);
        prop_assert_eq!(g1.vertices, g2.vertices);
    }

    #[test]
    fn passage_time_is_a_metric(seed in any::<u64>(), c in prop::collection::vec(-5i64..=5, 6)) {
        let dist = WeightDistribution::default();
        let env = EdgeEnvironment::new(dist, seed);
        let (u, v, w) = (p(&c[0..2]), p(&c[2..4]), p(&c[4..6]));
        prop_assume!(u != v && v != w && u != w);
        let uv = passage_time(&env, &u, &v).unwrap();
        let vu = passage_time(&env, &v, &u).unwrap();
        let vw = passage_time(&env, &v, &w).unwrap();
        let uw = passage_time(&env, &u, &w).unwrap();
        let slack = 1e-9 * (uv + vw);
        prop_assert!((uv - vu).abs() <= 1e-9 * uv);
        prop_assert!(uw <= uv + vw + slack);
        let l1 = u.l1_distance(&v) as f64;
        prop_assert!(uv >= dist.a * l1 - 1e-9 && uv <= dist.b * l1 + 1e-9);
    }

    #[test]
    fn influence_sets_are_antitone(seed in 0u64..1000, e1 in 0.01f64..1.0, e2 in 0.01f64..1.0) {
        let field = estimate_influence_range(&WeightDistribution::default(), &p(&[7, 2]), seed, 0, 30).unwrap();
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let big = influence_set(&field, lo).unwrap();
        let small = influence_set(&field, hi).unwrap();
        prop_assert!(small.point.edges.is_subset(&big.point.edges));
        prop_assert!(big.lower.edges.is_subset(&big.point.edges));
        prop_assert!(big.point.edges.is_subset(&big.upper.edges));
    }

    #[test]
    fn merge_is_exact_and_order_free(seed in 0u64..1000, k in 1u64..20, m in 1u64..20) {
        let dist = WeightDistribution::default();
        let v = p(&[5, 3]);
        let a = estimate_influence_range(&dist, &v, seed, 0, k).unwrap();
        let b = estimate_influence_range(&dist, &v, seed, k, m).unwrap();
        let whole = estimate_influence_range(&dist, &v, seed, 0, k + m).unwrap();
        prop_assert_eq!(&a.merge(&b).unwrap(), &whole);
        prop_assert_eq!(&b.merge(&a).unwrap(), &whole);
        prop_assert!(a.merge(&a).is_err());
    }

    #[test]
    fn outside_count_is_monotone(seed in any::<u64>(), n in 4i64..40, r1 in 0.0f64..6.0, r2 in 0.0f64..6.0, l1 in 0.05f64..1.0, l2 in 0.05f64..1.0) {
        let env = EdgeEnvironment::new(WeightDistribution::default(), seed);
        let v = p(&[n, n / 3]);
        let g = shortest_path(&env, &p(&[0, 0]), &v).unwrap();
        let norm = v.l2_norm();
        let (ra, rb) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        let (la, lb) = if l1 <= l2 { (l1 * norm, l2 * norm) } else { (l2 * norm, l1 * norm) };
        prop_assert!(outside_cylinder_count(&g, &v, lb, ra).unwrap() >= outside_cylinder_count(&g, &v, lb, rb).unwrap());
        prop_assert!(outside_cylinder_count(&g, &v, la, ra).unwrap() <= outside_cylinder_count(&g, &v, lb, ra).unwrap());
    }

    #[test]
    fn f_statistic_obeys_cauchy_schwarz(seed in any::<u64>(), x in 2i64..30, k in 1usize..40) {
        let env = EdgeEnvironment::new(WeightDistribution::default(), seed);
        let g = shortest_path(&env, &p(&[0, 0]), &p(&[x, 1])).unwrap();
        let a: BTreeSet<Edge> = (0..k as i64).map(|i| Edge::new(p(&[i, 0]), 0).unwrap()).collect();
        let tau = TauField::indicator(&a).unwrap();
        let f = f_statistic(&g, &tau);
        let len = g.len() as f64;
        prop_assert!(f >= 0.0);
        prop_assert!(f <= len.min(tau.norm() * len.sqrt()) + 1e-12);
    }

    #[test]
    fn fit_recovers_planted_exponents(slope in -2.0f64..3.0, c in 0.1f64..10.0, seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let x = 2f64.powi(i);
                let noise = 1.0 + 0.01 * (2.0 * rng.random::<f64>() - 1.0);
                (x, c * x.powf(slope) * noise)
            })
            .collect();
        let fit = fit_exponent(&pts).unwrap();
        prop_assert!((fit.slope - slope).abs() <= 0.02);
    }
}

#[test]
fn envelope_is_log_smooth_on_many_pairs() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let gens: BTreeSet<Edge> = (0..12)
        .map(|_| Edge::new(p(&[rng.random_range(0..40), rng.random_range(-6..6)]), rng.random_range(0..2)).unwrap())
        .collect();
    let n = 64.0;
    let q = smooth_envelope(&gens, n).unwrap();
    for g in &gens {
        assert_eq!(q.q_at(g), 1.0);
    }
    let scale = n.ln();
    let mut checked = 0;
    while checked < 10_000 {
        let e = Edge::new(p(&[rng.random_range(-30..70), rng.random_range(-30..30)]), rng.random_range(0..2)).unwrap();
        let f = Edge::new(
            p(&[
                e.base().coords()[0] + rng.random_range(-8..=8),
                e.base().coords()[1] + rng.random_range(-8..=8),
            ]),
            rng.random_range(0..2),
        )
        .unwrap();
        if edge_center_distance(&e, &f).unwrap() > 2.0 * scale {
            continue;
        }
        let ratio = q.q_at(&e) / q.q_at(&f);
        assert!((0.1..=10.0).contains(&ratio), "{e} {f} {ratio}");
        checked += 1;
    }
}
