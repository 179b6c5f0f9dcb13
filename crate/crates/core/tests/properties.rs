use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use robust_spanner_core::expander::build_bipartite;
use robust_spanner_core::faults::compute_fplus_t;
use robust_spanner_core::fst::{build_fst, label, largest_special_subtrees, rank, special_nodes};
use robust_spanner_core::geometry::{diam_prime, uniform_points};
use robust_spanner_core::seed::{stream, Seed};
use robust_spanner_core::spanner_gt::{build_gt, RecKind};
use robust_spanner_core::verify::{dijkstra, stretch_check};
use robust_spanner_core::wspd::{build_wspd, verify_wspd};
use robust_spanner_core::{build_spanner, compute_fplus, random_faults, GeometricGraph, PointSet, SpannerParams};

fn config() -> ProptestConfig {
    ProptestConfig { cases: 24, ..ProptestConfig::default() }
}

fn sorted_dedup(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    v.dedup();
    v
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn node_boxes_bracket_the_exact_diameter(n in 2usize..120, dim in 1usize..4, seed in any::<u64>()) {
        let pts = uniform_points(n, dim, seed).unwrap();
        let t = build_fst(&pts).unwrap();
        for u in 0..t.len() as u32 {
            let exact = pts.diam_exact_of(t.leaves(u)).unwrap();
            let dp = diam_prime(t.bbox(u));
            prop_assert!(exact <= dp * (1.0 + 1e-9));
            prop_assert!(dp <= dim as f64 * exact * (1.0 + 1e-9));
        }
        prop_assert!(t.fair_split_violations().is_empty());
    }

    #[test]
    fn wspd_is_separated_and_exact(n in 2usize..90, dim in 1usize..4, s in 1.0f64..6.0, seed in any::<u64>()) {
        let pts = uniform_points(n, dim, seed).unwrap();
        let t = build_fst(&pts).unwrap();
        let w = build_wspd(&t, s).unwrap();
        let rep = verify_wspd(&pts, &t, &w, s);
        prop_assert!(rep.is_ok(), "{:?}", rep);
    }

    #[test]
    fn largest_special_subtree_keeps_the_label(n in 1usize..200, eps in 0.01f64..0.5, seed in any::<u64>()) {
        let pts = uniform_points(n, 2, seed).unwrap();
        let topo = build_fst(&pts).unwrap().topology().clone();
        let special = special_nodes(&topo, eps).unwrap();
        let best = largest_special_subtrees(&topo, eps).unwrap();
        for u in 0..topo.len() as u32 {
            let b = best[u as usize];
            prop_assert!(special.binary_search(&b).is_ok());
            prop_assert_eq!(label(topo.size(b) as u64, eps).unwrap(), label(topo.size(u) as u64, eps).unwrap());
        }
        // special nodes with equal labels have disjoint leaf sets
        let t = build_fst(&pts).unwrap();
        for (i, &u) in special.iter().enumerate() {
            for &w in &special[i + 1..] {
                if label(topo.size(u) as u64, eps).unwrap() == label(topo.size(w) as u64, eps).unwrap() {
                    let lu = t.leaves(u);
                    prop_assert!(t.leaves(w).iter().all(|x| !lu.contains(x)));
                }
            }
        }
    }

    #[test]
    fn expander_queries_are_monotone(
        na in 1usize..12,
        nb in 1usize..12,
        degree in 1u32..6,
        seed in any::<u64>(),
        picks in proptest::collection::vec(any::<bool>(), 24),
    ) {
        let left: Vec<u32> = (0..na as u32).collect();
        let right: Vec<u32> = (50..50 + nb as u32).collect();
        let g = build_bipartite(left.clone(), right.clone(), degree, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let again = build_bipartite(left.clone(), right.clone(), degree, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert_eq!(&g, &again);
        for j in 0..nb {
            let c = g.neighbour_count(j);
            prop_assert!(c >= 1 && c <= (degree as usize).min(na));
        }
        let ys: Vec<u32> = left.iter().copied().filter(|&a| picks[a as usize]).collect();
        let ys_big: Vec<u32> = left.iter().copied().filter(|&a| picks[a as usize] || picks[12 + a as usize]).collect();
        let (s, s_big) = (g.shadow(&ys), g.shadow(&ys_big));
        prop_assert!(s.iter().all(|b| s_big.contains(b)));
        let bs: Vec<u32> = right.iter().copied().filter(|&b| picks[(b - 50) as usize]).collect();
        let bs_big: Vec<u32> = right.iter().copied().filter(|&b| picks[(b - 50) as usize] || picks[12 + (b - 50) as usize]).collect();
        let (nbh, nbh_big) = (g.neighbourhood(&bs), g.neighbourhood(&bs_big));
        prop_assert!(nbh.iter().all(|a| nbh_big.contains(a)));
    }

    #[test]
    fn recursion_invariants(n in 1usize..260, scale in prop_oneof![Just(1.0), Just(0.002)], seed in any::<u64>()) {
        let pts = uniform_points(n, 2, seed).unwrap();
        let params = SpannerParams::new(n, 2, 0.25, 4.0).unwrap().with_degree_scale(scale).unwrap();
        let t = build_fst(&pts).unwrap();
        let (gt, rec) = build_gt(t.topology(), &params, Seed(seed).child(stream::GT)).unwrap();
        prop_assert!((rec.depth() as f64) <= (n as f64).ln() / 1.5f64.ln() + 1e-9);
        prop_assert!(rec.balance_violations().is_empty());
        for node in &rec.nodes {
            let size = node.size();
            prop_assert_eq!(node.kind == RecKind::Clique, size <= params.kappa as usize);
            if let (Some(sp), true) = (&node.split, size > params.kappa as usize) {
                prop_assert!(rank(rec.nodes[sp.u0].size() as u64) < rank(size as u64));
                prop_assert!(rank(rec.nodes[sp.t1].size() as u64) < rank(size as u64));
            }
        }
        // clique nodes below a clique parent add nothing new, so every clique
        // edge lies inside one small node
        for (i, j) in gt.edges() {
            let inside_small = rec.nodes.iter().any(|nd| {
                nd.size() <= params.kappa as usize && nd.points.binary_search(&i).is_ok() && nd.points.binary_search(&j).is_ok()
            });
            let from_expander = rec.nodes.iter().filter_map(|nd| nd.split.as_ref()).any(|sp| {
                sp.h.shrink.edges().any(|(b, a)| (a.min(b), a.max(b)) == (i, j))
                    || sp.h.expand.as_ref().is_some_and(|e| {
                        e.left.binary_search(&i).is_ok() && e.left.binary_search(&j).is_ok()
                            && (e.adj.iter().all(|x| matches!(x, robust_spanner_core::expander::Neighbours::All))
                                || e.edges().any(|(b, a)| (a.min(b), a.max(b)) == (i, j)))
                    })
            });
            prop_assert!(inside_small || from_expander, "edge {} {} unexplained", i, j);
        }
        let (g, trace) = build_spanner(&pts, &params, seed).unwrap();
        prop_assert_eq!(&trace.gt_graph(), &gt);
        prop_assert!(gt.edges().all(|(i, j)| g.has_edge(i, j)));
    }

    #[test]
    fn wprime_loses_little_of_each_pair(n in 2usize..200, eps in 0.02f64..0.33, seed in any::<u64>()) {
        let pts = uniform_points(n, 2, seed).unwrap();
        let params = SpannerParams::new(n, 2, eps, 4.0).unwrap().with_degree_scale(0.002).unwrap();
        let (_, trace) = build_spanner(&pts, &params, seed).unwrap();
        for p in &trace.wspd.pairs {
            let (a, a2) = (trace.tree.leaves(p.a), trace.tree.leaves(p.a_prime.unwrap()));
            prop_assert!(a2.iter().all(|x| a.contains(x)));
            prop_assert!(((a.len() - a2.len()) as f64) <= 2.0 * eps * a.len() as f64 + 1e-9);
        }
    }

    #[test]
    fn fault_sets_and_bounds(n in 2usize..160, eps in 0.05f64..0.3, frac in 0.0f64..0.5, seed in any::<u64>()) {
        let pts = uniform_points(n, 2, seed).unwrap();
        let params = SpannerParams::new(n, 2, eps, 4.0).unwrap();
        let (_, trace) = build_spanner(&pts, &params, seed).unwrap();
        let f = random_faults(n, frac, seed).unwrap();
        let rep = compute_fplus(&trace, &f).unwrap();
        prop_assert!(f.iter().all(|x| rep.f_plus.binary_search(x).is_ok()));
        prop_assert!(f.iter().all(|x| rep.f_plus_t.binary_search(x).is_ok()));
        prop_assert_eq!(&rep.f_plus, &sorted_dedup(rep.f_plus.clone()));
        let r = rank(n as u64) as f64;
        let k = f.len() as f64;
        prop_assert!(rep.f_plus_t.len() as f64 <= (1.0 + eps * r / params.delta as f64) * k + 1e-9);
        prop_assert!(rep.f_plus.len() as f64 <= (1.0 + eps).powi(3) / (1.0 - 3.0 * eps) * k + 1e-9);
    }

    #[test]
    fn fplus_t_grows_with_one_more_fault(
        n in 8usize..200,
        frac in 0.0f64..0.3,
        extra in any::<u32>(),
        seed in any::<u64>(),
    ) {
        // only at full degrees; see fplus_t_is_not_monotone_at_sparse_degrees
        let pts = uniform_points(n, 2, seed).unwrap();
        let params = SpannerParams::new(n, 2, 0.25, 4.0).unwrap();
        let t = build_fst(&pts).unwrap();
        let (_, rec) = build_gt(t.topology(), &params, Seed(seed)).unwrap();
        let f = random_faults(n, frac, seed).unwrap();
        let mut f2 = f.clone();
        f2.push(extra % n as u32);
        let f2 = sorted_dedup(f2);
        let a = compute_fplus_t(&rec, &f, &params).unwrap();
        let b = compute_fplus_t(&rec, &f2, &params).unwrap();
        prop_assert!(a.iter().all(|x| b.binary_search(x).is_ok()));
    }

    #[test]
    fn graph_distances_respect_geometry(n in 2usize..40, density in 0.1f64..1.0, removed in proptest::collection::vec(any::<bool>(), 40), seed in any::<u64>()) {
        let pts = uniform_points(n, 2, seed).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let edges: Vec<(u32, u32)> = (0..n as u32)
            .flat_map(|i| (i + 1..n as u32).map(move |j| (i, j)))
            .filter(|_| rand::Rng::gen_bool(&mut rng, density))
            .collect();
        let g = GeometricGraph::from_edges(n, edges).unwrap();
        let none = vec![false; n];
        let mut cut: Vec<bool> = removed[..n].to_vec();
        cut[0] = false;
        let full = dijkstra(&g, &pts, 0, &none, None, f64::INFINITY);
        let part = dijkstra(&g, &pts, 0, &cut, None, f64::INFINITY);
        for q in 0..n {
            prop_assert!(full[q] >= pts.dist(0, q) * (1.0 - 1e-12));
            if !cut[q] {
                prop_assert!(part[q] >= full[q] * (1.0 - 1e-12));
            }
        }
    }

    #[test]
    fn complete_graph_has_stretch_one(n in 2usize..40, frac in 0.0f64..0.6, seed in any::<u64>()) {
        let pts: PointSet = uniform_points(n, 2, seed).unwrap();
        let all: Vec<(u32, u32)> = (0..n as u32).flat_map(|i| (i + 1..n as u32).map(move |j| (i, j))).collect();
        let g = GeometricGraph::from_edges(n, all).unwrap();
        let f = random_faults(n, frac, seed).unwrap();
        let rep = stretch_check(&g, &pts, &f, &f, 1.0, seed).unwrap();
        prop_assert!(rep.is_ok());
        let m = (n - f.len()) as u64;
        prop_assert_eq!(rep.checked_pairs, m * m.saturating_sub(1) / 2);
        if m >= 2 {
            prop_assert_eq!(rep.max_stretch, 1.0);
        }
    }
}

/// One more fault can move a recursion node from the shadow branch to the
/// "abandon all of T_u0" branch, which drops the shadow inside T1.
#[test]
fn fplus_t_is_not_monotone_at_sparse_degrees() {
    let (n, seed) = (20, 12934506726194158752u64);
    let pts = uniform_points(n, 2, seed).unwrap();
    let params = SpannerParams::new(n, 2, 0.25, 4.0).unwrap().with_degree_scale(0.01).unwrap();
    let t = build_fst(&pts).unwrap();
    let (_, rec) = build_gt(t.topology(), &params, Seed(seed)).unwrap();
    let f = vec![3, 5, 7, 10, 12, 14];
    let a = compute_fplus_t(&rec, &f, &params).unwrap();
    let b = compute_fplus_t(&rec, &[2, 3, 5, 7, 10, 12, 14], &params).unwrap();
    let lost: Vec<u32> = a.iter().copied().filter(|x| b.binary_search(x).is_err()).collect();
    assert_eq!(lost, vec![8, 15]);
}
