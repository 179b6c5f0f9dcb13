//! Exact shortest paths on vertex-deleted geometric graphs, and the audits
//! built on them: stretch over the surviving points, the explode property of
//! `G_T`, and edge statistics.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::seq::SliceRandom;

use crate::fst::NodeId;
use crate::geometry::PointSet;
use crate::graph::GeometricGraph;
use crate::math;
use crate::seed::Seed;
use crate::spanner_gw::BuildTrace;
use crate::{Error, Result};

/// Surviving-point count up to which every pair is checked.
pub const EXHAUSTIVE_SURVIVORS: usize = 1500;
/// Sources drawn when the survivors exceed [`EXHAUSTIVE_SURVIVORS`].
pub const SAMPLED_SOURCES: usize = 1500;
/// Ancestors examined per point by [`explode_check`].
pub const EXPLODE_ANCESTORS: usize = 8;

const REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, PartialEq)]
struct Entry(f64, u32);

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Single-source Dijkstra with Euclidean edge lengths, skipping `removed`
/// vertices. Stops early once every vertex flagged in `targets` is settled,
/// or once the frontier passes `radius`.
pub fn dijkstra(
    g: &GeometricGraph,
    pts: &PointSet,
    src: u32,
    removed: &[bool],
    targets: Option<(&[bool], usize)>,
    radius: f64,
) -> Vec<f64> {
    let n = g.vertex_count();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    let mut heap = BinaryHeap::new();
    let mut remaining = targets.map_or(usize::MAX, |(_, k)| k);
    dist[src as usize] = 0.0;
    heap.push(Entry(0.0, src));
    while let Some(Entry(d, v)) = heap.pop() {
        if done[v as usize] {
            continue;
        }
        if d > radius {
            break;
        }
        done[v as usize] = true;
        if let Some((t, _)) = targets {
            if t[v as usize] {
                remaining -= 1;
                if remaining == 0 {
                    break;
                }
            }
        }
        for &w in g.neighbours(v) {
            if removed[w as usize] || done[w as usize] {
                continue;
            }
            let nd = d + pts.dist(v as usize, w as usize);
            if nd < dist[w as usize] {
                dist[w as usize] = nd;
                heap.push(Entry(nd, w));
            }
        }
    }
    dist
}

/// `dist_{G−removed}(src, dst)`, infinite when disconnected.
pub fn shortest_path(g: &GeometricGraph, pts: &PointSet, src: u32, dst: u32, removed: &[u32]) -> Result<f64> {
    let n = g.vertex_count();
    if src as usize >= n || dst as usize >= n || pts.len() != n {
        return Err(Error::invalid("vertex out of range"));
    }
    let mut mask = vec![false; n];
    for &r in removed {
        if r as usize >= n {
            return Err(Error::invalid("removed vertex out of range"));
        }
        mask[r as usize] = true;
    }
    if mask[src as usize] || mask[dst as usize] {
        return Err(Error::invalid("endpoint is removed"));
    }
    let mut target = vec![false; n];
    target[dst as usize] = true;
    Ok(dijkstra(g, pts, src, &mask, Some((&target, 1)), f64::INFINITY)[dst as usize])
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StretchReport {
    pub checked_pairs: u64,
    pub max_stretch: f64,
    pub violations: Vec<(u32, u32, f64)>,
    pub t_target: f64,
    pub survivors: usize,
    pub sources: usize,
    pub exhaustive: bool,
    /// Checked pairs over all surviving pairs.
    pub coverage: f64,
}

impl StretchReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// The work behind a stretch check: which vertices are deleted, which
/// survive, and which sources to run. Split into chunks for parallel runs.
#[derive(Debug, Clone)]
pub struct StretchPlan {
    pub removed: Vec<bool>,
    pub survivor: Vec<bool>,
    pub survivors: Vec<u32>,
    pub sources: Vec<u32>,
    pub exhaustive: bool,
    pub t: f64,
}

/// Surviving points are `P ∖ F⁺`; paths live in `G − F`.
pub fn stretch_plan(n: usize, f: &[u32], f_plus: &[u32], t: f64, seed: u64) -> Result<StretchPlan> {
    let mut removed = vec![false; n];
    let mut survivor = vec![true; n];
    for &x in f {
        *removed.get_mut(x as usize).ok_or_else(|| Error::invalid("fault out of range"))? = true;
    }
    for &x in f_plus {
        *survivor.get_mut(x as usize).ok_or_else(|| Error::invalid("abandoned point out of range"))? = false;
    }
    if (0..n).any(|i| removed[i] && survivor[i]) {
        return Err(Error::invalid("F must be contained in F+"));
    }
    let survivors: Vec<u32> = (0..n as u32).filter(|&i| survivor[i as usize]).collect();
    let exhaustive = survivors.len() <= EXHAUSTIVE_SURVIVORS;
    let sources = if exhaustive {
        survivors.clone()
    } else {
        let mut s = survivors.clone();
        s.shuffle(&mut Seed(seed).rng());
        s.truncate(SAMPLED_SOURCES);
        s.sort_unstable();
        s
    };
    Ok(StretchPlan { removed, survivor, survivors, sources, exhaustive, t })
}

/// Stretch over the sources in `sources` (a slice of `plan.sources`). In
/// exhaustive mode each unordered pair is examined from its smaller endpoint.
pub fn stretch_partial(g: &GeometricGraph, pts: &PointSet, plan: &StretchPlan, sources: &[u32]) -> StretchReport {
    let n = g.vertex_count();
    let mut rep = StretchReport { t_target: plan.t, max_stretch: 0.0, ..Default::default() };
    let mut target = vec![false; n];
    for &p in sources {
        let wanted = |q: u32| q != p && plan.survivor[q as usize] && (!plan.exhaustive || q > p);
        // direct edges have stretch exactly 1
        let mut k = 0;
        let mut direct = 0u64;
        for &q in &plan.survivors {
            if wanted(q) {
                if g.has_edge(p, q) {
                    direct += 1;
                } else {
                    target[q as usize] = true;
                    k += 1;
                }
            }
        }
        rep.checked_pairs += direct;
        if direct > 0 {
            rep.max_stretch = rep.max_stretch.max(1.0);
        }
        if k == 0 {
            continue;
        }
        let dist = dijkstra(g, pts, p, &plan.removed, Some((&target, k)), f64::INFINITY);
        for &q in &plan.survivors {
            if !target[q as usize] {
                continue;
            }
            target[q as usize] = false;
            rep.checked_pairs += 1;
            let s = dist[q as usize] / pts.dist(p as usize, q as usize);
            if s > rep.max_stretch {
                rep.max_stretch = s;
            }
            if !(s <= plan.t * (1.0 + REL_TOL)) {
                rep.violations.push((p, q, s));
            }
        }
    }
    rep
}

/// Combines partial reports produced over disjoint source chunks of `plan`.
pub fn merge_stretch(plan: &StretchPlan, parts: impl IntoIterator<Item = StretchReport>) -> StretchReport {
    let mut out = StretchReport { t_target: plan.t, ..Default::default() };
    for p in parts {
        out.checked_pairs += p.checked_pairs;
        out.max_stretch = out.max_stretch.max(p.max_stretch);
        out.violations.extend(p.violations);
    }
    out.violations.sort_by_key(|v| (v.0, v.1));
    out.survivors = plan.survivors.len();
    out.sources = plan.sources.len();
    out.exhaustive = plan.exhaustive;
    let m = plan.survivors.len() as f64;
    let total = m * (m - 1.0) / 2.0;
    // sampled sources may meet a pair from both ends, hence the clamp
    out.coverage = if total > 0.0 { (out.checked_pairs as f64 / total).min(1.0) } else { 1.0 };
    out
}

/// `G − F` is checked as a `t`-spanner of `P ∖ F⁺`.
pub fn stretch_check(
    g: &GeometricGraph,
    pts: &PointSet,
    f: &[u32],
    f_plus: &[u32],
    t: f64,
    seed: u64,
) -> Result<StretchReport> {
    if pts.len() != g.vertex_count() {
        return Err(Error::invalid("graph and point set differ in size"));
    }
    let plan = stretch_plan(g.vertex_count(), f, f_plus, t, seed)?;
    let part = stretch_partial(g, pts, &plan, &plan.sources);
    Ok(merge_stretch(&plan, [part]))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExplodeViolation {
    pub p: u32,
    pub u: NodeId,
    pub reached: usize,
    pub required: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExplodeReport {
    pub checked: usize,
    pub violations: Vec<ExplodeViolation>,
    /// Smallest `reached − required` over all checks.
    pub min_slack: f64,
}

impl ExplodeReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Evenly spaced picks from `0..len`, always including both ends.
fn spread(len: usize, k: usize) -> Vec<usize> {
    if len <= k {
        return (0..len).collect();
    }
    let mut out: Vec<usize> = (0..k).map(|i| (i * (len - 1) + (k - 1) / 2) / (k - 1)).collect();
    out[0] = 0;
    out[k - 1] = len - 1;
    out.dedup();
    out
}

/// For every `p ∉ F⁺_T` and up to eight of its ancestors `u`, counts the
/// points of `L(T_u)` within `C·diam′(T_u)` of `p` in `G_T − F` and compares
/// with `(1 − a/Δ)|T_u| − |F⁺_T ∩ L(T_u)|`.
pub fn explode_check(
    trace: &BuildTrace,
    g_t: &GeometricGraph,
    pts: &PointSet,
    f: &[u32],
    f_plus_t: &[u32],
) -> Result<ExplodeReport> {
    let params = &trace.params;
    let n = params.n;
    if g_t.vertex_count() != n || pts.len() != n {
        return Err(Error::invalid("graph, points and trace differ in size"));
    }
    let mut removed = vec![false; n];
    for &x in f {
        *removed.get_mut(x as usize).ok_or_else(|| Error::invalid("fault out of range"))? = true;
    }
    let mut in_fpt = vec![false; n];
    for &x in f_plus_t {
        *in_fpt.get_mut(x as usize).ok_or_else(|| Error::invalid("abandoned point out of range"))? = true;
    }
    let tree = &trace.tree;
    let fpt_inside: Vec<usize> =
        (0..tree.len() as NodeId).map(|u| tree.leaves(u).iter().filter(|&&q| in_fpt[q as usize]).count()).collect();
    let mut rep = ExplodeReport { min_slack: f64::INFINITY, ..Default::default() };
    for p in 0..n as u32 {
        if in_fpt[p as usize] || removed[p as usize] {
            continue;
        }
        let anc = tree.ancestors_of_point(p);
        let picked: Vec<NodeId> = spread(anc.len(), EXPLODE_ANCESTORS).into_iter().map(|i| anc[i]).collect();
        let radius = picked.iter().map(|&u| params.c * tree.diam_prime(u)).fold(0.0, f64::max);
        let dist = dijkstra(g_t, pts, p, &removed, None, radius * (1.0 + REL_TOL));
        for u in picked {
            let r = params.c * tree.diam_prime(u) * (1.0 + REL_TOL);
            let reached = tree.leaves(u).iter().filter(|&&q| dist[q as usize] <= r).count();
            let size = tree.size(u) as f64;
            let required = (1.0 - params.a / params.delta as f64) * size - fpt_inside[u as usize] as f64;
            rep.checked += 1;
            let slack = reached as f64 - required;
            rep.min_slack = rep.min_slack.min(slack);
            if slack < -REL_TOL {
                rep.violations.push(ExplodeViolation { p, u, reached, required });
            }
        }
    }
    if rep.checked == 0 {
        rep.min_slack = 0.0;
    }
    Ok(rep)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EdgeStats {
    pub n: usize,
    pub edges: usize,
    pub edges_per_vertex: f64,
    /// `|E|/(n·log₂²n·log₂log₂n)`, for `n ≥ 4`.
    pub normalized: Option<f64>,
    pub max_degree: usize,
    pub avg_degree: f64,
}

pub fn edge_stats(g: &GeometricGraph) -> EdgeStats {
    let n = g.vertex_count();
    let m = g.edge_count();
    if n == 0 {
        return EdgeStats::default();
    }
    let nf = n as f64;
    let normalized = (n >= 4).then(|| {
        let l = math::log2(nf);
        m as f64 / (nf * l * l * math::log2(l))
    });
    EdgeStats {
        n,
        edges: m,
        edges_per_vertex: m as f64 / nf,
        normalized,
        max_degree: (0..n as u32).map(|v| g.degree(v)).max().unwrap_or(0),
        avg_degree: 2.0 * m as f64 / nf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::uniform_points;
    use crate::graph::EdgeSet;
    use proptest::prelude::*;
    use std::vec::Vec;

    fn complete(n: usize) -> GeometricGraph {
        let mut e = EdgeSet::new(n);
        e.insert_clique(&(0..n as u32).collect::<Vec<_>>());
        e.into_graph()
    }

    #[test]
    fn path_examples() {
        let line = PointSet::new(vec![vec![0.0], vec![1.0], vec![2.0]]).unwrap();
        let g = GeometricGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(shortest_path(&g, &line, 1, 1, &[]).unwrap(), 0.0);
        assert_eq!(shortest_path(&g, &line, 0, 2, &[]).unwrap(), 2.0);
        assert_eq!(shortest_path(&g, &line, 0, 2, &[1]).unwrap(), f64::INFINITY);
        assert!(shortest_path(&g, &line, 0, 2, &[0]).is_err());

        let tri = PointSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0]]).unwrap();
        let g = GeometricGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        let d = shortest_path(&g, &tri, 0, 1, &[]).unwrap();
        assert!((d - 2.0 * 1.25f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn complete_graph_has_unit_stretch() {
        let pts = uniform_points(5, 2, 1).unwrap();
        let g = complete(5);
        let r = stretch_check(&g, &pts, &[], &[], 1.5, 0).unwrap();
        assert_eq!((r.max_stretch, r.checked_pairs, r.violations.len()), (1.0, 10, 0));
        let r = stretch_check(&g, &pts, &[0, 1, 2], &[0, 1, 2], 1.5, 0).unwrap();
        assert_eq!((r.max_stretch, r.checked_pairs), (1.0, 1));
    }

    #[test]
    fn violations_match_max_stretch() {
        let tri = PointSet::new(vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.5, 1.0]]).unwrap();
        let g = GeometricGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        let r = stretch_check(&g, &tri, &[], &[], 2.0, 0).unwrap();
        assert_eq!(r.violations.len(), 1);
        assert!(r.max_stretch > 2.0);
        let r = stretch_check(&g, &tri, &[], &[], 2.5, 0).unwrap();
        assert!(r.is_ok() && r.max_stretch <= 2.5);
        // removing the apex disconnects the pair
        let r = stretch_check(&g, &tri, &[2], &[2], 2.5, 0).unwrap();
        assert_eq!(r.max_stretch, f64::INFINITY);
        assert!(stretch_check(&g, &tri, &[2], &[], 2.5, 0).is_err());
    }

    #[test]
    fn chunked_checks_merge_to_the_whole() {
        let pts = uniform_points(60, 2, 4).unwrap();
        let g = GeometricGraph::from_edges(60, (0..59).map(|i| (i, i + 1))).unwrap();
        let whole = stretch_check(&g, &pts, &[], &[], 3.0, 0).unwrap();
        let plan = stretch_plan(60, &[], &[], 3.0, 0).unwrap();
        let parts = plan.sources.chunks(7).map(|c| stretch_partial(&g, &pts, &plan, c)).collect::<Vec<_>>();
        assert_eq!(merge_stretch(&plan, parts), whole);
        assert_eq!(whole.checked_pairs, 60 * 59 / 2);
    }

    #[test]
    fn edge_stats_examples() {
        let s = edge_stats(&complete(4));
        assert_eq!((s.edges, s.edges_per_vertex, s.max_degree), (6, 1.5, 3));
        // log₂4 = 2, log₂log₂4 = 1
        assert_eq!(s.normalized, Some(6.0 / 16.0));
        let s = edge_stats(&GeometricGraph::empty(10));
        assert_eq!((s.edges, s.edges_per_vertex, s.max_degree, s.avg_degree), (0, 0.0, 0, 0.0));
        assert_eq!(s.normalized, Some(0.0));
        assert_eq!(edge_stats(&complete(3)).normalized, None);
    }

    #[test]
    fn spread_keeps_ends() {
        assert_eq!(spread(5, 8), vec![0, 1, 2, 3, 4]);
        let s = spread(20, 8);
        assert_eq!((s.len(), s[0], s[7]), (8, 0, 19));
        assert!(s.windows(2).all(|w| w[0] < w[1]));
    }

    proptest! {
        #[test]
        fn graph_distance_bounds(seed in 0u64..500, drop in 0u32..30) {
            let pts = uniform_points(30, 2, seed).unwrap();
            let edges: Vec<(u32, u32)> = (0..30u32)
                .flat_map(|i| [(i, (i * 7 + 3) % 30), (i, (i + 1) % 30)])
                .filter(|(a, b)| a != b)
                .collect();
            let g = GeometricGraph::from_edges(30, edges).unwrap();
            let none = vec![false; 30];
            let mut gone = none.clone();
            gone[drop as usize] = true;
            let full = dijkstra(&g, &pts, (drop + 1) % 30, &none, None, f64::INFINITY);
            let cut = dijkstra(&g, &pts, (drop + 1) % 30, &gone, None, f64::INFINITY);
            for q in 0..30 {
                prop_assert!(full[q] + 1e-12 >= pts.dist(((drop + 1) % 30) as usize, q));
                if q != drop as usize {
                    prop_assert!(cut[q] + 1e-12 >= full[q]);
                }
            }
        }
    }
}
