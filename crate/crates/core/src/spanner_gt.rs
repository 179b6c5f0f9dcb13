//! The recursive graph `G_T`: a complete graph on small subtrees, and above
//! `κ` the expander pair `H_T` joining `T_{u₀}` to `T₁` plus a recursion on
//! both halves.
//!
//! The recursion is recorded node by node so fault processing can replay the
//! same centroid choices and expanders. Below `κ` it keeps splitting down to
//! single points with complete bipartite joins in place of `H_T`; those add no
//! edges beyond the clique but let the fault recursion reach every leaf.

use alloc::vec;
use alloc::vec::Vec;

use crate::expander::{build_with_resampling, expand_degree, shrink_degree_full_range, BipartiteExpander, Neighbours};
use crate::fst::{centroid_walk, detach, rank, Topology};
use crate::graph::{EdgeSet, GeometricGraph};
use crate::params::SpannerParams;
use crate::seed::Seed;
use crate::{Error, Result};

/// Subtree size up to which expanders are audited exhaustively.
pub const AUDIT_LIMIT: usize = 14;
/// Resampling budget for audited expanders.
pub const AUDIT_ATTEMPTS: u32 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecKind {
    /// `|T| ≤ κ`: part of a complete graph.
    Clique,
    /// `|T| > κ`: carries `H_T`.
    Expander,
}

/// `H_T` split into its two halves.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HtExpanders {
    /// Right side `L(T₁)`, left side `L(T_{u₀})`.
    pub shrink: BipartiteExpander,
    /// Self-pair on `L(T)`; absent below `κ`.
    pub expand: Option<BipartiteExpander>,
    /// Draws used, summed over both halves.
    pub attempts: u32,
    /// Whether every audited half passed (vacuously true when not audited).
    pub audit_ok: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecSplit {
    /// Index of the `T_{u₀}` entry in the trace.
    pub u0: usize,
    /// Index of the `T₁` entry in the trace.
    pub t1: usize,
    pub h: HtExpanders,
}

/// One recursion call.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecNode {
    /// `L(T)`, ascending.
    pub points: Vec<u32>,
    pub rank: u32,
    pub kind: RecKind,
    /// Absent for single points.
    pub split: Option<RecSplit>,
}

impl RecNode {
    pub fn size(&self) -> usize {
        self.points.len()
    }
}

/// The recursion of `G_T`, root first; children always follow their parent.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct RecursionTrace {
    pub nodes: Vec<RecNode>,
}

impl RecursionTrace {
    /// Indices of clique nodes whose parent is not a clique node.
    pub fn top_cliques(&self) -> Vec<usize> {
        let mut top = vec![false; self.nodes.len()];
        if let Some(root) = self.nodes.first() {
            top[0] = root.kind == RecKind::Clique;
        }
        for node in &self.nodes {
            if let (RecKind::Expander, Some(sp)) = (node.kind, &node.split) {
                for c in [sp.u0, sp.t1] {
                    top[c] = self.nodes[c].kind == RecKind::Clique;
                }
            }
        }
        (0..self.nodes.len()).filter(|&i| top[i]).collect()
    }

    /// Recomputes the edges of `G_T` into `edges`.
    pub fn add_edges(&self, edges: &mut EdgeSet) {
        // a node whose expand half is saturated is a clique; nothing below adds edges
        let mut covered = vec![false; self.nodes.len()];
        for i in 0..self.nodes.len() {
            let node = &self.nodes[i];
            if covered[i] {
                if let Some(sp) = &node.split {
                    covered[sp.u0] = true;
                    covered[sp.t1] = true;
                }
                continue;
            }
            match (node.kind, &node.split) {
                (RecKind::Clique, _) => {
                    edges.insert_clique(&node.points);
                    if let Some(sp) = &node.split {
                        covered[sp.u0] = true;
                        covered[sp.t1] = true;
                    }
                }
                (RecKind::Expander, Some(sp)) => {
                    edges.extend(sp.h.shrink.edges());
                    let expand = sp.h.expand.as_ref().expect("expander nodes carry both halves");
                    if is_saturated(expand) {
                        edges.insert_clique(&node.points);
                        covered[sp.u0] = true;
                        covered[sp.t1] = true;
                    } else {
                        edges.extend(expand.edges());
                    }
                }
                (RecKind::Expander, None) => unreachable!("expander nodes always split"),
            }
        }
    }

    pub fn graph(&self, n: usize) -> GeometricGraph {
        let mut edges = EdgeSet::new(n);
        self.add_edges(&mut edges);
        edges.into_graph()
    }

    /// Nodes that violate `|T|/3 ≤ |T_{u₀}| ≤ 2|T|/3` or `|T_{u₀}| + |T₁| = |T|`.
    pub fn balance_violations(&self) -> Vec<usize> {
        (0..self.nodes.len())
            .filter(|&i| {
                let node = &self.nodes[i];
                node.split.as_ref().is_some_and(|sp| {
                    let (t, a, b) = (node.size(), self.nodes[sp.u0].size(), self.nodes[sp.t1].size());
                    3 * a < t || 3 * a > 2 * t || a + b != t
                })
            })
            .collect()
    }

    pub fn depth(&self) -> usize {
        let mut depth = vec![0usize; self.nodes.len()];
        for i in 0..self.nodes.len() {
            if let Some(sp) = &self.nodes[i].split {
                depth[sp.u0] = depth[i] + 1;
                depth[sp.t1] = depth[i] + 1;
            }
        }
        depth.into_iter().max().unwrap_or(0)
    }
}

pub(crate) fn is_saturated(g: &BipartiteExpander) -> bool {
    g.adj.iter().all(|a| matches!(a, Neighbours::All))
}

fn sorted(mut v: Vec<u32>) -> Vec<u32> {
    v.sort_unstable();
    v
}

/// Degree for a shrink expander, scaled and saturating at `|A|`.
pub(crate) fn shrink_degree_for(p: &SpannerParams, k: f64, tau: f64, a: usize, b: usize) -> u32 {
    p.scaled(shrink_degree_full_range(k, tau, a, b, p.unscaled_cap(a)))
}

/// Degree for an expand expander, scaled.
pub(crate) fn expand_degree_for(p: &SpannerParams, k: f64, l: f64) -> u32 {
    p.scaled(expand_degree(k, l))
}

/// Builds one shrink/expand pair, resampling small instances until they pass
/// the exhaustive audits.
pub(crate) fn build_pair(
    left: Vec<u32>,
    right: Vec<u32>,
    shrink: (u32, f64, f64),
    expand: Option<(u32, f64, f64)>,
    audit_limit: usize,
    seed: Seed,
) -> Result<HtExpanders> {
    let (sd, sk, stau) = shrink;
    let audit_shrink = left.len() <= audit_limit;
    let (shrink_g, mut attempts, mut audit_ok) =
        build_with_resampling(left.clone(), right, sd, seed.child(0), AUDIT_ATTEMPTS, |g| {
            if audit_shrink {
                g.check_shadow(sk, stau)
            } else {
                Ok(true)
            }
        })?;
    let expand_g = match expand {
        None => None,
        Some((ed, ek, el)) => {
            let audit = left.len() <= audit_limit;
            let (g, a, ok) = build_with_resampling(left.clone(), left, ed, seed.child(1), AUDIT_ATTEMPTS, |g| {
                if audit {
                    g.check_expansion(ek, el)
                } else {
                    Ok(true)
                }
            })?;
            attempts += a;
            audit_ok &= ok;
            Some(g)
        }
    };
    Ok(HtExpanders { shrink: shrink_g, expand: expand_g, attempts, audit_ok })
}

/// `H_T` for a tree with `|T| > κ`: a shrink expander from `L(T₁)` into
/// `L(T_{u₀})` and an expand expander on the self-pair `(L(T), L(T))`.
pub fn build_ht(t: &Topology, u0: u32, params: &SpannerParams, seed: Seed) -> Result<HtExpanders> {
    let size = t.leaf_count() as usize;
    if size <= params.kappa as usize {
        return Err(Error::invalid("H_T is only built above kappa"));
    }
    let (tu0, t1) = detach(t, u0)?;
    ht_from_parts(sorted(t.leaf_points(t.root())), sorted(tu0.leaf_points(0)), sorted(t1.leaf_points(0)), params, seed)
}

fn ht_from_parts(all: Vec<u32>, a: Vec<u32>, b: Vec<u32>, params: &SpannerParams, seed: Seed) -> Result<HtExpanders> {
    let (sk, stau) = params.ht_shrink();
    let (ek, el) = params.ht_expand();
    let sd = shrink_degree_for(params, sk, stau, a.len(), b.len());
    let ed = expand_degree_for(params, ek, el);
    // only the self-pair uses `all`; its sides must match
    let mut h = build_pair(a, b, (sd, sk, stau), None, AUDIT_LIMIT, seed)?;
    let audit = all.len() <= AUDIT_LIMIT;
    let (g, attempts, ok) = build_with_resampling(all.clone(), all, ed, seed.child(1), AUDIT_ATTEMPTS, |g| {
        if audit {
            g.check_expansion(ek, el)
        } else {
            Ok(true)
        }
    })?;
    h.expand = Some(g);
    h.attempts += attempts;
    h.audit_ok &= ok;
    Ok(h)
}

fn complete_join(a: Vec<u32>, b: Vec<u32>) -> HtExpanders {
    let n = b.len();
    let degree = a.len() as u32;
    HtExpanders {
        shrink: BipartiteExpander { left: a, right: b, adj: vec![Neighbours::All; n], degree },
        expand: None,
        attempts: 0,
        audit_ok: true,
    }
}

/// Builds `G_T` for the whole tree and records the recursion.
pub fn build_gt(t: &Topology, params: &SpannerParams, seed: Seed) -> Result<(GeometricGraph, RecursionTrace)> {
    let trace = build_recursion(t, params, seed)?;
    Ok((trace.graph(params.n), trace))
}

/// The recursion alone, without materialising `G_T`.
pub fn build_recursion(t: &Topology, params: &SpannerParams, seed: Seed) -> Result<RecursionTrace> {
    t.validate()?;
    let mut nodes: Vec<RecNode> = Vec::new();
    // (subtree, seed, slot in parent to patch)
    let mut stack: Vec<(Topology, Seed, Option<(usize, bool)>)> = vec![(t.clone(), seed, None)];
    while let Some((tree, s, parent)) = stack.pop() {
        let id = nodes.len();
        if let Some((p, is_t1)) = parent {
            let sp = nodes[p].split.as_mut().expect("parent has a split");
            if is_t1 {
                sp.t1 = id;
            } else {
                sp.u0 = id;
            }
        }
        let size = tree.leaf_count() as usize;
        let points = sorted(tree.leaf_points(tree.root()));
        let kind = if size <= params.kappa as usize { RecKind::Clique } else { RecKind::Expander };
        let split = if size >= 2 {
            let u0 = centroid_walk(&tree);
            let (tu0, t1) = detach(&tree, u0)?;
            let a = sorted(tu0.leaf_points(0));
            let b = sorted(t1.leaf_points(0));
            let h = match kind {
                RecKind::Clique => complete_join(a, b),
                RecKind::Expander => ht_from_parts(points.clone(), a, b, params, s.child(2))?,
            };
            stack.push((t1, s.child(1), Some((id, true))));
            stack.push((tu0, s.child(0), Some((id, false))));
            Some(RecSplit { u0: usize::MAX, t1: usize::MAX, h })
        } else {
            None
        };
        nodes.push(RecNode { points, rank: rank(size as u64), kind, split });
    }
    Ok(RecursionTrace { nodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::{build_fst, Shape};
    use crate::geometry::uniform_points;

    fn params(n: usize) -> SpannerParams {
        SpannerParams::new(n, 2, 0.25, 4.0).unwrap()
    }

    fn caterpillar(n: u32) -> Topology {
        let mut s = Shape::Leaf(0);
        for i in 1..n {
            s = Shape::node(s, Shape::Leaf(i));
        }
        Topology::from_shape(&s)
    }

    #[test]
    fn four_points_give_k4() {
        let pts = uniform_points(4, 2, 1).unwrap();
        let t = build_fst(&pts).unwrap();
        let (g, trace) = build_gt(t.topology(), &params(4), Seed(1)).unwrap();
        assert_eq!(g.edge_count(), 6);
        assert_eq!(trace.nodes[0].kind, RecKind::Clique);
        assert_eq!(trace.top_cliques(), vec![0]);
    }

    #[test]
    fn single_point_has_no_edges() {
        let pts = uniform_points(1, 2, 1).unwrap();
        let t = build_fst(&pts).unwrap();
        let (g, trace) = build_gt(t.topology(), &params(1), Seed(1)).unwrap();
        assert_eq!(g.edge_count(), 0);
        assert_eq!(trace.nodes.len(), 1);
    }

    #[test]
    fn ht_on_six_leaves() {
        let t = caterpillar(6);
        let p = params(6);
        let u0 = centroid_walk(&t);
        let h = build_ht(&t, u0, &p, Seed(3)).unwrap();
        assert!(!h.shrink.edges().collect::<Vec<_>>().is_empty());
        assert!((0..h.shrink.right.len()).all(|j| h.shrink.neighbour_count(j) >= 1));
        let (sk, stau) = p.ht_shrink();
        let (ek, el) = p.ht_expand();
        let sd = shrink_degree_for(&p, sk, stau, h.shrink.left.len(), h.shrink.right.len()) as usize;
        let ed = expand_degree_for(&p, ek, el) as usize;
        let total = h.shrink.edge_count() + h.expand.as_ref().unwrap().edge_count();
        assert!(total <= (sd + ed) * 6);
        assert!(h.audit_ok);
        assert!(build_ht(&caterpillar(5), 1, &p, Seed(3)).is_err());
    }

    #[test]
    fn recursion_is_balanced_and_complete() {
        let pts = uniform_points(300, 2, 9).unwrap();
        let t = build_fst(&pts).unwrap();
        let trace = build_recursion(t.topology(), &params(300), Seed(9)).unwrap();
        assert!(trace.balance_violations().is_empty());
        // every point ends up as exactly one singleton node
        let mut singles: Vec<u32> = trace.nodes.iter().filter(|n| n.size() == 1).map(|n| n.points[0]).collect();
        singles.sort_unstable();
        assert_eq!(singles, (0..300).collect::<Vec<_>>());
        for n in &trace.nodes {
            if let Some(sp) = &n.split {
                assert!(trace.nodes[sp.u0].rank < n.rank || n.size() <= 2);
                assert_eq!(sp.h.shrink.left, trace.nodes[sp.u0].points);
                assert_eq!(sp.h.shrink.right, trace.nodes[sp.t1].points);
            }
        }
        // depth ≤ log_{3/2}|T| + 1 (the +1 is the descent below κ to single points)
        assert!(trace.depth() as f64 <= (300f64).ln() / 1.5f64.ln() + 1.0);
    }

    #[test]
    fn top_cliques_span_small_subtrees() {
        let pts = uniform_points(100, 2, 4).unwrap();
        let t = build_fst(&pts).unwrap();
        let trace = build_recursion(t.topology(), &params(100), Seed(4)).unwrap();
        let tops = trace.top_cliques();
        assert!(!tops.is_empty());
        let mut covered: Vec<u32> = tops.iter().flat_map(|&i| trace.nodes[i].points.clone()).collect();
        covered.sort_unstable();
        assert_eq!(covered, (0..100).collect::<Vec<_>>());
        assert!(tops.iter().all(|&i| trace.nodes[i].size() <= 5));
    }

    #[test]
    fn deterministic_per_seed() {
        let pts = uniform_points(80, 2, 2).unwrap();
        let t = build_fst(&pts).unwrap();
        let p = params(80).with_degree_scale(0.001).unwrap();
        let run = |s| build_gt(t.topology(), &p, Seed(s)).unwrap().0;
        assert_eq!(run(5), run(5));
        assert_ne!(run(5), run(6));
    }

    #[test]
    fn low_degree_graph_contains_its_cliques() {
        let pts = uniform_points(120, 2, 8).unwrap();
        let t = build_fst(&pts).unwrap();
        let p = params(120).with_degree_scale(0.001).unwrap();
        let (g, trace) = build_gt(t.topology(), &p, Seed(8)).unwrap();
        for i in trace.top_cliques() {
            let pts = &trace.nodes[i].points;
            for (x, &a) in pts.iter().enumerate() {
                for &b in &pts[x + 1..] {
                    assert!(g.has_edge(a, b));
                }
            }
        }
        assert!(g.edge_count() < 120 * 119 / 2);
    }
}
