//! The WSPD side `G_W`: every pair's `A` side is shrunk to its largest
//! special subtree, pairs are grouped by that subtree, and each group gets an
//! expander pair `H′_u`. The final spanner is `G_T ∪ G_W`.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::fst::{build_fst, largest_special_subtrees, FairSplitTree, NodeId};
use crate::geometry::PointSet;
use crate::graph::{EdgeSet, GeometricGraph};
use crate::params::SpannerParams;
use crate::seed::{stream, Seed};
use crate::spanner_gt::{
    build_pair, build_recursion, expand_degree_for, shrink_degree_for, HtExpanders, RecursionTrace,
};
use crate::wspd::{build_wspd, Wspd};
use crate::{Error, Result};

/// Group size up to which `H′_u` is audited exhaustively.
pub const GROUP_AUDIT_LIMIT: usize = 12;

/// Pairs of `W′` sharing the special node `u = a′`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpecialGroup {
    pub u: NodeId,
    /// Indices into the WSPD's pair list.
    pub pairs: Vec<usize>,
    /// `B′_u`, ascending point indices.
    pub b_union: Vec<u32>,
    /// `H′_u`, once built.
    pub h: Option<HtExpanders>,
}

/// Everything fault processing and verification need to replay a build.
#[derive(Debug, Clone)]
pub struct BuildTrace {
    pub params: SpannerParams,
    pub seed: u64,
    pub tree: FairSplitTree,
    pub wspd: Wspd,
    pub recursion: RecursionTrace,
    pub groups: Vec<SpecialGroup>,
}

impl BuildTrace {
    /// `G_T` recomputed from the recursion.
    pub fn gt_graph(&self) -> GeometricGraph {
        self.recursion.graph(self.params.n)
    }

    /// `G = G_T ∪ G_W` recomputed from the trace.
    pub fn graph(&self) -> GeometricGraph {
        let mut edges = EdgeSet::new(self.params.n);
        self.recursion.add_edges(&mut edges);
        add_group_edges(&self.groups, &mut edges);
        edges.into_graph()
    }

    /// Groups whose small-instance audit failed after resampling.
    pub fn failed_audits(&self) -> usize {
        let rec = self.recursion.nodes.iter().filter(|n| n.split.as_ref().is_some_and(|s| !s.h.audit_ok)).count();
        rec + self.groups.iter().filter(|g| g.h.as_ref().is_some_and(|h| !h.audit_ok)).count()
    }
}

/// Fills `a_prime` with the root of the largest special subtree of `T_a`.
pub fn derive_wprime(w: &Wspd, t: &FairSplitTree, eps: f64) -> Result<Wspd> {
    let best = largest_special_subtrees(t.topology(), eps)?;
    let mut out = w.clone();
    for p in &mut out.pairs {
        p.a_prime = Some(best[p.a as usize]);
    }
    Ok(out)
}

/// Groups `W′` pairs by `a′` (ascending node id).
pub fn group_pairs(wprime: &Wspd, t: &FairSplitTree) -> Result<Vec<SpecialGroup>> {
    let mut by_u: BTreeMap<NodeId, Vec<usize>> = BTreeMap::new();
    for (i, p) in wprime.pairs.iter().enumerate() {
        let u = p.a_prime.ok_or_else(|| Error::invalid("pair without a_prime"))?;
        by_u.entry(u).or_default().push(i);
    }
    Ok(by_u
        .into_iter()
        .map(|(u, pairs)| {
            let mut b_union: Vec<u32> =
                pairs.iter().flat_map(|&i| t.leaves(wprime.pairs[i].b).iter().copied()).collect();
            b_union.sort_unstable();
            b_union.dedup();
            SpecialGroup { u, pairs, b_union, h: None }
        })
        .collect())
}

/// `H′_u`: a shrink expander from `B′_u` into `L(T_u)` and an expand expander
/// on the self-pair `(L(T_u), L(T_u))`.
pub fn build_hu(group: &SpecialGroup, t: &FairSplitTree, params: &SpannerParams, seed: Seed) -> Result<HtExpanders> {
    if group.b_union.is_empty() {
        return Err(Error::invalid("empty group"));
    }
    let mut a = t.leaves(group.u).to_vec();
    a.sort_unstable();
    let (sk, stau) = params.hu_shrink();
    let (ek, el) = params.hu_expand();
    let sd = shrink_degree_for(params, sk, stau, a.len(), group.b_union.len());
    let ed = expand_degree_for(params, ek, el);
    let audit = if group.b_union.len() <= GROUP_AUDIT_LIMIT { GROUP_AUDIT_LIMIT } else { 0 };
    build_pair(a, group.b_union.clone(), (sd, sk, stau), Some((ed, ek, el)), audit, seed)
}

fn add_group_edges(groups: &[SpecialGroup], edges: &mut EdgeSet) {
    for g in groups {
        if let Some(h) = &g.h {
            edges.extend(h.shrink.edges());
            if let Some(e) = &h.expand {
                if crate::spanner_gt::is_saturated(e) {
                    edges.insert_clique(&e.left);
                } else {
                    edges.extend(e.edges());
                }
            }
        }
    }
}

/// Builds the tree, WSPD, `G_T`, `W′`, the groups and every `H′_u`, and
/// returns `G` with the trace.
pub fn build_spanner(pts: &PointSet, params: &SpannerParams, seed: u64) -> Result<(GeometricGraph, BuildTrace)> {
    if pts.len() != params.n || pts.dim() != params.dim {
        return Err(Error::invalid("parameters were derived for a different point set"));
    }
    let root = Seed(seed);
    let tree = build_fst(pts)?;
    let wspd = build_wspd(&tree, params.s)?;
    let recursion = build_recursion(tree.topology(), params, root.child(stream::GT))?;
    let wprime = derive_wprime(&wspd, &tree, params.eps)?;
    let mut groups = group_pairs(&wprime, &tree)?;
    let gw = root.child(stream::GW);
    for g in &mut groups {
        g.h = Some(build_hu(g, &tree, params, gw.child(g.u as u64))?);
    }
    let trace = BuildTrace { params: *params, seed, tree, wspd: wprime, recursion, groups };
    Ok((trace.graph(), trace))
}
