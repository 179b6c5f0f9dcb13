//! The abandoned sets for a fault set `F`: `F⁺_T` by replaying the recursion
//! of `G_T`, and `F⁺ = F⁺₀ ∪ F⁺₁` from the dense subtrees and the `H′_u`
//! shadows.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use crate::fst::{largest_special_subtrees, rank, FairSplitTree, NodeId};
use crate::graph::collect_marked;
use crate::params::SpannerParams;
use crate::seed::{stream, Seed};
use crate::spanner_gt::RecursionTrace;
use crate::spanner_gw::BuildTrace;
use crate::{Error, Result};

/// `|L(T) ∩ F| ≥ (1 − δ·rank(T)/Δ)|T|`.
pub fn is_f_dense(size: usize, faults_inside: usize, params: &SpannerParams) -> bool {
    let r = rank(size as u64) as f64;
    let threshold = (1.0 - params.delta_dense * r / params.delta as f64) * size as f64;
    faults_inside as f64 >= threshold
}

fn fault_mask(n: usize, f: &[u32]) -> Result<Vec<bool>> {
    let mut mask = vec![false; n];
    for &x in f {
        if x as usize >= n {
            return Err(Error::invalid(alloc::format!("fault index {x} out of range for {n} points")));
        }
        mask[x as usize] = true;
    }
    Ok(mask)
}

/// A seeded uniform fault set of `round(frac·n)` points, ascending.
pub fn random_faults(n: usize, frac: f64, seed: u64) -> Result<Vec<u32>> {
    if !(0.0..=1.0).contains(&frac) {
        return Err(Error::invalid("fault fraction must lie in [0, 1]"));
    }
    let k = libm::round(frac * n as f64) as usize;
    let mut all: Vec<u32> = (0..n as u32).collect();
    let mut picked = all.partial_shuffle(&mut Seed(seed).child(stream::FAULTS).rng(), k).0.to_vec();
    picked.sort_unstable();
    Ok(picked)
}

/// `F⁺_T` for the whole recursion, ascending.
pub fn compute_fplus_t(trace: &RecursionTrace, f: &[u32], params: &SpannerParams) -> Result<Vec<u32>> {
    let n = trace.nodes.first().map_or(0, |r| r.size());
    if n != params.n {
        return Err(Error::invalid("recursion trace does not match the parameters"));
    }
    let in_f = fault_mask(n, f)?;
    let mut result: Vec<Option<Vec<u32>>> = vec![None; trace.nodes.len()];
    let mut mark = vec![false; n];
    // children come after their parent, so a reverse sweep sees them first
    for i in (0..trace.nodes.len()).rev() {
        let node = &trace.nodes[i];
        let inside = node.points.iter().filter(|&&p| in_f[p as usize]).count();
        let out = if is_f_dense(node.size(), inside, params) {
            node.points.clone()
        } else if let Some(sp) = &node.split {
            let r0 = result[sp.u0].take().ok_or_else(|| Error::invalid("malformed recursion trace"))?;
            let r1 = result[sp.t1].take().ok_or_else(|| Error::invalid("malformed recursion trace"))?;
            let t_u0 = trace.nodes[sp.u0].size() as f64;
            let keep_shadow = r0.len() as f64 <= (1.0 - params.beta / params.delta as f64) * t_u0;
            for &p in r0.iter().chain(&r1) {
                mark[p as usize] = true;
            }
            if keep_shadow {
                for b in sp.h.shrink.shadow_by(|a| mark[a as usize]) {
                    mark[b as usize] = true;
                }
            } else {
                for &p in &trace.nodes[sp.u0].points {
                    mark[p as usize] = true;
                }
            }
            let mut out: Vec<u32> = node.points.iter().copied().filter(|&p| mark[p as usize]).collect();
            for &p in &node.points {
                mark[p as usize] = false;
            }
            out.shrink_to_fit();
            out
        } else {
            Vec::new()
        };
        result[i] = Some(out);
    }
    Ok(result.into_iter().next().flatten().unwrap_or_default())
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FaultReport {
    pub f: Vec<u32>,
    pub f_plus_t: Vec<u32>,
    /// Tree nodes with `|F⁺_T ∩ L(T_u)| > (1 − 3ε)|T_u|`.
    pub d0: Vec<NodeId>,
    /// Tree nodes whose largest special subtree is in `D₀`.
    pub d1: Vec<NodeId>,
    pub f_plus_0: Vec<u32>,
    pub f_plus_1: Vec<u32>,
    pub f_plus: Vec<u32>,
    /// `|F⁺| ≤ (1+ε)³/(1−3ε)·|F|` (for `F = ∅`: `F⁺ = ∅`).
    pub bound_ok: bool,
    /// `|F⁺_T| ≤ (1 + ε·rank(n)/Δ)|F|`.
    pub f_plus_t_bound_ok: bool,
    /// `|F⁺| ≤ (1+7ε)|F|`, evaluated only for `ε ≤ √145 − 12`.
    pub seven_eps_ok: Option<bool>,
    /// `F ⊆ F⁺`.
    pub contains_f: bool,
    /// Points of `F⁺_T` outside `F⁺` (reported, not asserted).
    pub f_plus_t_outside: usize,
    /// `|F⁺|` when `F⁺₁` also takes shadows at special nodes inside `F⁺₀`.
    pub f_plus_unrestricted: usize,
    pub ratio_f_plus_t: f64,
    pub ratio_f_plus: f64,
}

/// Runs the whole procedure against a build trace.
pub fn compute_fplus(trace: &BuildTrace, f: &[u32]) -> Result<FaultReport> {
    let params = &trace.params;
    if !(params.eps > 0.0 && params.eps < 1.0 / 3.0) {
        return Err(Error::invalid("eps must lie in (0, 1/3)"));
    }
    let n = params.n;
    let in_f = fault_mask(n, f)?;
    let f_plus_t = compute_fplus_t(&trace.recursion, f, params)?;
    let tree: &FairSplitTree = &trace.tree;
    let topo = tree.topology();
    if topo.leaf_count() as usize != n {
        return Err(Error::invalid("tree does not match the parameters"));
    }

    let mut in_fpt = vec![false; n];
    for &p in &f_plus_t {
        in_fpt[p as usize] = true;
    }
    let mut count = vec![0u32; topo.len()];
    for u in (0..topo.len()).rev() {
        count[u] = match topo.children(u as NodeId) {
            Some([l, r]) => count[l as usize] + count[r as usize],
            None => u32::from(in_fpt[topo.node(u as NodeId).point.expect("leaf") as usize]),
        };
    }
    let eps = params.eps;
    let in_d0: Vec<bool> =
        (0..topo.len()).map(|u| count[u] as f64 > (1.0 - 3.0 * eps) * topo.size(u as NodeId) as f64).collect();
    let best = largest_special_subtrees(topo, eps)?;
    let in_d1: Vec<bool> = (0..topo.len()).map(|u| in_d0[best[u] as usize]).collect();

    // F⁺₀ through the topmost D₁ nodes
    let mut in_f0 = vec![false; n];
    let mut blocked = vec![false; topo.len()];
    for u in 0..topo.len() {
        let inherited = topo.parent(u as NodeId).is_some_and(|p| blocked[p as usize]);
        if inherited {
            blocked[u] = true;
        } else if in_d1[u] {
            blocked[u] = true;
            for &p in tree.leaves(u as NodeId) {
                in_f0[p as usize] = true;
            }
        }
    }

    // Special nodes lying inside an abandoned subtree are skipped: their whole
    // A side is already in F⁺₀, so every pair they serve has an abandoned end,
    // and their shadow is outside the range the shadow bound speaks about.
    let mut in_f1 = vec![false; n];
    let mut in_f1_literal = vec![false; n];
    for g in &trace.groups {
        if in_d1[g.u as usize] {
            continue;
        }
        let h = g.h.as_ref().ok_or_else(|| Error::invalid("group without H'_u"))?;
        for b in h.shrink.shadow_by(|a| in_f0[a as usize]) {
            in_f1_literal[b as usize] = true;
            if !blocked[g.u as usize] {
                in_f1[b as usize] = true;
            }
        }
    }
    let literal_size = (0..n).filter(|&i| in_f0[i] || in_f1_literal[i]).count();
    let in_fp: Vec<bool> = (0..n).map(|i| in_f0[i] || in_f1[i]).collect();

    let f_plus = collect_marked(&in_fp);
    let nf = f.iter().collect::<alloc::collections::BTreeSet<_>>().len() as f64;
    let bound = (1.0 + eps) * (1.0 + eps) * (1.0 + eps) / (1.0 - 3.0 * eps);
    let fpt_bound = 1.0 + eps * rank(n as u64) as f64 / params.delta as f64;
    let seven_eps_limit = libm::sqrt(145.0) - 12.0;
    let tol = 1e-9;
    let ratio = |x: usize| if nf > 0.0 { x as f64 / nf } else { 0.0 };
    Ok(FaultReport {
        bound_ok: f_plus.len() as f64 <= bound * nf + tol,
        f_plus_t_bound_ok: f_plus_t.len() as f64 <= fpt_bound * nf + tol,
        seven_eps_ok: (eps <= seven_eps_limit).then_some(f_plus.len() as f64 <= (1.0 + 7.0 * eps) * nf + tol),
        contains_f: (0..n).all(|i| !in_f[i] || in_fp[i]),
        f_plus_unrestricted: literal_size,
        f_plus_t_outside: f_plus_t.iter().filter(|&&p| !in_fp[p as usize]).count(),
        ratio_f_plus_t: ratio(f_plus_t.len()),
        ratio_f_plus: ratio(f_plus.len()),
        f: collect_marked(&in_f),
        f_plus_t,
        d0: (0..topo.len() as NodeId).filter(|&u| in_d0[u as usize]).collect(),
        d1: (0..topo.len() as NodeId).filter(|&u| in_d1[u as usize]).collect(),
        f_plus_0: collect_marked(&in_f0),
        f_plus_1: collect_marked(&in_f1),
        f_plus,
    })
}
