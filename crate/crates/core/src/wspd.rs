//! Well-separated pair decomposition built from a fair-split tree, and an
//! exhaustive verifier for it.

use alloc::vec;
use alloc::vec::Vec;

use crate::fst::{FairSplitTree, NodeId};
use crate::geometry::PointSet;
use crate::{Error, Result};

/// One pair `(A_i, B_i) = (L(T_a), L(T_b))` with `|A_i| ≥ |B_i|`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WspdPair {
    pub a: NodeId,
    pub b: NodeId,
    pub a_size: u32,
    pub b_size: u32,
    /// Root of the largest special subtree of `T_a`, once derived.
    pub a_prime: Option<NodeId>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Wspd {
    pub pairs: Vec<WspdPair>,
    pub s: f64,
}

impl Wspd {
    /// Number of pairs `m`.
    pub fn m(&self) -> usize {
        self.pairs.len()
    }
}

/// Orients a pair so that `A` is the larger side; equal sizes put the
/// smaller node id on the `A` side.
pub fn oriented(t: &FairSplitTree, u: NodeId, v: NodeId) -> WspdPair {
    let (su, sv) = (t.size(u), t.size(v));
    let (a, b) = if su > sv || (su == sv && u < v) { (u, v) } else { (v, u) };
    WspdPair { a, b, a_size: t.size(a), b_size: t.size(b), a_prime: None }
}

fn separated(t: &FairSplitTree, u: NodeId, v: NodeId, s: f64) -> bool {
    let (bu, bv) = (t.bbox(u), t.bbox(v));
    bu.distance_to(bv) >= s * bu.diagonal().max(bv.diagonal())
}

/// Callahan–Kosaraju pairing over the tree.
///
/// A candidate pair is accepted when the distance between the two bounding
/// boxes is at least `s` times the larger box diagonal, which implies
/// separation of the underlying point sets. Otherwise the node with the larger
/// `diam′` is split (lower id on ties).
pub fn build_wspd(t: &FairSplitTree, s: f64) -> Result<Wspd> {
    if !(s >= 1.0) || !s.is_finite() {
        return Err(Error::invalid("separation s must be a finite value >= 1"));
    }
    let topo = t.topology();
    let mut pairs = Vec::new();
    let mut stack: Vec<(NodeId, NodeId)> = Vec::new();
    for u in 0..t.len() as NodeId {
        if let Some([l, r]) = topo.children(u) {
            stack.push((l, r));
            while let Some((v, w)) = stack.pop() {
                if separated(t, v, w, s) {
                    pairs.push(oriented(t, v, w));
                    continue;
                }
                let (dv, dw) = (t.diam_prime(v), t.diam_prime(w));
                let (mut split, mut keep) = if dv > dw || (dv == dw && v < w) { (v, w) } else { (w, v) };
                if topo.is_leaf(split) {
                    core::mem::swap(&mut split, &mut keep);
                }
                let Some([c0, c1]) = topo.children(split) else {
                    // Two distinct leaves always pass the box test.
                    pairs.push(oriented(t, v, w));
                    continue;
                };
                stack.push((c1, keep));
                stack.push((c0, keep));
            }
        }
    }
    Ok(Wspd { pairs, s })
}

/// `Σ min(|A_i|, |B_i|)`, which is `Σ |B_i|` under the orientation convention.
pub fn min_size_sum(w: &Wspd) -> u64 {
    w.pairs.iter().map(|p| p.a_size.min(p.b_size) as u64).sum()
}

/// Outcome of an exhaustive WSPD audit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct WspdReport {
    pub pairs_checked: usize,
    /// Indices of pairs that are not `s`-separated.
    pub separation_violations: Vec<usize>,
    /// Point pairs covered by no pair.
    pub uncovered: Vec<(u32, u32)>,
    /// Point pairs covered more than once.
    pub multiply_covered: Vec<(u32, u32)>,
    /// Pairs whose sides violate `|A| ≥ |B|` or reference bad nodes.
    pub malformed: Vec<usize>,
}

impl WspdReport {
    pub fn is_ok(&self) -> bool {
        self.separation_violations.is_empty()
            && self.uncovered.is_empty()
            && self.multiply_covered.is_empty()
            && self.malformed.is_empty()
    }
}

/// Exhaustively checks separation (exact diameters and set distances,
/// relative tolerance `1e-9`) and exactly-once coverage of all point pairs.
pub fn verify_wspd(pts: &PointSet, t: &FairSplitTree, w: &Wspd, s: f64) -> WspdReport {
    let n = pts.len();
    let mut report = WspdReport { pairs_checked: w.pairs.len(), ..Default::default() };
    let mut diam: Vec<Option<f64>> = vec![None; t.len()];
    let mut cover = vec![0u8; n * n];
    for (i, p) in w.pairs.iter().enumerate() {
        if p.a as usize >= t.len() || p.b as usize >= t.len() || t.size(p.a) < t.size(p.b) {
            report.malformed.push(i);
            continue;
        }
        let (a, b) = (t.leaves(p.a), t.leaves(p.b));
        let mut diam_of = |u: NodeId, leaves: &[u32]| {
            *diam[u as usize].get_or_insert_with(|| pts.diam_exact_of(leaves).unwrap_or(0.0))
        };
        let d = diam_of(p.a, a).max(diam_of(p.b, b));
        if pts.set_distance(a, b) < s * d * (1.0 - 1e-9) {
            report.separation_violations.push(i);
        }
        for &x in a {
            for &y in b {
                let (lo, hi) = if x < y { (x, y) } else { (y, x) };
                let c = &mut cover[lo as usize * n + hi as usize];
                *c = c.saturating_add(1);
            }
        }
    }
    for x in 0..n {
        for y in x + 1..n {
            match cover[x * n + y] {
                0 => report.uncovered.push((x as u32, y as u32)),
                1 => {}
                _ => report.multiply_covered.push((x as u32, y as u32)),
            }
        }
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fst::build_fst;
    use crate::geometry::uniform_points;

    fn line(xs: &[f64]) -> PointSet {
        PointSet::new(xs.iter().map(|&x| vec![x]).collect()).unwrap()
    }

    #[test]
    fn two_points_one_pair() {
        for s in [1.0, 2.0, 100.0] {
            let pts = line(&[0.0, 1.0]);
            let t = build_fst(&pts).unwrap();
            let w = build_wspd(&t, s).unwrap();
            assert_eq!(w.m(), 1);
            assert_eq!((w.pairs[0].a_size, w.pairs[0].b_size), (1, 1));
            assert!(verify_wspd(&pts, &t, &w, s).is_ok());
            assert_eq!(min_size_sum(&w), 1);
        }
    }

    #[test]
    fn exponential_line_regression() {
        let pts = line(&[0.0, 1.0, 2.0, 4.0, 8.0, 16.0]);
        let t = build_fst(&pts).unwrap();
        let w = build_wspd(&t, 2.0).unwrap();
        assert!(verify_wspd(&pts, &t, &w, 2.0).is_ok());
        // Frozen from the first run of this construction.
        assert_eq!(w.m(), 9);
    }

    #[test]
    fn random_plane_is_a_wspd() {
        let pts = uniform_points(200, 2, 11).unwrap();
        let t = build_fst(&pts).unwrap();
        let w = build_wspd(&t, 2.0).unwrap();
        let r = verify_wspd(&pts, &t, &w, 2.0);
        assert!(r.is_ok(), "{r:?}");
        assert!(w.pairs.iter().all(|p| p.a_size >= p.b_size));
    }

    #[test]
    fn deleted_pair_leaves_pairs_uncovered() {
        let pts = uniform_points(40, 2, 3).unwrap();
        let t = build_fst(&pts).unwrap();
        let mut w = build_wspd(&t, 2.0).unwrap();
        let gone = w.pairs.remove(5);
        let r = verify_wspd(&pts, &t, &w, 2.0);
        assert_eq!(r.uncovered.len(), (gone.a_size * gone.b_size) as usize);
        assert!(r.multiply_covered.is_empty());
    }

    #[test]
    fn duplicated_pair_is_reported() {
        let pts = uniform_points(40, 2, 3).unwrap();
        let t = build_fst(&pts).unwrap();
        let mut w = build_wspd(&t, 2.0).unwrap();
        let dup = w.pairs[7];
        w.pairs.push(dup);
        let r = verify_wspd(&pts, &t, &w, 2.0);
        assert_eq!(r.multiply_covered.len(), (dup.a_size * dup.b_size) as usize);
        assert!(r.uncovered.is_empty());
    }

    #[test]
    fn singleton_pairs_sum_to_m() {
        let pts = line(&[0.0, 1.0, 3.0]);
        let t = build_fst(&pts).unwrap();
        let w = build_wspd(&t, 1000.0).unwrap();
        assert!(w.pairs.iter().all(|p| p.b_size == 1));
        assert_eq!(min_size_sum(&w), w.m() as u64);
    }

    #[test]
    fn rejects_small_s() {
        let pts = line(&[0.0, 1.0]);
        let t = build_fst(&pts).unwrap();
        assert!(build_wspd(&t, 0.5).is_err());
        assert!(build_wspd(&t, f64::NAN).is_err());
    }
}
