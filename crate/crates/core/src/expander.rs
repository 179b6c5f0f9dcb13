//! Random bipartite expanders in the style of the "expand" and "shrink"
//! lemmas: every right vertex samples `Δ` neighbours uniformly (with
//! replacement) from the left side. Degree formulas come from the union-bound
//! arguments; exhaustive verifiers check the two properties on small sides.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::math;
use crate::seed::Seed;
use crate::{Error, Result};

/// Largest side the exhaustive verifiers will enumerate.
pub const EXHAUSTIVE_LIMIT: usize = 20;

/// Smallest integer strictly greater than `k(1 + ln ℓ) + ℓ(1 + ln k)`.
pub fn expand_degree(k: f64, l: f64) -> u32 {
    let bound = k * (1.0 + math::ln(l)) + l * (1.0 + math::ln(k));
    (math::floor(bound) + 1.0).max(1.0) as u32
}

/// Log of the union-bound term `C(|A|, y)·C(|B|, x)·(y/|A|)^(Δx)` with the
/// `1/|B|` budget moved to the left: the term is acceptable when this is < 0.
fn shrink_term(a: f64, b: f64, y: f64, x: f64, degree: f64) -> f64 {
    math::ln_binomial(a, y) + math::ln_binomial(b, x) + degree * x * math::ln(y / a) + math::ln(b)
}

/// Smallest `Δ` making a single term acceptable.
fn shrink_term_degree(a: f64, b: f64, y: f64, x: f64) -> u32 {
    let fixed = math::ln_binomial(a, y) + math::ln_binomial(b, x) + math::ln(b);
    let per_unit = -x * math::ln(y / a);
    let mut d = if fixed < 0.0 { 1.0 } else { (math::floor(fixed / per_unit) + 1.0).max(1.0) };
    // guard the floor against rounding at exact boundaries
    while shrink_term(a, b, y, x, d) >= 0.0 {
        d += 1.0;
    }
    while d > 1.0 && shrink_term(a, b, y, x, d - 1.0) < 0.0 {
        d -= 1.0;
    }
    d as u32
}

/// Degree from the displayed shrink inequality
/// `C(n, τx)·C(|B|, x)·(τx/n)^(Δx) < 1/|B|` over
/// `x ∈ 1..=min(|B|, (1−1/k)|A|/τ)`, with `n = |A|`.
///
/// An empty `x` range makes the condition vacuous and yields `1`.
pub fn shrink_degree(k: f64, tau: f64, a_size: usize, b_size: usize) -> u32 {
    let (a, b) = (a_size as f64, b_size.max(1) as f64);
    let x_max = (math::floor((1.0 - 1.0 / k) * a / tau).max(0.0) as usize).min(b_size);
    (1..=x_max).map(|x| shrink_term_degree(a, b, tau * x as f64, x as f64)).max().unwrap_or(1)
}

/// Shrink degree with the union bound taken over every shadow size
/// `x ∈ 1..=|B|`. For `τx` beyond `(1−1/k)|A|` the offending `A′` is the
/// largest admissible set, of size `⌊(1−1/k)|A|⌋`.
///
/// Unlike [`shrink_degree`] this never returns a vacuous `1` when `τ`
/// exceeds `(1−1/k)|A|`: in that regime any non-empty shadow of an
/// admissible set is a violation, which the `x = 1` term with the clamped
/// `A′` accounts for. Stops early once the degree reaches `cap`.
pub fn shrink_degree_full_range(k: f64, tau: f64, a_size: usize, b_size: usize, cap: u32) -> u32 {
    let (a, b) = (a_size as f64, b_size.max(1) as f64);
    let largest = math::floor((1.0 - 1.0 / k) * a);
    if largest < 1.0 {
        // only A′ = ∅ is admissible, and no right vertex is isolated
        return 1;
    }
    let mut best = 1;
    for x in 1..=b_size.max(1) {
        let y = (tau * x as f64).min(largest);
        best = best.max(shrink_term_degree(a, b, y, x as f64));
        if best >= cap {
            break;
        }
    }
    best
}

/// Neighbours of one right vertex.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Neighbours {
    /// Every left vertex (except the vertex itself for self-pairs).
    All,
    /// Sorted, distinct left vertices.
    List(Vec<u32>),
}

/// Bipartite graph from right vertices `B` into left vertices `A`.
///
/// When `left == right` (a self-pair such as `(L(T), L(T))`) self-loops are
/// dropped.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteExpander {
    pub left: Vec<u32>,
    pub right: Vec<u32>,
    pub adj: Vec<Neighbours>,
    /// Samples drawn per right vertex.
    pub degree: u32,
}

/// Samples `degree` neighbours in `left` for every vertex of `right`.
///
/// A degree of at least `|A|` saturates: the right vertex is joined to all of
/// `A`, the limit of sampling with replacement.
pub fn build_bipartite<R: Rng + ?Sized>(
    left: Vec<u32>,
    right: Vec<u32>,
    degree: u32,
    rng: &mut R,
) -> Result<BipartiteExpander> {
    if degree < 1 {
        return Err(Error::invalid("expander degree must be at least 1"));
    }
    if left.is_empty() || right.is_empty() {
        return Err(Error::invalid("expander sides must be non-empty"));
    }
    let self_pair = left == right;
    let adj = if degree as usize >= left.len() {
        vec![Neighbours::All; right.len()]
    } else {
        right
            .iter()
            .map(|&b| {
                let mut picks: Vec<u32> = (0..degree)
                    .map(|_| left[rng.gen_range(0..left.len())])
                    .filter(|&a| !(self_pair && a == b))
                    .collect();
                picks.sort_unstable();
                picks.dedup();
                Neighbours::List(picks)
            })
            .collect()
    };
    Ok(BipartiteExpander { left, right, adj, degree })
}

impl BipartiteExpander {
    pub fn is_self_pair(&self) -> bool {
        self.left == self.right
    }

    /// Left neighbours of the `j`-th right vertex.
    pub fn neighbours_of(&self, j: usize) -> impl Iterator<Item = u32> + '_ {
        let b = self.right[j];
        let skip_self = self.is_self_pair();
        let all = matches!(self.adj[j], Neighbours::All).then_some(&self.left);
        let list = match &self.adj[j] {
            Neighbours::List(l) => Some(l),
            Neighbours::All => None,
        };
        all.into_iter()
            .flatten()
            .copied()
            .filter(move |&a| !(skip_self && a == b))
            .chain(list.into_iter().flatten().copied())
    }

    pub fn neighbour_count(&self, j: usize) -> usize {
        match &self.adj[j] {
            Neighbours::All => self.left.len() - usize::from(self.is_self_pair()),
            Neighbours::List(l) => l.len(),
        }
    }

    /// Edges as `(right, left)` point pairs.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.right.len()).flat_map(move |j| self.neighbours_of(j).map(move |a| (self.right[j], a)))
    }

    pub fn edge_count(&self) -> usize {
        (0..self.right.len()).map(|j| self.neighbour_count(j)).sum()
    }

    /// `N(B′) ⊆ A` for right vertices `ys`.
    pub fn neighbourhood(&self, ys: &[u32]) -> Vec<u32> {
        let mut out: Vec<u32> = ys
            .iter()
            .filter_map(|y| self.right.iter().position(|b| b == y))
            .flat_map(|j| self.neighbours_of(j).collect::<Vec<_>>())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Right vertices all of whose neighbours satisfy `in_y`.
    pub fn shadow_by(&self, in_y: impl Fn(u32) -> bool) -> Vec<u32> {
        (0..self.right.len()).filter(|&j| self.neighbours_of(j).all(&in_y)).map(|j| self.right[j]).collect()
    }

    /// `S(A′) ∩ B` for `ys ⊆ A`.
    pub fn shadow(&self, ys: &[u32]) -> Vec<u32> {
        let mut sorted = ys.to_vec();
        sorted.sort_unstable();
        self.shadow_by(|a| sorted.binary_search(&a).is_ok())
    }

    /// Bit masks over `left` of every right vertex's neighbourhood. In a
    /// self-pair a vertex also covers itself (it trivially reaches itself).
    fn masks(&self, closed: bool) -> Result<Vec<u64>> {
        if self.left.len() > 64 {
            return Err(Error::TooLarge { size: self.left.len(), limit: 64 });
        }
        let pos = |a: u32| self.left.binary_search(&a).ok().or_else(|| self.left.iter().position(|&x| x == a));
        Ok((0..self.right.len())
            .map(|j| {
                let mut m = 0u64;
                for a in self.neighbours_of(j) {
                    if let Some(i) = pos(a) {
                        m |= 1 << i;
                    }
                }
                if closed && self.is_self_pair() {
                    m |= 1 << j;
                }
                m
            })
            .collect())
    }

    /// Exhaustive expansion check: every `B′ ⊆ B` with `|B′| ≥ |B|/ℓ` has
    /// `|N(B′)| ≥ (1 − 1/k)|A|`. Neighbourhoods only grow with `B′`, so the
    /// subsets of size exactly `⌈|B|/ℓ⌉` decide it. Self-pairs count each
    /// vertex as its own neighbour.
    pub fn check_expansion(&self, k: f64, l: f64) -> Result<bool> {
        let nb = self.right.len();
        if nb > EXHAUSTIVE_LIMIT {
            return Err(Error::TooLarge { size: nb, limit: EXHAUSTIVE_LIMIT });
        }
        let masks = self.masks(true)?;
        let need = (1.0 - 1.0 / k) * self.left.len() as f64;
        let size = (math::ceil(nb as f64 / l) as usize).clamp(1, nb);
        let mut ok = true;
        for_each_subset_of_size(nb, size, |subset| {
            let mut cover = 0u64;
            let mut s = subset;
            while s != 0 {
                cover |= masks[s.trailing_zeros() as usize];
                s &= s - 1;
            }
            if (cover.count_ones() as f64) < need - 1e-9 {
                ok = false;
            }
            ok
        });
        Ok(ok)
    }

    /// Exhaustive shadow check: every `A′ ⊆ A` with `|A′| ≤ (1 − 1/k)|A|` has
    /// `|S(A′) ∩ B| ≤ |A′|/τ`.
    pub fn check_shadow(&self, k: f64, tau: f64) -> Result<bool> {
        let na = self.left.len();
        if na > EXHAUSTIVE_LIMIT {
            return Err(Error::TooLarge { size: na, limit: EXHAUSTIVE_LIMIT });
        }
        let masks = self.masks(false)?;
        let allowed = (1.0 - 1.0 / k) * na as f64;
        for subset in 0u64..(1u64 << na) {
            let size = subset.count_ones() as f64;
            if size > allowed + 1e-9 {
                continue;
            }
            let shadow = masks.iter().filter(|&&m| m & !subset == 0).count() as f64;
            if shadow > size / tau + 1e-9 {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Randomized expansion check over `trials` subsets of size `⌈|B|/ℓ⌉`,
    /// for sides too large to enumerate. `true` means no violation was seen.
    pub fn sample_expansion<R: Rng + ?Sized>(&self, k: f64, l: f64, trials: usize, rng: &mut R) -> bool {
        let nb = self.right.len();
        let size = (math::ceil(nb as f64 / l) as usize).clamp(1, nb);
        let need = (1.0 - 1.0 / k) * self.left.len() as f64;
        let mut idx: Vec<usize> = (0..nb).collect();
        (0..trials).all(|_| {
            partial_shuffle(&mut idx, size, rng);
            let mut cover: Vec<u32> = idx[..size].iter().flat_map(|&j| self.neighbours_of(j)).collect();
            if self.is_self_pair() {
                cover.extend(idx[..size].iter().map(|&j| self.right[j]));
            }
            cover.sort_unstable();
            cover.dedup();
            cover.len() as f64 >= need - 1e-9
        })
    }

    /// Randomized shadow check over `trials` random admissible `A′`.
    pub fn sample_shadow<R: Rng + ?Sized>(&self, k: f64, tau: f64, trials: usize, rng: &mut R) -> bool {
        let na = self.left.len();
        let max_size = math::floor((1.0 - 1.0 / k) * na as f64 + 1e-9) as usize;
        let mut idx: Vec<usize> = (0..na).collect();
        (0..trials).all(|_| {
            let size = rng.gen_range(0..=max_size);
            partial_shuffle(&mut idx, size, rng);
            let mut chosen: Vec<u32> = idx[..size].iter().map(|&i| self.left[i]).collect();
            chosen.sort_unstable();
            let shadow = self.shadow_by(|a| chosen.binary_search(&a).is_ok()).len() as f64;
            shadow <= size as f64 / tau + 1e-9
        })
    }
}

fn partial_shuffle<R: Rng + ?Sized>(idx: &mut [usize], size: usize, rng: &mut R) {
    for i in 0..size {
        let j = rng.gen_range(i..idx.len());
        idx.swap(i, j);
    }
}

/// Calls `f` on every `size`-subset of `0..n` as a bit mask (Gosper's hack)
/// until `f` returns `false`.
fn for_each_subset_of_size(n: usize, size: usize, mut f: impl FnMut(u64) -> bool) {
    if size == 0 || size > n {
        return;
    }
    let mut s: u64 = (1u64 << size) - 1;
    let limit = 1u64 << n;
    while s < limit {
        if !f(s) {
            return;
        }
        let c = s & s.wrapping_neg();
        let r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
    }
}

/// Builds an expander at `degree`, resampling with fresh sub-seeds until
/// `accept` passes or `attempts` draws are used. Returns the graph, the
/// number of draws and whether the last one passed.
pub fn build_with_resampling(
    left: Vec<u32>,
    right: Vec<u32>,
    degree: u32,
    seed: Seed,
    attempts: u32,
    mut accept: impl FnMut(&BipartiteExpander) -> Result<bool>,
) -> Result<(BipartiteExpander, u32, bool)> {
    let mut last = None;
    for attempt in 0..attempts.max(1) {
        let g = build_bipartite(left.clone(), right.clone(), degree, &mut seed.child(attempt as u64).rng())?;
        if accept(&g)? {
            return Ok((g, attempt + 1, true));
        }
        // saturated graphs are deterministic; resampling cannot change them
        let saturated = g.adj.iter().all(|n| matches!(n, Neighbours::All));
        last = Some(g);
        if saturated {
            return Ok((last.take().expect("just stored"), attempt + 1, false));
        }
    }
    Ok((last.expect("at least one attempt"), attempts.max(1), false))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::vec::Vec;

    fn range(lo: u32, hi: u32) -> Vec<u32> {
        (lo..hi).collect()
    }

    #[test]
    fn expand_degree_examples() {
        assert_eq!(expand_degree(2.0, 2.0), 7);
        assert_eq!(expand_degree(2.0, 4.0), 12);
        for k in 2..30 {
            for l in 2..30 {
                assert!(expand_degree(k as f64, l as f64) <= expand_degree(k as f64 + 1.0, l as f64));
            }
        }
    }

    /// Independent oracle: exact binomials via summed logs, incrementing `Δ`.
    fn shrink_oracle(k: f64, tau: f64, a: usize, b: usize) -> u32 {
        fn ln_choose(n: usize, r: usize) -> f64 {
            (0..r).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
        }
        let x_max = (((1.0 - 1.0 / k) * a as f64 / tau).floor() as usize).min(b);
        (1u32..)
            .find(|&d| {
                (1..=x_max).all(|x| {
                    let y = (tau * x as f64) as usize;
                    let lhs = ln_choose(a, y) + ln_choose(b, x) + (d as usize * x) as f64 * (y as f64 / a as f64).ln();
                    lhs < -(b as f64).ln()
                })
            })
            .unwrap()
    }

    #[test]
    fn shrink_degree_examples() {
        // empty x range: τ exceeds (1 − 1/k)|A|
        assert_eq!(shrink_degree(2.0, 20.0, 16, 16), 1);
        assert_eq!(shrink_oracle(2.0, 2.0, 16, 16), 8);
        assert_eq!(shrink_degree(2.0, 2.0, 16, 16), 8);
        for (k, tau, a, b) in [(2.0, 1.0, 10, 10), (3.0, 2.0, 30, 12), (4.0, 3.0, 40, 40), (2.0, 4.0, 64, 8)] {
            assert_eq!(shrink_degree(k, tau, a, b), shrink_oracle(k, tau, a, b), "{k} {tau} {a} {b}");
        }
    }

    #[test]
    fn shrink_degree_growth_bound() {
        // the largest ratio over this sweep is about 1.34
        let c0 = 3.0;
        for k in [2.0f64, 3.0, 5.0, 8.0] {
            for tau in [1.0f64, 2.0, 3.0, 5.0] {
                for n in [16usize, 64, 256, 1024] {
                    let d = shrink_degree(k, tau, n, n) as f64;
                    let bound = c0 * (k * tau.max(1.0).ln() + tau * k.ln() + (n as f64).ln()) + c0;
                    assert!(d <= bound, "k={k} tau={tau} n={n}: {d} > {bound}");
                }
            }
        }
    }

    #[test]
    fn full_range_degree_covers_the_vacuous_case() {
        assert_eq!(shrink_degree(4.0, 20.0, 12, 12), 1);
        let d = shrink_degree_full_range(4.0, 20.0, 12, 12, u32::MAX);
        assert!(d > 1);
        // the full range contains every literal term
        let full = shrink_degree_full_range(2.0, 2.0, 16, 16, u32::MAX);
        assert!(full >= shrink_degree(2.0, 2.0, 16, 16));
        let capped = shrink_degree_full_range(2.0, 2.0, 16, 16, 3);
        assert!((3..=full).contains(&capped));
        assert_eq!(shrink_degree_full_range(2.0, 5.0, 1, 4, u32::MAX), 1);
    }

    #[test]
    fn single_left_vertex() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = build_bipartite(vec![9], range(0, 5), 3, &mut rng).unwrap();
        for j in 0..5 {
            assert_eq!(g.neighbours_of(j).collect::<Vec<_>>(), vec![9]);
        }
    }

    #[test]
    fn degree_at_least_left_side_is_capped() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let g = build_bipartite(range(0, 4), range(10, 20), 4, &mut rng).unwrap();
        assert!((0..10).all(|j| g.neighbour_count(j) == 4));
        let g = build_bipartite(range(0, 4), range(10, 20), 3, &mut rng).unwrap();
        assert!((0..10).all(|j| (1..=3).contains(&g.neighbour_count(j))));
    }

    #[test]
    fn seeded_builds_are_identical() {
        let build = || {
            build_bipartite(range(0, 8), range(8, 16), 3, &mut ChaCha8Rng::seed_from_u64(42))
                .unwrap()
                .edges()
                .collect::<Vec<_>>()
        };
        assert_eq!(build(), build());
    }

    #[test]
    fn self_pair_drops_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = build_bipartite(range(0, 6), range(0, 6), 5, &mut rng).unwrap();
        assert!(g.edges().all(|(b, a)| a != b));
        let g = build_bipartite(range(0, 6), range(0, 6), 6, &mut rng).unwrap();
        assert_eq!(g.edge_count(), 30);
    }

    #[test]
    fn rejects_bad_arguments() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(build_bipartite(range(0, 3), range(3, 6), 0, &mut rng).is_err());
        assert!(build_bipartite(vec![], range(3, 6), 2, &mut rng).is_err());
    }

    fn complete(a: usize, b: usize) -> BipartiteExpander {
        BipartiteExpander {
            left: range(0, a as u32),
            right: range(100, 100 + b as u32),
            adj: vec![Neighbours::All; b],
            degree: a as u32,
        }
    }

    fn empty(a: usize, b: usize) -> BipartiteExpander {
        BipartiteExpander {
            left: range(0, a as u32),
            right: range(100, 100 + b as u32),
            adj: vec![Neighbours::List(vec![]); b],
            degree: 1,
        }
    }

    #[test]
    fn complete_graph_expands() {
        let g = complete(10, 10);
        for (k, l) in [(2.0, 2.0), (5.0, 3.0), (100.0, 10.0)] {
            assert!(g.check_expansion(k, l).unwrap());
        }
        assert!(g.check_shadow(2.0, 3.0).unwrap());
    }

    #[test]
    fn empty_graph_fails_both() {
        assert!(!empty(8, 8).check_expansion(2.0, 2.0).unwrap());
        // an isolated right vertex sits in the shadow of the empty set
        assert!(!empty(8, 8).check_shadow(2.0, 2.0).unwrap());
    }

    #[test]
    fn verifiers_refuse_large_sides() {
        assert!(matches!(complete(30, 30).check_expansion(2.0, 2.0), Err(Error::TooLarge { .. })));
        assert!(matches!(complete(30, 4).check_shadow(2.0, 2.0), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn expand_degree_graph_passes_after_resampling() {
        let d = expand_degree(2.0, 2.0);
        let (g, attempts, ok) =
            build_with_resampling(range(0, 12), range(12, 24), d, Seed(5), 100, |g| g.check_expansion(2.0, 2.0))
                .unwrap();
        assert!(ok && attempts <= 100);
        assert!(g.check_expansion(2.0, 2.0).unwrap());
    }

    #[test]
    fn shrink_degree_graph_passes_after_resampling() {
        let d = shrink_degree_full_range(2.0, 3.0, 12, 12, u32::MAX).min(12);
        let (g, attempts, ok) =
            build_with_resampling(range(0, 12), range(12, 24), d, Seed(5), 100, |g| g.check_shadow(2.0, 3.0)).unwrap();
        assert!(ok && attempts <= 100);
        assert!(g.check_shadow(2.0, 3.0).unwrap());
    }

    #[test]
    fn shadow_and_neighbourhood_queries() {
        let g = BipartiteExpander {
            left: range(0, 3),
            right: range(10, 13),
            adj: vec![Neighbours::List(vec![0]), Neighbours::List(vec![0, 1]), Neighbours::All],
            degree: 2,
        };
        assert_eq!(g.shadow(&[]), Vec::<u32>::new());
        assert_eq!(g.shadow(&[0]), vec![10]);
        assert_eq!(g.shadow(&[0, 1]), vec![10, 11]);
        assert_eq!(g.neighbourhood(&[10, 11]), vec![0, 1]);
        assert_eq!(g.neighbourhood(&[12]), vec![0, 1, 2]);
    }

    #[test]
    fn subset_enumeration_counts() {
        let mut count = 0;
        for_each_subset_of_size(12, 6, |_| {
            count += 1;
            true
        });
        assert_eq!(count, 924);
    }

    #[test]
    fn sampling_checks_agree_on_complete_graphs() {
        let g = complete(40, 40);
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        assert!(g.sample_expansion(4.0, 4.0, 50, &mut rng));
        assert!(g.sample_shadow(4.0, 2.0, 50, &mut rng));
        assert!(!empty(40, 40).sample_shadow(4.0, 2.0, 5, &mut rng));
    }
}
