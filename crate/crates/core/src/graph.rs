//! Undirected geometric graphs over point indices, and a deduplicating edge
//! accumulator used while assembling them.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Point sets up to this size accumulate edges in an `n × n` bit matrix.
const DENSE_LIMIT: usize = 1 << 14;

/// Deduplicating set of undirected edges over `0..n`, ignoring self-loops.
#[derive(Debug, Clone)]
pub struct EdgeSet {
    n: usize,
    repr: Repr,
    count: usize,
}

#[derive(Debug, Clone)]
enum Repr {
    Dense { words_per_row: usize, bits: Vec<u64> },
    Sparse(BTreeSet<(u32, u32)>),
}

impl EdgeSet {
    pub fn new(n: usize) -> Self {
        let repr = if n <= DENSE_LIMIT {
            let words_per_row = n.div_ceil(64);
            Repr::Dense { words_per_row, bits: vec![0; words_per_row * n] }
        } else {
            Repr::Sparse(BTreeSet::new())
        };
        EdgeSet { n, repr, count: 0 }
    }

    pub fn vertex_count(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.count
    }

    pub fn is_empty(&self) -> bool {
        self.count == 0
    }

    /// Inserts `{i, j}`; returns whether it was new. Self-loops are dropped.
    pub fn insert(&mut self, i: u32, j: u32) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        debug_assert!((b as usize) < self.n);
        let fresh = match &mut self.repr {
            Repr::Dense { words_per_row, bits } => {
                let w = a as usize * *words_per_row + (b as usize >> 6);
                let mask = 1u64 << (b & 63);
                let fresh = bits[w] & mask == 0;
                bits[w] |= mask;
                fresh
            }
            Repr::Sparse(set) => set.insert((a, b)),
        };
        self.count += fresh as usize;
        fresh
    }

    pub fn contains(&self, i: u32, j: u32) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        match &self.repr {
            Repr::Dense { words_per_row, bits } => {
                bits[a as usize * *words_per_row + (b as usize >> 6)] & (1u64 << (b & 63)) != 0
            }
            Repr::Sparse(set) => set.contains(&(a, b)),
        }
    }

    /// Adds every edge between distinct members of `pts`.
    pub fn insert_clique(&mut self, pts: &[u32]) {
        for (k, &p) in pts.iter().enumerate() {
            for &q in &pts[k + 1..] {
                self.insert(p, q);
            }
        }
    }

    pub fn extend(&mut self, edges: impl IntoIterator<Item = (u32, u32)>) {
        for (i, j) in edges {
            self.insert(i, j);
        }
    }

    /// Edges as `(i, j)` with `i < j`, in lexicographic order.
    pub fn iter(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        let dense = match &self.repr {
            Repr::Dense { words_per_row, bits } => Some((*words_per_row, bits)),
            Repr::Sparse(_) => None,
        };
        let sparse = match &self.repr {
            Repr::Sparse(set) => Some(set.iter().copied()),
            Repr::Dense { .. } => None,
        };
        let dense_iter = dense.into_iter().flat_map(move |(wpr, bits)| {
            (0..self.n).flat_map(move |a| {
                bits[a * wpr..(a + 1) * wpr]
                    .iter()
                    .enumerate()
                    .flat_map(move |(w, &word)| BitIter { word, base: (w * 64) as u32 })
                    .map(move |b| (a as u32, b))
            })
        });
        dense_iter.chain(sparse.into_iter().flatten())
    }

    pub fn into_graph(self) -> GeometricGraph {
        GeometricGraph::from_sorted_unique_edges(self.n, self.iter())
    }
}

struct BitIter {
    word: u64,
    base: u32,
}

impl Iterator for BitIter {
    type Item = u32;
    fn next(&mut self) -> Option<u32> {
        if self.word == 0 {
            return None;
        }
        let tz = self.word.trailing_zeros();
        self.word &= self.word - 1;
        Some(self.base + tz)
    }
}

/// Undirected simple graph on point indices `0..n`. Edge lengths are the
/// Euclidean distances of the endpoints and are computed on demand.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeometricGraph {
    adj: Vec<Vec<u32>>,
    edges: usize,
}

impl GeometricGraph {
    pub fn empty(n: usize) -> Self {
        GeometricGraph { adj: vec![Vec::new(); n], edges: 0 }
    }

    /// Builds a graph from arbitrary edges; rejects out-of-range endpoints and
    /// self-loops, and drops duplicates.
    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (u32, u32)>) -> Result<Self> {
        let mut adj = vec![Vec::new(); n];
        for (i, j) in edges {
            if i as usize >= n || j as usize >= n {
                return Err(Error::invalid(alloc::format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::invalid(alloc::format!("self-loop at {i}")));
            }
            adj[i as usize].push(j);
            adj[j as usize].push(i);
        }
        let mut edges = 0;
        for list in &mut adj {
            list.sort_unstable();
            list.dedup();
            edges += list.len();
        }
        Ok(GeometricGraph { adj, edges: edges / 2 })
    }

    fn from_sorted_unique_edges(n: usize, edges: impl Iterator<Item = (u32, u32)>) -> Self {
        let mut degree = vec![0usize; n];
        let edges: Vec<(u32, u32)> = edges.collect();
        for &(i, j) in &edges {
            degree[i as usize] += 1;
            degree[j as usize] += 1;
        }
        let mut adj: Vec<Vec<u32>> = degree.iter().map(|&d| Vec::with_capacity(d)).collect();
        // Lexicographic (i, j) order keeps both halves of every list sorted:
        // back-edges j→i arrive in increasing i, forward edges in increasing j,
        // and all back-edges of a vertex precede its forward edges.
        for &(i, j) in &edges {
            adj[j as usize].push(i);
        }
        for &(i, j) in &edges {
            adj[i as usize].push(j);
        }
        GeometricGraph { adj, edges: edges.len() }
    }

    pub fn vertex_count(&self) -> usize {
        self.adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges
    }

    pub fn neighbours(&self, v: u32) -> &[u32] {
        &self.adj[v as usize]
    }

    pub fn degree(&self, v: u32) -> usize {
        self.adj[v as usize].len()
    }

    pub fn has_edge(&self, i: u32, j: u32) -> bool {
        self.adj.get(i as usize).is_some_and(|l| l.binary_search(&j).is_ok())
    }

    /// Edges `(i, j)` with `i < j` in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        self.adj.iter().enumerate().flat_map(|(i, l)| {
            let i = i as u32;
            l.iter().copied().filter(move |&j| j > i).map(move |j| (i, j))
        })
    }

    /// A copy with one edge removed, for fault injection.
    pub fn without_edge(&self, i: u32, j: u32) -> Self {
        let mut g = self.clone();
        let mut removed = false;
        for (a, b) in [(i, j), (j, i)] {
            if let Some(list) = g.adj.get_mut(a as usize) {
                if let Ok(pos) = list.binary_search(&b) {
                    list.remove(pos);
                    removed = true;
                }
            }
        }
        if removed {
            g.edges -= 1;
        }
        g
    }

    /// `N(Y)`: the union of the neighbourhoods of `y`, sorted.
    pub fn neighbourhood(&self, ys: &[u32]) -> Vec<u32> {
        let mut mark = vec![false; self.adj.len()];
        for &y in ys {
            for &z in self.neighbours(y) {
                mark[z as usize] = true;
            }
        }
        collect_marked(&mark)
    }

    /// `S(Y)` restricted to `domain`: members of `domain` whose every
    /// neighbour lies in `Y`. Isolated vertices are in every shadow.
    pub fn shadow(&self, ys: &[u32], domain: &[u32]) -> Vec<u32> {
        let mut in_y = vec![false; self.adj.len()];
        for &y in ys {
            in_y[y as usize] = true;
        }
        let mut out: Vec<u32> =
            domain.iter().copied().filter(|&x| self.neighbours(x).iter().all(|&z| in_y[z as usize])).collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Union of two graphs on the same vertex set.
    pub fn union(&self, other: &GeometricGraph) -> Result<Self> {
        if self.vertex_count() != other.vertex_count() {
            return Err(Error::invalid("graph union needs equal vertex counts"));
        }
        GeometricGraph::from_edges(self.vertex_count(), self.edges().chain(other.edges()))
    }
}

pub(crate) fn collect_marked(mark: &[bool]) -> Vec<u32> {
    mark.iter().enumerate().filter_map(|(i, &m)| m.then_some(i as u32)).collect()
}
