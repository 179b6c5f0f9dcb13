//! Points, Euclidean distance, axis-aligned boxes and the two diameter
//! notions: the exact set diameter and `diam′`, the sum of box side lengths.

use alloc::vec::Vec;
use core::cmp::Ordering;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::math;
use crate::{Error, Result};

/// An indexed point set in `R^d`. Index `i` is the stable identity of the
/// `i`-th point throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    dim: usize,
    coords: Vec<f64>,
}

impl PointSet {
    /// Builds a point set from rows of coordinates.
    ///
    /// Rejects ragged rows, non-finite coordinates, a zero dimension and
    /// duplicate points.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = match rows.first() {
            Some(r) => r.len(),
            None => return Err(Error::invalid("point set is empty")),
        };
        let mut coords = Vec::with_capacity(dim * rows.len());
        for (i, row) in rows.iter().enumerate() {
            if row.len() != dim {
                return Err(Error::invalid(alloc::format!("point {i} has {} coordinates, expected {dim}", row.len())));
            }
            coords.extend_from_slice(row);
        }
        Self::from_flat(dim, coords)
    }

    /// Builds a point set from a row-major coordinate buffer.
    pub fn from_flat(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("dimension must be positive"));
        }
        if coords.is_empty() {
            return Err(Error::invalid("point set is empty"));
        }
        if coords.len() % dim != 0 {
            return Err(Error::invalid("coordinate count is not a multiple of the dimension"));
        }
        if let Some(pos) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::invalid(alloc::format!("point {} has a non-finite coordinate", pos / dim)));
        }
        let set = PointSet { dim, coords };
        if let Some((i, j)) = set.find_duplicate() {
            return Err(Error::invalid(alloc::format!("points {i} and {j} coincide")));
        }
        Ok(set)
    }

    fn find_duplicate(&self) -> Option<(usize, usize)> {
        let mut order: Vec<usize> = (0..self.len()).collect();
        order.sort_by(|&a, &b| lex_cmp(self.point(a), self.point(b)));
        order.windows(2).find(|w| self.point(w[0]) == self.point(w[1])).map(|w| (w[0].min(w[1]), w[0].max(w[1])))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim)
    }

    /// Euclidean distance between points `i` and `j` of this set.
    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        dist_unchecked(self.point(i), self.point(j))
    }

    /// Bounding box of the points with the given indices.
    pub fn bounding_box_of(&self, idx: &[u32]) -> Result<BoundingBox> {
        bounding_box(idx.iter().map(|&i| self.point(i as usize)))
    }

    /// Exact diameter of the points with the given indices.
    pub fn diam_exact_of(&self, idx: &[u32]) -> Result<f64> {
        if idx.is_empty() {
            return Err(Error::invalid("diameter of an empty set"));
        }
        let mut best = 0.0f64;
        for (k, &i) in idx.iter().enumerate() {
            for &j in &idx[k + 1..] {
                best = best.max(self.dist(i as usize, j as usize));
            }
        }
        Ok(best)
    }

    /// Exact distance between two index sets, `min dist(p, q)`.
    pub fn set_distance(&self, a: &[u32], b: &[u32]) -> f64 {
        let mut best = f64::INFINITY;
        for &i in a {
            for &j in b {
                best = best.min(self.dist(i as usize, j as usize));
            }
        }
        best
    }
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

#[inline]
fn dist_unchecked(p: &[f64], q: &[f64]) -> f64 {
    let s: f64 = p.iter().zip(q).map(|(a, b)| (a - b) * (a - b)).sum();
    math::sqrt(s)
}

/// Euclidean distance between two points of equal dimension.
pub fn dist(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::invalid(alloc::format!("dimension mismatch: {} vs {}", p.len(), q.len())));
    }
    Ok(dist_unchecked(p, q))
}

/// Axis-aligned box with `lo[j] ≤ hi[j]` on every axis.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundingBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoundingBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.is_empty() {
            return Err(Error::invalid("box corners must share a positive dimension"));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l > h) {
            return Err(Error::invalid("box has lo > hi on some axis"));
        }
        Ok(BoundingBox { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn side(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Longest side; the lowest axis wins ties.
    pub fn longest_axis(&self) -> usize {
        let mut best = 0;
        for j in 1..self.dim() {
            if self.side(j) > self.side(best) {
                best = j;
            }
        }
        best
    }

    /// Length of the box diagonal, an upper bound on the diameter of any set
    /// inside it.
    pub fn diagonal(&self) -> f64 {
        let s: f64 = (0..self.dim()).map(|j| self.side(j) * self.side(j)).sum();
        math::sqrt(s)
    }

    /// Euclidean distance between two boxes (0 if they intersect).
    pub fn distance_to(&self, other: &BoundingBox) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim() {
            let gap = (other.lo[j] - self.hi[j]).max(self.lo[j] - other.hi[j]).max(0.0);
            s += gap * gap;
        }
        math::sqrt(s)
    }
}

/// Smallest axis-aligned box containing every point.
pub fn bounding_box<'a>(mut pts: impl Iterator<Item = &'a [f64]>) -> Result<BoundingBox> {
    let first = pts.next().ok_or_else(|| Error::invalid("bounding box of an empty set"))?;
    let mut lo = first.to_vec();
    let mut hi = first.to_vec();
    for p in pts {
        if p.len() != lo.len() {
            return Err(Error::invalid("dimension mismatch inside point set"));
        }
        for (j, &c) in p.iter().enumerate() {
            lo[j] = lo[j].min(c);
            hi[j] = hi[j].max(c);
        }
    }
    Ok(BoundingBox { lo, hi })
}

/// `diam′`: the sum of the side lengths of the box.
pub fn diam_prime(b: &BoundingBox) -> f64 {
    (0..b.dim()).map(|j| b.side(j)).sum()
}

/// Maximum pairwise distance by exhaustive scan.
pub fn diam_exact<'a>(pts: impl IntoIterator<Item = &'a [f64]>) -> Result<f64> {
    let pts: Vec<&[f64]> = pts.into_iter().collect();
    if pts.is_empty() {
        return Err(Error::invalid("diameter of an empty set"));
    }
    let mut best = 0.0f64;
    for (k, p) in pts.iter().enumerate() {
        for q in &pts[k + 1..] {
            best = best.max(dist(p, q)?);
        }
    }
    Ok(best)
}

/// `n` distinct points drawn uniformly from `[0, 1)^dim`, reproducible per
/// seed.
pub fn uniform_points(n: usize, dim: usize, seed: u64) -> Result<PointSet> {
    if n == 0 || dim == 0 {
        return Err(Error::invalid("need at least one point and one dimension"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    loop {
        let coords: Vec<f64> = (0..n * dim).map(|_| rng.gen::<f64>()).collect();
        match PointSet::from_flat(dim, coords) {
            Ok(set) => return Ok(set),
            // Coincident draws are astronomically unlikely; redraw the whole set.
            Err(Error::InvalidInput(_)) => continue,
            Err(e) => return Err(e),
        }
    }
}
