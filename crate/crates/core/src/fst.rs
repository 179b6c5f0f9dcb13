//! Fair-split tree over a point set, plus the structural queries the spanner
//! construction runs on it: centroid node, detach/contract, rank, label,
//! special nodes and largest special subtrees.
//!
//! Node ids are assigned in preorder, so the root is `0` and every child has a
//! larger id than its parent. [`Topology`] carries only the shape of a full
//! binary tree (it is what the recursive construction splits apart);
//! [`FairSplitTree`] adds the geometry.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{diam_prime, BoundingBox, PointSet};
use crate::math;
use crate::{Error, Result};

pub type NodeId = u32;

const NONE: NodeId = NodeId::MAX;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TopoNode {
    pub parent: Option<NodeId>,
    pub children: Option<[NodeId; 2]>,
    /// Leaf count `|T_u|`.
    pub size: u32,
    /// Point index, leaves only.
    pub point: Option<u32>,
}

/// Nested description of a tree shape, used to build topologies by hand.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Shape {
    Leaf(u32),
    Node(Box<Shape>, Box<Shape>),
}

impl Shape {
    pub fn node(l: Shape, r: Shape) -> Shape {
        Shape::Node(Box::new(l), Box::new(r))
    }
}

/// A full binary tree whose leaves are point indices. Ids are preorder.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    nodes: Vec<TopoNode>,
}

impl Topology {
    pub fn from_shape(shape: &Shape) -> Topology {
        let mut b = TopoBuilder::default();
        let mut stack = vec![(shape, None::<(NodeId, usize)>)];
        while let Some((s, parent)) = stack.pop() {
            match s {
                Shape::Leaf(p) => {
                    b.push(parent, Some(*p));
                }
                Shape::Node(l, r) => {
                    let id = b.push(parent, None);
                    stack.push((r, Some((id, 1))));
                    stack.push((l, Some((id, 0))));
                }
            }
        }
        b.finish()
    }

    /// Rebuilds a topology from per-node parent links and leaf points listed
    /// in preorder (a node's first listed child is its left child).
    pub fn from_preorder(parents: &[Option<NodeId>], points: &[Option<u32>]) -> Result<Topology> {
        if parents.len() != points.len() {
            return Err(Error::invalid("parent and point lists differ in length"));
        }
        let mut b = TopoBuilder::default();
        let mut filled = vec![0usize; parents.len()];
        for (i, (&parent, &point)) in parents.iter().zip(points).enumerate() {
            let link = match parent {
                None if i == 0 => None,
                Some(p) if (p as usize) < i && points[p as usize].is_none() && filled[p as usize] < 2 => {
                    filled[p as usize] += 1;
                    Some((p, filled[p as usize] - 1))
                }
                _ => return Err(Error::invalid(alloc::format!("node {i} has an invalid parent"))),
            };
            b.push(link, point);
        }
        if (0..parents.len()).any(|i| points[i].is_none() && filled[i] != 2) {
            return Err(Error::invalid("internal node without two children"));
        }
        let t = b.finish();
        t.validate()?;
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn node(&self, u: NodeId) -> &TopoNode {
        &self.nodes[u as usize]
    }

    pub fn nodes(&self) -> &[TopoNode] {
        &self.nodes
    }

    pub fn size(&self, u: NodeId) -> u32 {
        self.nodes[u as usize].size
    }

    /// Number of leaves, `|T|`.
    pub fn leaf_count(&self) -> u32 {
        self.nodes[0].size
    }

    pub fn children(&self, u: NodeId) -> Option<[NodeId; 2]> {
        self.nodes[u as usize].children
    }

    pub fn parent(&self, u: NodeId) -> Option<NodeId> {
        self.nodes[u as usize].parent
    }

    pub fn is_leaf(&self, u: NodeId) -> bool {
        self.nodes[u as usize].children.is_none()
    }

    /// Leaf point indices of `T_u`, in preorder.
    pub fn leaf_points(&self, u: NodeId) -> Vec<u32> {
        let mut out = Vec::with_capacity(self.size(u) as usize);
        let mut stack = vec![u];
        while let Some(v) = stack.pop() {
            let n = &self.nodes[v as usize];
            match n.children {
                Some([l, r]) => {
                    stack.push(r);
                    stack.push(l);
                }
                None => out.push(n.point.expect("leaf without point")),
            }
        }
        out
    }

    /// Checks fullness, parent/child consistency and size bookkeeping.
    pub fn validate(&self) -> Result<()> {
        if self.nodes.is_empty() {
            return Err(Error::invalid("empty tree"));
        }
        if self.nodes[0].parent.is_some() {
            return Err(Error::invalid("root has a parent"));
        }
        for (i, n) in self.nodes.iter().enumerate() {
            match (n.children, n.point) {
                (Some([l, r]), None) => {
                    for c in [l, r] {
                        if c as usize >= self.nodes.len() || c as usize <= i {
                            return Err(Error::invalid("child id out of preorder"));
                        }
                        if self.nodes[c as usize].parent != Some(i as NodeId) {
                            return Err(Error::invalid("child/parent link mismatch"));
                        }
                    }
                    if n.size != self.nodes[l as usize].size + self.nodes[r as usize].size {
                        return Err(Error::invalid("size is not the sum of child sizes"));
                    }
                }
                (None, Some(_)) => {
                    if n.size != 1 {
                        return Err(Error::invalid("leaf size must be 1"));
                    }
                }
                _ => return Err(Error::invalid("node must be a leaf with a point or have two children")),
            }
        }
        Ok(())
    }

    /// Copies `T_u` into a fresh topology. If `skip` is given, the subtree at
    /// `skip` is dropped and its parent is contracted into `skip`'s sibling.
    fn copy_subtree(&self, u: NodeId, skip: Option<NodeId>) -> Topology {
        let mut b = TopoBuilder::default();
        let mut stack = vec![(u, None::<(NodeId, usize)>)];
        while let Some((mut v, parent)) = stack.pop() {
            if let (Some(s), Some([l, r])) = (skip, self.children(v)) {
                // v is the parent of the detached node: splice it out.
                if l == s {
                    v = r;
                } else if r == s {
                    v = l;
                }
            }
            let n = &self.nodes[v as usize];
            match n.children {
                None => {
                    b.push(parent, n.point);
                }
                Some([l, r]) => {
                    let id = b.push(parent, None);
                    stack.push((r, Some((id, 1))));
                    stack.push((l, Some((id, 0))));
                }
            }
        }
        b.finish()
    }
}

#[derive(Default)]
struct TopoBuilder {
    nodes: Vec<TopoNode>,
}

impl TopoBuilder {
    fn push(&mut self, parent: Option<(NodeId, usize)>, point: Option<u32>) -> NodeId {
        let id = self.nodes.len() as NodeId;
        self.nodes.push(TopoNode {
            parent: parent.map(|(p, _)| p),
            children: if point.is_some() { None } else { Some([NONE, NONE]) },
            size: if point.is_some() { 1 } else { 0 },
            point,
        });
        if let Some((p, slot)) = parent {
            if let Some(ch) = self.nodes[p as usize].children.as_mut() {
                ch[slot] = id;
            }
        }
        id
    }

    fn finish(mut self) -> Topology {
        for i in (0..self.nodes.len()).rev() {
            if let Some([l, r]) = self.nodes[i].children {
                self.nodes[i].size = self.nodes[l as usize].size + self.nodes[r as usize].size;
            }
        }
        Topology { nodes: self.nodes }
    }
}

/// Walks from the root towards the larger child until the subtree holds at
/// most two thirds of the leaves. Requires `|T| ≥ 2`.
pub(crate) fn centroid_walk(t: &Topology) -> NodeId {
    let total = t.leaf_count() as u64;
    debug_assert!(total >= 2);
    let mut v = t.root();
    // |T_v| ≤ 2|T|/3  ⟺  3|T_v| ≤ 2|T|
    while 3 * t.size(v) as u64 > 2 * total {
        let [l, r] = t.children(v).expect("a leaf holds at most 2|T|/3 leaves once |T| ≥ 2");
        v = if t.size(r) > t.size(l) { r } else { l };
    }
    v
}

/// A node `u₀` with `|T|/3 ≤ |T_{u₀}| ≤ 2|T|/3`.
pub fn centroid_node(t: &Topology, kappa: u32) -> Result<NodeId> {
    if t.leaf_count() <= kappa {
        return Err(Error::invalid(alloc::format!("tree of size {} is a base case (kappa = {kappa})", t.leaf_count())));
    }
    Ok(centroid_walk(t))
}

/// Splits `t` into `T_{u₀}` and `T₁ = T − T_{u₀}` with the now single-child
/// parent of `u₀` contracted away. Both outputs get fresh preorder ids.
pub fn detach(t: &Topology, u0: NodeId) -> Result<(Topology, Topology)> {
    if u0 as usize >= t.len() {
        return Err(Error::invalid("node id out of range"));
    }
    if u0 == t.root() {
        return Err(Error::invalid("cannot detach the root"));
    }
    Ok((t.copy_subtree(u0, None), t.copy_subtree(t.root(), Some(u0))))
}

/// `⌊log_{3/2} size⌋`.
pub fn rank(size: u64) -> u32 {
    math::floor_log(size.max(1), 1.5)
}

/// `⌊log_{1+ε} size⌋` for `0 < ε ≤ 1/2`.
pub fn label(size: u64, eps: f64) -> Result<u32> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::invalid("label requires 0 < eps <= 1/2"));
    }
    if size == 0 {
        return Err(Error::invalid("label of an empty subtree"));
    }
    Ok(math::floor_log(size, 1.0 + eps))
}

fn labels(t: &Topology, eps: f64) -> Result<Vec<u32>> {
    t.nodes().iter().map(|n| label(n.size as u64, eps)).collect()
}

fn special_mask(t: &Topology, lbl: &[u32]) -> Vec<bool> {
    t.nodes()
        .iter()
        .enumerate()
        .map(|(u, n)| match n.children {
            None => true,
            Some([l, r]) => lbl[u] != lbl[l as usize] && lbl[u] != lbl[r as usize],
        })
        .collect()
}

/// Ids of special nodes: leaves, and nodes whose label differs from both
/// children's labels. Ascending order.
pub fn special_nodes(t: &Topology, eps: f64) -> Result<Vec<NodeId>> {
    let lbl = labels(t, eps)?;
    Ok(special_mask(t, &lbl).into_iter().enumerate().filter_map(|(u, s)| s.then_some(u as NodeId)).collect())
}

/// For every node `u`, the root `u′` of the largest special subtree inside
/// `T_u` (ties go to the lower id).
///
/// The candidates are the special nodes reachable from `u` through nodes
/// sharing `lbl(u)`; any special node with a smaller label is strictly
/// smaller than all of them.
pub fn largest_special_subtrees(t: &Topology, eps: f64) -> Result<Vec<NodeId>> {
    let lbl = labels(t, eps)?;
    let special = special_mask(t, &lbl);
    let mut best: Vec<NodeId> = vec![NONE; t.len()];
    for u in (0..t.len()).rev() {
        if special[u] {
            best[u] = u as NodeId;
            continue;
        }
        let [l, r] = t.children(u as NodeId).expect("non-special nodes are internal");
        best[u] = [l, r]
            .into_iter()
            .filter(|&c| lbl[c as usize] == lbl[u])
            .map(|c| best[c as usize])
            .min_by_key(|&w| (core::cmp::Reverse(t.size(w)), w))
            .expect("a non-special node shares its label with a child");
    }
    Ok(best)
}

/// Root of the largest special subtree inside `T_u`.
pub fn largest_special_subtree(t: &Topology, u: NodeId, eps: f64) -> Result<NodeId> {
    if u as usize >= t.len() {
        return Err(Error::invalid("node id out of range"));
    }
    Ok(largest_special_subtrees(t, eps)?[u as usize])
}

/// A fair-split tree: the topology plus each node's bounding box and `diam′`.
#[derive(Debug, Clone, PartialEq)]
pub struct FairSplitTree {
    topo: Topology,
    boxes: Vec<BoundingBox>,
    diam_prime: Vec<f64>,
    /// Leaf point indices in preorder.
    leaf_order: Vec<u32>,
    /// `[start, end)` of each node's leaves inside `leaf_order`.
    leaf_range: Vec<(u32, u32)>,
    leaf_of_point: Vec<NodeId>,
}

/// Builds the fair-split tree by repeatedly bisecting the longest side of the
/// points' bounding box; points on the hyperplane go to the low side.
pub fn build_fst(pts: &PointSet) -> Result<FairSplitTree> {
    let mut b = TopoBuilder::default();
    let mut boxes: Vec<BoundingBox> = Vec::new();
    let all: Vec<u32> = (0..pts.len() as u32).collect();
    let mut stack = vec![(all, None::<(NodeId, usize)>)];
    while let Some((idx, parent)) = stack.pop() {
        let bbox = pts.bounding_box_of(&idx)?;
        if idx.len() == 1 {
            b.push(parent, Some(idx[0]));
            boxes.push(bbox);
            continue;
        }
        let axis = bbox.longest_axis();
        if bbox.side(axis) <= 0.0 {
            return Err(Error::invalid("duplicate points cannot be split"));
        }
        let mut mid = 0.5 * (bbox.lo[axis] + bbox.hi[axis]);
        if mid >= bbox.hi[axis] {
            // adjacent floats: the midpoint rounded up onto the maximum
            mid = bbox.lo[axis];
        }
        let (low, high): (Vec<u32>, Vec<u32>) = idx.iter().partition(|&&i| pts.point(i as usize)[axis] <= mid);
        let id = b.push(parent, None);
        boxes.push(bbox);
        stack.push((high, Some((id, 1))));
        stack.push((low, Some((id, 0))));
    }
    Ok(FairSplitTree::from_parts(b.finish(), boxes, pts.len()))
}

impl FairSplitTree {
    fn from_parts(topo: Topology, boxes: Vec<BoundingBox>, n: usize) -> Self {
        let diam_prime = boxes.iter().map(diam_prime).collect();
        let mut leaf_order = Vec::with_capacity(n);
        let mut leaf_range = vec![(0u32, 0u32); topo.len()];
        let mut leaf_of_point = vec![NONE; n];
        for (u, node) in topo.nodes().iter().enumerate() {
            if let Some(p) = node.point {
                leaf_range[u] = (leaf_order.len() as u32, leaf_order.len() as u32 + 1);
                leaf_of_point[p as usize] = u as NodeId;
                leaf_order.push(p);
            }
        }
        for u in (0..topo.len()).rev() {
            if let Some([l, r]) = topo.children(u as NodeId) {
                leaf_range[u] = (leaf_range[l as usize].0, leaf_range[r as usize].1);
            }
        }
        FairSplitTree { topo, boxes, diam_prime, leaf_order, leaf_range, leaf_of_point }
    }

    /// Reassembles a tree from stored parts (topology and per-node boxes).
    pub fn from_topology(topo: Topology, boxes: Vec<BoundingBox>) -> Result<Self> {
        topo.validate()?;
        if boxes.len() != topo.len() {
            return Err(Error::invalid("one box per node required"));
        }
        let n = topo.leaf_count() as usize;
        let mut seen = vec![false; n];
        for node in topo.nodes() {
            if let Some(p) = node.point {
                if p as usize >= n || seen[p as usize] {
                    return Err(Error::invalid("leaves must biject with point indices"));
                }
                seen[p as usize] = true;
            }
        }
        Ok(Self::from_parts(topo, boxes, n))
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn len(&self) -> usize {
        self.topo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.topo.is_empty()
    }

    pub fn root(&self) -> NodeId {
        0
    }

    pub fn size(&self, u: NodeId) -> u32 {
        self.topo.size(u)
    }

    pub fn bbox(&self, u: NodeId) -> &BoundingBox {
        &self.boxes[u as usize]
    }

    pub fn boxes(&self) -> &[BoundingBox] {
        &self.boxes
    }

    pub fn diam_prime(&self, u: NodeId) -> f64 {
        self.diam_prime[u as usize]
    }

    /// Leaf points of `T_u` as a slice (preorder).
    pub fn leaves(&self, u: NodeId) -> &[u32] {
        let (s, e) = self.leaf_range[u as usize];
        &self.leaf_order[s as usize..e as usize]
    }

    pub fn leaf_of_point(&self, p: u32) -> NodeId {
        self.leaf_of_point[p as usize]
    }

    /// Ancestors of the leaf holding point `p`, from the leaf up to the root.
    pub fn ancestors_of_point(&self, p: u32) -> Vec<NodeId> {
        let mut out = Vec::new();
        let mut v = Some(self.leaf_of_point(p));
        while let Some(u) = v {
            out.push(u);
            v = self.topo.parent(u);
        }
        out
    }

    /// Pairs `(child, parent)` violating `diam′(child) ≤ (1 − 1/(2d))·diam′(parent)`.
    pub fn fair_split_violations(&self) -> Vec<(NodeId, NodeId)> {
        let d = self.boxes[0].dim() as f64;
        let factor = 1.0 - 1.0 / (2.0 * d);
        let mut bad = Vec::new();
        for (u, node) in self.topo.nodes().iter().enumerate() {
            if let Some(p) = node.parent {
                let bound = factor * self.diam_prime[p as usize];
                if self.diam_prime[u] > bound * (1.0 + 4.0 * f64::EPSILON) {
                    bad.push((u as NodeId, p));
                }
            }
        }
        bad
    }
}
