//! The build trace file: a line-oriented text format with `[section]`
//! headers, holding everything needed to replay fault processing and
//! verification in a separate process.
//!
//! ```text
//! [params]      key value lines
//! [points]      one point per line
//! [tree]        id parent size lo.. hi.. [point]
//! [wspd]        a b |A| |B| a'
//! [recursion]   node kind rank u0 t1 attempts audit_ok, then `points ..`
//!               and expander blocks
//! [groups]      group u attempts audit_ok, then `pairs ..`, `b_union ..`
//!               and expander blocks
//! [end]
//! ```
//!
//! An expander block is a `shrink|expand degree count` line followed by
//! `count` lines `b a1 a2 ..`, or `b *` when `b` is joined to the whole left
//! side.

use std::fmt::Write as _;
use std::io::{self, Write};

use robust_spanner_core::expander::{BipartiteExpander, Neighbours};
use robust_spanner_core::fst::Topology;
use robust_spanner_core::spanner_gt::{HtExpanders, RecKind, RecNode, RecSplit};
use robust_spanner_core::wspd::WspdPair;
use robust_spanner_core::{
    BoundingBox, BuildTrace, FairSplitTree, GeometricGraph, PointSet, RecursionTrace, SpannerParams, SpecialGroup, Wspd,
};
use sha2::{Digest, Sha256};

use crate::format::{parse_err, write_points, write_tree, FormatError};

/// SHA-256 over the vertex count and the sorted edge list (little-endian
/// u32s), as lowercase hex.
pub fn graph_hash(g: &GeometricGraph) -> String {
    let mut h = Sha256::new();
    h.update((g.vertex_count() as u32).to_le_bytes());
    for (i, j) in g.edges() {
        h.update(i.to_le_bytes());
        h.update(j.to_le_bytes());
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

/// A trace as read back from disk.
#[derive(Debug, Clone)]
pub struct TraceFile {
    pub trace: BuildTrace,
    pub points: PointSet,
    pub graph_edges: usize,
    pub graph_hash: String,
}

impl TraceFile {
    /// Fails unless `g` is the graph this trace was written with.
    pub fn check_graph(&self, g: &GeometricGraph) -> Result<(), FormatError> {
        if g.vertex_count() != self.points.len()
            || g.edge_count() != self.graph_edges
            || graph_hash(g) != self.graph_hash
        {
            return Err(parse_err(0, "graph does not match the trace"));
        }
        Ok(())
    }
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(" ")
}

fn write_expander(out: &mut String, tag: &str, g: &BipartiteExpander) {
    writeln!(out, "{tag} {} {}", g.degree, g.right.len()).unwrap();
    for (b, adj) in g.right.iter().zip(&g.adj) {
        match adj {
            Neighbours::All => writeln!(out, "{b} *").unwrap(),
            Neighbours::List(l) if l.is_empty() => writeln!(out, "{b}").unwrap(),
            Neighbours::List(l) => writeln!(out, "{b} {}", join(l)).unwrap(),
        }
    }
}

fn write_pair(out: &mut String, h: &HtExpanders) {
    write_expander(out, "shrink", &h.shrink);
    if let Some(e) = &h.expand {
        write_expander(out, "expand", e);
    }
}

pub fn write_trace(w: &mut impl Write, trace: &BuildTrace, pts: &PointSet, g: &GeometricGraph) -> io::Result<()> {
    let p = &trace.params;
    let mut out = String::new();
    writeln!(out, "# robust-spanner build trace").unwrap();
    writeln!(out, "[params]").unwrap();
    for (k, v) in [
        ("n", p.n.to_string()),
        ("dim", p.dim.to_string()),
        ("eps", p.eps.to_string()),
        ("t", p.t.to_string()),
        ("s", p.s.to_string()),
        ("kappa", p.kappa.to_string()),
        ("delta", p.delta.to_string()),
        ("degree_scale", p.degree_scale.to_string()),
        ("seed", trace.seed.to_string()),
        ("graph_edges", g.edge_count().to_string()),
        ("graph_hash", graph_hash(g)),
    ] {
        writeln!(out, "{k} {v}").unwrap();
    }
    writeln!(out, "[points]").unwrap();
    w.write_all(out.as_bytes())?;
    out.clear();
    write_points(w, pts)?;
    writeln!(w, "[tree]")?;
    write_tree(w, &trace.tree)?;

    writeln!(out, "[wspd]").unwrap();
    for pair in &trace.wspd.pairs {
        let ap = pair.a_prime.map_or("-".to_string(), |x| x.to_string());
        writeln!(out, "{} {} {} {} {ap}", pair.a, pair.b, pair.a_size, pair.b_size).unwrap();
    }
    w.write_all(out.as_bytes())?;
    out.clear();

    writeln!(out, "[recursion]").unwrap();
    for (i, node) in trace.recursion.nodes.iter().enumerate() {
        let kind = match node.kind {
            RecKind::Clique => "clique",
            RecKind::Expander => "expander",
        };
        match &node.split {
            Some(sp) => writeln!(
                out,
                "node {i} {kind} {} {} {} {} {}",
                node.rank,
                sp.u0,
                sp.t1,
                sp.h.attempts,
                u8::from(sp.h.audit_ok)
            ),
            None => writeln!(out, "node {i} {kind} {} - - 0 1", node.rank),
        }
        .unwrap();
        writeln!(out, "points {}", join(&node.points)).unwrap();
        if let Some(sp) = &node.split {
            write_pair(&mut out, &sp.h);
        }
        if out.len() > 1 << 16 {
            w.write_all(out.as_bytes())?;
            out.clear();
        }
    }
    writeln!(out, "[groups]").unwrap();
    for g in &trace.groups {
        let (attempts, ok) = g.h.as_ref().map_or((0, true), |h| (h.attempts, h.audit_ok));
        writeln!(out, "group {} {attempts} {}", g.u, u8::from(ok)).unwrap();
        writeln!(out, "pairs {}", join(&g.pairs)).unwrap();
        writeln!(out, "b_union {}", join(&g.b_union)).unwrap();
        if let Some(h) = &g.h {
            write_pair(&mut out, h);
        }
        if out.len() > 1 << 16 {
            w.write_all(out.as_bytes())?;
            out.clear();
        }
    }
    writeln!(out, "[end]").unwrap();
    w.write_all(out.as_bytes())
}

struct Lines<'a> {
    inner: std::iter::Peekable<std::iter::Enumerate<std::str::Lines<'a>>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Lines { inner: text.lines().enumerate().peekable() }
    }

    fn skip_blank(&mut self) {
        while let Some((_, l)) = self.inner.peek() {
            let t = l.trim();
            if t.is_empty() || t.starts_with('#') {
                self.inner.next();
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<&'a str> {
        self.skip_blank();
        self.inner.peek().map(|(_, l)| l.trim())
    }

    fn next(&mut self) -> Result<(usize, &'a str), FormatError> {
        self.skip_blank();
        self.inner.next().map(|(i, l)| (i + 1, l.trim())).ok_or_else(|| parse_err(0, "unexpected end of trace"))
    }

    /// Data lines up to the next section header.
    fn section_body(&mut self) -> Vec<(usize, &'a str)> {
        let mut out = Vec::new();
        while let Some(l) = self.peek() {
            if l.starts_with('[') {
                break;
            }
            out.push(self.next().expect("peeked"));
        }
        out
    }

    fn expect_header(&mut self, name: &str) -> Result<(), FormatError> {
        let (line, text) = self.next()?;
        if text != format!("[{name}]") {
            return Err(parse_err(line, format!("expected section [{name}], found {text:?}")));
        }
        Ok(())
    }
}

fn num<T: std::str::FromStr>(line: usize, x: &str) -> Result<T, FormatError>
where
    T::Err: std::fmt::Display,
{
    x.parse::<T>().map_err(|e| parse_err(line, format!("bad value {x:?}: {e}")))
}

fn nums<T: std::str::FromStr>(line: usize, xs: &[&str]) -> Result<Vec<T>, FormatError>
where
    T::Err: std::fmt::Display,
{
    xs.iter().map(|x| num(line, x)).collect()
}

fn opt_num<T: std::str::FromStr>(line: usize, x: &str) -> Result<Option<T>, FormatError>
where
    T::Err: std::fmt::Display,
{
    if x == "-" {
        Ok(None)
    } else {
        num(line, x).map(Some)
    }
}

/// Tag line `tag degree count` plus `count` adjacency lines. Sides are
/// attached by the caller.
fn read_expander(lines: &mut Lines, tag: &str) -> Result<(u32, Vec<u32>, Vec<Neighbours>), FormatError> {
    let (line, text) = lines.next()?;
    let f: Vec<&str> = text.split_whitespace().collect();
    if f.len() != 3 || f[0] != tag {
        return Err(parse_err(line, format!("expected `{tag} degree count`")));
    }
    let degree: u32 = num(line, f[1])?;
    let count: usize = num(line, f[2])?;
    let mut right = Vec::with_capacity(count);
    let mut adj = Vec::with_capacity(count);
    for _ in 0..count {
        let (line, text) = lines.next()?;
        let f: Vec<&str> = text.split_whitespace().collect();
        let b: u32 = num(line, f.first().ok_or_else(|| parse_err(line, "empty adjacency line"))?)?;
        right.push(b);
        adj.push(if f.len() == 2 && f[1] == "*" {
            Neighbours::All
        } else {
            let mut l: Vec<u32> = nums(line, &f[1..])?;
            l.sort_unstable();
            Neighbours::List(l)
        });
    }
    Ok((degree, right, adj))
}

fn attach(
    left: Vec<u32>,
    expected_right: &[u32],
    (degree, right, adj): (u32, Vec<u32>, Vec<Neighbours>),
) -> Result<BipartiteExpander, FormatError> {
    if right != expected_right {
        return Err(parse_err(0, "expander right side does not match the recorded sets"));
    }
    let g = BipartiteExpander { left, right, adj, degree };
    for j in 0..g.right.len() {
        if let Neighbours::List(l) = &g.adj[j] {
            if l.iter().any(|a| g.left.binary_search(a).is_err()) {
                return Err(parse_err(0, format!("expander neighbour of {} outside the left side", g.right[j])));
            }
        }
    }
    Ok(g)
}

struct RawNode {
    line: usize,
    kind: RecKind,
    rank: u32,
    split: Option<(usize, usize, u32, bool)>,
    points: Vec<u32>,
    shrink: Option<(u32, Vec<u32>, Vec<Neighbours>)>,
    expand: Option<(u32, Vec<u32>, Vec<Neighbours>)>,
}

pub fn read_trace(text: &str) -> Result<TraceFile, FormatError> {
    let mut lines = Lines::new(text);

    lines.expect_header("params")?;
    let mut kv = std::collections::BTreeMap::new();
    for (line, text) in lines.section_body() {
        let (k, v) = text.split_once(' ').ok_or_else(|| parse_err(line, "expected `key value`"))?;
        kv.insert(k.to_string(), (line, v.trim().to_string()));
    }
    let get = |k: &str| kv.get(k).ok_or_else(|| parse_err(0, format!("missing parameter {k}")));
    let val = |k: &str| -> Result<f64, FormatError> {
        let (l, v) = get(k)?;
        num(*l, v)
    };
    let n = val("n")? as usize;
    let dim = val("dim")? as usize;
    let params = SpannerParams::new(n, dim, val("eps")?, val("t")?)?
        .with_kappa(val("kappa")? as u32)?
        .with_degree_scale(val("degree_scale")?)?;
    if params.s != val("s")? || params.delta as f64 != val("delta")? {
        return Err(parse_err(get("s")?.0, "derived parameters disagree with the recorded ones"));
    }
    let seed: u64 = num(get("seed")?.0, &get("seed")?.1)?;
    let graph_edges: usize = num(get("graph_edges")?.0, &get("graph_edges")?.1)?;
    let (hl, hv) = get("graph_hash")?;
    if hv.len() != 64 || !hv.bytes().all(|b| b.is_ascii_hexdigit()) {
        return Err(parse_err(*hl, "graph_hash must be 64 hex digits"));
    }
    let graph_hash = hv.to_ascii_lowercase();

    lines.expect_header("points")?;
    let mut coords = Vec::with_capacity(n * dim);
    for (line, text) in lines.section_body() {
        let row: Vec<f64> = nums(line, &text.split_whitespace().collect::<Vec<_>>())?;
        if row.len() != dim {
            return Err(parse_err(line, format!("expected {dim} coordinates")));
        }
        coords.extend(row);
    }
    let points = PointSet::from_flat(dim, coords)?;
    if points.len() != n {
        return Err(parse_err(0, format!("expected {n} points, found {}", points.len())));
    }

    lines.expect_header("tree")?;
    let mut parents = Vec::new();
    let mut leaf_points = Vec::new();
    let mut boxes = Vec::new();
    for (line, text) in lines.section_body() {
        let f: Vec<&str> = text.split_whitespace().collect();
        let internal = 3 + 2 * dim;
        if f.len() != internal && f.len() != internal + 1 {
            return Err(parse_err(line, "malformed tree line"));
        }
        if num::<usize>(line, f[0])? != parents.len() {
            return Err(parse_err(line, "tree ids must be consecutive preorder ids"));
        }
        parents.push(opt_num::<u32>(line, f[1])?);
        let c: Vec<f64> = nums(line, &f[3..internal])?;
        boxes.push(BoundingBox::new(c[..dim].to_vec(), c[dim..].to_vec())?);
        leaf_points.push(if f.len() > internal { Some(num::<u32>(line, f[internal])?) } else { None });
    }
    let tree = FairSplitTree::from_topology(Topology::from_preorder(&parents, &leaf_points)?, boxes)?;
    if tree.size(0) as usize != n {
        return Err(parse_err(0, "tree does not cover the points"));
    }

    lines.expect_header("wspd")?;
    let mut pairs = Vec::new();
    for (line, text) in lines.section_body() {
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 5 {
            return Err(parse_err(line, "expected `a b |A| |B| a'`"));
        }
        let pair = WspdPair {
            a: num(line, f[0])?,
            b: num(line, f[1])?,
            a_size: num(line, f[2])?,
            b_size: num(line, f[3])?,
            a_prime: opt_num(line, f[4])?,
        };
        if [Some(pair.a), Some(pair.b), pair.a_prime].into_iter().flatten().any(|u| u as usize >= tree.len())
            || tree.size(pair.a) != pair.a_size
            || tree.size(pair.b) != pair.b_size
        {
            return Err(parse_err(line, "pair does not match the tree"));
        }
        pairs.push(pair);
    }

    lines.expect_header("recursion")?;
    let mut raw: Vec<RawNode> = Vec::new();
    while let Some(l) = lines.peek() {
        if l.starts_with('[') {
            break;
        }
        let (line, text) = lines.next()?;
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 8 || f[0] != "node" || num::<usize>(line, f[1])? != raw.len() {
            return Err(parse_err(line, "expected `node id kind rank u0 t1 attempts audit_ok`"));
        }
        let kind = match f[2] {
            "clique" => RecKind::Clique,
            "expander" => RecKind::Expander,
            other => return Err(parse_err(line, format!("unknown node kind {other:?}"))),
        };
        let u0: Option<usize> = opt_num(line, f[4])?;
        let t1: Option<usize> = opt_num(line, f[5])?;
        let split = match (u0, t1) {
            (Some(a), Some(b)) => Some((a, b, num(line, f[6])?, f[7] == "1")),
            (None, None) => None,
            _ => return Err(parse_err(line, "u0 and t1 must both be present or absent")),
        };
        let (pl, ptext) = lines.next()?;
        let pf: Vec<&str> = ptext.split_whitespace().collect();
        if pf.first() != Some(&"points") {
            return Err(parse_err(pl, "expected `points ..`"));
        }
        let points: Vec<u32> = nums(pl, &pf[1..])?;
        if (kind == RecKind::Clique) != (points.len() <= params.kappa as usize) {
            return Err(parse_err(line, "node kind disagrees with kappa"));
        }
        let shrink = split.is_some().then(|| read_expander(&mut lines, "shrink")).transpose()?;
        let expand =
            (split.is_some() && kind == RecKind::Expander).then(|| read_expander(&mut lines, "expand")).transpose()?;
        raw.push(RawNode { line, kind, rank: num(line, f[3])?, split, points, shrink, expand });
    }
    let mut nodes = Vec::with_capacity(raw.len());
    for i in 0..raw.len() {
        let r = &raw[i];
        let split = match r.split {
            None => None,
            Some((u0, t1, attempts, audit_ok)) => {
                if u0 <= i || t1 <= i || u0 >= raw.len() || t1 >= raw.len() {
                    return Err(parse_err(r.line, "recursion children must follow their parent"));
                }
                let shrink =
                    attach(raw[u0].points.clone(), &raw[t1].points, r.shrink.clone().expect("read with the split"))?;
                let expand = r.expand.clone().map(|e| attach(r.points.clone(), &r.points, e)).transpose()?;
                Some(RecSplit { u0, t1, h: HtExpanders { shrink, expand, attempts, audit_ok } })
            }
        };
        nodes.push(RecNode { points: r.points.clone(), rank: r.rank, kind: r.kind, split });
    }
    let recursion = RecursionTrace { nodes };
    if recursion.nodes.first().map_or(0, |r| r.size()) != n || !recursion.balance_violations().is_empty() {
        return Err(parse_err(0, "recursion does not match the points"));
    }

    lines.expect_header("groups")?;
    let mut groups = Vec::new();
    while lines.peek().is_some_and(|l| !l.starts_with('[')) {
        let (line, text) = lines.next()?;
        let f: Vec<&str> = text.split_whitespace().collect();
        if f.len() != 4 || f[0] != "group" {
            return Err(parse_err(line, "expected `group u attempts audit_ok`"));
        }
        let u: u32 = num(line, f[1])?;
        if u as usize >= tree.len() {
            return Err(parse_err(line, "group node out of range"));
        }
        let mut list = |tag: &str| -> Result<Vec<String>, FormatError> {
            let (l, t) = lines.next()?;
            let mut it = t.split_whitespace();
            if it.next() != Some(tag) {
                return Err(parse_err(l, format!("expected `{tag} ..`")));
            }
            Ok(it.map(str::to_string).collect())
        };
        let group_pairs: Vec<usize> = list("pairs")?.iter().map(|x| num(line, x)).collect::<Result<_, _>>()?;
        let b_union: Vec<u32> = list("b_union")?.iter().map(|x| num(line, x)).collect::<Result<_, _>>()?;
        let mut left = tree.leaves(u).to_vec();
        left.sort_unstable();
        let shrink = attach(left.clone(), &b_union, read_expander(&mut lines, "shrink")?)?;
        let expand = attach(left.clone(), &left, read_expander(&mut lines, "expand")?)?;
        let h = HtExpanders { shrink, expand: Some(expand), attempts: num(line, f[2])?, audit_ok: f[3] == "1" };
        groups.push(SpecialGroup { u, pairs: group_pairs, b_union, h: Some(h) });
    }

    lines.expect_header("end")?;
    if let Some(extra) = lines.peek() {
        return Err(parse_err(0, format!("trailing data after [end]: {extra:?}")));
    }

    let wspd = Wspd { pairs, s: params.s };
    let trace = BuildTrace { params, seed, tree, wspd, recursion, groups };
    Ok(TraceFile { trace, points, graph_edges, graph_hash })
}
