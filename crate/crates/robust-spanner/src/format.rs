//! Plain-text file formats: points, graphs, fault lists, tree and WSPD dumps.

use std::fmt::Write as _;
use std::io::{self, BufRead, Write};

use robust_spanner_core::{FairSplitTree, GeometricGraph, PointSet, Wspd};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Core(#[from] robust_spanner_core::Error),
}

pub(crate) fn parse_err(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Parse { line, msg: msg.into() }
}

/// Data lines with their 1-based line numbers; blank lines and `#` comments
/// are skipped.
fn data_lines(r: impl BufRead) -> impl Iterator<Item = Result<(usize, String), FormatError>> {
    r.lines().enumerate().filter_map(|(i, l)| match l {
        Err(e) => Some(Err(e.into())),
        Ok(l) => {
            let t = l.trim();
            (!t.is_empty() && !t.starts_with('#')).then(|| Ok((i + 1, t.to_string())))
        }
    })
}

/// Whitespace-separated coordinates, one point per line. The first data line
/// fixes the dimension.
pub fn read_points(r: impl BufRead) -> Result<PointSet, FormatError> {
    let mut dim = None;
    let mut coords = Vec::new();
    for item in data_lines(r) {
        let (line, text) = item?;
        let row = text
            .split_whitespace()
            .map(|x| x.parse::<f64>().map_err(|e| parse_err(line, format!("bad coordinate {x:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        match dim {
            None => dim = Some(row.len()),
            Some(d) if d != row.len() => {
                return Err(parse_err(line, format!("expected {d} coordinates, found {}", row.len())))
            }
            _ => {}
        }
        coords.extend(row);
    }
    let dim = dim.ok_or_else(|| parse_err(0, "no points"))?;
    Ok(PointSet::from_flat(dim, coords)?)
}

pub fn write_points(w: &mut impl Write, pts: &PointSet) -> io::Result<()> {
    for p in pts.iter() {
        let row: Vec<String> = p.iter().map(|x| x.to_string()).collect();
        writeln!(w, "{}", row.join(" "))?;
    }
    Ok(())
}

/// Header `n m`, then one `i j` line per edge with `i < j`, sorted.
pub fn write_graph(w: &mut impl Write, g: &GeometricGraph) -> io::Result<()> {
    writeln!(w, "{} {}", g.vertex_count(), g.edge_count())?;
    let mut buf = String::new();
    for (i, j) in g.edges() {
        writeln!(buf, "{i} {j}").expect("writing to a String");
        if buf.len() > 1 << 16 {
            w.write_all(buf.as_bytes())?;
            buf.clear();
        }
    }
    w.write_all(buf.as_bytes())
}

fn parse_pair(line: usize, text: &str) -> Result<(u64, u64), FormatError> {
    let mut it = text.split_whitespace();
    let mut next = || {
        it.next()
            .ok_or_else(|| parse_err(line, "expected two integers"))?
            .parse::<u64>()
            .map_err(|e| parse_err(line, e.to_string()))
    };
    let pair = (next()?, next()?);
    if it.next().is_some() {
        return Err(parse_err(line, "expected two integers"));
    }
    Ok(pair)
}

pub fn read_graph(r: impl BufRead) -> Result<GeometricGraph, FormatError> {
    let mut lines = data_lines(r);
    let (hline, header) = lines.next().ok_or_else(|| parse_err(0, "missing header"))??;
    let (n, m) = parse_pair(hline, &header)?;
    let mut edges = Vec::with_capacity(m as usize);
    for item in lines {
        let (line, text) = item?;
        let (i, j) = parse_pair(line, &text)?;
        if i >= j || j >= n {
            return Err(parse_err(line, format!("edge {i} {j} must satisfy i < j < {n}")));
        }
        edges.push((i as u32, j as u32));
    }
    if edges.len() as u64 != m {
        return Err(parse_err(hline, format!("header announces {m} edges, found {}", edges.len())));
    }
    let g = GeometricGraph::from_edges(n as usize, edges)?;
    if g.edge_count() as u64 != m {
        return Err(parse_err(hline, "duplicate edges"));
    }
    Ok(g)
}

/// One point index per line.
pub fn read_faults(r: impl BufRead, n: usize) -> Result<Vec<u32>, FormatError> {
    let mut out = Vec::new();
    for item in data_lines(r) {
        let (line, text) = item?;
        let x: u64 = text.parse().map_err(|e| parse_err(line, format!("bad index {text:?}: {e}")))?;
        if x >= n as u64 {
            return Err(parse_err(line, format!("index {x} out of range for {n} points")));
        }
        out.push(x as u32);
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

pub fn write_faults(w: &mut impl Write, f: &[u32]) -> io::Result<()> {
    for x in f {
        writeln!(w, "{x}")?;
    }
    Ok(())
}

/// `id parent size lo.. hi.. [point]` in preorder; the root's parent is `-`.
pub fn write_tree(w: &mut impl Write, t: &FairSplitTree) -> io::Result<()> {
    let topo = t.topology();
    for (u, node) in topo.nodes().iter().enumerate() {
        let b = t.bbox(u as u32);
        let mut line = match node.parent {
            Some(p) => format!("{u} {p} {}", node.size),
            None => format!("{u} - {}", node.size),
        };
        for x in b.lo.iter().chain(&b.hi) {
            write!(line, " {x}").expect("writing to a String");
        }
        if let Some(p) = node.point {
            write!(line, " {p}").expect("writing to a String");
        }
        writeln!(w, "{line}")?;
    }
    Ok(())
}

/// `a b |A| |B|` per pair.
pub fn write_wspd(w: &mut impl Write, wspd: &Wspd) -> io::Result<()> {
    for p in &wspd.pairs {
        writeln!(w, "{} {} {} {}", p.a, p.b, p.a_size, p.b_size)?;
    }
    Ok(())
}
