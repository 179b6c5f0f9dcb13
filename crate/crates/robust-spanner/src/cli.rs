use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use robust_spanner_core::geometry::uniform_points;
use robust_spanner_core::seed::Seed;
use robust_spanner_core::verify::{edge_stats, explode_check, EdgeStats};
use robust_spanner_core::wspd::min_size_sum;
use robust_spanner_core::{
    build_spanner, compute_fplus, random_faults, ExplodeReport, FaultReport, GeometricGraph, SpannerParams,
    StretchReport,
};

use crate::format::{read_faults, read_graph, read_points, write_graph, write_points};
use crate::parallel::{stretch_check_parallel, thread_count};
use crate::trace::{read_trace, write_trace, TraceFile};

#[derive(Parser, Debug)]
#[command(name = "robust-spanner", version, about = "Fault-robust geometric spanners")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a spanner; writes OUT.edges, OUT.trace and OUT.stats.json.
    Build(BuildArgs),
    /// Compute the abandoned sets for a fault set.
    Faults(FaultsArgs),
    /// Check stretch (and optionally the explode property) after faults.
    Verify(VerifyArgs),
    /// Build seeded random instances for several n and emit a CSV row each.
    Scale(ScaleArgs),
    /// Write seeded uniform points in the unit cube.
    Gen(GenArgs),
}

#[derive(Args, Debug)]
pub struct BuildArgs {
    #[arg(long)]
    pub points: PathBuf,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long, default_value_t = 4.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output prefix.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 5)]
    pub kappa: u32,
    /// Multiplier on every expander degree (1 = formula degrees).
    #[arg(long, default_value_t = 1.0)]
    pub degree_scale: f64,
}

#[derive(Args, Debug)]
pub struct FaultsArgs {
    #[arg(long)]
    pub trace: PathBuf,
    /// Graph file to check against the trace.
    #[arg(long)]
    pub graph: Option<PathBuf>,
    /// Fraction of points to fail, chosen with --seed.
    #[arg(long, conflicts_with = "fault_file", required_unless_present = "fault_file")]
    pub frac: Option<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// One point index per line.
    #[arg(long)]
    pub fault_file: Option<PathBuf>,
    /// JSON report path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub trace: PathBuf,
    /// Fault report written by `faults`.
    #[arg(long)]
    pub report: PathBuf,
    #[arg(long)]
    pub explode: bool,
    /// Seed for source sampling when there are too many survivors.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ScaleArgs {
    /// Comma-separated point counts.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n: Vec<usize>,
    #[arg(long, default_value_t = 0.25)]
    pub eps: f64,
    #[arg(long, default_value_t = 4.0)]
    pub t: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 1.0)]
    pub degree_scale: f64,
    /// CSV path (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub dim: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Ok,
    VerificationFailed,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BuildStats {
    pub params: SpannerParams,
    pub seed: u64,
    pub graph: EdgeStats,
    pub gt_edges: usize,
    pub m_wspd: usize,
    pub min_size_sum: u64,
    pub special_groups: usize,
    pub recursion_nodes: usize,
    pub recursion_depth: usize,
    pub failed_audits: usize,
    pub fair_split_violations: usize,
    pub balance_violations: usize,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub ok: bool,
    pub graph_matches_trace: bool,
    pub stretch: StretchReport,
    pub explode: Option<ExplodeReport>,
}

fn with_ext(prefix: &Path, ext: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(".");
    s.push(ext);
    PathBuf::from(s)
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path).with_context(|| format!("cannot create {}", path.display()))?))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path).with_context(|| format!("cannot open {}", path.display()))?))
}

fn load_trace(path: &Path) -> Result<TraceFile> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    read_trace(&text).with_context(|| format!("bad trace {}", path.display()))
}

fn load_graph(path: &Path) -> Result<GeometricGraph> {
    read_graph(open(path)?).with_context(|| format!("bad graph {}", path.display()))
}

fn write_json<T: Serialize>(out: Option<&Path>, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("cannot write {}", p.display()))?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

pub fn run(cli: Cli) -> Result<Outcome> {
    match cli.command {
        Command::Build(a) => cmd_build(a),
        Command::Faults(a) => cmd_faults(a),
        Command::Verify(a) => cmd_verify(a),
        Command::Scale(a) => cmd_scale(a),
        Command::Gen(a) => cmd_gen(a),
    }
}

fn cmd_build(a: BuildArgs) -> Result<Outcome> {
    let pts = read_points(open(&a.points)?).with_context(|| format!("bad points {}", a.points.display()))?;
    let params =
        SpannerParams::new(pts.len(), pts.dim(), a.eps, a.t)?.with_kappa(a.kappa)?.with_degree_scale(a.degree_scale)?;
    let start = Instant::now();
    let (g, trace) = build_spanner(&pts, &params, a.seed)?;
    let elapsed = start.elapsed();

    let mut w = create(&with_ext(&a.out, "edges"))?;
    write_graph(&mut w, &g)?;
    w.flush()?;
    let mut w = create(&with_ext(&a.out, "trace"))?;
    write_trace(&mut w, &trace, &pts, &g)?;
    w.flush()?;

    let stats = BuildStats {
        params,
        seed: a.seed,
        graph: edge_stats(&g),
        gt_edges: trace.gt_graph().edge_count(),
        m_wspd: trace.wspd.m(),
        min_size_sum: min_size_sum(&trace.wspd),
        special_groups: trace.groups.len(),
        recursion_nodes: trace.recursion.nodes.len(),
        recursion_depth: trace.recursion.depth(),
        failed_audits: trace.failed_audits(),
        fair_split_violations: trace.tree.fair_split_violations().len(),
        balance_violations: trace.recursion.balance_violations().len(),
    };
    write_json(Some(&with_ext(&a.out, "stats.json")), &stats)?;
    eprintln!(
        "built n={} edges={} in {:.1} ms (failed audits: {})",
        pts.len(),
        g.edge_count(),
        elapsed.as_secs_f64() * 1e3,
        stats.failed_audits
    );
    Ok(Outcome::Ok)
}

fn cmd_faults(a: FaultsArgs) -> Result<Outcome> {
    let tf = load_trace(&a.trace)?;
    if let Some(path) = &a.graph {
        tf.check_graph(&load_graph(path)?)?;
    }
    let n = tf.points.len();
    let f = match (&a.fault_file, a.frac) {
        (Some(path), _) => read_faults(open(path)?, n).with_context(|| format!("bad fault file {}", path.display()))?,
        (None, Some(frac)) => random_faults(n, frac, a.seed)?,
        (None, None) => bail!("either --frac or --fault-file is required"),
    };
    let rep = compute_fplus(&tf.trace, &f)?;
    write_json(a.out.as_deref(), &rep)?;
    eprintln!(
        "|F|={} |F+_T|={} |F+|={} ratio={:.3} bounds ok: {}",
        rep.f.len(),
        rep.f_plus_t.len(),
        rep.f_plus.len(),
        rep.ratio_f_plus,
        rep.bound_ok && rep.f_plus_t_bound_ok
    );
    Ok(Outcome::Ok)
}

fn cmd_verify(a: VerifyArgs) -> Result<Outcome> {
    let g = load_graph(&a.graph)?;
    let tf = load_trace(&a.trace)?;
    let rep: FaultReport = serde_json::from_reader(open(&a.report)?)
        .with_context(|| format!("bad fault report {}", a.report.display()))?;
    let n = tf.points.len();
    if g.vertex_count() != n {
        bail!("graph has {} vertices but the trace has {n} points", g.vertex_count());
    }
    let matches = tf.check_graph(&g).is_ok();
    if !matches {
        eprintln!("warning: graph differs from the one recorded in the trace");
    }
    let stretch =
        stretch_check_parallel(&g, &tf.points, &rep.f, &rep.f_plus, tf.trace.params.t, a.seed, thread_count())?;
    let explode = if a.explode {
        // G_T as far as it survives in the given graph
        let gt = tf.trace.gt_graph();
        let gt = GeometricGraph::from_edges(n, gt.edges().filter(|&(i, j)| g.has_edge(i, j)))?;
        Some(explode_check(&tf.trace, &gt, &tf.points, &rep.f, &rep.f_plus_t)?)
    } else {
        None
    };
    let ok = stretch.is_ok() && explode.as_ref().map_or(true, |e| e.is_ok());
    for (p, q, s) in stretch.violations.iter().take(20) {
        eprintln!("stretch violation: {p} {q} {s:.4}");
    }
    if let Some(e) = &explode {
        for v in e.violations.iter().take(20) {
            eprintln!("explode violation: p={} u={} reached={} required={:.2}", v.p, v.u, v.reached, v.required);
        }
    }
    eprintln!(
        "pairs={} max_stretch={:.4} violations={}{}",
        stretch.checked_pairs,
        stretch.max_stretch,
        stretch.violations.len(),
        explode.as_ref().map_or(String::new(), |e| format!(" explode_violations={}", e.violations.len()))
    );
    write_json(a.out.as_deref(), &VerifyOutput { ok, graph_matches_trace: matches, stretch, explode })?;
    Ok(if ok { Outcome::Ok } else { Outcome::VerificationFailed })
}

/// Points for a sweep entry; each n gets its own sub-seed.
pub fn sweep_points(n: usize, dim: usize, seed: u64) -> robust_spanner_core::Result<robust_spanner_core::PointSet> {
    uniform_points(n, dim, Seed(seed).child(n as u64).0)
}

fn cmd_scale(a: ScaleArgs) -> Result<Outcome> {
    let mut csv = String::from("n,edges,ratio,build_ms,m_wspd,min_size_sum\n");
    for &n in &a.n {
        let pts = sweep_points(n, a.dim, a.seed)?;
        let params = SpannerParams::new(n, a.dim, a.eps, a.t)?.with_degree_scale(a.degree_scale)?;
        let start = Instant::now();
        let (g, trace) = build_spanner(&pts, &params, a.seed)?;
        let ms = start.elapsed().as_secs_f64() * 1e3;
        let ratio = edge_stats(&g).normalized.map_or(String::new(), |r| r.to_string());
        csv.push_str(&format!(
            "{n},{},{ratio},{ms:.1},{},{}\n",
            g.edge_count(),
            trace.wspd.m(),
            min_size_sum(&trace.wspd)
        ));
        eprintln!("n={n} done in {ms:.0} ms");
    }
    match &a.out {
        Some(p) => std::fs::write(p, csv).with_context(|| format!("cannot write {}", p.display()))?,
        None => print!("{csv}"),
    }
    Ok(Outcome::Ok)
}

fn cmd_gen(a: GenArgs) -> Result<Outcome> {
    let pts = uniform_points(a.n, a.dim, a.seed)?;
    let mut w = create(&a.out)?;
    write_points(&mut w, &pts)?;
    w.flush()?;
    Ok(Outcome::Ok)
}
