//! Thread-parallel stretch checking. Sources are split into contiguous chunks,
//! each chunk runs on its own scoped thread, and the partial reports are
//! merged in chunk order, so the result does not depend on the thread count.

use std::num::NonZeroUsize;

use robust_spanner_core::verify::{merge_stretch, stretch_partial, stretch_plan};
use robust_spanner_core::{GeometricGraph, PointSet, StretchReport};

/// `RS_THREADS` if set to a positive integer, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("RS_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&k| k > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, NonZeroUsize::get))
}

pub fn stretch_check_parallel(
    g: &GeometricGraph,
    pts: &PointSet,
    f: &[u32],
    f_plus: &[u32],
    t: f64,
    seed: u64,
    threads: usize,
) -> robust_spanner_core::Result<StretchReport> {
    if pts.len() != g.vertex_count() {
        return Err(robust_spanner_core::Error::InvalidInput("graph and point set differ in size".into()));
    }
    let plan = stretch_plan(g.vertex_count(), f, f_plus, t, seed)?;
    let threads = threads.clamp(1, plan.sources.len().max(1));
    if threads == 1 {
        let part = stretch_partial(g, pts, &plan, &plan.sources);
        return Ok(merge_stretch(&plan, [part]));
    }
    let chunk = plan.sources.len().div_ceil(threads);
    let parts = std::thread::scope(|s| {
        let handles: Vec<_> =
            plan.sources.chunks(chunk).map(|c| s.spawn(|| stretch_partial(g, pts, &plan, c))).collect();
        handles.into_iter().map(|h| h.join().expect("stretch worker panicked")).collect::<Vec<_>>()
    });
    Ok(merge_stretch(&plan, parts))
}

#[cfg(test)]
mod tests {
    use super::*;
    use robust_spanner_core::geometry::uniform_points;
    use robust_spanner_core::verify::stretch_check;
    use robust_spanner_core::{build_spanner, compute_fplus, SpannerParams};

    #[test]
    fn matches_serial_check() {
        let pts = uniform_points(150, 2, 3).unwrap();
        let p = SpannerParams::new(150, 2, 0.25, 4.0).unwrap().with_degree_scale(0.002).unwrap();
        let (g, trace) = build_spanner(&pts, &p, 3).unwrap();
        let f: Vec<u32> = (0..150).step_by(9).collect();
        let rep = compute_fplus(&trace, &f).unwrap();
        // a tight target so there are violations to compare
        let serial = stretch_check(&g, &pts, &f, &rep.f_plus, 1.05, 1).unwrap();
        for k in [1, 2, 3, 7] {
            let par = stretch_check_parallel(&g, &pts, &f, &rep.f_plus, 1.05, 1, k).unwrap();
            assert_eq!(par, serial, "threads = {k}");
        }
    }
}
