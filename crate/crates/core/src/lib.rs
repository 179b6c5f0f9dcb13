//! Construction and verification of `(1+ε)k`-robust geometric t-spanners.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation over in-memory data; file formats, the command-line front end
//! and threading live in the `robust-spanner` companion crate.
//!
//! Pipeline, bottom-up:
//!
//! - [`geometry`]: points, boxes and the two diameter notions.
//! - [`fst`]: the fair-split tree and its structural queries (centroid,
//!   detach/contract, rank, label, special nodes).
//! - [`wspd`]: the well-separated pair decomposition built from the tree.
//! - [`expander`]: random bipartite expanders with exhaustive verifiers.
//! - [`spanner_gt`]: the recursive graph `G_T` that lets points explode into
//!   their ancestors.
//! - [`spanner_gw`]: the per-special-node expanders `H'_u` and the final
//!   spanner `G = G_T ∪ G_W`.
//! - [`faults`]: the abandoned sets `F⁺_T` and `F⁺` for a fault set `F`.
//! - [`verify`]: exact Dijkstra oracle, stretch and explode audits.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

mod error;
mod math;

pub mod expander;
pub mod faults;
pub mod fst;
pub mod geometry;
pub mod graph;
pub mod params;
pub mod seed;
pub mod spanner_gt;
pub mod spanner_gw;
pub mod verify;
pub mod wspd;

pub use error::{Error, Result};
pub use expander::BipartiteExpander;
pub use faults::{compute_fplus, compute_fplus_t, random_faults, FaultReport};
pub use fst::{FairSplitTree, NodeId, Topology};
pub use geometry::{BoundingBox, PointSet};
pub use graph::{EdgeSet, GeometricGraph};
pub use params::SpannerParams;
pub use spanner_gt::RecursionTrace;
pub use spanner_gw::{build_spanner, BuildTrace, SpecialGroup};
pub use verify::{ExplodeReport, StretchReport};
pub use wspd::{Wspd, WspdPair};
