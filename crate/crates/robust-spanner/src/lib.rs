//! File formats, the build trace, threaded verification and the command-line
//! front end around `robust-spanner-core`.

pub mod cli;
pub mod format;
pub mod parallel;
pub mod trace;

pub use robust_spanner_core as core;
