//! Pipeline driver library behind the `segrank` binary.
//!
//! Each subcommand is an ordinary function over a resolved [`config::Settings`],
//! so integration tests can drive the pipeline without spawning processes.

pub mod charts;
pub mod commands;
pub mod config;

use anyhow::Context;

/// Builds a rayon pool with the requested worker count (`None` or `0` uses
/// the rayon default). Per-query results are always collected in input
/// order, so outputs do not depend on the pool size.
pub fn thread_pool(threads: Option<usize>) -> anyhow::Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        if n > 0 {
            builder = builder.num_threads(n);
        }
    }
    builder.build().context("failed to build thread pool")
}
