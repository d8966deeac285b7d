//! Chunked map with a rayon backend and a sequential fallback.

use std::ops::Range;

/// How Monte-Carlo work is scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Serial,
    /// Uses rayon when the `parallel` feature is enabled, serial otherwise.
    #[default]
    Parallel,
}

/// Splits `0..total` into chunks of at most `chunk` items and maps each.
/// Results come back in chunk order regardless of the execution mode.
pub fn map_chunks<T, F>(exec: Execution, total: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let ranges: Vec<Range<usize>> = (0..total)
        .step_by(chunk)
        .map(|start| start..(start + chunk).min(total))
        .collect();
    match exec {
        Execution::Serial => ranges.into_iter().map(f).collect(),
        Execution::Parallel => parallel_map(ranges, f),
    }
}

#[cfg(feature = "parallel")]
fn parallel_map<T, F>(ranges: Vec<Range<usize>>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    use rayon::prelude::*;
    ranges.into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn parallel_map<T, F>(ranges: Vec<Range<usize>>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    ranges.into_iter().map(f).collect()
}
