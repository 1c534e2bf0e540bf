//! Data-parallel helpers with a sequential fallback.
//!
//! Every helper preserves index order in its output, so the choice of
//! [`Execution`] (or the thread count of the surrounding rayon pool) never
//! changes a result.

/// How an index-parallel loop is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing; identical to `Sequential` without the `parallel` feature.
    #[default]
    Parallel,
}

impl Execution {
    /// True when this build can actually run work in parallel.
    pub fn is_parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

/// `(0..len).map(f)` collected in index order.
pub fn map_indexed<T, F>(exec: Execution, len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..len).into_par_iter().map(f).collect()
        }
        _ => (0..len).map(f).collect(),
    }
}

/// Maps `f` over fixed-size chunks of `items`, returning per-chunk results in
/// chunk order. The chunking depends only on `chunk`, never on thread count.
pub fn map_chunks<I, T, F>(exec: Execution, items: &[I], chunk: usize, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&[I]) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_chunks(chunk).map(f).collect()
        }
        _ => items.chunks(chunk).map(f).collect(),
    }
}
