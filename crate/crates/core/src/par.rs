//! Order-preserving data-parallel map with a sequential fallback.
//!
//! Every parallel loop in the crate goes through [`Execution::map`], which
//! collects results in index order. Reductions are then done sequentially over
//! the collected vector, so a result never depends on the thread count or on
//! whether the `parallel` feature is enabled.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How a batch of independent jobs is executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon work-stealing; identical to `Sequential` without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Evaluates `f(0..len)` and returns the results in index order.
    pub fn map<R, F>(self, len: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..len).into_par_iter().map(f).collect(),
            _ => (0..len).map(f).collect(),
        }
    }

    /// Fallible variant of [`Execution::map`]; the first error in index order wins.
    pub fn try_map<R, E, F>(self, len: usize, f: F) -> Result<Vec<R>, E>
    where
        R: Send,
        E: Send,
        F: Fn(usize) -> Result<R, E> + Sync + Send,
    {
        self.map(len, f).into_iter().collect()
    }
}

/// Sums `len` terms in fixed-size chunks: each chunk is summed in order, then
/// the chunk sums are added in order. Chunking is independent of the thread count.
pub(crate) fn chunked_sum<F>(exec: Execution, len: usize, chunk: usize, term: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunk = chunk.max(1);
    let n_chunks = len.div_ceil(chunk);
    exec.map(n_chunks, |c| {
        let start = c * chunk;
        let end = (start + chunk).min(len);
        (start..end).map(&term).sum::<f64>()
    })
    .into_iter()
    .sum()
}
