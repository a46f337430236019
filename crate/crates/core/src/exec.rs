//! Data-parallel execution of independent Monte-Carlo work items.
//!
//! With the `parallel` feature, [`Execution::Parallel`] fans work out over
//! the rayon thread pool; without it every mode runs sequentially. Results
//! always come back in index order, so output is identical either way.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
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

/// Evaluates `f(0..n)` and returns the results in index order.
pub fn map_indexed<T, F>(n: usize, exec: Execution, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
        _ => (0..n).map(f).collect(),
    }
}

/// SplitMix64 finalizer.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent seed for a work item from the master seed and a
/// path of indices (e.g. SNR point, block).
pub fn derive_seed(master: u64, path: &[u64]) -> u64 {
    path.iter()
        .fold(mix64(master), |acc, &p| mix64(acc ^ mix64(p)))
}
