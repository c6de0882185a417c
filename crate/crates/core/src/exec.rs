//! Data-parallel map over index ranges.
//!
//! With the `parallel` feature (default) [`Backend::Parallel`] runs on the
//! rayon pool; without it, it falls back to a plain sequential loop.
//! Results are always returned in index order.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Backend {
    Sequential,
    #[default]
    Parallel,
}

impl Backend {
    /// True when this backend actually runs on multiple threads.
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Backend::Parallel
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_indexed<T, F>(backend: Backend, n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if backend.is_parallel() {
        use rayon::prelude::*;
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = backend;
    (0..n).map(f).collect()
}

/// Smallest index in `0..n` for which `f` returns `Some`, with its value.
pub fn find_first<T, F>(backend: Backend, n: usize, f: F) -> Option<(usize, T)>
where
    T: Send,
    F: Fn(usize) -> Option<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if backend.is_parallel() {
        use rayon::prelude::*;
        return (0..n)
            .into_par_iter()
            .filter_map(|i| f(i).map(|v| (i, v)))
            .find_first(|_| true);
    }
    let _ = backend;
    (0..n).find_map(|i| f(i).map(|v| (i, v)))
}
