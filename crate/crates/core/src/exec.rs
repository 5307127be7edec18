//! Replica fan-out.
//!
//! Results come back in replica-index order whatever the thread count, so
//! any fold over them is bit-reproducible. Without the `parallel` feature
//! everything runs on the calling thread.

/// `f(0), f(1), ..., f(n - 1)` in index order. `threads = Some(1)` forces the
/// serial path; `None` uses the global pool.
pub fn map_indexed<T, F>(n: u64, threads: Option<usize>, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        match threads {
            Some(1) => {}
            Some(t) => {
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(t).build() {
                    return pool.install(|| (0..n).into_par_iter().map(&f).collect());
                }
            }
            None => return (0..n).into_par_iter().map(&f).collect(),
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    (0..n).map(f).collect()
}

/// Whether the crate was built with rayon support.
pub const fn parallel_enabled() -> bool {
    cfg!(feature = "parallel")
}
