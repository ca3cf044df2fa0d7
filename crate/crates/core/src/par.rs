//! Batch execution over independent work items.
//!
//! With the `parallel` feature, [`Execution::Parallel`] spreads items over a
//! rayon pool. Without it, every batch runs on the calling thread. Results
//! are always returned in input order.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    #[default]
    Sequential,
    /// `workers == 0` lets rayon pick the thread count.
    Parallel { workers: usize },
}

impl Execution {
    pub fn with_workers(workers: usize) -> Self {
        if workers <= 1 {
            Execution::Sequential
        } else {
            Execution::Parallel { workers }
        }
    }

    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && matches!(self, Execution::Parallel { .. })
    }
}

/// `f` applied to every item, in order.
pub fn map<T, R, F>(exec: Execution, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            use rayon::prelude::*;
            install(workers, || items.par_iter().map(&f).collect())
        }
        _ => items.iter().map(f).collect(),
    }
}

/// `f` applied to every index in `0..n`, in order.
pub fn map_indices<R, F>(exec: Execution, n: u64, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(u64) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel { workers } => {
            use rayon::prelude::*;
            install(workers, || (0..n).into_par_iter().map(&f).collect())
        }
        _ => (0..n).map(f).collect(),
    }
}

#[cfg(feature = "parallel")]
fn install<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> R {
    if workers == 0 {
        return op();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(op),
        Err(_) => op(),
    }
}
