//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature (default) independent work items run on the
//! rayon pool; without it, or with [`Exec::Sequential`], they run in order.
//! Results are always returned in input order.

/// Execution strategy for corpus-style loops.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    /// Maps `f` over `items`, preserving order.
    pub fn map<T, U, F>(self, items: &[T], f: F) -> Vec<U>
    where
        T: Sync,
        U: Send,
        F: Fn(&T) -> U + Sync + Send,
    {
        match self {
            Exec::Sequential => items.iter().map(f).collect(),
            Exec::Parallel => par_map(items, f),
        }
    }
}

#[cfg(feature = "parallel")]
fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn par_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.iter().map(f).collect()
}

/// Runs `f` on a pool with `jobs` threads (ignored without `parallel`).
pub fn with_jobs<R: Send>(jobs: usize, f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        if jobs > 0 {
            if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                return pool.install(f);
            }
        }
        f()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_preserved() {
        let xs: Vec<u32> = (0..100).collect();
        let a = Exec::Sequential.map(&xs, |x| x * x);
        let b = Exec::Parallel.map(&xs, |x| x * x);
        assert_eq!(a, b);
    }
}
