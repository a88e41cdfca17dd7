//! Worker pool sized by `GRID_ENTROPY_THREADS`. Results are always
//! collected in input order, so output never depends on the thread count.

use rayon::prelude::*;
use rayon::ThreadPool;

pub const THREADS_VAR: &str = "GRID_ENTROPY_THREADS";

/// Thread count from the environment, or all cores when unset or invalid.
pub fn thread_count() -> usize {
    std::env::var(THREADS_VAR)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

pub fn pool() -> ThreadPool {
    rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool")
}

/// Order-preserving parallel map.
pub fn par_map<T, R, F>(pool: &ThreadPool, items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    pool.install(|| items.par_iter().map(f).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let pool = pool();
        let xs: Vec<u64> = (0..1000).collect();
        let ys = par_map(&pool, &xs, |x| x * x);
        assert!(ys.iter().enumerate().all(|(i, &y)| y == (i * i) as u64));
    }
}
