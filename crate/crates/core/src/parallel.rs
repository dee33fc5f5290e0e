//! Worker pool sizing.

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "SIMPLEXCONF_THREADS";

/// Worker count from `SIMPLEXCONF_THREADS`, defaulting to the hardware parallelism.
pub fn worker_count() -> usize {
    let hardware = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n.min(hardware.max(n)),
        _ => hardware,
    }
}

/// Runs `f` inside a rayon pool of [`worker_count`] threads.
pub fn with_worker_pool<T, F>(f: F) -> T
where
    F: FnOnce() -> T + Send,
    T: Send,
{
    match rayon::ThreadPoolBuilder::new().num_threads(worker_count()).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}
