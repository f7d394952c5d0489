//! Thread pool sizing for the lattice scans.

use rayon::{ThreadPool, ThreadPoolBuilder};

/// Environment variable capping the worker count of lattice scans.
pub const THREADS_ENV: &str = "NORMMIN_THREADS";

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV).ok()?.trim().parse::<usize>().ok().filter(|&n| n > 0)
}

fn pool() -> Option<ThreadPool> {
    let n = thread_cap()?;
    ThreadPoolBuilder::new().num_threads(n).build().ok()
}

/// Runs `job` inside a pool honoring [`THREADS_ENV`], or the global pool
/// when it is unset.
pub(crate) fn install<R: Send>(job: impl FnOnce() -> R + Send) -> R {
    match pool() {
        Some(p) => p.install(job),
        None => job(),
    }
}
