//! Worker budget and a small deterministic parallel map.

use std::sync::atomic::{AtomicUsize, Ordering};

/// Environment variable that overrides the configured worker budget.
pub const WORKERS_ENV: &str = "SABR_WORKERS";

/// Number of hardware threads, or 1 if unknown.
pub fn available() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

/// Worker budget from the environment, if set to a positive integer.
pub fn from_env() -> Option<usize> {
    std::env::var(WORKERS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

/// Resolves the budget: an explicit request wins, then the environment,
/// then the configured value, then the hardware thread count.
pub fn resolve(explicit: Option<usize>, configured: Option<usize>) -> usize {
    explicit
        .filter(|&n| n > 0)
        .or_else(from_env)
        .or(configured.filter(|&n| n > 0))
        .unwrap_or_else(available)
}

/// Evaluates `f(0..n)` on up to `workers` threads and returns the results
/// in index order. Work is handed out one index at a time, so the mapping of
/// indices to threads varies, but the output never does.
pub fn map_indexed<T, F>(n: usize, workers: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync,
{
    let workers = workers.max(1).min(n.max(1));
    if workers == 1 {
        return (0..n).map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let mut parts: Vec<Vec<(usize, T)>> = std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|_| {
                scope.spawn(|| {
                    let mut local = Vec::new();
                    loop {
                        let i = next.fetch_add(1, Ordering::Relaxed);
                        if i >= n {
                            break;
                        }
                        local.push((i, f(i)));
                    }
                    local
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().unwrap_or_else(|e| std::panic::resume_unwind(e)))
            .collect()
    });
    let mut slots: Vec<Option<T>> = (0..n).map(|_| None).collect();
    for part in parts.iter_mut() {
        for (i, v) in part.drain(..) {
            slots[i] = Some(v);
        }
    }
    slots
        .into_iter()
        .map(|v| v.expect("every index is evaluated exactly once"))
        .collect()
}
