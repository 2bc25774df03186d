//! Data-parallel helpers.
//!
//! Work is split into fixed-size chunks whose results are reduced in chunk
//! order, so every result is identical whether the chunks ran on one thread
//! or many. With the `parallel` feature disabled everything runs on the
//! calling thread.

use std::sync::atomic::{AtomicBool, Ordering};

static SEQUENTIAL: AtomicBool = AtomicBool::new(false);

/// How chunked loops are executed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parallelism {
    Sequential,
    Parallel,
}

/// Sets the process-wide execution mode.
pub fn set_parallelism(mode: Parallelism) {
    SEQUENTIAL.store(mode == Parallelism::Sequential, Ordering::Relaxed);
}

pub fn parallelism() -> Parallelism {
    if cfg!(feature = "parallel") && !SEQUENTIAL.load(Ordering::Relaxed) {
        Parallelism::Parallel
    } else {
        Parallelism::Sequential
    }
}

/// Maps `map` over `[0, total)` split into chunks of `chunk` indices and
/// returns the per-chunk results in chunk order.
pub fn map_chunks<T, F>(total: u64, chunk: u64, map: F) -> Vec<T>
where
    T: Send,
    F: Fn(std::ops::Range<u64>) -> T + Sync + Send,
{
    let chunk = chunk.max(1);
    let chunks = total.div_ceil(chunk);
    let range = move |c: u64| c * chunk..((c + 1) * chunk).min(total);
    match parallelism() {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            (0..chunks).into_par_iter().map(|c| map(range(c))).collect()
        }
        _ => (0..chunks).map(|c| map(range(c))).collect(),
    }
}

/// Maps over a slice, preserving order.
pub fn map_items<I, T, F>(items: &[I], map: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(&I) -> T + Sync + Send,
{
    match parallelism() {
        #[cfg(feature = "parallel")]
        Parallelism::Parallel => {
            use rayon::prelude::*;
            items.par_iter().map(map).collect()
        }
        _ => items.iter().map(map).collect(),
    }
}
