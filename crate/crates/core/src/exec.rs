//! Row-wise execution helpers.
//!
//! Every spatial kernel writes its output one grid row at a time. With the
//! `parallel` feature the rows are distributed over the rayon pool; without it
//! (or when serial execution is selected at runtime) they run in order.
//! Reductions always combine per-row partial sums in row order, so results are
//! bitwise identical between the two modes.

use std::sync::atomic::{AtomicU8, AtomicUsize, Ordering};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Runtime execution policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Serial,
    Parallel,
}

static EXECUTION: AtomicU8 = AtomicU8::new(1);
// Grids with fewer values than this run serially even in parallel mode;
// fork-join overhead dominates on small rows.
static PAR_THRESHOLD: AtomicUsize = AtomicUsize::new(8192);

pub fn set_execution(mode: Execution) {
    EXECUTION.store(
        match mode {
            Execution::Serial => 0,
            Execution::Parallel => 1,
        },
        Ordering::Relaxed,
    );
}

pub fn execution() -> Execution {
    if cfg!(feature = "parallel") && EXECUTION.load(Ordering::Relaxed) == 1 {
        Execution::Parallel
    } else {
        Execution::Serial
    }
}

/// Selects the execution mode from a thread count: 1 means serial, more
/// sizes the global rayon pool (first call wins). Returns the mode in effect.
pub fn set_threads(threads: usize) -> Execution {
    if threads <= 1 {
        set_execution(Execution::Serial);
        return Execution::Serial;
    }
    #[cfg(feature = "parallel")]
    {
        if rayon::ThreadPoolBuilder::new().num_threads(threads).build_global().is_err() {
            log::debug!("rayon pool already initialized; keeping its size");
        }
    }
    set_execution(Execution::Parallel);
    execution()
}

/// Minimum number of values for which a kernel is split across threads.
pub fn set_parallel_threshold(len: usize) {
    PAR_THRESHOLD.store(len, Ordering::Relaxed);
}

#[cfg(feature = "parallel")]
#[inline]
fn go_parallel(len: usize) -> bool {
    execution() == Execution::Parallel && len >= PAR_THRESHOLD.load(Ordering::Relaxed)
}

/// Calls `f(row_index, row)` for each `width`-long row of `out`.
pub fn for_each_row<F>(out: &mut [f64], width: usize, f: F)
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    debug_assert!(width > 0 && out.len().is_multiple_of(width));
    #[cfg(feature = "parallel")]
    if go_parallel(out.len()) {
        out.par_chunks_mut(width)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        return;
    }
    for (j, row) in out.chunks_mut(width).enumerate() {
        f(j, row);
    }
}

/// Sums `f(row)` over `rows` rows. `work` is the total value count, used only
/// to decide whether to go parallel.
pub fn sum_rows<F>(rows: usize, work: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_rows(rows, work, f).into_iter().sum()
}

/// Max of `f(row)` over rows; `f64::NEG_INFINITY` when empty.
pub fn max_rows<F>(rows: usize, work: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_rows(rows, work, f)
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max)
}

fn map_rows<F>(rows: usize, work: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if go_parallel(work) {
        return (0..rows).into_par_iter().map(f).collect();
    }
    let _ = work;
    (0..rows).map(f).collect()
}

/// Maps independent jobs (scenario runs, refinement levels) concurrently,
/// preserving input order in the output.
pub fn map_jobs<T, R, F>(items: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if execution() == Execution::Parallel {
        return items.into_par_iter().map(f).collect();
    }
    items.into_iter().map(f).collect()
}

/// Dot product of equal-length slices, reduced in fixed chunk order.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    const CHUNK: usize = 1024;
    let chunks = a.len().div_ceil(CHUNK);
    sum_rows(chunks, a.len(), |k| {
        let lo = k * CHUNK;
        let hi = (lo + CHUNK).min(a.len());
        a[lo..hi].iter().zip(&b[lo..hi]).map(|(x, y)| x * y).sum()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn serial_and_parallel_reductions_agree_bitwise() {
        let a: Vec<f64> = (0..50_000).map(|i| ((i as f64) * 0.37).sin()).collect();
        let b: Vec<f64> = (0..50_000).map(|i| ((i as f64) * 0.11).cos()).collect();
        set_parallel_threshold(0);
        set_execution(Execution::Parallel);
        let par = dot(&a, &b);
        set_execution(Execution::Serial);
        let ser = dot(&a, &b);
        set_execution(Execution::Parallel);
        set_parallel_threshold(8192);
        assert_eq!(par.to_bits(), ser.to_bits());
    }

    #[test]
    fn for_each_row_visits_rows_in_place() {
        let mut out = vec![0.0; 12];
        for_each_row(&mut out, 4, |j, row| {
            for (i, v) in row.iter_mut().enumerate() {
                *v = (j * 10 + i) as f64;
            }
        });
        assert_eq!(out[5], 11.0);
        assert_eq!(out[11], 23.0);
    }
}
