//! Threaded frequency executor.
//!
//! The per-frequency solves inside `Preconditioner::apply_inverse` touch
//! disjoint chunks of one buffer, so scoped threads can share it without
//! locks: each worker takes a contiguous run of chunks via `chunks_mut`.
//! Work splitting depends only on the chunk count and worker count, and no
//! result crosses a thread boundary, so the emitted numbers are bit-identical
//! for every worker count.

use num_complex::Complex64;
use pint_core::solver::FrequencyExecutor;

/// Runs frequency solves on `workers` OS threads (1 = in place, serial).
#[derive(Debug, Clone, Copy)]
pub struct ThreadPoolExecutor {
    workers: usize,
}

impl ThreadPoolExecutor {
    /// `workers = 0` picks one thread per available core.
    pub fn new(workers: usize) -> Self {
        let workers = if workers == 0 {
            std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
        } else {
            workers
        };
        Self { workers }
    }

    /// The resolved worker count.
    pub fn workers(&self) -> usize {
        self.workers
    }
}

impl FrequencyExecutor for ThreadPoolExecutor {
    fn run_chunks(
        &self,
        data: &mut [Complex64],
        chunk_len: usize,
        job: &(dyn Fn(usize, &mut [Complex64]) + Sync),
    ) {
        if data.is_empty() {
            return;
        }
        let n_chunks = data.len() / chunk_len;
        let workers = self.workers.clamp(1, n_chunks);
        if workers == 1 {
            for (k, chunk) in data.chunks_mut(chunk_len).enumerate() {
                job(k, chunk);
            }
            return;
        }
        let per_worker = n_chunks.div_ceil(workers);
        std::thread::scope(|scope| {
            for (w, segment) in data.chunks_mut(per_worker * chunk_len).enumerate() {
                scope.spawn(move || {
                    for (i, chunk) in segment.chunks_mut(chunk_len).enumerate() {
                        job(w * per_worker + i, chunk);
                    }
                });
            }
        });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pint_core::solver::SerialExecutor;

    /// Tag every chunk with its index so misassignment would show.
    fn run_with(executor: &dyn FrequencyExecutor, n_chunks: usize, chunk_len: usize) -> Vec<Complex64> {
        let mut data = vec![Complex64::new(1.0, 0.0); n_chunks * chunk_len];
        executor.run_chunks(&mut data, chunk_len, &|k, chunk| {
            for (i, z) in chunk.iter_mut().enumerate() {
                *z *= Complex64::new(k as f64 + 1.0, i as f64);
            }
        });
        data
    }

    #[test]
    fn matches_the_serial_executor_for_every_worker_count() {
        let reference = run_with(&SerialExecutor, 13, 5);
        for workers in [1, 2, 3, 4, 8, 32] {
            let got = run_with(&ThreadPoolExecutor::new(workers), 13, 5);
            assert_eq!(got, reference, "workers = {workers}");
        }
    }

    #[test]
    fn handles_more_workers_than_chunks_and_empty_data() {
        let got = run_with(&ThreadPoolExecutor::new(16), 3, 2);
        assert_eq!(got, run_with(&SerialExecutor, 3, 2));
        let mut empty: Vec<Complex64> = Vec::new();
        ThreadPoolExecutor::new(4).run_chunks(&mut empty, 4, &|_, _| panic!("no chunks"));
    }

    #[test]
    fn zero_resolves_to_available_parallelism() {
        assert!(ThreadPoolExecutor::new(0).workers() >= 1);
    }
}
