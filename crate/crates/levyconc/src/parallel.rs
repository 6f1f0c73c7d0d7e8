//! Thread-pool executor.

use levyconc_core::rng::Executor;
use rayon::prelude::*;

/// Runs chunk jobs on a dedicated rayon pool; 0 workers means one per core.
pub struct Pool {
    pool: rayon::ThreadPool,
}

impl Pool {
    pub fn new(workers: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(workers).build()?;
        Ok(Pool { pool })
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }
}

impl Executor for Pool {
    fn run(&self, chunks: usize, job: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>> {
        self.pool.install(|| (0..chunks).into_par_iter().map(job).collect())
    }
}
