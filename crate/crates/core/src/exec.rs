//! Execution policy for the per-cell loops.
//!
//! Every kernel in this crate is an element-wise map, so the parallel and
//! sequential paths produce bit-identical output. Reductions stay sequential.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Below this many entries the parallel path is not worth the fork/join.
pub const PAR_MIN_LEN: usize = 8192;

#[cfg(feature = "parallel")]
const PAR_CHUNK: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    /// Parallel for large arrays, sequential otherwise.
    #[default]
    Auto,
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Exec {
    fn parallel_for(self, len: usize) -> bool {
        match self {
            Exec::Sequential => false,
            #[cfg(feature = "parallel")]
            Exec::Parallel => true,
            #[cfg(feature = "parallel")]
            Exec::Auto => len >= PAR_MIN_LEN,
            #[cfg(not(feature = "parallel"))]
            Exec::Auto => {
                let _ = len;
                false
            }
        }
    }

    /// Writes `f(i)` into `out[i]` for every index.
    pub fn fill<F>(self, out: &mut [f64], f: F)
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        if self.parallel_for(out.len()) {
            #[cfg(feature = "parallel")]
            out.par_iter_mut()
                .with_min_len(PAR_CHUNK)
                .enumerate()
                .for_each(|(i, o)| *o = f(i));
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            *o = f(i);
        }
    }

    pub fn vec<F>(self, len: usize, f: F) -> Vec<f64>
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        let mut out = vec![0.0; len];
        self.fill(&mut out, f);
        out
    }
}

/// Maps independent jobs (trajectories, resolutions, sweep points), in
/// parallel when the feature is enabled. Output order matches input order.
pub fn map_jobs<T, R, F>(jobs: Vec<T>, f: F) -> Vec<R>
where
    T: Send,
    R: Send,
    F: Fn(T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        jobs.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        jobs.into_iter().map(f).collect()
    }
}
