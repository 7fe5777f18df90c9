//! Data-parallel map with a sequential fallback.
//!
//! Results always come back in input order, so any reduction that follows is
//! independent of scheduling.

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    /// Rayon thread pool; runs sequentially when built without the `parallel` feature.
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Self::Parallel
        } else {
            Self::Sequential
        }
    }
}

impl Execution {
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Self::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Self::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
            #[cfg(not(feature = "parallel"))]
            Self::Parallel => items.iter().map(f).collect(),
        }
    }
}

/// Sets the global worker count. Has no effect without the `parallel` feature.
pub fn configure_threads(threads: usize) -> Result<(), String> {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| e.to_string())
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = threads;
        Ok(())
    }
}
