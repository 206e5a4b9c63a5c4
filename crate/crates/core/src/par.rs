//! Order-preserving map over a slice.
//!
//! With the `parallel` feature (default) [`map`] runs on the rayon pool;
//! without it, on the calling thread. Results are gathered by input index in
//! both cases, so the output is identical either way.

pub mod sequential {
    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        F: Fn(&T) -> R,
    {
        items.iter().map(f).collect()
    }

    pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
    where
        F: Fn(&T) -> Result<R, E>,
    {
        items.iter().map(f).collect()
    }
}

#[cfg(feature = "parallel")]
pub mod parallel {
    use rayon::prelude::*;

    pub fn map<T, R, F>(items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }

    pub fn try_map<T, R, E, F>(items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        items.par_iter().map(f).collect()
    }
}

#[cfg(feature = "parallel")]
pub use parallel::{map, try_map};
#[cfg(not(feature = "parallel"))]
pub use sequential::{map, try_map};
