//! Full-waveform inversion for voids with finite cell domains.

pub mod adjoint;
pub mod assembly;
#[cfg(feature = "cli")]
pub mod cli;
pub mod config;
pub mod error;
pub mod experiments;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod linalg;
pub mod material;
pub mod optimize;
pub mod propagate;

pub use error::{Error, Result};

#[cfg(feature = "parallel")]
pub(crate) fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..count).into_par_iter().map(f).collect()
}

/// Number of worker threads available to `par_map`.
#[cfg(feature = "parallel")]
pub(crate) fn workers() -> usize {
    rayon::current_num_threads()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn workers() -> usize {
    1
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn par_map<T, F>(count: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..count).map(f).collect()
}
