//! Execution mode for the data-parallel inner loops.
//!
//! With the default `parallel` feature the per-exemplar, per-candidate and
//! per-prefix loops run on rayon. Results are always collected in input
//! order and every work item is internally sequential, so parallel output is
//! bit-identical to sequential output. Building with
//! `--no-default-features` removes rayon entirely and everything runs on the
//! sequential path.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// How the embarrassingly parallel loops execute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    #[cfg(feature = "parallel")]
    Parallel,
    Sequential,
}

impl Default for Mode {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Mode::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Mode::Sequential
        }
    }
}

/// Maps `f` over `items`, preserving order.
pub(crate) fn map_ordered<T, U, F>(mode: Mode, items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => items.par_iter().map(f).collect(),
        Mode::Sequential => items.iter().map(f).collect(),
    }
}

/// Maps `f` over an index range, preserving order.
pub(crate) fn map_range<U, F>(mode: Mode, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    match mode {
        #[cfg(feature = "parallel")]
        Mode::Parallel => (0..n).into_par_iter().map(f).collect(),
        Mode::Sequential => (0..n).map(f).collect(),
    }
}
