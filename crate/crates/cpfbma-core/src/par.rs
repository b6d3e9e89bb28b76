//! Order-preserving batch map with an optional data-parallel backend.
//!
//! Experiment drivers fan independent cells (seed × SNR × method) out to a
//! worker pool and must merge results deterministically. Both entry points
//! return outputs in input order, so callers can rely on positional merging
//! regardless of completion order:
//!
//! * [`batch_map`] uses rayon when the `parallel` feature is enabled
//!   (default) and degrades to a sequential loop otherwise;
//! * [`batch_map_seq`] is always sequential and serves as the reference
//!   implementation the benches compare against.

/// Maps `f` over `items`, preserving input order in the output.
///
/// With the `parallel` feature enabled the closure runs on the rayon thread
/// pool; outputs are still returned in input order, so results are identical
/// to [`batch_map_seq`] whenever `f` is a pure function.
#[cfg(feature = "parallel")]
pub fn batch_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Sequential fallback used when the `parallel` feature is disabled.
#[cfg(not(feature = "parallel"))]
pub fn batch_map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}

/// Sequential reference map with the same signature as [`batch_map`].
pub fn batch_map_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    items.into_iter().map(f).collect()
}
