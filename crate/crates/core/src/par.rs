//! Data-parallel helpers that fall back to plain iteration when the
//! `parallel` feature is off. Results are always returned in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    (0..len).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..len).map(f).collect()
}

/// Index and score of the maximum of `score` over `0..len`; ties go to the
/// lowest index so the answer does not depend on scheduling.
#[cfg(feature = "parallel")]
pub(crate) fn argmax<F>(len: u64, score: F) -> Option<(u64, f64)>
where
    F: Fn(u64) -> f64 + Sync + Send,
{
    (0..len).into_par_iter().map(|i| (i, score(i))).reduce_with(better)
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn argmax<F>(len: u64, score: F) -> Option<(u64, f64)>
where
    F: Fn(u64) -> f64,
{
    (0..len).map(|i| (i, score(i))).reduce(better)
}

fn better(a: (u64, f64), b: (u64, f64)) -> (u64, f64) {
    if b.1 > a.1 || (b.1 == a.1 && b.0 < a.0) {
        b
    } else {
        a
    }
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}
