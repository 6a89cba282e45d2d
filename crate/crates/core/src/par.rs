//! Order-preserving data-parallel map; sequential without the `parallel` feature.

#[cfg(feature = "parallel")]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    use rayon::prelude::*;
    (0..n).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Runs `op` on a pool of `workers` threads (`0` keeps the global pool).
#[cfg(feature = "parallel")]
pub(crate) fn install<R: Send>(workers: usize, op: impl FnOnce() -> R + Send) -> crate::Result<R> {
    if workers == 0 {
        return Ok(op());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| crate::Error::Domain(format!("cannot start {workers} workers: {e}")))?;
    Ok(pool.install(op))
}

#[cfg(not(feature = "parallel"))]
pub(crate) fn install<R>(_workers: usize, op: impl FnOnce() -> R) -> crate::Result<R> {
    Ok(op())
}
