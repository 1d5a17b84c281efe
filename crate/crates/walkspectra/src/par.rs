//! Parallel execution helpers with determinism guarantees.
//!
//! Every reduction here is structured so the floating-point association
//! order depends only on the input length, never on the thread count:
//! per-index maps write into preallocated slots, folds run over fixed
//! chunk boundaries and merge in chunk order, and scalar sums use a
//! sequential pairwise tree.

/// Number of fixed accumulation chunks for chunked folds. Constant so that
/// merge order (and hence rounding) is independent of the thread count.
pub const FOLD_CHUNKS: usize = 8;

/// Map `f` over `0..len` into a vector, in parallel when enabled.
pub fn map_indexed<T, F>(len: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..len).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..len).map(f).collect()
    }
}

/// Fixed chunk boundaries covering `0..len` in `FOLD_CHUNKS` pieces.
pub fn chunk_bounds(len: usize) -> Vec<(usize, usize)> {
    let chunks = FOLD_CHUNKS.min(len.max(1));
    let base = len / chunks;
    let rem = len % chunks;
    let mut out = Vec::with_capacity(chunks);
    let mut start = 0;
    for c in 0..chunks {
        let sz = base + usize::from(c < rem);
        out.push((start, start + sz));
        start += sz;
    }
    out
}

/// Fold `0..len` into per-chunk accumulators (fixed boundaries), then merge
/// the chunk results in chunk order. Deterministic for any thread count.
pub fn chunked_fold<A, F, M>(len: usize, init: impl Fn() -> A + Sync, fold: F, merge: M) -> A
where
    A: Send,
    F: Fn(&mut A, usize) + Sync,
    M: Fn(&mut A, A),
{
    let bounds = chunk_bounds(len);
    let run = |(lo, hi): (usize, usize)| {
        let mut acc = init();
        for i in lo..hi {
            fold(&mut acc, i);
        }
        acc
    };
    #[cfg(feature = "parallel")]
    let parts: Vec<A> = {
        use rayon::prelude::*;
        bounds.into_par_iter().map(run).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let parts: Vec<A> = bounds.into_iter().map(run).collect();

    let mut parts = parts.into_iter();
    let mut acc = parts.next().expect("at least one chunk");
    for p in parts {
        merge(&mut acc, p);
    }
    acc
}

/// Pairwise (cascade) summation. Deterministic, O(log n) error growth.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        2 => xs[0] + xs[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
        }
    }
}

/// Sum `f(i)` over `0..len` with fixed-chunk partial sums combined pairwise.
pub fn sum_indexed<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let partials = chunked_fold(
        len,
        Vec::new,
        |acc: &mut Vec<f64>, i| acc.push(f(i)),
        |a, b| a.extend_from_slice(&b),
    );
    pairwise_sum(&partials)
}
