//! Data-parallel primitives with a fixed reduction order.
//!
//! Work is split into chunks whose boundaries depend only on the problem
//! size. Each chunk is folded sequentially and chunk partials are combined
//! in index order, so the floating-point result does not depend on how many
//! threads ran the chunks. With the `parallel` feature disabled the same
//! chunking runs on the calling thread.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Number of items folded sequentially inside one reduction chunk.
pub const CHUNK: usize = 2048;

/// Evaluates `f` at `0..n` and collects the results in order.
pub fn map<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Overwrites `out[i]` with `f(i)`.
pub fn fill<T, F>(out: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        out.par_iter_mut().enumerate().for_each(|(i, v)| *v = f(i));
    }
    #[cfg(not(feature = "parallel"))]
    {
        for (i, v) in out.iter_mut().enumerate() {
            *v = f(i);
        }
    }
}

fn chunk_range(c: usize, n: usize) -> std::ops::Range<usize> {
    let start = c * CHUNK;
    start..(start + CHUNK).min(n)
}

/// `Σ_{i<n} f(i)` with a thread-count independent summation order.
pub fn sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map(chunks, |c| chunk_range(c, n).map(&f).sum::<f64>());
    partial.into_iter().sum()
}

/// `max_{i<n} f(i)`, or `-inf` for `n = 0`.
pub fn max<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let partial = map(chunks, |c| {
        chunk_range(c, n).map(&f).fold(f64::NEG_INFINITY, f64::max)
    });
    partial.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Accumulates `width` sums over work items `0..items`.
///
/// Each item writes into its own zeroed accumulator; accumulators are then
/// added together in item order.
pub fn reduce<F>(items: usize, width: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &mut [f64]) + Sync + Send,
{
    let partial = map(items, |i| {
        let mut acc = vec![0.0; width];
        f(i, &mut acc);
        acc
    });
    let mut total = vec![0.0; width];
    for acc in partial {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_matches_sequential_chunking() {
        let n = 3 * CHUNK + 17;
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let mut expected = 0.0;
        for c in 0..n.div_ceil(CHUNK) {
            expected += chunk_range(c, n).map(f).sum::<f64>();
        }
        assert_eq!(sum(n, f).to_bits(), expected.to_bits());
    }

    #[test]
    fn empty_reductions() {
        assert_eq!(sum(0, |_| 1.0), 0.0);
        assert_eq!(max(0, |_| 1.0), f64::NEG_INFINITY);
        assert_eq!(reduce(0, 3, |_, _| {}), vec![0.0; 3]);
    }

    #[test]
    fn reduce_adds_in_item_order() {
        let out = reduce(4, 2, |i, acc| {
            acc[0] += i as f64;
            acc[1] += 1.0;
        });
        assert_eq!(out, vec![6.0, 4.0]);
    }
}
