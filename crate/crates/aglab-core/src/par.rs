//! Order-stable data parallelism.
//!
//! With the `parallel` feature (the default) the maps below fan out over
//! rayon; without it they run sequentially. In both cases results come
//! back in input order, so every reduction downstream sees the same
//! operand order and output is bit-identical across worker counts.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Size the global worker pool (first call wins). Results never depend
/// on the worker count; this only controls throughput. No-op without
/// the `parallel` feature.
pub fn configure_workers(n: usize) {
    #[cfg(feature = "parallel")]
    {
        if n >= 1 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = n;
    }
}

/// Map `f` over `items`, preserving input order in the output.
pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Indexed variant of [`ordered_map`].
pub fn ordered_map_indexed<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(usize, &T) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().enumerate().map(|(i, t)| f(i, t)).collect()
    }
}

/// Map over `0..n`, preserving index order in the output.
pub fn ordered_map_range<U, F>(n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
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

/// Sequential reference implementations, kept callable with the
/// `parallel` feature on so benchmarks can compare both code paths.
pub mod seq {
    pub fn ordered_map<T, U, F>(items: &[T], f: F) -> Vec<U>
    where
        F: Fn(&T) -> U,
    {
        items.iter().map(f).collect()
    }

    pub fn ordered_map_range<U, F>(n: usize, f: F) -> Vec<U>
    where
        F: Fn(usize) -> U,
    {
        (0..n).map(f).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = ordered_map(&xs, |x| x * 3 + 1);
        let b = seq::ordered_map(&xs, |x| x * 3 + 1);
        assert_eq!(a, b);
    }

    #[test]
    fn range_map_is_order_stable() {
        let a = ordered_map_range(100, |i| i as f64 * 0.25);
        let b = seq::ordered_map_range(100, |i| i as f64 * 0.25);
        assert_eq!(a, b);
    }
}
