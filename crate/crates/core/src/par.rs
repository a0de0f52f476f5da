//! Data-parallel map helpers. With the `parallel` feature (default) the
//! independent jobs — band solves at distinct k, sweeps over deltas, loop
//! samples — fan out over rayon; without it the same code runs sequentially.
//! Collection order is the input order either way, so results are
//! deterministic regardless of scheduling.

#[cfg(feature = "parallel")]
pub fn map_slice<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> U + Sync + Send) -> Vec<U> {
    use rayon::prelude::*;
    items.par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
pub fn map_slice<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

/// Sequential map with the same shape as `map_slice`, kept available in all
/// configurations so benchmarks can compare the two schedulers directly.
pub fn map_slice_seq<T, U>(items: &[T], f: impl Fn(&T) -> U) -> Vec<U> {
    items.iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_agree_in_order() {
        let xs: Vec<u64> = (0..1000).collect();
        let a = map_slice(&xs, |&x| x * x + 1);
        let b = map_slice_seq(&xs, |&x| x * x + 1);
        assert_eq!(a, b);
    }
}
