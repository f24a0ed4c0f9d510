//! Parallel/sequential execution helpers.
//!
//! All batch work in the crate funnels through [`map`], which fans out
//! over a rayon pool when the `parallel` feature is on and falls back
//! to a plain loop otherwise. [`map_seq`] is always sequential, so the
//! `_seq` API variants stay available for comparison even in a
//! parallel-enabled build. Results are positional, so the output is
//! independent of scheduling either way.

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
#[cfg(feature = "parallel")]
pub fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    use rayon::prelude::*;
    items.into_par_iter().map(f).collect()
}

/// Maps `f` over `items`, in parallel when the `parallel` feature is on.
#[cfg(not(feature = "parallel"))]
pub fn map<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    T: Send,
    U: Send,
    F: Fn(T) -> U + Sync + Send,
{
    map_seq(items, f)
}

/// Maps `f` over `items` sequentially, regardless of features.
pub fn map_seq<T, U, F>(items: Vec<T>, f: F) -> Vec<U>
where
    F: Fn(T) -> U,
{
    items.into_iter().map(f).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn map_matches_map_seq() {
        let xs: Vec<u64> = (0..1000).collect();
        let par = map(xs.clone(), |x| x * x + 1);
        let seq = map_seq(xs, |x| x * x + 1);
        assert_eq!(par, seq);
    }
}
