//! Data-parallel map over independent work items.
//!
//! With the `parallel` feature the map runs on rayon; without it, sequentially.
//! Results always come back in input order.

/// Maps `f` over `items`, preserving order.
pub fn map_ordered<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        items.par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter().map(f).collect()
    }
}

/// Like [`map_ordered`] but runs on a pool of at most `threads` workers.
/// `None` uses rayon's global pool.
pub fn map_ordered_with<T, R, F>(items: &[T], threads: Option<usize>, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build() {
            return pool.install(|| map_ordered(items, f));
        }
    }
    #[cfg(not(feature = "parallel"))]
    let _ = threads;
    map_ordered(items, f)
}

/// Maps sequentially regardless of the feature set.
pub fn map_sequential<T, R, F>(items: &[T], f: F) -> Vec<R>
where
    F: Fn(&T) -> R,
{
    items.iter().map(f).collect()
}

pub fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let items: Vec<u64> = (0..1000).collect();
        let out = map_ordered(&items, |x| x * x);
        assert_eq!(out, map_sequential(&items, |x| x * x));
        assert_eq!(map_ordered_with(&items, Some(3), |x| x + 1)[999], 1000);
    }
}
