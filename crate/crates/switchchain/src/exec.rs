//! Execution mode for the data-parallel drivers.
//!
//! `Exec::Parallel` uses rayon when the `parallel` feature is on and
//! silently runs sequentially otherwise.

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Ordered map over `0..len`.
    pub fn map_range<T, F>(self, len: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..len).into_par_iter().map(f).collect();
        }
        (0..len).map(f).collect()
    }

    /// Ordered map over a slice.
    pub fn map<I, T, F>(self, items: &[I], f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&I) -> T + Sync + Send,
    {
        self.map_range(items.len(), |k| f(&items[k]))
    }

    /// Fold each index into an accumulator, then merge accumulators.
    /// `merge` must be associative and commutative for the result to be
    /// independent of scheduling.
    pub fn fold_range<A, Id, F, M>(self, len: usize, identity: Id, fold: F, merge: M) -> A
    where
        A: Send,
        Id: Fn() -> A + Sync + Send,
        F: Fn(A, usize) -> A + Sync + Send,
        M: Fn(A, A) -> A + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..len).into_par_iter().fold(&identity, &fold).reduce(&identity, &merge);
        }
        let _ = &merge;
        (0..len).fold(identity(), fold)
    }
}
