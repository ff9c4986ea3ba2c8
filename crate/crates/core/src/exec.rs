//! Execution mode for the data-parallel loops (grid points, sweep rows,
//! frequencies).
//!
//! With the `parallel` feature the work is spread over the rayon global pool.
//! Without it, or with [`Execution::Sequential`], every loop runs on the
//! calling thread. Results are always collected in index order, so the output
//! does not depend on the mode or the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Execution::Parallel
        } else {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// Evaluates `f(0..n)` and returns the results in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Maps fixed-size chunks of `items` and returns one result per chunk in
    /// order. Chunk boundaries depend only on `chunk`, never on scheduling.
    pub fn map_chunks<I, T, F>(self, items: &[I], chunk: usize, f: F) -> Vec<T>
    where
        I: Sync,
        T: Send,
        F: Fn(&[I]) -> T + Sync + Send,
    {
        let chunk = chunk.max(1);
        match self {
            #[cfg(feature = "parallel")]
            Execution::Parallel => items.par_chunks(chunk).map(f).collect(),
            _ => items.chunks(chunk).map(f).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree() {
        let f = |i: usize| (i as f64).sqrt();
        assert_eq!(
            Execution::Sequential.map(1000, f),
            Execution::Parallel.map(1000, f)
        );
        let items: Vec<u64> = (0..10_001).collect();
        let sum = |c: &[u64]| c.iter().sum::<u64>();
        let a = Execution::Sequential.map_chunks(&items, 97, sum);
        let b = Execution::Parallel.map_chunks(&items, 97, sum);
        assert_eq!(a, b);
        assert_eq!(a.len(), 10_001usize.div_ceil(97));
    }
}
