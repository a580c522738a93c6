//! Execution policy for the data-parallel inner loops.
//!
//! With the `parallel` feature (default) [`Exec::Parallel`] dispatches to
//! rayon; without it every policy runs sequentially. Results never depend on
//! the policy: work items are independent and merged in index order.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// `(0..n).map(f).collect()` in index order.
    pub fn map<T, F>(self, n: usize, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Fills `out` chunk by chunk; `f` receives the chunk offset and the chunk.
    pub fn fill_chunks<F>(self, out: &mut [f64], chunk: usize, f: F)
    where
        F: Fn(usize, &mut [f64]) + Sync + Send,
    {
        let chunk = chunk.max(1);
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            out.par_chunks_mut(chunk)
                .enumerate()
                .for_each(|(c, s)| f(c * chunk, s));
            return;
        }
        out.chunks_mut(chunk)
            .enumerate()
            .for_each(|(c, s)| f(c * chunk, s));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree() {
        let a = Exec::Sequential.map(1000, |i| (i as f64).sin());
        let b = Exec::Parallel.map(1000, |i| (i as f64).sin());
        assert_eq!(a, b);

        let mut x = vec![0.0; 1003];
        let mut y = vec![0.0; 1003];
        Exec::Sequential.fill_chunks(&mut x, 64, |o, s| {
            s.iter_mut().enumerate().for_each(|(i, v)| *v = (o + i) as f64)
        });
        Exec::Parallel.fill_chunks(&mut y, 64, |o, s| {
            s.iter_mut().enumerate().for_each(|(i, v)| *v = (o + i) as f64)
        });
        assert_eq!(x, y);
        assert_eq!(x[1002], 1002.0);
    }
}
