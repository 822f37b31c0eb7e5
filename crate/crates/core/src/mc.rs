//! Order-preserving parallel reduction for Monte Carlo loops.
//!
//! Replicates are grouped into fixed-size blocks. Blocks run in parallel,
//! each folds its replicates in index order, and the block results are then
//! merged sequentially in block order. Floating point sums are therefore the
//! same for every thread count.

use rayon::prelude::*;

/// Replicates per block.
pub const BLOCK: usize = 64;

/// Folds `step` over `0..count` into accumulators created by `init`, merging
/// block accumulators in order with `merge`. Returns the error of the
/// lowest-indexed failing block.
pub fn try_reduce<A, E, I, S, M>(count: usize, init: I, step: S, merge: M) -> Result<A, E>
where
    A: Send,
    E: Send,
    I: Fn() -> A + Sync,
    S: Fn(&mut A, usize) -> Result<(), E> + Sync,
    M: Fn(&mut A, A),
{
    let blocks = count.div_ceil(BLOCK);
    let partial: Vec<Result<A, E>> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut acc = init();
            for i in b * BLOCK..((b + 1) * BLOCK).min(count) {
                step(&mut acc, i)?;
            }
            Ok(acc)
        })
        .collect();
    let mut total = init();
    for p in partial {
        merge(&mut total, p?);
    }
    Ok(total)
}

/// Evaluates `f` on `0..count` in parallel, keeping index order.
pub fn try_map<R, E, F>(count: usize, f: F) -> Result<Vec<R>, E>
where
    R: Send,
    E: Send,
    F: Fn(usize) -> Result<R, E> + Sync,
{
    let out: Vec<Result<R, E>> = (0..count).into_par_iter().map(&f).collect();
    out.into_iter().collect()
}

/// Running sums for a mean and variance per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments<T> {
    pub count: usize,
    pub sum: Vec<T>,
    pub sum_sq: Vec<T>,
}

impl<T: crate::Real> Moments<T> {
    pub fn new(dim: usize) -> Self {
        Moments {
            count: 0,
            sum: vec![T::zero(); dim],
            sum_sq: vec![T::zero(); dim],
        }
    }

    pub fn push(&mut self, values: impl IntoIterator<Item = T>) {
        self.count += 1;
        for ((s, q), v) in self.sum.iter_mut().zip(self.sum_sq.iter_mut()).zip(values) {
            *s = *s + v;
            *q = *q + v * v;
        }
    }

    pub fn merge(&mut self, other: Self) {
        self.count += other.count;
        for (s, o) in self.sum.iter_mut().zip(other.sum) {
            *s = *s + o;
        }
        for (q, o) in self.sum_sq.iter_mut().zip(other.sum_sq) {
            *q = *q + o;
        }
    }

    pub fn mean(&self) -> Vec<T> {
        let n = T::of_usize(self.count);
        self.sum.iter().map(|&s| s / n).collect()
    }

    /// Unbiased sample variance per coordinate (zero for a single sample).
    pub fn variance(&self) -> Vec<T> {
        if self.count < 2 {
            return vec![T::zero(); self.sum.len()];
        }
        let n = T::of_usize(self.count);
        self.sum
            .iter()
            .zip(&self.sum_sq)
            .map(|(&s, &q)| ((q - s * s / n) / (n - T::one())).max(T::zero()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sum_with_threads(threads: usize) -> f64 {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            try_reduce::<f64, (), _, _, _>(
                10_000,
                || 0.0,
                |acc, i| {
                    *acc += 1.0 / (i as f64 + 1.0).powf(1.3);
                    Ok(())
                },
                |a, b| *a += b,
            )
            .unwrap()
        })
    }

    #[test]
    fn reduction_is_independent_of_thread_count() {
        let one = sum_with_threads(1);
        assert_eq!(one.to_bits(), sum_with_threads(3).to_bits());
        assert_eq!(one.to_bits(), sum_with_threads(8).to_bits());
    }

    #[test]
    fn first_error_wins() {
        let r = try_reduce(
            1_000,
            || (),
            |_, i| if i == 700 || i == 300 { Err(i) } else { Ok(()) },
            |_, _| {},
        );
        assert_eq!(r, Err(300));
        let m: Result<Vec<usize>, usize> = try_map(500, |i| if i >= 200 { Err(i) } else { Ok(i) });
        assert_eq!(m, Err(200));
    }

    #[test]
    fn moments_merge() {
        let mut a = Moments::<f64>::new(2);
        a.push([1.0, 2.0]);
        a.push([3.0, 2.0]);
        let mut b = Moments::new(2);
        b.push([5.0, 2.0]);
        a.merge(b);
        assert_eq!(a.mean(), vec![3.0, 2.0]);
        assert_eq!(a.variance(), vec![4.0, 0.0]);
    }
}
