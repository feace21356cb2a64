//! Counter-based random streams.
//!
//! Every Monte Carlo draw is keyed by `(seed, stream)`: the seed fixes a
//! ChaCha8 key and the stream index selects one of its 2^64 independent
//! keystreams. A sample's randomness therefore depends only on its index,
//! never on which worker evaluated it or in what order.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Deterministic random source for one stream of one seed.
pub struct StreamRng(ChaCha8Rng);

impl StreamRng {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        StreamRng(rng)
    }

    /// Standard complex Gaussian: real and imaginary parts independent
    /// `N(0, 1/2)`, so that `E|c|^2 = 1`.
    pub fn complex_normal(&mut self) -> Complex64 {
        let re: f64 = self.0.sample(StandardNormal);
        let im: f64 = self.0.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    }

    pub fn uniform(&mut self) -> f64 {
        self.0.random::<f64>()
    }

    pub fn inner(&mut self) -> &mut ChaCha8Rng {
        &mut self.0
    }
}

/// Mean and standard error accumulated from per-sample values.
///
/// Blocks are merged in index order by the callers so the floating-point sum
/// is independent of how the index range was partitioned across workers.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Moments {
    pub count: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(mut self, other: Moments) -> Moments {
        self.count += other.count;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
        self
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.sum / self.count as f64
        }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            return 0.0;
        }
        let n = self.count as f64;
        let mean = self.sum / n;
        ((self.sum_sq - n * mean * mean) / (n - 1.0)).max(0.0)
    }

    pub fn stderr(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        }
    }
}

/// Number of consecutive sample indices evaluated as one work item.
pub const BLOCK: u64 = 4096;

/// Evaluates `per_sample(index)` for `index in 0..samples` on the current
/// rayon pool and returns the moments, with blocks merged in index order.
pub fn parallel_moments<F>(samples: u64, per_sample: F) -> Moments
where
    F: Fn(u64) -> f64 + Sync,
{
    use rayon::prelude::*;
    let blocks = samples.div_ceil(BLOCK);
    let partial: Vec<Moments> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut m = Moments::default();
            for i in b * BLOCK..((b + 1) * BLOCK).min(samples) {
                m.push(per_sample(i));
            }
            m
        })
        .collect();
    partial.into_iter().fold(Moments::default(), Moments::merge)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<Complex64> = {
            let mut r = StreamRng::new(7, 3);
            (0..4).map(|_| r.complex_normal()).collect()
        };
        let b: Vec<Complex64> = {
            let mut r = StreamRng::new(7, 3);
            (0..4).map(|_| r.complex_normal()).collect()
        };
        let c: Vec<Complex64> = {
            let mut r = StreamRng::new(7, 4);
            (0..4).map(|_| r.complex_normal()).collect()
        };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn complex_normal_has_unit_second_moment() {
        let mut r = StreamRng::new(1, 0);
        let n = 200_000;
        let mut m = Moments::default();
        let mut mean = Complex64::new(0.0, 0.0);
        for _ in 0..n {
            let c = r.complex_normal();
            m.push(c.norm_sqr());
            mean += c;
        }
        assert!((m.mean() - 1.0).abs() < 4.0 * m.stderr());
        assert!((mean / n as f64).norm() < 0.01);
    }

    #[test]
    fn parallel_moments_independent_of_pool_size() {
        let f = |i: u64| {
            let mut r = StreamRng::new(11, i);
            r.uniform()
        };
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let three = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let a = one.install(|| parallel_moments(10_000, f));
        let b = three.install(|| parallel_moments(10_000, f));
        assert_eq!(a, b);
        assert_eq!(a.count, 10_000);
    }

    #[test]
    fn moments_stderr() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-15);
        assert!((m.stderr() - (5.0f64 / 12.0).sqrt()).abs() < 1e-15);
    }
}
