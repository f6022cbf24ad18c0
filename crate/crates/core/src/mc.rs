//! Antithetic Monte Carlo over x ~ N(0, I).
//!
//! Samples come in pairs (x, −x). Each chunk of pairs uses its own ChaCha8
//! stream and chunk summaries are merged in chunk order, so the result is
//! bit-identical for any thread count.

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{PnnError, Result};
use crate::rng;

const CHUNK_PAIRS: usize = 1 << 14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub estimate: f64,
    pub stderr: f64,
}

#[derive(Clone)]
struct Moments {
    n: f64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Moments {
    fn new(dim: usize) -> Self {
        Moments { n: 0.0, mean: vec![0.0; dim], m2: vec![0.0; dim] }
    }

    fn push(&mut self, x: &[f64]) {
        self.n += 1.0;
        for i in 0..x.len() {
            let delta = x[i] - self.mean[i];
            self.mean[i] += delta / self.n;
            self.m2[i] += delta * (x[i] - self.mean[i]);
        }
    }

    fn merge(&mut self, o: &Moments) {
        if o.n == 0.0 {
            return;
        }
        let n = self.n + o.n;
        for i in 0..self.mean.len() {
            let delta = o.mean[i] - self.mean[i];
            self.mean[i] += delta * o.n / n;
            self.m2[i] += o.m2[i] + delta * delta * self.n * o.n / n;
        }
        self.n = n;
    }
}

/// Mean of a vector-valued `f(x)` with per-component standard errors.
///
/// `f` writes `out_dim` values into its output slice. `n_samples` counts
/// individual draws; an odd count is rounded up to a whole pair.
pub fn mc_mean_vec<F>(d: usize, out_dim: usize, n_samples: usize, seed: u64, f: F) -> Result<Vec<McEstimate>>
where
    F: Fn(&[f64], &mut [f64]) + Sync,
{
    if n_samples == 0 {
        return Err(PnnError::ParameterOutOfRange("n_samples must be >= 1".into()));
    }
    let pairs = n_samples.div_ceil(2);
    let chunks = pairs.div_ceil(CHUNK_PAIRS);
    let parts: Vec<Moments> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut g = rng::stream(seed, c as u64);
            let count = CHUNK_PAIRS.min(pairs - c * CHUNK_PAIRS);
            let mut m = Moments::new(out_dim);
            let mut x = vec![0.0; d];
            let mut neg = vec![0.0; d];
            let mut a = vec![0.0; out_dim];
            let mut b = vec![0.0; out_dim];
            for _ in 0..count {
                for i in 0..d {
                    x[i] = StandardNormal.sample(&mut g);
                    neg[i] = -x[i];
                }
                f(&x, &mut a);
                f(&neg, &mut b);
                for i in 0..out_dim {
                    a[i] = 0.5 * (a[i] + b[i]);
                }
                m.push(&a);
            }
            m
        })
        .collect();
    let mut total = Moments::new(out_dim);
    for p in &parts {
        total.merge(p);
    }
    Ok((0..out_dim)
        .map(|i| {
            let stderr = if total.n > 1.0 { (total.m2[i] / (total.n - 1.0) / total.n).sqrt() } else { 0.0 };
            McEstimate { estimate: total.mean[i], stderr }
        })
        .collect())
}

pub fn mc_mean<F>(d: usize, n_samples: usize, seed: u64, f: F) -> Result<McEstimate>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    Ok(mc_mean_vec(d, 1, n_samples, seed, |x, out| out[0] = f(x))?[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_second_moment() {
        let e = mc_mean(3, 200_000, 1, |x| x[0] * x[0]).unwrap();
        assert!((e.estimate - 1.0).abs() < 4.0 * e.stderr);
    }

    #[test]
    fn antithetic_cancels_odd_functions() {
        let e = mc_mean(2, 1000, 1, |x| x[0] + x[1].powi(3)).unwrap();
        assert!(e.estimate.abs() < 1e-15 && e.stderr < 1e-15);
    }

    #[test]
    fn independent_of_thread_count() {
        let f = |x: &[f64]| (x[0] - 0.3 * x[1]).max(0.0).powi(2);
        let a = mc_mean(2, 300_001, 9, f).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let b = pool.install(|| mc_mean(2, 300_001, 9, f).unwrap());
        assert_eq!(a, b);
    }

    #[test]
    fn zero_samples_rejected() {
        assert!(mc_mean(1, 0, 0, |x| x[0]).is_err());
    }
}
