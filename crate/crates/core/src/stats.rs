//! Streaming mean/covariance and deterministic chunked RNG streams.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG for one chunk of work. Results depend only on
/// `(seed, stream)`, never on which worker runs the chunk.
pub fn chunk_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Sample mean and co-moment matrix of a vector-valued sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub mean: Vec<f64>,
    /// Row-major sum of `(x_i − mean)(x_j − mean)` over samples.
    comoment: Vec<f64>,
}

impl Moments {
    pub fn new(dim: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; dim],
            comoment: vec![0.0; dim * dim],
        }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    #[allow(clippy::needless_range_loop)]
    pub fn push(&mut self, x: &[f64]) {
        let d = self.dim();
        self.n += 1;
        let n = self.n as f64;
        let delta: Vec<f64> = x.iter().zip(&self.mean).map(|(x, m)| x - m).collect();
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl / n;
        }
        for i in 0..d {
            let after_i = x[i] - self.mean[i];
            for j in 0..d {
                self.comoment[i * d + j] += delta[j] * after_i;
            }
        }
    }

    /// Chan et al. pairwise combination.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let d = self.dim();
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        let delta: Vec<f64> = other
            .mean
            .iter()
            .zip(&self.mean)
            .map(|(b, a)| b - a)
            .collect();
        for i in 0..d {
            for j in 0..d {
                self.comoment[i * d + j] +=
                    other.comoment[i * d + j] + delta[i] * delta[j] * na * nb / n;
            }
        }
        for (m, dl) in self.mean.iter_mut().zip(&delta) {
            *m += dl * nb / n;
        }
        self.n += other.n;
    }

    /// Unbiased sample covariance of the per-sample values.
    pub fn sample_cov(&self, i: usize, j: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[i * self.dim() + j] / (self.n - 1) as f64
    }

    /// Covariance matrix of the mean estimator, row-major.
    pub fn cov_of_mean(&self) -> Vec<f64> {
        let d = self.dim();
        let n = self.n.max(1) as f64;
        let mut out = vec![0.0; d * d];
        for i in 0..d {
            for j in 0..d {
                out[i * d + j] = self.sample_cov(i, j) / n;
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn merge_matches_sequential() {
        let mut rng = chunk_rng(3, 0);
        let data: Vec<[f64; 2]> = (0..1000)
            .map(|_| {
                let x: f64 = rng.random();
                [x, 2.0 * x + rng.random::<f64>()]
            })
            .collect();
        let mut all = Moments::new(2);
        data.iter().for_each(|x| all.push(x));
        let mut a = Moments::new(2);
        let mut b = Moments::new(2);
        data[..377].iter().for_each(|x| a.push(x));
        data[377..].iter().for_each(|x| b.push(x));
        a.merge(&b);
        for i in 0..2 {
            assert!((a.mean[i] - all.mean[i]).abs() < 1e-12);
            for j in 0..2 {
                assert!((a.sample_cov(i, j) - all.sample_cov(i, j)).abs() < 1e-12);
            }
        }
        // Var(U) = 1/12.
        assert!((all.sample_cov(0, 0) - 1.0 / 12.0).abs() < 0.01);
    }

    #[test]
    fn streams_are_distinct_and_repeatable() {
        let x: u64 = chunk_rng(1, 0).random();
        let y: u64 = chunk_rng(1, 1).random();
        let z: u64 = chunk_rng(1, 0).random();
        assert_ne!(x, y);
        assert_eq!(x, z);
    }
}
