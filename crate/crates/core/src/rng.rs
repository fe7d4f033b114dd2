//! Deterministic, hierarchically derived random streams.
//!
//! Every random draw in the crate comes from a [`RandomStream`] identified by a
//! master seed and a path of integer labels, e.g. `[replication, round, arm]`.
//! The same `(seed, path)` always yields the same sequence, so results never
//! depend on the order in which independent work items are scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;
const MIX_CONST1: u64 = 0xBF58_476D_1CE4_E5B9;
const MIX_CONST2: u64 = 0x94D0_49BB_1331_11EB;

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(MIX_CONST1);
    z = (z ^ (z >> 27)).wrapping_mul(MIX_CONST2);
    z ^ (z >> 31)
}

fn derive_key(master_seed: u64, labels: &[u64]) -> [u8; 32] {
    let mut h = mix64(master_seed.wrapping_add(GOLDEN_GAMMA));
    for (i, &label) in labels.iter().enumerate() {
        let salt = GOLDEN_GAMMA.wrapping_mul(i as u64 + 2);
        h = mix64(h ^ mix64(label.wrapping_add(salt)));
    }
    // Length is folded in so that [] and [0] do not collide.
    h = mix64(h ^ (labels.len() as u64).wrapping_mul(MIX_CONST2));

    let mut key = [0u8; 32];
    for (j, chunk) in key.chunks_exact_mut(8).enumerate() {
        let word = mix64(h.wrapping_add(GOLDEN_GAMMA.wrapping_mul(j as u64 + 1)));
        chunk.copy_from_slice(&word.to_le_bytes());
    }
    key
}

/// A reproducible random stream addressed by `(master_seed, stream_path)`.
#[derive(Debug, Clone)]
pub struct RandomStream {
    master_seed: u64,
    path: Vec<u64>,
    rng: ChaCha8Rng,
}

/// Derives the stream for `(master_seed, labels)`.
pub fn derive_stream(master_seed: u64, labels: &[u64]) -> RandomStream {
    RandomStream::derive(master_seed, labels)
}

impl RandomStream {
    pub fn derive(master_seed: u64, labels: &[u64]) -> Self {
        Self {
            master_seed,
            path: labels.to_vec(),
            rng: ChaCha8Rng::from_seed(derive_key(master_seed, labels)),
        }
    }

    /// Stream at `path ++ [label]`. Independent of how many draws were taken
    /// from `self`.
    pub fn child(&self, label: u64) -> Self {
        let mut path = self.path.clone();
        path.push(label);
        Self {
            master_seed: self.master_seed,
            rng: ChaCha8Rng::from_seed(derive_key(self.master_seed, &path)),
            path,
        }
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn path(&self) -> &[u64] {
        &self.path
    }

    /// Uniform draw in `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.rng.random::<f64>()
    }

    /// Uniform index in `0..n`. Panics if `n == 0`.
    pub fn index(&mut self, n: usize) -> usize {
        self.rng.random_range(0..n)
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.uniform() < p
    }

    pub fn standard_normal(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn normal(&mut self, mean: f64, sd: f64) -> f64 {
        mean + sd * self.standard_normal()
    }

    /// Draw from Gamma(shape, scale). Both must be positive and finite.
    pub fn gamma(&mut self, shape: f64, scale: f64) -> f64 {
        Gamma::new(shape, scale)
            .expect("gamma parameters validated by caller")
            .sample(&mut self.rng)
    }

    /// Draw from Inverse-Gamma(shape, scale): `scale / Gamma(shape, 1)`.
    pub fn inverse_gamma(&mut self, shape: f64, scale: f64) -> f64 {
        scale / self.gamma(shape, 1.0)
    }
}

impl RngCore for RandomStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn draws(stream: &mut RandomStream, n: usize) -> Vec<f64> {
        (0..n).map(|_| stream.uniform()).collect()
    }

    #[test]
    fn same_path_same_draws() {
        let a = draws(&mut derive_stream(42, &[3, 1, 4]), 100);
        let b = draws(&mut derive_stream(42, &[3, 1, 4]), 100);
        assert_eq!(a, b);
    }

    #[test]
    fn distinct_labels_differ() {
        let a = draws(&mut derive_stream(7, &[0]), 100);
        let b = draws(&mut derive_stream(7, &[1]), 100);
        assert_ne!(a, b);
        let empty = draws(&mut derive_stream(7, &[]), 10);
        let zero = draws(&mut derive_stream(7, &[0]), 10);
        assert_ne!(empty, zero);
    }

    #[test]
    fn child_is_path_extension() {
        let mut parent = derive_stream(9, &[1]);
        let _ = parent.uniform();
        let a = draws(&mut parent.child(5), 20);
        let b = draws(&mut derive_stream(9, &[1, 5]), 20);
        assert_eq!(a, b);
    }

    #[test]
    fn uniform_mean_is_half() {
        let mut s = derive_stream(2024, &[11]);
        let n = 100_000;
        let mean = draws(&mut s, n).iter().sum::<f64>() / n as f64;
        assert!((0.495..=0.505).contains(&mean), "mean {mean}");
    }

    #[test]
    fn substreams_are_uncorrelated() {
        let n = 10_000;
        let a = draws(&mut derive_stream(5, &[0, 1]), n);
        let b = draws(&mut derive_stream(5, &[0, 2]), n);
        let ma = a.iter().sum::<f64>() / n as f64;
        let mb = b.iter().sum::<f64>() / n as f64;
        let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
        for (x, y) in a.iter().zip(&b) {
            sab += (x - ma) * (y - mb);
            saa += (x - ma).powi(2);
            sbb += (y - mb).powi(2);
        }
        let rho = sab / (saa * sbb).sqrt();
        assert!(rho.abs() < 0.05, "rho {rho}");
    }

    #[test]
    fn inverse_gamma_mean() {
        // E[IG(3, 2)] = 2 / (3 - 1) = 1, Var = 4 / (4 * 1) = 1.
        let mut s = derive_stream(1, &[99]);
        let n = 100_000;
        let mean = (0..n).map(|_| s.inverse_gamma(3.0, 2.0)).sum::<f64>() / n as f64;
        let se = (1.0f64 / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}");
    }
}
