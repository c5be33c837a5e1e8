use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

/// Seeded, portable random stream.
///
/// ChaCha8 keystreams are identical on every platform, so a seed pins the
/// whole sequence of draws. Parallel work must not share one `Rng`; hand each
/// task a child from [`Rng::fork`] instead.
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Self {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Child stream for task `index` of a parent seeded with `seed`.
    pub fn derive(seed: u64, index: u64) -> Self {
        Self::new(splitmix64(seed ^ splitmix64(index)))
    }

    /// Draws one value from this stream and derives `count` independent
    /// children from it. The children depend only on their index, so serial
    /// and parallel consumers see the same numbers.
    pub fn fork(&mut self, count: usize) -> Vec<Rng> {
        let base = self.inner.next_u64();
        (0..count).map(|i| Rng::derive(base, i as u64)).collect()
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// A fresh 64-bit seed for an external consumer.
    pub fn next_seed(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }

    pub fn uniform_range(&mut self, low: f64, high: f64) -> f64 {
        low + (high - low) * self.uniform()
    }

    pub fn normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform integer in `0..n`. Panics when `n == 0`.
    pub fn below(&mut self, n: usize) -> usize {
        self.inner.random_range(0..n)
    }

    pub fn coin(&mut self) -> bool {
        self.uniform() < 0.5
    }

    /// Draw from the flat Dirichlet `Dir(1, ..., 1)` via normalized unit
    /// exponentials.
    pub fn dirichlet_flat(&mut self, dim: usize) -> Vec<f64> {
        let mut w: Vec<f64> = (0..dim).map(|_| self.inner.sample::<f64, _>(Exp1)).collect();
        let total: f64 = w.iter().sum();
        if total > 0.0 {
            w.iter_mut().for_each(|x| *x /= total);
        } else {
            w.iter_mut().for_each(|x| *x = 1.0 / dim as f64);
        }
        w
    }
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
