use rand::{Rng as _, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Seeded, platform-independent random stream (ChaCha8).
#[derive(Debug, Clone)]
pub struct Rng {
    seed: u64,
    inner: ChaCha8Rng,
}

/// Resumable position of an [`Rng`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub word_pos_hi: u64,
    pub word_pos_lo: u64,
}

impl Rng {
    pub fn new(seed: u64) -> Self {
        Rng {
            seed,
            inner: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    /// Independent stream for draw `index` of a run seeded with `seed`.
    pub fn derived(seed: u64, index: u64) -> Self {
        Rng::new(seed ^ index)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn state(&self) -> RngState {
        let pos = self.inner.get_word_pos();
        RngState {
            seed: self.seed,
            word_pos_hi: (pos >> 64) as u64,
            word_pos_lo: pos as u64,
        }
    }

    pub fn from_state(state: RngState) -> Self {
        let mut rng = Rng::new(state.seed);
        let pos = ((state.word_pos_hi as u128) << 64) | state.word_pos_lo as u128;
        rng.inner.set_word_pos(pos);
        rng
    }

    pub fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    /// Uniform in `[0, 1)`.
    pub fn unit(&mut self) -> f64 {
        self.inner.gen::<f64>()
    }

    /// Uniform in `[lo, hi)`; requires `lo < hi`.
    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        debug_assert!(lo < hi);
        loop {
            let v = lo + (hi - lo) * self.unit();
            if v < hi {
                return v;
            }
        }
    }

    pub fn bernoulli(&mut self, p: f64) -> bool {
        self.unit() < p
    }

    /// Standard normal via Box–Muller.
    pub fn normal(&mut self) -> f64 {
        let u1 = 1.0 - self.unit();
        let u2 = self.unit();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }

    pub fn uniform_vec(&mut self, dim: usize, lo: f64, hi: f64) -> super::Vector {
        (0..dim).map(|_| self.uniform(lo, hi)).collect()
    }

    /// Uniformly distributed direction on the unit sphere.
    pub fn unit_vector(&mut self, dim: usize) -> super::Vector {
        loop {
            let v: super::Vector = (0..dim).map(|_| self.normal()).collect();
            let norm = v.norm();
            if norm > 1e-12 {
                return v.scale(1.0 / norm);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn same_seed_same_stream() {
        let mut a = Rng::new(42);
        let mut b = Rng::new(42);
        for _ in 0..100 {
            assert_eq!(a.next_u64(), b.next_u64());
        }
        assert_ne!(Rng::new(1).next_u64(), Rng::new(2).next_u64());
    }

    #[test]
    fn state_round_trip_continues_stream() {
        let mut a = Rng::new(9);
        for _ in 0..37 {
            a.unit();
        }
        let mut b = Rng::from_state(a.state());
        for _ in 0..50 {
            assert_eq!(a.unit().to_bits(), b.unit().to_bits());
        }
    }

    #[test]
    fn uniform_stays_in_half_open_range() {
        let mut rng = Rng::new(3);
        let (lo, hi) = (0.25, 0.25 + 1e-12);
        for _ in 0..10_000 {
            let v = rng.uniform(lo, hi);
            assert!(v >= lo && v < hi);
        }
    }

    #[test]
    fn unit_vector_has_unit_norm() {
        let mut rng = Rng::new(5);
        let v = rng.unit_vector(7);
        assert!((v.norm() - 1.0).abs() < 1e-14);
    }
}
