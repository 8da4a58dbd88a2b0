//! Counter-based Wiener increments.
//!
//! Every increment is a pure function of `(master_seed, trajectory, step)`,
//! so trajectories can be scheduled on any worker in any order.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub struct WienerStream {
    rng: ChaCha12Rng,
}

impl WienerStream {
    pub fn new(master_seed: u64, trajectory: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
        rng.set_stream(trajectory);
        WienerStream { rng }
    }

    /// Standard normal variate attached to `step` (Box-Muller on two words).
    pub fn normal(&mut self, step: u64) -> f64 {
        // Two u64 draws per step occupy four 32-bit words of the stream.
        self.rng.set_word_pos(4 * step as u128);
        let u1 = ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        let u2 = (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64);
        (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
    }

    /// Wiener increment over a step of length `dt`.
    pub fn increment(&mut self, step: u64, dt: f64) -> f64 {
        self.normal(step) * dt.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn increments_are_keyed_not_sequential() {
        let mut a = WienerStream::new(7, 3);
        let forward: Vec<f64> = (0..50).map(|s| a.normal(s)).collect();
        let mut b = WienerStream::new(7, 3);
        for s in (0..50).rev() {
            assert_eq!(b.normal(s).to_bits(), forward[s as usize].to_bits());
        }
        let mut c = WienerStream::new(7, 4);
        assert_ne!(c.normal(0), forward[0]);
    }

    #[test]
    fn moments_are_standard_normal() {
        let mut s = WienerStream::new(11, 0);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|k| s.normal(k)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n as f64;
        let kurt = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "var {var}");
        assert!((kurt - 3.0).abs() < 0.06, "kurtosis {kurt}");
    }
}
