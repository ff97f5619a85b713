use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Supplier of the per-step standard normal draws, indexed by stock name.
pub trait NoiseSource {
    fn fill(&mut self, out: &mut [f64]);
}

/// One ChaCha8 stream per stock name, all keyed by the same seed.
///
/// Stream `i` depends only on `(seed, i)`, so paths for different seeds are
/// independent and a path does not depend on how work is scheduled.
#[derive(Debug, Clone)]
pub struct SeededNoise {
    streams: Vec<ChaCha8Rng>,
}

impl SeededNoise {
    pub fn new(seed: u64, n: usize) -> Self {
        let streams = (0..n)
            .map(|name| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(name as u64);
                rng
            })
            .collect();
        SeededNoise { streams }
    }
}

impl NoiseSource for SeededNoise {
    fn fill(&mut self, out: &mut [f64]) {
        for (x, rng) in out.iter_mut().zip(self.streams.iter_mut()) {
            *x = rng.sample(StandardNormal);
        }
    }
}

/// All draws zero: the path follows the ranked drifts only.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroNoise;

impl NoiseSource for ZeroNoise {
    fn fill(&mut self, out: &mut [f64]) {
        out.fill(0.0);
    }
}

impl<F: FnMut(&mut [f64])> NoiseSource for F {
    fn fill(&mut self, out: &mut [f64]) {
        self(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_differ_by_name_and_seed() {
        let mut a = SeededNoise::new(7, 3);
        let mut b = SeededNoise::new(8, 3);
        let (mut x, mut y) = ([0.0; 3], [0.0; 3]);
        a.fill(&mut x);
        b.fill(&mut y);
        assert_ne!(x[0], x[1]);
        assert_ne!(x, y);
    }

    #[test]
    fn stream_independent_of_market_size() {
        let mut small = SeededNoise::new(11, 2);
        let mut large = SeededNoise::new(11, 5);
        let (mut x, mut y) = ([0.0; 2], [0.0; 5]);
        for _ in 0..10 {
            small.fill(&mut x);
            large.fill(&mut y);
            assert_eq!(x[..], y[..2]);
        }
    }
}
