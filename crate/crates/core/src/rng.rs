//! Seeded random streams.
//!
//! Every stochastic routine takes an explicit generator. Parallel workers never
//! share one: each derives its own stream from `(seed, worker_index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Generator used throughout the crate.
pub type SimRng = ChaCha20Rng;

/// Default seed for command-line runs and checks.
pub const DEFAULT_SEED: u64 = 0x5eed_1909;

/// Stream `index` of the generator family keyed by `seed`.
pub fn stream(seed: u64, index: u64) -> SimRng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Uniform variate on the open interval (0, 1).
pub(crate) fn open01<R: rand::Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 0), |r, _: u64| Some(r.random())).collect();
        let b: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 0), |r, _: u64| Some(r.random())).collect();
        let c: Vec<u64> = (0..4).map(|_| 0).scan(stream(7, 1), |r, _: u64| Some(r.random())).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
