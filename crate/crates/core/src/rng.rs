//! Random number plumbing shared by every sampler.
//!
//! One generator is used throughout the crate: xoshiro256++ (period 2^256 − 1),
//! seeded from a single `u64` through SplitMix64. Every replicate of every
//! experiment gets its own generator, seeded by [`derive_seed`], so results are
//! independent of how replicates are scheduled across threads.

use rand::{Rng, RngCore, SeedableRng};
use rand_distr::Exp1;
use rand_xoshiro::Xoshiro256PlusPlus;

/// The generator used by all simulations.
pub type SimRng = Xoshiro256PlusPlus;

/// Name recorded in run manifests.
pub const PRNG_NAME: &str = "xoshiro256++ (rand_xoshiro 0.7), seeded with SplitMix64";

/// Means at or below this value are sampled by CDF inversion; larger means by
/// counting unit-rate exponential arrivals.
const POISSON_INVERSION_MAX: f64 = 10.0;

const TWO_POW_M53: f64 = 1.0 / (1u64 << 53) as f64;

pub fn rng_from_seed(seed: u64) -> SimRng {
    SimRng::seed_from_u64(seed)
}

/// Uniform on (0, 1], in steps of 2^-53.
#[inline]
pub fn unit_open_closed<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    ((rng.next_u64() >> 11) + 1) as f64 * TWO_POW_M53
}

/// Uniform on [0, 1), in steps of 2^-53.
#[inline]
pub fn unit_closed_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    (rng.next_u64() >> 11) as f64 * TWO_POW_M53
}

/// Uniform on the open interval (0, 1).
#[inline]
pub fn unit_open<R: RngCore + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let k = rng.next_u64() >> 11;
        if k != 0 {
            return k as f64 * TWO_POW_M53;
        }
    }
}

/// Standard exponential variate.
#[inline]
pub fn exp1<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(Exp1)
}

/// Exact Poisson sampler: inversion for small means, otherwise the number of
/// arrivals of a unit-rate Poisson process in `[0, mean]`.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    debug_assert!(mean >= 0.0 && mean.is_finite());
    if mean <= 0.0 {
        return 0;
    }
    if mean <= POISSON_INVERSION_MAX {
        let u = unit_closed_open(rng);
        let mut k = 0u64;
        let mut p = (-mean).exp();
        let mut cdf = p;
        // the cap only matters when rounding keeps the cdf just below u
        while u >= cdf && k < 1_000 {
            k += 1;
            p *= mean / k as f64;
            cdf += p;
        }
        return k;
    }
    let mut clock = 0.0;
    let mut count = 0u64;
    loop {
        clock += exp1(rng);
        if clock > mean {
            return count;
        }
        count += 1;
    }
}

#[inline]
fn mix64(mut z: u64) -> u64 {
    // SplitMix64 / Stafford "mix13" finalizer; a bijection on u64.
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` of size `n` under base seed `base`.
///
/// Computed as `mix64(mix64(base ^ 0x9e3779b97f4a7c15) ^ mix64(rotl(n, 32) ^ replicate))`
/// where `mix64` is the SplitMix64 finalizer (multipliers `0xbf58476d1ce4e5b9`,
/// `0x94d049bb133111eb`, shifts 30/27/31). Because `mix64` is a bijection, the map is
/// injective in `base`, and injective in `(n, replicate)` whenever both are below 2^32.
pub fn derive_seed(base: u64, n: u64, replicate: u64) -> u64 {
    let key = n.rotate_left(32) ^ replicate;
    mix64(mix64(base ^ 0x9e37_79b9_7f4a_7c15) ^ mix64(key))
}
