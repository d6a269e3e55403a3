//! Counter-based randomness: every edge weight is a pure function of the
//! master seed and the canonical edge key, so environments are reproducible
//! regardless of enumeration order, region size or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 output function applied to `x + gamma`.
#[inline(always)]
pub fn mix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(GOLDEN_GAMMA);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Keyed hash of an edge `(base coordinates, axis)` under `seed`.
#[inline]
pub fn edge_hash(seed: u64, base: &[i64], axis: usize) -> u64 {
    let mut h = mix64(seed ^ 0x5851_F42D_4C95_7F2D);
    for &c in base {
        h = mix64(h ^ (c as u64));
    }
    mix64(h ^ (axis as u64).wrapping_mul(0xD6E8_FEB8_6659_FD93))
}

/// Maps 64 random bits to a double in `[0, 1)` using the top 53 bits.
#[inline(always)]
pub fn unit_f64(bits: u64) -> f64 {
    (bits >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// Seed for trial `index` of a run rooted at `master_seed`.
pub fn trial_seed(master_seed: u64, index: u64) -> u64 {
    master_seed.wrapping_add(index)
}

/// Sequential generator for auxiliary sampling (Monte Carlo batteries,
/// random walks), derived from a seed and a stream label.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed));
    rng.set_stream(stream);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_hash_is_deterministic_and_key_sensitive() {
        let a = edge_hash(7, &[1, 2], 0);
        assert_eq!(a, edge_hash(7, &[1, 2], 0));
        assert_ne!(a, edge_hash(7, &[1, 2], 1));
        assert_ne!(a, edge_hash(7, &[2, 1], 0));
        assert_ne!(a, edge_hash(8, &[1, 2], 0));
    }

    #[test]
    fn unit_range() {
        assert_eq!(unit_f64(0), 0.0);
        assert!(unit_f64(u64::MAX) < 1.0);
    }

    #[test]
    fn neighbouring_seeds_are_decorrelated() {
        // consecutive trial seeds must not give correlated weights on one edge
        let n = 200_000u64;
        let (mut sx, mut sy, mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for s in 0..n {
            let x = unit_f64(edge_hash(s, &[0, 0], 0));
            let y = unit_f64(edge_hash(s + 1, &[0, 0], 0));
            sx += x;
            sy += y;
            sxy += x * y;
            sxx += x * x;
            syy += y * y;
        }
        let nf = n as f64;
        let cov = sxy / nf - sx / nf * sy / nf;
        let corr = cov / ((sxx / nf - (sx / nf).powi(2)) * (syy / nf - (sy / nf).powi(2))).sqrt();
        assert!(corr.abs() < 5.0 / nf.sqrt(), "corr {corr}");
    }
}
