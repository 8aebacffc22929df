use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use sha2::{Digest, Sha256};

/// Identifier of the task-sampling procedure, recorded with every batch.
///
/// Key: SHA-256 over the little-endian seed followed by the model id bytes.
/// Stream: the task index. Draws: `next_u64` only; uniform indices by
/// rejection sampling, Bernoulli(p) by comparing the top 53 bits against p.
pub const RNG_ALGORITHM: &str = "chacha8-sha256key-stream-per-task/v1";

pub fn task_rng(seed: u64, model_id: &str, index: u64) -> ChaCha8Rng {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(model_id.as_bytes());
    let key: [u8; 32] = h.finalize().into();
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// Uniform integer in `0..n` for `n > 0`.
pub fn uniform_index(rng: &mut impl RngCore, n: usize) -> usize {
    let n = n as u64;
    // largest multiple of n that fits, so every residue is equally likely
    let zone = u64::MAX - (u64::MAX % n + 1) % n;
    loop {
        let x = rng.next_u64();
        if x <= zone {
            return (x % n) as usize;
        }
    }
}

pub fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

pub fn bernoulli(rng: &mut impl RngCore, p: f64) -> bool {
    unit_f64(rng) < p
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_stable() {
        let a: Vec<u64> = (0..3).map(|_| task_rng(42, "m", 0).next_u64()).collect();
        assert!(a.iter().all(|x| *x == a[0]));
        assert_ne!(task_rng(42, "m", 0).next_u64(), task_rng(42, "m", 1).next_u64());
        assert_ne!(task_rng(42, "m", 0).next_u64(), task_rng(43, "m", 0).next_u64());
        assert_ne!(task_rng(42, "m", 0).next_u64(), task_rng(42, "n", 0).next_u64());
    }

    #[test]
    fn uniform_index_covers_range() {
        let mut rng = task_rng(1, "x", 0);
        let mut seen = [0usize; 3];
        for _ in 0..3000 {
            seen[uniform_index(&mut rng, 3)] += 1;
        }
        assert!(seen.iter().all(|&c| (900..1100).contains(&c)), "{seen:?}");
        assert_eq!(uniform_index(&mut rng, 1), 0);
    }
}
