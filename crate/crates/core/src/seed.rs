//! Seed derivation. Every random stream in a run descends from explicit seeds.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every random stream.
pub type Rng = ChaCha8Rng;

/// Named purposes, so distinct streams never collide for the same cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Partition = 2,
    Training = 3,
    Mixture = 4,
    Target = 5,
    Bootstrap = 6,
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a base seed with a sequence of tags into a new seed.
pub fn derive(base: u64, tags: &[u64]) -> u64 {
    tags.iter()
        .fold(splitmix64(base), |acc, &t| splitmix64(acc ^ splitmix64(t)))
}

/// Seed of one stream for one cell of the grid.
pub fn cell_seed(run_seed: u64, stream: Stream, row: usize, col: usize) -> u64 {
    derive(run_seed, &[stream as u64, row as u64, col as u64])
}

pub fn rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_differ_per_tag() {
        let a = cell_seed(7, Stream::Partition, 0, 1);
        let b = cell_seed(7, Stream::Partition, 1, 0);
        let c = cell_seed(7, Stream::Training, 0, 1);
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, cell_seed(7, Stream::Partition, 0, 1));
    }
}
