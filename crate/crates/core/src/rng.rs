//! Counter-based RNG streams.
//!
//! Every random draw of the sampler and the generator comes from a stream
//! keyed on `(seed, iteration, block, index)`, so results do not depend on
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

/// Block tags used to key streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Block {
    Latent = 1,
    Endmember = 2,
    Nonlinearity = 3,
    NoiseVariance = 4,
    NonlinearityVariance = 5,
    Weight = 6,
    SynthPixel = 16,
    SynthEndmembers = 17,
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Independent stream for `(seed, iteration, block, index)`.
pub fn stream(seed: u64, iteration: u64, block: Block, index: u64) -> StreamRng {
    let mut key = [0u8; 32];
    let mut h = splitmix64(seed);
    for (i, word) in [iteration, block as u64, 0xA5A5_5A5A].into_iter().enumerate() {
        h = splitmix64(h ^ word);
        key[i * 8..(i + 1) * 8].copy_from_slice(&h.to_le_bytes());
    }
    h = splitmix64(h ^ seed.rotate_left(17));
    key[24..32].copy_from_slice(&h.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
