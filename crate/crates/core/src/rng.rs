//! Reproducible random streams.
//!
//! A stream is named by `(seed, stream)`. Its ChaCha8 key is derived from
//! both with SplitMix64; samples are generated in fixed-size chunks and
//! chunk `k` uses ChaCha stream number `k`. Results therefore depend only on
//! `(seed, stream, n)` and never on how chunks are spread over workers.

use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Samples per chunk.
pub const CHUNK: usize = 4096;

/// Tag recorded with every batch.
pub const ALGORITHM: &str = "chacha8-splitmix64-key-chunked-4096";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RngStreamSpec {
    pub seed: u64,
    pub stream: u64,
}

impl RngStreamSpec {
    pub fn new(seed: u64, stream: u64) -> Self {
        RngStreamSpec { seed, stream }
    }

    /// A child stream, e.g. for an independent center-estimation batch.
    pub fn child(&self, index: u64) -> Self {
        RngStreamSpec {
            seed: self.seed,
            stream: splitmix64(self.stream ^ splitmix64(index.wrapping_add(0xA076_1D64_78BD_642F))),
        }
    }

    fn key(&self) -> [u8; 32] {
        let base = splitmix64(self.seed) ^ splitmix64(self.stream.rotate_left(32) ^ 0xE703_7ED1_A0B4_28DB);
        let mut key = [0u8; 32];
        for (i, chunk) in key.chunks_exact_mut(8).enumerate() {
            let word = splitmix64(base.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)));
            chunk.copy_from_slice(&word.to_le_bytes());
        }
        key
    }

    /// Generator for chunk `index`.
    pub fn chunk_rng(&self, index: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::from_seed(self.key());
        rng.set_stream(index);
        rng
    }
}

/// Runs independent chunk jobs; results come back in chunk order.
pub trait Executor: Sync {
    fn run(&self, chunks: usize, job: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>>;
}

/// Single-threaded executor.
#[derive(Debug, Clone, Copy, Default)]
pub struct Serial;

impl Executor for Serial {
    fn run(&self, chunks: usize, job: &(dyn Fn(usize) -> Vec<f64> + Sync)) -> Vec<Vec<f64>> {
        (0..chunks).map(job).collect()
    }
}
