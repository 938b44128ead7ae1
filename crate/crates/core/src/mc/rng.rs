//! Random streams for the Monte Carlo engine.
//!
//! Every stream is a ChaCha8 generator. The 256-bit key is the user's 64-bit
//! seed expanded with SplitMix64; the 64-bit ChaCha stream id encodes the
//! grid cell and replication shard:
//!
//! ```text
//! stream = delta_index << 40 | method_index << 24 | shard
//! ```
//!
//! so any (cell, shard) can be regenerated on its own, in any order, on any
//! thread. Normal variates use the Box–Muller transform, consuming two
//! `u64` words per pair of outputs.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const MAX_DELTA_INDEX: usize = 1 << 24;
pub const MAX_METHOD_INDEX: usize = 1 << 16;
pub const MAX_SHARD: usize = 1 << 24;

/// Position of a sweep cell in the (δ × method) grid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub struct CellKey {
    pub delta_index: usize,
    pub method_index: usize,
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn key_from_seed(seed: u64) -> [u8; 32] {
    let mut state = seed;
    let mut key = [0u8; 32];
    for chunk in key.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    key
}

/// The ChaCha8 substream for one shard of one cell.
pub fn substream(seed: u64, cell: CellKey, shard: usize) -> ChaCha8Rng {
    assert!(
        cell.delta_index < MAX_DELTA_INDEX,
        "delta index out of range"
    );
    assert!(
        cell.method_index < MAX_METHOD_INDEX,
        "method index out of range"
    );
    assert!(shard < MAX_SHARD, "shard index out of range");
    let mut rng = ChaCha8Rng::from_seed(key_from_seed(seed));
    rng.set_stream(
        (cell.delta_index as u64) << 40 | (cell.method_index as u64) << 24 | shard as u64,
    );
    rng
}

/// Standard normal variates by Box–Muller.
#[derive(Debug, Clone)]
pub struct NormalStream<R> {
    rng: R,
    spare: Option<f64>,
}

impl<R: RngCore> NormalStream<R> {
    pub fn new(rng: R) -> Self {
        NormalStream { rng, spare: None }
    }

    /// Uniform on (0, 1], 53 bits.
    fn open_unit(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) + 1) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform on [0, 1), 53 bits.
    pub fn unit(&mut self) -> f64 {
        (self.rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    pub fn standard_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let radius = (-2.0 * self.open_unit().ln()).sqrt();
        let angle = std::f64::consts::TAU * self.unit();
        let (sin, cos) = angle.sin_cos();
        self.spare = Some(radius * sin);
        radius * cos
    }
}
