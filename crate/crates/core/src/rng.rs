//! Per-path random streams.
//!
//! Every Monte Carlo path owns a ChaCha8 stream selected from the master seed
//! by a 64-bit stream id, so a path's draws depend only on
//! `(seed, stream id)` and never on worker count or scheduling order.
//! Multi-stage estimators derive child ids from `(path, stage, child)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifies one random stream below a master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StreamKey {
    pub path: u64,
    pub stage: u32,
    pub child: u32,
}

impl StreamKey {
    pub const fn path(path: u64) -> Self {
        Self { path, stage: 0, child: 0 }
    }

    pub const fn child(path: u64, stage: u32, child: u32) -> Self {
        Self { path, stage, child }
    }

    /// Stage-0 keys map to the raw path index; other stages are mixed so
    /// that they cannot collide with plain path streams in practice.
    pub fn stream_id(&self) -> u64 {
        if self.stage == 0 && self.child == 0 {
            return self.path;
        }
        let tag = ((self.stage as u64) << 32) | self.child as u64;
        splitmix64(splitmix64(self.path ^ 0x9e37_79b9_7f4a_7c15) ^ splitmix64(tag))
            | (1u64 << 63)
    }
}

/// One round of the splitmix64 finalizer.
pub fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn stream_rng(seed: u64, key: StreamKey) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(key.stream_id());
    rng
}
