//! Named random streams derived from one root seed.
//!
//! Every random decision draws from a stream keyed by its phase, the agent
//! making it, the tick and an optional counterpart, so the outcome does not
//! depend on how many draws other agents or phases made before it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Phase {
    Grid = 1,
    Placement = 2,
    Assignment = 3,
    Respond = 4,
    Query = 5,
    Report = 6,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngStreams {
    root: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

impl RngStreams {
    pub fn new(root: u64) -> Self {
        Self { root }
    }

    pub fn root(&self) -> u64 {
        self.root
    }

    pub fn stream(&self, phase: Phase, agent: u64, tick: u64, other: u64) -> ChaCha8Rng {
        let mut h = splitmix64(self.root);
        for word in [phase as u64, agent, tick, other] {
            h = splitmix64(h ^ word);
        }
        ChaCha8Rng::seed_from_u64(h)
    }
}
