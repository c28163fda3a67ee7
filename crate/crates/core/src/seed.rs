//! Counter-based seed splitting.
//!
//! Every random stream in the crate is derived from a master seed and a
//! tuple of coordinates, so results never depend on traversal order or on
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Stream tags. Distinct tags keep unrelated consumers of the same master
/// seed from sharing a stream.
pub mod tag {
    pub const ALPHABET: u64 = 0x616c_7068;
    pub const CAMPAIGN: u64 = 0x6361_6d70;
    pub const DECAY: u64 = 0x6465_6361;
    pub const POWER: u64 = 0x706f_7765;
    pub const AUDIT: u64 = 0x6175_6469;
    pub const MONTE_CARLO: u64 = 0x6d63_6172;
    pub const SCHUR: u64 = 0x7363_6875;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Mixes `master` with the given coordinates into a single 64-bit key.
pub fn derive(master: u64, coords: &[u64]) -> u64 {
    coords
        .iter()
        .fold(splitmix(master), |h, &c| splitmix(h ^ splitmix(c)))
}

/// Stream for the node `(level, parent)` of a Cantor construction tree.
pub fn node_stream(master: u64, level: u32, parent: u128) -> ChaCha8Rng {
    let key = derive(
        master,
        &[
            tag::ALPHABET,
            level as u64,
            parent as u64,
            (parent >> 64) as u64,
        ],
    );
    ChaCha8Rng::seed_from_u64(key)
}

pub fn substream(master: u64, tag: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(derive(master, &[tag, index]))
}
