//! Keyed random substreams.
//!
//! Every draw in the pipeline comes from a ChaCha8 stream seeded by
//! `(master seed, key, purpose)`. Keys are derived from what is being
//! sampled (a leaf rectangle, an evaluation chunk), never from the order in
//! which work happens, so results do not depend on refinement order or on
//! how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::Rectangle;

pub type Stream = ChaCha8Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
#[repr(u64)]
pub enum Purpose {
    SaltelliA = 1,
    SaltelliB = 2,
    Fill = 3,
    Eval = 4,
}

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 128-bit key built by two independent folds over the words.
fn fold(words: impl Iterator<Item = u64> + Clone) -> [u64; 2] {
    let a = words.clone().fold(0x9e37_79b9_7f4a_7c15u64, |h, w| mix(h ^ mix(w)));
    let b = words.fold(0xd1b5_4a32_d192_ed03u64, |h, w| mix(h.rotate_left(17) ^ w).wrapping_add(0x2545_f491_4f6c_dd1d));
    [a, b]
}

fn stream(master: u64, key: [u64; 2], purpose: Purpose) -> Stream {
    let mut seed = [0u8; 32];
    seed[..8].copy_from_slice(&master.to_le_bytes());
    seed[8..16].copy_from_slice(&key[0].to_le_bytes());
    seed[16..24].copy_from_slice(&key[1].to_le_bytes());
    seed[24..].copy_from_slice(&(purpose as u64).to_le_bytes());
    ChaCha8Rng::from_seed(seed)
}

/// Stream for sampling inside `rect`.
pub fn rect_stream(master: u64, rect: &Rectangle, purpose: Purpose) -> Stream {
    let d = rect.dim();
    let words =
        core::iter::once(d as u64).chain(rect.levels().iter().map(|&l| l as u64)).chain(rect.indices().iter().copied());
    stream(master, fold(words), purpose)
}

/// Stream for an arbitrary tuple of integers, e.g. `(leaf count, chunk)`.
pub fn keyed_stream(master: u64, key: &[u64], purpose: Purpose) -> Stream {
    stream(master, fold(key.iter().copied()), purpose)
}
