//! Counter-based random substreams.
//!
//! Every consumer of randomness gets its own ChaCha stream selected from the
//! master seed by a `(purpose, index)` pair, so the draws of one generation
//! or operator never depend on how many numbers another one consumed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Purpose {
    Lhs = 1,
    Selection = 2,
    Crossover = 3,
    Mutation = 4,
    Init = 5,
    Shuffle = 6,
    Split = 7,
}

/// Stream `index` of `purpose` under `seed`.
pub fn substream(seed: u64, purpose: Purpose, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // 8 bits of purpose, 56 bits of index
    rng.set_stream(((purpose as u64) << 56) | (index & ((1 << 56) - 1)));
    rng
}
