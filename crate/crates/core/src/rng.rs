//! Seeded generators. Each consumer draws from its own ChaCha stream so that
//! equal seeds in different configs never produce correlated samples.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
#[repr(u64)]
pub enum Stream {
    Space = 1,
    Triplets = 2,
    Init = 3,
    Folds = 4,
}

pub fn seeded(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}
