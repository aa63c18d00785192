//! Seeded, splittable randomness. A run is driven by one `u64` seed; each
//! independent unit of work draws from its own ChaCha stream, so results do
//! not depend on scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type LabRng = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> LabRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
