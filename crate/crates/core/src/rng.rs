//! Reproducible random streams.
//!
//! Every stream is a ChaCha8 generator keyed by the master seed; the stream
//! id selects an independent keystream, so trial `t` can be replayed
//! without running trials `0..t`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type TrialRng = ChaCha8Rng;

/// Stream reserved for instance generation.
pub const INSTANCE_STREAM: u64 = 0;

pub fn stream(seed: u64, stream_id: u64) -> TrialRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}

/// Stream for trial `trial_id` (streams start at 1).
pub fn trial_stream(seed: u64, trial_id: u64) -> TrialRng {
    stream(seed, trial_id + 1)
}
