//! Seeded random streams.
//!
//! Every episode derives independent ChaCha streams from its seed so that
//! controllers sharing a seed see identical environments and oracle draws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Named sub-streams of an episode seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    /// Initial obstacle parameters, start and projection matrix.
    Setup = 1,
    /// Goal sequence.
    Goals = 2,
    /// Re-randomization of obstacles after a reshuffle.
    Reshuffle = 3,
    /// Mode layouts and mode schedule.
    Modes = 4,
    /// Oracle samples and any controller-internal randomness.
    Controller = 5,
    /// Context projection matrix.
    Projection = 6,
    /// Evaluation draws (score-error probes and the like).
    Evaluation = 7,
}

/// Independent stream `stream` of `seed`.
pub fn stream(seed: u64, stream: Stream) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Independent stream keyed by an arbitrary index, used for per-item draws.
pub fn indexed(seed: u64, stream_id: u64, index: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ stream_id.rotate_left(32));
    rng.set_stream(index);
    rng
}
