//! Deterministic random-number streams.
//!
//! Every run derives all of its randomness from the single `seed` in the
//! scenario. Each mechanism gets its own named ChaCha stream so that
//! toggling one mechanism (say, the channel-error knob) never perturbs the
//! draws of another. In particular the per-station arrival streams are
//! consumed one draw per slot regardless of MAC state, so the arrival
//! pattern for (seed, station) is identical across schemes.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Per-station stream used for Bernoulli arrival draws.
pub fn arrival_stream(seed: u64, station_index: usize) -> ChaCha8Rng {
    substream(seed, station_index as u64 * 2)
}

/// Per-station stream used for slot choices and retransmission draws.
pub fn backoff_stream(seed: u64, station_index: usize) -> ChaCha8Rng {
    substream(seed, station_index as u64 * 2 + 1)
}

/// Global stream for the optional packet-error knob.
pub fn channel_error_stream(seed: u64) -> ChaCha8Rng {
    substream(seed, u64::MAX)
}

fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
