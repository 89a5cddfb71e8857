//! Seeded random streams.
//!
//! Every stochastic routine in the crate obtains its generator from
//! [`stream`]: a ChaCha8 block cipher keyed by the 64-bit root seed, with the
//! 64-bit ChaCha stream id selecting an independent sub-sequence. ChaCha is a
//! counter-based generator, so two streams with different ids never overlap
//! and a stream's output depends only on `(seed, stream_id)`.
//!
//! Stream ids used by the crate:
//!
//! | consumer                         | stream id                         |
//! |----------------------------------|-----------------------------------|
//! | `mc_gmm_kl`, `agmm_select_kernels`| 0                                |
//! | `reinforce_step` at policy step t | t                                |
//! | simulator snapshot at step t      | `SNAPSHOT_STREAM_BIT | t`        |
//! | random mixture generation, case i | i (seeded by the caller's seed)   |

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// High bit reserved for diversity-snapshot sampling so it never collides
/// with a training step's stream.
pub const SNAPSHOT_STREAM_BIT: u64 = 1 << 63;

pub type StreamRng = ChaCha8Rng;

pub fn stream(seed: u64, stream_id: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id);
    rng
}
