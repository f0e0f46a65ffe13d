use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Name of the generator, recorded next to every experiment output.
pub const RNG_NAME: &str = "ChaCha20";

/// ChaCha20 keyed by `seed` via `seed_from_u64`, on stream `stream`.
///
/// Trials use their index as the stream, so each trial's draws do not
/// depend on how trials are scheduled.
pub fn seeded(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
