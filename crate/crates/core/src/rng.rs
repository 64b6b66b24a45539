//! Seeded random streams.
//!
//! Every random quantity is drawn from a ChaCha8 generator keyed by a 64-bit
//! seed and a fixed stream id. ChaCha is counter based, so two streams with
//! the same seed and different ids never overlap and any consumer can be
//! replayed on its own:
//!
//! | stream        | id | consumer                                   |
//! |---------------|----|--------------------------------------------|
//! | `Ensemble`    | 1  | Gaussian rows, Hadamard sign diagonals     |
//! | `Signal`      | 2  | synthetic ground-truth signals             |
//! | `Corruption`  | 3  | outlier positions, outlier values, noise   |
//! | `Init`        | 4  | random initial points                      |
//! | `Probe`       | 5  | curvature probes, power-iteration starts   |
//! | `Landscape`   | 6  | orthogonal directions, Monte Carlo draws   |
//!
//! Sweeps derive one seed per (cell, replicate) with [`derive_seed`].

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Ensemble = 1,
    Signal = 2,
    Corruption = 3,
    Init = 4,
    Probe = 5,
    Landscape = 6,
}

pub fn stream_rng(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// SplitMix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for replicate `replicate` of grid cell `cell` under `master`.
pub fn derive_seed(master: u64, cell: u64, replicate: u64) -> u64 {
    mix(mix(mix(master) ^ cell) ^ replicate.rotate_left(32))
}
