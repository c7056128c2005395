//! Counter-based random streams.
//!
//! Every random draw in the crate comes from ChaCha8 keyed by a 64-bit seed
//! and selected by a 64-bit stream id, so replications can run in any order
//! on any number of threads and still reproduce bit for bit.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

/// Streams reserved per replication: component `j` of replication `rep` in
/// block `block` uses `stream_id(block, rep) + j`.
pub const STREAM_STRIDE: u64 = 64;

/// Name of the generator, echoed into reports.
pub const GENERATOR_NAME: &str = "ChaCha8 (rand_chacha 0.9), stream-keyed";

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Base stream of replication `rep` inside block `block` (an r value or a
/// regime, say).
pub fn stream_id(block: u32, rep: u64) -> u64 {
    assert!(rep < (1u64 << 26), "replication index out of range");
    ((block as u64) << 32) | (rep * STREAM_STRIDE)
}

pub fn fill_standard_normal(rng: &mut ChaCha8Rng, out: &mut [f64]) {
    for x in out.iter_mut() {
        *x = StandardNormal.sample(rng);
    }
}

pub fn standard_normals(seed: u64, stream: u64, n: usize) -> Vec<f64> {
    let mut rng = stream_rng(seed, stream);
    let mut v = vec![0.0; n];
    fill_standard_normal(&mut rng, &mut v);
    v
}
