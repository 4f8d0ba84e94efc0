use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Identifier written into every manifest that records a seed.
pub const RNG_ALGORITHM: &str = "chacha8-stream-fnv1a";

/// Seedable generator split into named streams.
///
/// The master seed keys a ChaCha8 generator and the stream name selects one of
/// its 2^64 independent streams, so "data", "init" and "shuffle" draws never
/// interfere with one another.
#[derive(Clone, Debug)]
pub struct Rng {
    inner: ChaCha8Rng,
}

impl Rng {
    pub fn from_stream(seed: u64, stream: &str) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id(stream));
        Self { inner }
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }
}

/// Derives a child seed, e.g. one per sweep cell.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    Rng::from_stream(seed, label).next_u64()
}

fn stream_id(name: &str) -> u64 {
    // FNV-1a
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

impl RngCore for Rng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}
