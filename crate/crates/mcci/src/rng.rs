//! Deterministic pseudo-random byte source and unbiased sampling primitives.
//!
//! The default generator is SHA-256 in counter mode: output block `i` is
//! `SHA256(seed || be64(i))`, so the stream is a pure function of the seed and
//! is bit-identical across platforms. A faster non-cryptographic core
//! (xoshiro256**, reseeded from a SHA-256 digest of the seed) can be selected
//! where throughput matters more than a large state space.
//!
//! Parallel consumers must not share one generator; instead, derive
//! [`SeededGenerator::substream`]s from a root generator. Substream `j` owns
//! its own disjoint slice of the counter space (or its own derived state), so
//! replicate `j` sees the same bytes no matter how work is scheduled.

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RngError {
    #[error("invalid assignment sizes: need 0 < m < n, got m={m}, n={n}")]
    InvalidAssignment { n: usize, m: usize },
}

/// Which byte-stream core a generator runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeneratorKind {
    /// SHA-256 counter mode (default; cross-platform, huge state space).
    Sha256Counter,
    /// xoshiro256** seeded from a SHA-256 digest of the seed. Much faster,
    /// smaller state space; fine for big simulations, still reproducible.
    Fast,
}

/// IID uniform random signs, entries in {-1, +1}.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignVector(pub Vec<i8>);

impl SignVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// A binary treatment assignment: `labels[i] == 1` marks a treated unit;
/// exactly `m` units are treated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssignmentVector {
    pub labels: Vec<u8>,
    pub m: usize,
}

#[derive(Debug, Clone)]
enum Core {
    /// Block index space is [counter, limit); the hash input uses the low 64
    /// bits of the counter, which substream bases never exceed in practice.
    Sha { counter: u128, limit: u128 },
    Fast { state: [u64; 4] },
}

/// Deterministic byte stream plus unbiased sampling helpers.
#[derive(Debug, Clone)]
pub struct SeededGenerator {
    seed: Vec<u8>,
    kind: GeneratorKind,
    core: Core,
    buffer: Vec<u8>,
    cursor: usize,
}

impl SeededGenerator {
    /// Root generator on the default SHA-256 counter core.
    pub fn new(seed: &[u8]) -> Self {
        Self::with_kind(seed, GeneratorKind::Sha256Counter)
    }

    pub fn with_kind(seed: &[u8], kind: GeneratorKind) -> Self {
        Self::at_stream(seed, kind, 0)
    }

    fn at_stream(seed: &[u8], kind: GeneratorKind, stream: u64) -> Self {
        let core = match kind {
            GeneratorKind::Sha256Counter => Core::Sha {
                counter: (stream as u128) << 32,
                limit: ((stream as u128) + 1) << 32,
            },
            GeneratorKind::Fast => Core::Fast {
                state: fast_state(seed, stream),
            },
        };
        SeededGenerator {
            seed: seed.to_vec(),
            kind,
            core,
            buffer: Vec::new(),
            cursor: 0,
        }
    }

    /// Substream `j` of a root generator: same seed, disjoint counter slice
    /// (stream 0 is the root itself). Derive substreams from the root only;
    /// substreams of substreams would alias their siblings.
    pub fn substream(&self, j: u64) -> Self {
        // checked in every profile: wrapping would alias the root stream
        let stream = j.checked_add(1).expect("substream index overflow");
        Self::at_stream(&self.seed, self.kind, stream)
    }

    pub fn seed(&self) -> &[u8] {
        &self.seed
    }

    pub fn kind(&self) -> GeneratorKind {
        self.kind
    }

    /// Next `k` bytes of the stream. `k = 0` leaves the state untouched.
    pub fn next_bytes(&mut self, k: usize) -> Vec<u8> {
        let mut out = vec![0u8; k];
        self.fill_bytes(&mut out);
        out
    }

    pub fn fill_bytes(&mut self, out: &mut [u8]) {
        let mut filled = 0;
        while filled < out.len() {
            if self.cursor == self.buffer.len() {
                self.refill();
            }
            let take = (out.len() - filled).min(self.buffer.len() - self.cursor);
            out[filled..filled + take]
                .copy_from_slice(&self.buffer[self.cursor..self.cursor + take]);
            self.cursor += take;
            filled += take;
        }
    }

    fn refill(&mut self) {
        self.buffer.clear();
        self.cursor = 0;
        match &mut self.core {
            Core::Sha { counter, limit } => {
                assert!(*counter < *limit, "counter stream exhausted");
                assert!(*counter <= u64::MAX as u128, "block index exceeds 64 bits");
                let mut h = Sha256::new();
                h.update(&self.seed);
                h.update((*counter as u64).to_be_bytes());
                self.buffer.extend_from_slice(&h.finalize());
                *counter += 1;
            }
            Core::Fast { state } => {
                self.buffer
                    .extend_from_slice(&xoshiro_next(state).to_be_bytes());
            }
        }
    }

    /// Unbiased integer in `[0, bound)` by rejection sampling: draw the
    /// smallest whole number of bytes whose range covers `bound` (at least
    /// one), interpret big-endian, reject values at or above the largest
    /// multiple of `bound` that fits.
    pub fn uniform_below(&mut self, bound: u128) -> u128 {
        assert!(bound >= 1, "uniform_below requires bound >= 1");
        let mut nbytes = 1usize;
        while nbytes < 16 && (1u128 << (8 * nbytes)) < bound {
            nbytes += 1;
        }
        loop {
            let mut buf = [0u8; 16];
            self.fill_bytes(&mut buf[16 - nbytes..]);
            let v = u128::from_be_bytes(buf);
            if nbytes == 16 {
                // range is 2^128; compute 2^128 mod bound without overflow
                let rem = (u128::MAX % bound + 1) % bound;
                if rem != 0 && v >= 0u128.wrapping_sub(rem) {
                    continue;
                }
            } else {
                let range = 1u128 << (8 * nbytes);
                if v >= (range / bound) * bound {
                    continue;
                }
            }
            return v % bound;
        }
    }

    /// Uniform f64 in [0, 1) with 53 random bits.
    pub fn uniform_f64(&mut self) -> f64 {
        let mut b = [0u8; 8];
        self.fill_bytes(&mut b);
        (u64::from_be_bytes(b) >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// `n` IID uniform signs.
    pub fn random_signs(&mut self, n: usize) -> SignVector {
        let signs = (0..n)
            .map(|_| if self.uniform_below(2) == 1 { 1i8 } else { -1i8 })
            .collect();
        SignVector(signs)
    }

    /// Uniform draw over all C(n, m) assignments of m treated among n units,
    /// via a partial Fisher-Yates shuffle (not sort-on-random-key).
    pub fn random_assignment(&mut self, n: usize, m: usize) -> Result<AssignmentVector, RngError> {
        if m == 0 || m >= n {
            return Err(RngError::InvalidAssignment { n, m });
        }
        let mut idx: Vec<usize> = (0..n).collect();
        for i in 0..m {
            let j = i + self.uniform_below((n - i) as u128) as usize;
            idx.swap(i, j);
        }
        let mut labels = vec![0u8; n];
        for &i in &idx[..m] {
            labels[i] = 1;
        }
        Ok(AssignmentVector { labels, m })
    }
}

fn fast_state(seed: &[u8], stream: u64) -> [u64; 4] {
    let mut h = Sha256::new();
    h.update(b"mcci/xoshiro256**");
    h.update(stream.to_be_bytes());
    h.update(seed);
    let digest = h.finalize();
    let mut s = [0u64; 4];
    for (i, word) in s.iter_mut().enumerate() {
        let mut b = [0u8; 8];
        b.copy_from_slice(&digest[8 * i..8 * (i + 1)]);
        *word = u64::from_be_bytes(b);
    }
    if s == [0, 0, 0, 0] {
        s[0] = 1; // the all-zero state is xoshiro's one fixed point
    }
    s
}

fn xoshiro_next(s: &mut [u64; 4]) -> u64 {
    let result = s[1].wrapping_mul(5).rotate_left(7).wrapping_mul(9);
    let t = s[1] << 17;
    s[2] ^= s[0];
    s[3] ^= s[1];
    s[1] ^= s[2];
    s[0] ^= s[3];
    s[2] ^= t;
    s[3] = s[3].rotate_left(45);
    result
}
