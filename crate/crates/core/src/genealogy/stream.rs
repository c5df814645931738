use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::UlamLabel;

/// 256-bit key of a `(seed, label)` pair, derived by chained SHA-256.
///
/// `key(seed, ∅) = H(tag || seed)` and `key(seed, uk) = H(key(seed, u) || k)`,
/// so a child's key can be computed from its parent's in constant time.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub struct LabelKey([u8; 32]);

impl LabelKey {
    pub fn root(seed: u64) -> Self {
        let mut h = Sha256::new();
        h.update(b"branchkit/ulam-root/v1");
        h.update(seed.to_le_bytes());
        Self(h.finalize().into())
    }

    pub fn child(&self, k: u32) -> Self {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update(k.to_le_bytes());
        Self(h.finalize().into())
    }

    pub fn for_label(seed: u64, label: &UlamLabel) -> Self {
        label.path().iter().fold(Self::root(seed), |key, &k| key.child(k))
    }

    /// Independent key for an auxiliary purpose (nested sampling, replicate streams...).
    pub fn derive(&self, domain: &[u8], index: u64) -> Self {
        let mut h = Sha256::new();
        h.update(self.0);
        h.update(domain);
        h.update(index.to_le_bytes());
        Self(h.finalize().into())
    }

    pub fn bytes(&self) -> &[u8; 32] {
        &self.0
    }
}

/// Seed of replicate `index` under a master seed.
pub fn replicate_seed(seed: u64, index: u64) -> u64 {
    let key = LabelKey::root(seed).derive(b"replicate", index);
    u64::from_le_bytes(key.0[..8].try_into().expect("8 bytes"))
}

/// Counter-based random stream owned by one individual.
///
/// Output is a pure function of `(seed, label, counter)`: the ChaCha8 keystream
/// under the label key, read from word position `counter`.
#[derive(Clone, Debug)]
pub struct LabelStream {
    seed: u64,
    label: UlamLabel,
    key: LabelKey,
    rng: ChaCha8Rng,
}

impl LabelStream {
    pub fn new(seed: u64, label: UlamLabel) -> Self {
        let key = LabelKey::for_label(seed, &label);
        Self::from_key(seed, label, key)
    }

    /// Stream for a label whose key was derived incrementally.
    pub fn from_key(seed: u64, label: UlamLabel, key: LabelKey) -> Self {
        Self { seed, label, key, rng: ChaCha8Rng::from_seed(key.0) }
    }

    /// Stream repositioned at an arbitrary counter (replay).
    pub fn at(seed: u64, label: UlamLabel, counter: u128) -> Self {
        let mut s = Self::new(seed, label);
        s.rng.set_word_pos(counter);
        s
    }

    /// Auxiliary stream keyed by this stream's key, a domain tag and an index.
    pub fn fork(&self, domain: &[u8], index: u64) -> Self {
        let key = self.key.derive(domain, index);
        Self { seed: self.seed, label: self.label.clone(), key, rng: ChaCha8Rng::from_seed(key.0) }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn label(&self) -> &UlamLabel {
        &self.label
    }

    pub fn key(&self) -> LabelKey {
        self.key
    }

    /// Number of 32-bit words consumed so far.
    pub fn counter(&self) -> u128 {
        self.rng.get_word_pos()
    }

    /// Uniform on the open interval `(0, 1)`.
    #[inline]
    pub fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    /// Standard exponential variate.
    #[inline]
    pub fn exp1(&mut self) -> f64 {
        -self.uniform().ln()
    }

    /// Standard normal variate.
    pub fn normal(&mut self) -> f64 {
        use rand_distr::{Distribution, StandardNormal};
        StandardNormal.sample(self)
    }
}

impl RngCore for LabelStream {
    fn next_u32(&mut self) -> u32 {
        self.rng.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.rng.fill_bytes(dst)
    }
}

/// Stream of label `u` under `seed`.
pub fn stream_for(seed: u64, u: &UlamLabel) -> LabelStream {
    LabelStream::new(seed, u.clone())
}
