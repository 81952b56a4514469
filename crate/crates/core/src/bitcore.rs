//! Binary-block primitives, the Bernoulli source model, and the seeded
//! randomness contract shared by all modules.
//!
//! Blocks store one bit per byte: encoding with column-weight-1 submatrices is
//! gather-dominated and the decoder needs per-bit LLR access, so packed words
//! buy nothing here.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One length-k block of source bits for a single time slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceBlock {
    bits: Vec<u8>,
}

impl SourceBlock {
    /// Wraps a bit vector. Every element must be 0 or 1.
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "source bits must be 0 or 1");
        Self { bits }
    }

    /// All-zero block of length `k`.
    pub fn zero(k: usize) -> Self {
        Self { bits: vec![0; k] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }
}

/// One length-m block of parity bits for a single time slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParityBlock {
    bits: Vec<u8>,
}

impl ParityBlock {
    /// Wraps a bit vector. Every element must be 0 or 1.
    pub fn new(bits: Vec<u8>) -> Self {
        assert!(bits.iter().all(|&b| b <= 1), "parity bits must be 0 or 1");
        Self { bits }
    }

    /// All-zero block of length `m`.
    pub fn zero(m: usize) -> Self {
        Self { bits: vec![0; m] }
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }
}

/// An i.i.d. Bernoulli source with success probability `theta`.
///
/// `theta` is restricted to `[0, 1/2]`; a source with `theta > 1/2` is
/// equivalent under a global bit flip and is rejected to avoid ambiguity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceModel {
    theta: f64,
}

impl SourceModel {
    pub fn new(theta: f64) -> Self {
        assert!(
            (0.0..=0.5).contains(&theta),
            "theta must lie in [0, 0.5], got {theta}"
        );
        Self { theta }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    /// Source prior expressed as an LLR `ln((1-theta)/theta)` in nats.
    ///
    /// Returns `+inf` for the deterministic source `theta = 0` and exactly `0`
    /// for the uniform source.
    pub fn prior_llr(&self) -> f64 {
        if self.theta == 0.0 {
            f64::INFINITY
        } else {
            ((1.0 - self.theta) / self.theta).ln()
        }
    }
}

/// Seed plus stream identifier for reproducible, splittable randomness.
///
/// The same `(seed, stream)` pair yields bit-identical draws across runs and
/// platforms; distinct streams are statistically independent, so parallel
/// trials each derive their own stream and never share generator state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub stream: u64,
}

impl RngState {
    pub fn new(seed: u64) -> Self {
        Self { seed, stream: 0 }
    }

    /// Same seed, different stream.
    pub fn with_stream(&self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    /// Instantiates the generator for this state.
    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Draws one length-`k` source block, each bit independently 1 with
/// probability `model.theta()`.
pub fn sample_source_block(model: &SourceModel, k: usize, rng: &mut impl Rng) -> SourceBlock {
    assert!(k >= 1, "block length must be positive");
    let theta = model.theta();
    let bits = (0..k)
        .map(|_| u8::from(rng.gen::<f64>() < theta))
        .collect();
    SourceBlock { bits }
}

/// Binary entropy `H(theta) = -theta*log2(theta) - (1-theta)*log2(1-theta)`
/// in bits, with `0*log 0 := 0`.
pub fn binary_entropy(theta: f64) -> f64 {
    assert!(
        (0.0..=1.0).contains(&theta),
        "entropy argument must lie in [0, 1], got {theta}"
    );
    let term = |p: f64| if p == 0.0 { 0.0 } else { -p * p.log2() };
    term(theta) + term(1.0 - theta)
}

/// Number of ones in a bit vector.
pub fn hamming_weight(bits: &[u8]) -> usize {
    bits.iter().filter(|&&b| b != 0).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_theta_yields_all_zero_block() {
        let model = SourceModel::new(0.0);
        let mut rng = RngState::new(7).rng();
        let block = sample_source_block(&model, 8, &mut rng);
        assert_eq!(block.bits(), &[0u8; 8]);
    }

    #[test]
    fn uniform_source_ones_fraction() {
        let model = SourceModel::new(0.5);
        let mut rng = RngState::new(42).rng();
        let block = sample_source_block(&model, 1_000_000, &mut rng);
        let frac = hamming_weight(block.bits()) as f64 / 1e6;
        assert!((frac - 0.5).abs() < 0.002, "ones fraction {frac}");
    }

    #[test]
    fn sparse_source_ones_fraction() {
        // 3-sigma binomial band: 0.125 +- 3*sqrt(0.125*0.875/1e6) ~= 0.125 +- 0.001
        let model = SourceModel::new(0.125);
        let mut rng = RngState::new(9).rng();
        let block = sample_source_block(&model, 1_000_000, &mut rng);
        let frac = hamming_weight(block.bits()) as f64 / 1e6;
        assert!((frac - 0.125).abs() < 0.001, "ones fraction {frac}");
    }

    #[test]
    fn sampling_is_deterministic_per_state() {
        let model = SourceModel::new(0.3);
        let state = RngState::new(123).with_stream(5);
        let a = sample_source_block(&model, 4096, &mut state.rng());
        let b = sample_source_block(&model, 4096, &mut state.rng());
        assert_eq!(a, b);
        let c = sample_source_block(&model, 4096, &mut state.with_stream(6).rng());
        assert_ne!(a, c);
    }

    #[test]
    fn entropy_known_values() {
        assert_eq!(binary_entropy(0.5), 1.0);
        assert_eq!(binary_entropy(0.0), 0.0);
        assert_eq!(binary_entropy(1.0), 0.0);
        // direct closed-form evaluation at theta = 1/8
        assert!((binary_entropy(0.125) - 0.543564443199596).abs() < 1e-15);
    }

    #[test]
    fn entropy_symmetric_and_concave() {
        for i in 1..100 {
            let t = i as f64 / 100.0;
            assert!((binary_entropy(t) - binary_entropy(1.0 - t)).abs() < 1e-12);
        }
        for i in 1..50 {
            for j in (i + 1)..50 {
                let a = i as f64 / 100.0;
                let b = j as f64 / 100.0;
                let mid = binary_entropy(0.5 * (a + b));
                let avg = 0.5 * (binary_entropy(a) + binary_entropy(b));
                assert!(mid >= avg - 1e-12, "concavity violated at ({a}, {b})");
            }
        }
    }

    #[test]
    #[should_panic(expected = "entropy argument")]
    fn entropy_rejects_out_of_range() {
        binary_entropy(1.5);
    }

    #[test]
    #[should_panic(expected = "theta must lie in")]
    fn source_model_rejects_biased_above_half() {
        SourceModel::new(0.75);
    }

    #[test]
    fn hamming_weight_counts() {
        assert_eq!(hamming_weight(&[0; 16]), 0);
        assert_eq!(hamming_weight(&[1; 16]), 16);
        assert_eq!(hamming_weight(&[1, 0, 1, 1, 0]), 3);
    }

    #[test]
    fn prior_llr_edges() {
        assert_eq!(SourceModel::new(0.5).prior_llr(), 0.0);
        assert!(SourceModel::new(0.0).prior_llr().is_infinite());
        let l = SourceModel::new(0.125).prior_llr();
        assert!((l - (0.875f64 / 0.125).ln()).abs() < 1e-15);
    }
}
