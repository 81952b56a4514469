//! BPSK modulation, AWGN with JSCC-consistent SNR accounting, channel LLRs,
//! and a BSC model for analytic cross-checks.
//!
//! Energy convention: BPSK symbols have unit energy and `sigma` absorbs all
//! SNR scaling, so the channel LLR is literally `2y/sigma^2`. `E_s` is energy
//! per *source digit*: one channel symbol carries `rate = k/m` source digits,
//! hence symbol-level SNR is `rate * (E_s/N_0)` and
//! `sigma^2 = 1 / (2 * rate * 10^(es_n0_db/10))`.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::bitcore::ParityBlock;

/// BPSK-AWGN channel at one operating point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AwgnChannel {
    sigma: f64,
    es_n0_db: f64,
    rate: f64,
}

impl AwgnChannel {
    /// Builds the channel from energy-per-source-digit SNR (dB) and the code
    /// rate in source digits per channel use.
    pub fn from_esn0(es_n0_db: f64, rate: f64) -> Self {
        Self {
            sigma: sigma_from_esn0(es_n0_db, rate),
            es_n0_db,
            rate,
        }
    }

    /// Noise standard deviation per real dimension.
    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn es_n0_db(&self) -> f64 {
        self.es_n0_db
    }

    pub fn rate(&self) -> f64 {
        self.rate
    }
}

/// Binary symmetric channel with crossover probability in `(0, 1/2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BscChannel {
    epsilon: f64,
}

impl BscChannel {
    pub fn new(epsilon: f64) -> Self {
        assert!(
            epsilon > 0.0 && epsilon < 0.5,
            "crossover probability must lie in (0, 0.5), got {epsilon}"
        );
        Self { epsilon }
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Log-likelihood ratios `ln(P(y|0)/P(y|1))` in nats for one parity block.
#[derive(Debug, Clone, PartialEq)]
pub struct LlrBlock {
    llrs: Vec<f64>,
}

impl LlrBlock {
    pub fn new(llrs: Vec<f64>) -> Self {
        Self { llrs }
    }

    pub fn llrs(&self) -> &[f64] {
        &self.llrs
    }

    pub fn len(&self) -> usize {
        self.llrs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.llrs.is_empty()
    }
}

/// Noise standard deviation for a given energy-per-source-digit SNR:
/// `sigma = sqrt(1 / (2 * rate * 10^(es_n0_db/10)))` with unit-energy symbols.
pub fn sigma_from_esn0(es_n0_db: f64, rate: f64) -> f64 {
    assert!(rate > 0.0, "rate must be positive, got {rate}");
    (1.0 / (2.0 * rate * 10f64.powf(es_n0_db / 10.0))).sqrt()
}

/// Transmits one parity block: maps bit 0 to +1 and bit 1 to -1, then adds
/// i.i.d. Gaussian noise of variance `sigma^2`.
pub fn bpsk_awgn_transmit(block: &ParityBlock, ch: &AwgnChannel, rng: &mut impl Rng) -> Vec<f64> {
    block
        .bits()
        .iter()
        .map(|&x| {
            let noise: f64 = rng.sample(StandardNormal);
            (1.0 - 2.0 * f64::from(x)) + ch.sigma * noise
        })
        .collect()
}

/// Channel LLRs for received samples: `llr_j = 2*y_j / sigma^2`.
pub fn awgn_llr(received: &[f64], ch: &AwgnChannel) -> LlrBlock {
    let scale = 2.0 / (ch.sigma * ch.sigma);
    LlrBlock::new(received.iter().map(|&y| scale * y).collect())
}

/// Transition probability of the BSC: `epsilon` if the bits differ, else
/// `1 - epsilon`.
pub fn bsc_transition(x: u8, y: u8, ch: &BscChannel) -> f64 {
    if x == y {
        1.0 - ch.epsilon
    } else {
        ch.epsilon
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitcore::RngState;

    #[test]
    fn sigma_closed_forms() {
        assert!((sigma_from_esn0(0.0, 1.0) - 1.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((sigma_from_esn0(0.0, 0.5) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sigma_round_trips_through_esn0() {
        for &(db, rate) in &[(-3.0, 0.25), (0.0, 1.0), (4.7, 1.5), (12.0, 0.5)] {
            let sigma = sigma_from_esn0(db, rate);
            let back = 10.0 * (1.0 / (2.0 * rate * sigma * sigma)).log10();
            assert!((back - db).abs() < 1e-12, "round trip at {db} dB");
        }
    }

    #[test]
    fn sigma_monotone_in_snr_and_rate() {
        let mut prev = f64::INFINITY;
        for i in 0..50 {
            let s = sigma_from_esn0(-10.0 + i as f64 * 0.5, 1.0);
            assert!(s < prev);
            prev = s;
        }
        let mut prev = f64::INFINITY;
        for i in 1..50 {
            let s = sigma_from_esn0(0.0, i as f64 * 0.1);
            assert!(s < prev);
            prev = s;
        }
    }

    #[test]
    fn noiseless_limit_reproduces_symbols() {
        let ch = AwgnChannel::from_esn0(120.0, 1.0);
        let block = ParityBlock::new(vec![0, 1, 0]);
        let y = bpsk_awgn_transmit(&block, &ch, &mut RngState::new(1).rng());
        assert!((y[0] - 1.0).abs() < 1e-3);
        assert!((y[1] + 1.0).abs() < 1e-3);
        assert!((y[2] - 1.0).abs() < 1e-3);
    }

    #[test]
    fn transmit_is_deterministic() {
        let ch = AwgnChannel::from_esn0(2.0, 1.0);
        let block = ParityBlock::new(vec![1, 0, 1, 1, 0, 0, 1, 0]);
        let state = RngState::new(55).with_stream(3);
        let a = bpsk_awgn_transmit(&block, &ch, &mut state.rng());
        let b = bpsk_awgn_transmit(&block, &ch, &mut state.rng());
        assert_eq!(a, b);
    }

    #[test]
    fn noise_moments_match_gaussian() {
        // 3-sigma bands for 1e6 samples: mean 1 +- 0.004, variance 1 +- 0.01
        let ch = AwgnChannel::from_esn0(-10.0 * (2.0f64).log10(), 1.0); // sigma = 1
        assert!((ch.sigma() - 1.0).abs() < 1e-12);
        let block = ParityBlock::zero(1_000_000);
        let y = bpsk_awgn_transmit(&block, &ch, &mut RngState::new(17).rng());
        let n = y.len() as f64;
        let mean = y.iter().sum::<f64>() / n;
        let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!((mean - 1.0).abs() < 0.004, "mean {mean}");
        assert!((var - 1.0).abs() < 0.01, "variance {var}");
    }

    #[test]
    fn llr_formula_and_sign() {
        let ch = AwgnChannel::from_esn0(-10.0 * (2.0f64).log10(), 1.0); // sigma = 1
        let llr = awgn_llr(&[0.0, 1.0, -0.3], &ch);
        assert_eq!(llr.llrs()[0], 0.0);
        assert!((llr.llrs()[1] - 2.0).abs() < 1e-12);
        for (&y, &l) in [0.4f64, -2.0, 1e-9, -1e-9].iter().zip(
            awgn_llr(&[0.4, -2.0, 1e-9, -1e-9], &ch).llrs(),
        ) {
            assert_eq!(l.signum(), y.signum());
        }
    }

    #[test]
    fn hard_decisions_recover_block_as_noise_vanishes() {
        let ch = AwgnChannel::from_esn0(60.0, 1.0);
        let bits: Vec<u8> = (0..64).map(|i| (i % 3 == 0) as u8).collect();
        let block = ParityBlock::new(bits.clone());
        let y = bpsk_awgn_transmit(&block, &ch, &mut RngState::new(5).rng());
        let llr = awgn_llr(&y, &ch);
        let decided: Vec<u8> = llr.llrs().iter().map(|&l| u8::from(l < 0.0)).collect();
        assert_eq!(decided, bits);
    }

    #[test]
    fn bsc_transition_values() {
        let ch = BscChannel::new(0.11);
        assert!((bsc_transition(0, 0, &ch) - 0.89).abs() < 1e-15);
        assert!((bsc_transition(0, 1, &ch) - 0.11).abs() < 1e-15);
        // output symmetry: P(y|1) = P(flip(y)|0) for all pairs
        for y in [0u8, 1] {
            assert_eq!(bsc_transition(1, y, &ch), bsc_transition(0, 1 - y, &ch));
        }
    }

    #[test]
    #[should_panic(expected = "crossover probability")]
    fn bsc_rejects_half() {
        BscChannel::new(0.5);
    }

    /// Two-sample Kolmogorov-Smirnov statistic.
    fn ks_statistic(mut a: Vec<f64>, mut b: Vec<f64>) -> f64 {
        a.sort_by(|x, y| x.partial_cmp(y).unwrap());
        b.sort_by(|x, y| x.partial_cmp(y).unwrap());
        let (n, m) = (a.len(), b.len());
        let (mut i, mut j, mut d) = (0usize, 0usize, 0f64);
        while i < n && j < m {
            if a[i] <= b[j] {
                i += 1;
            } else {
                j += 1;
            }
            d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
        }
        d
    }

    #[test]
    fn llr_density_is_output_symmetric() {
        // Empirical LLR distribution given x=1 must equal the reflection of
        // the distribution given x=0 (BIOS condition). Two-sample KS test at
        // the 1% level: D < 1.628 * sqrt((n+m)/(n*m)).
        let ch = AwgnChannel::from_esn0(0.0, 1.0);
        let n = 100_000usize;
        let zeros = ParityBlock::zero(n);
        let ones = ParityBlock::new(vec![1; n]);
        let y0 = bpsk_awgn_transmit(&zeros, &ch, &mut RngState::new(90).with_stream(0).rng());
        let y1 = bpsk_awgn_transmit(&ones, &ch, &mut RngState::new(90).with_stream(1).rng());
        let l0 = awgn_llr(&y0, &ch).llrs().to_vec();
        let l1: Vec<f64> = awgn_llr(&y1, &ch).llrs().iter().map(|&l| -l).collect();
        let d = ks_statistic(l0, l1);
        let critical = 1.628 * ((n + n) as f64 / (n * n) as f64).sqrt();
        assert!(d < critical, "KS statistic {d} exceeds 1% critical value {critical}");
    }
}
