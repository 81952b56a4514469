//! Closed-form and numeric analysis for binary-input output-symmetric (BIOS)
//! channels: partial mutual information, random-coding error exponents, BPSK
//! capacity, the self-consistent system capacity of the JSCC scheme, and the
//! genie-aided BER lower bound with its Monte-Carlo oracle.
//!
//! Internal expectations are computed in nats; mutual informations and
//! capacities are exposed in bits, exponents in nats. Continuous-output sums
//! become Gauss-Hermite quadrature against the conditional Gaussian densities,
//! evaluated at the requested order and at twice that order as a convergence
//! check.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex, OnceLock};

use gauss_quad::GaussHermite;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::bitcore::{binary_entropy, RngState};

/// Default quadrature order; the convergence check runs at twice this.
///
/// The BPSK integrands have complex poles within ~1.1*sigma of the real
/// axis, which slows Gauss-Hermite convergence around sigma ~ 0.4; order 256
/// is the smallest power of two whose doubling check stays within the 1e-9
/// tolerance across the whole SNR range.
pub const DEFAULT_QUADRATURE_ORDER: usize = 256;

const QUADRATURE_TOL: f64 = 1e-9;
const FIXED_POINT_TOL: f64 = 1e-9;
const FIXED_POINT_MAX_ITERS: u32 = 200;
const GOLDEN_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum AnalysisError {
    /// Successive quadrature orders disagree beyond tolerance.
    QuadratureNonConvergence { order: usize, delta: f64 },
    /// The system-capacity fixed point did not settle.
    FixedPointNonConvergence { iterations: u32 },
    /// A generator row of weight zero makes its source bit undecodable.
    ZeroRowWeight { index: usize },
}

impl fmt::Display for AnalysisError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AnalysisError::QuadratureNonConvergence { order, delta } => write!(
                f,
                "quadrature failed to converge: orders {order} and {} differ by {delta:.3e}",
                2 * order
            ),
            AnalysisError::FixedPointNonConvergence { iterations } => {
                write!(f, "rate fixed point did not converge in {iterations} iterations")
            }
            AnalysisError::ZeroRowWeight { index } => {
                write!(f, "generator row {index} has weight zero (undecodable source bit)")
            }
        }
    }
}

impl std::error::Error for AnalysisError {}

// ---------------------------------------------------------------------------
// BIOS channel abstraction
// ---------------------------------------------------------------------------

/// The two BIOS channel families the analysis supports.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BiosKind {
    Bsc { epsilon: f64 },
    BpskAwgn { sigma: f64 },
}

/// A BIOS channel plus the quadrature order used for continuous outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BiosChannelSpec {
    kind: BiosKind,
    quadrature_order: usize,
}

impl BiosChannelSpec {
    pub fn new(kind: BiosKind, quadrature_order: usize) -> Self {
        match kind {
            BiosKind::Bsc { epsilon } => {
                assert!(
                    epsilon > 0.0 && epsilon < 0.5,
                    "BSC crossover must lie in (0, 0.5), got {epsilon}"
                );
            }
            BiosKind::BpskAwgn { sigma } => {
                assert!(sigma > 0.0, "noise deviation must be positive, got {sigma}");
            }
        }
        assert!(
            quadrature_order >= 16,
            "quadrature order must be at least 16, got {quadrature_order}"
        );
        Self {
            kind,
            quadrature_order,
        }
    }

    pub fn bsc(epsilon: f64) -> Self {
        Self::new(BiosKind::Bsc { epsilon }, DEFAULT_QUADRATURE_ORDER)
    }

    pub fn bpsk_awgn(sigma: f64) -> Self {
        Self::new(BiosKind::BpskAwgn { sigma }, DEFAULT_QUADRATURE_ORDER)
    }

    /// BPSK-AWGN channel given per-symbol SNR `E_sym/N_0` in dB.
    pub fn bpsk_symbol_snr_db(snr_db: f64) -> Self {
        let sigma = (1.0 / (2.0 * 10f64.powf(snr_db / 10.0))).sqrt();
        Self::bpsk_awgn(sigma)
    }

    pub fn kind(&self) -> BiosKind {
        self.kind
    }

    /// Expectation of `f(llr(Y))` given channel input 0, where
    /// `llr(y) = ln(P(y|0)/P(y|1))`. Continuous outputs are integrated at the
    /// configured order and rechecked at twice that order.
    fn expect_llr_given_zero(&self, f: impl Fn(f64) -> f64) -> Result<f64, AnalysisError> {
        match self.kind {
            BiosKind::Bsc { epsilon } => {
                let lambda = ((1.0 - epsilon) / epsilon).ln();
                Ok((1.0 - epsilon) * f(lambda) + epsilon * f(-lambda))
            }
            BiosKind::BpskAwgn { sigma } => {
                let coarse = gauss_hermite_expect(self.quadrature_order, sigma, &f);
                let fine = gauss_hermite_expect(2 * self.quadrature_order, sigma, &f);
                let delta = (fine - coarse).abs();
                // NaN deltas also land here rather than leaking through
                if !(delta <= QUADRATURE_TOL) {
                    return Err(AnalysisError::QuadratureNonConvergence {
                        order: self.quadrature_order,
                        delta,
                    });
                }
                Ok(fine)
            }
        }
    }
}

fn hermite_rule(order: usize) -> Arc<GaussHermite> {
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussHermite>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut cache = cache.lock().unwrap();
    cache
        .entry(order)
        .or_insert_with(|| Arc::new(GaussHermite::new(order).expect("order >= 2")))
        .clone()
}

/// `E[f(2Y/sigma^2)]` with `Y ~ N(+1, sigma^2)`: substitute
/// `y = 1 + sqrt(2)*sigma*t` to integrate against `exp(-t^2)`.
fn gauss_hermite_expect(order: usize, sigma: f64, f: &impl Fn(f64) -> f64) -> f64 {
    let rule = hermite_rule(order);
    let scale = 2.0 / (sigma * sigma);
    let spread = std::f64::consts::SQRT_2 * sigma;
    let sum: f64 = rule
        .as_node_weight_pairs()
        .iter()
        .map(|&(t, w)| w * f(scale * (1.0 + spread * t)))
        .sum();
    sum / std::f64::consts::PI.sqrt()
}

/// Numerically stable `ln((1-p) + p*exp(-x))`.
///
/// The endpoint branches keep the extremes exact: interior `p` never
/// underflows to `ln(0)` because the dominant mixture term is bounded below
/// by `1-p` (or by `p` after factoring out `e^{-x}`).
fn ln_mix(p: f64, x: f64) -> f64 {
    if p == 0.0 {
        0.0
    } else if p == 1.0 {
        -x
    } else if x >= 0.0 {
        ((1.0 - p) + p * (-x).exp()).ln()
    } else {
        -x + ((1.0 - p) * x.exp() + p).ln()
    }
}

// ---------------------------------------------------------------------------
// Elementary functions
// ---------------------------------------------------------------------------

/// Upper-tail probability of the standard Gaussian, via the complementary
/// error function.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// Success probability of the XOR of `omega` i.i.d. Bernoulli(`rho`) bits:
/// `(1 - (1 - 2*rho)^omega) / 2`.
pub fn rho_omega(rho: f64, omega: u32) -> f64 {
    assert!((0.0..=0.5).contains(&rho), "rho must lie in [0, 0.5]");
    assert!(omega >= 1, "omega must be positive");
    (1.0 - (1.0 - 2.0 * rho).powi(omega as i32)) / 2.0
}

/// `E_b/N_0 = E_s/N_0 - 10*log10(H(theta))` in dB. `E_b` is energy per
/// nonredundant information bit; the two coincide for the uniform source.
pub fn esn0_to_ebn0(es_n0_db: f64, theta: f64) -> f64 {
    assert!(
        theta > 0.0 && theta <= 0.5,
        "theta must lie in (0, 0.5], got {theta}"
    );
    es_n0_db - 10.0 * binary_entropy(theta).log10()
}

// ---------------------------------------------------------------------------
// Partial mutual information and error exponents
// ---------------------------------------------------------------------------

/// Mutual information split by channel input under input distribution
/// `(1-p, p)`, all in bits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartialMutualInformation {
    /// `I_0(p) = sum_y P(y|0) log(P(y|0)/P(y))`.
    pub i0: f64,
    /// `I_1(p) = sum_y P(y|1) log(P(y|1)/P(y))`.
    pub i1: f64,
    /// `I(p) = (1-p) I_0(p) + p I_1(p)`.
    pub i: f64,
}

/// Computes the partial mutual informations for input distribution
/// `(1-p, p)`.
///
/// With `P(y) = (1-p)P(y|0) + p P(y|1)` and `llr = ln(P(y|0)/P(y|1))`, the
/// integrands reduce to `-ln((1-p) + p e^{-llr})` under input 0 and its
/// reflection under input 1, which is what gets integrated.
pub fn partial_mutual_information(
    p: f64,
    ch: &BiosChannelSpec,
) -> Result<PartialMutualInformation, AnalysisError> {
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1], got {p}");
    let ln2 = std::f64::consts::LN_2;
    let i0 = ch.expect_llr_given_zero(|l| -ln_mix(p, l))? / ln2;
    // under input 1 the llr density reflects, so I1 is the same expectation
    // with the roles of the inputs swapped
    let i1 = ch.expect_llr_given_zero(|l| -ln_mix(1.0 - p, l))? / ln2;
    Ok(PartialMutualInformation {
        i0,
        i1,
        i: (1.0 - p) * i0 + p * i1,
    })
}

/// Gallager-style exponent integrand maximand
/// `E_0(gamma, p) = -log sum_y P(y|0)^{1/(1+gamma)} [(1-p)P(y|0)^{1/(1+gamma)}
/// + p P(y|1)^{1/(1+gamma)}]^gamma`, in nats.
pub fn gallager_e0(gamma: f64, p: f64, ch: &BiosChannelSpec) -> Result<f64, AnalysisError> {
    assert!((0.0..=1.0).contains(&gamma), "gamma must lie in [0, 1]");
    assert!((0.0..=1.0).contains(&p), "p must lie in [0, 1]");
    let s = 1.0 / (1.0 + gamma);
    // Factoring P(y|0) out of the bracket turns the sum into an expectation
    // over P(y|0) of ((1-p) + p e^{-s*llr})^gamma.
    let expectation = ch.expect_llr_given_zero(|l| (gamma * ln_mix(p, s * l)).exp())?;
    Ok(-expectation.ln())
}

/// Result of maximizing `E_0(gamma, p) - gamma R` over `gamma in [0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExponentResult {
    /// `E(p, R)` in nats; zero when `R >= I_0(p)`.
    pub value: f64,
    pub argmax_gamma: f64,
}

/// Partial error exponent `E(p, R) = max_{0<=gamma<=1} (E_0(gamma,p) - gamma R)`
/// with `R` in nats per symbol.
///
/// For biased `p` this `E_0` is not concave in `gamma` (the asymmetric outer
/// exponent breaks the classical random-coding concavity), so the maximizer
/// first brackets the best region on a coarse grid and only then refines by
/// golden-section search.
pub fn error_exponent(
    p: f64,
    rate_nats: f64,
    ch: &BiosChannelSpec,
) -> Result<ExponentResult, AnalysisError> {
    assert!(rate_nats >= 0.0, "rate must be nonnegative");
    let objective = |gamma: f64| -> Result<f64, AnalysisError> {
        Ok(gallager_e0(gamma, p, ch)? - gamma * rate_nats)
    };

    const GRID: usize = 32;
    let mut best_idx = 0;
    let mut best_val = 0.0f64; // objective(0) is exactly zero
    for idx in 1..=GRID {
        let val = objective(idx as f64 / GRID as f64)?;
        if val > best_val {
            best_val = val;
            best_idx = idx;
        }
    }

    // Golden-section refinement inside the bracketing cells.
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut lo = (best_idx.saturating_sub(1)) as f64 / GRID as f64;
    let mut hi = ((best_idx + 1).min(GRID)) as f64 / GRID as f64;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = objective(x1)?;
    let mut f2 = objective(x2)?;
    while hi - lo > GOLDEN_TOL {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = objective(x2)?;
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = objective(x1)?;
        }
    }
    let gamma_star = 0.5 * (lo + hi);
    let f_star = objective(gamma_star)?;
    let f_one = objective(1.0)?;

    // The objective vanishes at gamma = 0, so maxima at or below the
    // numerical noise floor collapse to the zero-exponent answer; at the
    // other end, prefer the exact gamma = 1 endpoint when it dominates.
    const FLOOR: f64 = 1e-12;
    if f_star.max(f_one) <= FLOOR {
        return Ok(ExponentResult {
            value: 0.0,
            argmax_gamma: 0.0,
        });
    }
    if f_one >= f_star {
        return Ok(ExponentResult {
            value: f_one,
            argmax_gamma: 1.0,
        });
    }
    Ok(ExponentResult {
        value: f_star,
        argmax_gamma: gamma_star,
    })
}

// ---------------------------------------------------------------------------
// Capacities
// ---------------------------------------------------------------------------

/// Mutual information of BPSK over AWGN at uniform input, in bits per channel
/// use, for the given per-symbol SNR in dB.
pub fn bpsk_awgn_capacity(symbol_snr_db: f64) -> Result<f64, AnalysisError> {
    let ch = BiosChannelSpec::bpsk_symbol_snr_db(symbol_snr_db);
    Ok(partial_mutual_information(0.5, &ch)?.i)
}

/// System capacity in source digits per channel use: the largest rate `R`
/// satisfying `R = C(R * Es/N0) / H(theta)`, where the symbol SNR scales with
/// `R` because `E_s` is accounted per source digit.
///
/// A damped fixed-point iteration `R <- (R + C(R*esn0)/H)/2` from `R = 1` is
/// the fast path. Its contraction factor degrades to 1 as `Es/N0` approaches
/// the wideband limit `H(theta)*ln 2` (where the positive fixed point merges
/// with zero), so on iteration-budget exhaustion the largest root is bisected
/// instead; `R -> C(R*esn0)/H` is increasing and concave in `R`, which makes
/// the sign change unique.
pub fn system_capacity(theta: f64, es_n0_db: f64) -> Result<f64, AnalysisError> {
    assert!(
        theta > 0.0 && theta <= 0.5,
        "theta must lie in (0, 0.5], got {theta}"
    );
    let h = binary_entropy(theta);
    let esn0 = 10f64.powf(es_n0_db / 10.0);
    let g = |rate: f64| -> Result<f64, AnalysisError> {
        let symbol_snr = rate * esn0;
        if symbol_snr <= 0.0 {
            return Ok(0.0);
        }
        Ok(bpsk_awgn_capacity(10.0 * symbol_snr.log10())? / h)
    };

    // Rates below the solver resolution collapse to exactly zero.
    let snap = |rate: f64| if rate < 100.0 * FIXED_POINT_TOL { 0.0 } else { rate };

    let mut rate = 1.0f64;
    for _ in 0..FIXED_POINT_MAX_ITERS {
        let next = 0.5 * (rate + g(rate)?);
        let step = (next - rate).abs();
        rate = next;
        if step < FIXED_POINT_TOL {
            return Ok(snap(rate));
        }
    }

    // Near-critical SNR: fall back to bisection for the largest fixed point.
    let probe = 1e-6;
    if g(probe)? <= probe {
        // slope at the origin is at most one: R = 0 is the only fixed point
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (probe, 1.0 / h + 1.0);
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if g(mid)? >= mid {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < FIXED_POINT_TOL {
            return Ok(snap(0.5 * (lo + hi)));
        }
    }
    Err(AnalysisError::FixedPointNonConvergence {
        iterations: FIXED_POINT_MAX_ITERS,
    })
}

// ---------------------------------------------------------------------------
// Genie-aided BER lower bound
// ---------------------------------------------------------------------------

/// Error probability of the MAP-decoded length-`omega` repetition code on
/// BPSK-AWGN with source prior `theta`:
/// `(1-theta) Q(sqrt(w)/sigma + sigma*ln((1-theta)/theta)/(2 sqrt(w)))
///  + theta Q(sqrt(w)/sigma - sigma*ln((1-theta)/theta)/(2 sqrt(w)))`.
pub fn p_theta_w(theta: f64, omega: u32, sigma: f64) -> f64 {
    assert!((0.0..=0.5).contains(&theta), "theta must lie in [0, 0.5]");
    assert!(omega >= 1, "omega must be positive");
    assert!(sigma > 0.0, "sigma must be positive");
    if theta == 0.0 {
        return 0.0;
    }
    let w = f64::from(omega);
    let a = w.sqrt() / sigma;
    let b = sigma * ((1.0 - theta) / theta).ln() / (2.0 * w.sqrt());
    (1.0 - theta) * q_function(a + b) + theta * q_function(a - b)
}

/// Genie-aided BER lower bound for a linear code with the given generator row
/// weights: `(1/k) * sum_i P_{theta,W}(theta, w_i)`. Each bit is lower-bounded
/// by the repetition code of length equal to its row weight.
pub fn ber_lower_bound(weights: &[u32], theta: f64, sigma: f64) -> Result<f64, AnalysisError> {
    if let Some(index) = weights.iter().position(|&w| w == 0) {
        return Err(AnalysisError::ZeroRowWeight { index });
    }
    let sum: f64 = weights
        .iter()
        .map(|&w| p_theta_w(theta, w, sigma))
        .sum();
    Ok(sum / weights.len() as f64)
}

/// One `(E_s/N_0, BER lower bound)` curve.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundCurve {
    pub rows: Vec<BoundPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundPoint {
    pub es_n0_db: f64,
    pub ber_lower_bound: f64,
}

/// Evaluates the genie-aided bound over an SNR grid for a code with the given
/// realized row weights and rate.
pub fn bound_curve(
    weights: &[u32],
    theta: f64,
    rate: f64,
    esn0_db_list: &[f64],
) -> Result<BoundCurve, AnalysisError> {
    let rows = esn0_db_list
        .iter()
        .map(|&es| {
            let sigma = crate::channel::sigma_from_esn0(es, rate);
            Ok(BoundPoint {
                es_n0_db: es,
                ber_lower_bound: ber_lower_bound(weights, theta, sigma)?,
            })
        })
        .collect::<Result<_, AnalysisError>>()?;
    Ok(BoundCurve { rows })
}

/// Monte-Carlo BER of the length-`omega` repetition code under the MAP rule:
/// decide 0 iff `(2/sigma^2) * sum_j y_j + ln((1-theta)/theta) > 0` (prior
/// enters additively; ties decide 0), with the source bit Bernoulli(`theta`).
///
/// This is the independent oracle for [`p_theta_w`].
pub fn genie_repetition_ber(
    theta: f64,
    omega: u32,
    sigma: f64,
    trials: u64,
    rng_state: &RngState,
) -> f64 {
    assert!((0.0..=0.5).contains(&theta), "theta must lie in [0, 0.5]");
    assert!(omega >= 1, "omega must be positive");
    assert!(sigma > 0.0 && trials >= 1, "need positive sigma and trials");
    let mut rng = rng_state.rng();
    let prior = if theta == 0.0 {
        f64::INFINITY
    } else {
        ((1.0 - theta) / theta).ln()
    };
    let scale = 2.0 / (sigma * sigma);
    let mut errors = 0u64;
    for _ in 0..trials {
        let bit = rng.gen::<f64>() < theta;
        let symbol = if bit { -1.0 } else { 1.0 };
        let mut sum = 0.0;
        for _ in 0..omega {
            let noise: f64 = rng.sample(StandardNormal);
            sum += symbol + sigma * noise;
        }
        let decided_one = scale * sum + prior < 0.0;
        if decided_one != bit {
            errors += 1;
        }
    }
    errors as f64 / trials as f64
}
