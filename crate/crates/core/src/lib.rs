//! Joint source-channel coding with convolutional low-density generator-matrix
//! (LDGM) codes over BPSK-AWGN channels.
//!
//! A sparse Bernoulli source is encoded by a time-invariant convolutional LDGM
//! code whose systematic bits are never transmitted: the receiver sees only the
//! noisy parity stream and recovers the source with an iterative sliding-window
//! belief-propagation decoder seeded by the source prior. The crate bundles
//!
//! - [`bitcore`]: binary-block primitives, the Bernoulli source model, and the
//!   seeded-randomness contract shared by all modules,
//! - [`codebook`]: construction of the column-weight-1 generator submatrices
//!   and the streaming encoder,
//! - [`channel`]: BPSK modulation, AWGN noise with per-source-digit SNR
//!   accounting, channel LLRs, and a BSC model for analytic cross-checks,
//! - [`decoder`]: the sliding-window sum-product decoder,
//! - [`analysis`]: closed-form and numeric analysis (partial mutual
//!   information, random-coding error exponents, BPSK capacity, system
//!   capacity, and the genie-aided BER lower bound),
//! - [`harness`]: Monte-Carlo sweep orchestration with deterministic parallel
//!   execution and CSV emission.
//!
//! The `ldgm-jscc` binary exposes the harness and the analysis routines as CLI
//! subcommands; see the README for usage.

pub mod analysis;
pub mod bitcore;
pub mod channel;
pub mod codebook;
pub mod decoder;
pub mod harness;
