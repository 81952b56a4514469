//! Iterative sliding-window belief propagation over the LDGM generator graph.
//!
//! Every parity bit is a check node joining its channel observation with the
//! `nu + 1` source bits that generated it; source bits are variable nodes
//! initialized with the prior LLR `ln((1-theta)/theta)` because the systematic
//! bits are never transmitted. The decoder runs flooding sum-product passes
//! over a window of `W` consecutive blocks, hard-commits the oldest block,
//! and slides by one; committed bits feed later windows as saturated LLRs,
//! messages persist across slides, and the entering block starts from the
//! prior. Once the window reaches the end of the terminated stream there is
//! no new observation left to wait for, so the final window commits all
//! remaining blocks from the same run.

use std::fmt;

use crate::bitcore::{SourceBlock, SourceModel};
use crate::channel::LlrBlock;
use crate::codebook::SubmatrixSet;

/// Sliding-window schedule parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoderParams {
    /// Window span in blocks; must be at least `nu + 1`.
    pub window_blocks: usize,
    /// Flooding iterations per window position.
    pub iterations_per_position: u32,
    /// Message magnitude cap in nats.
    pub llr_clamp: f64,
    /// Stop iterating a position once hard decisions are stable across three
    /// consecutive iterations. Stopping doubles as damping: long fixed
    /// schedules let short-cycle feedback amplify a wrong belief until a
    /// whole frame derails, so the floor is measurably cleaner with the stop
    /// enabled.
    pub early_stop: bool,
}

impl DecoderParams {
    /// Defaults for a code of memory `nu`: window `2*nu + 1` (decoding delay
    /// `2*nu`), 25 iterations per position, 30-nat clamp, early stop on.
    pub fn for_memory(nu: usize) -> Self {
        Self {
            window_blocks: 2 * nu + 1,
            iterations_per_position: 25,
            llr_clamp: 30.0,
            early_stop: true,
        }
    }

    fn validate(&self, nu: usize) -> Result<(), DecodeError> {
        if self.window_blocks < nu + 1 {
            return Err(DecodeError::WindowTooSmall {
                window: self.window_blocks,
                needed: nu + 1,
            });
        }
        assert!(self.iterations_per_position >= 1, "need at least one iteration");
        assert!(self.llr_clamp > 0.0, "clamp must be positive");
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DecodeError {
    WindowTooSmall { window: usize, needed: usize },
    /// The stream must carry at least `nu + 1` blocks (one data block plus
    /// termination).
    StreamTooShort { blocks: usize, needed: usize },
    BlockLength { block: usize, expected: usize, got: usize },
    NonFiniteLlr { block: usize, index: usize },
}

impl fmt::Display for DecodeError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DecodeError::WindowTooSmall { window, needed } => {
                write!(f, "window of {window} blocks is below the minimum {needed}")
            }
            DecodeError::StreamTooShort { blocks, needed } => {
                write!(f, "LLR stream has {blocks} blocks, need at least {needed}")
            }
            DecodeError::BlockLength {
                block,
                expected,
                got,
            } => write!(f, "LLR block {block} has length {got}, expected {expected}"),
            DecodeError::NonFiniteLlr { block, index } => {
                write!(f, "non-finite channel LLR at block {block}, index {index}")
            }
        }
    }
}

impl std::error::Error for DecodeError {}

/// Static adjacency of the sliding-window factor graph.
///
/// The graph template is time-invariant: the check for parity bit `(t', j)`
/// joins source bits `(t' - i, rows[i][j])` over `i = 0..=nu` (slots falling
/// before the stream or into the all-zero termination drop out), plus one
/// channel observation.
#[derive(Debug, Clone)]
pub struct WindowGraph {
    k: usize,
    m: usize,
    nu: usize,
    /// `check_rows[i][j]`: source row wired to slot `i` of check column `j`.
    check_rows: Vec<Vec<u32>>,
    /// For each source row, the `(i, j)` slots it occupies; its length is the
    /// generator row weight of that bit.
    var_adj: Vec<Vec<(u32, u32)>>,
}

/// Builds the window adjacency from the realized code.
pub fn build_window_graph(
    subs: &SubmatrixSet,
    params: &DecoderParams,
) -> Result<WindowGraph, DecodeError> {
    let spec = subs.spec();
    params.validate(spec.nu)?;
    let check_rows: Vec<Vec<u32>> = (0..=spec.nu).map(|i| subs.rows_of(i).to_vec()).collect();
    let mut var_adj = vec![Vec::new(); spec.k];
    for (i, cols) in check_rows.iter().enumerate() {
        for (j, &r) in cols.iter().enumerate() {
            var_adj[r as usize].push((i as u32, j as u32));
        }
    }
    Ok(WindowGraph {
        k: spec.k,
        m: spec.m,
        nu: spec.nu,
        check_rows,
        var_adj,
    })
}

impl WindowGraph {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn nu(&self) -> usize {
        self.nu
    }

    /// Number of checks each interior occurrence of source row `r` joins.
    pub fn var_degree(&self, r: usize) -> usize {
        self.var_adj[r].len()
    }
}

/// Decoded stream plus per-block scheduling metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub blocks: Vec<SourceBlock>,
    /// Iterations spent at the window position that committed each block.
    pub iterations: Vec<u32>,
    /// Whether hard decisions had stabilized when each block was committed.
    pub converged: Vec<bool>,
}

/// Per-iteration snapshot of the window posteriors, for regression diffing.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceSnapshot {
    pub position: usize,
    pub iteration: u32,
    /// Total LLR of every active source bit, oldest window block first.
    pub totals: Vec<f64>,
}

/// Sum-product update for one generator check: the message to active neighbor
/// `v` is `2*atanh(tanh(channel_llr/2) * prod_{v' != v} tanh(llr_{v'}/2))`,
/// clamped to `llr_clamp`.
pub fn bp_check_update(incoming: &[f64], channel_llr: f64, llr_clamp: f64) -> Vec<f64> {
    let tanhs: Vec<f64> = incoming.iter().map(|&l| (0.5 * l).tanh()).collect();
    let mut out = vec![0.0; incoming.len()];
    check_messages(&tanhs, (0.5 * channel_llr).tanh(), llr_clamp, &mut out);
    out
}

/// Exclusion products via prefix/suffix scans: `out[e] = 2*atanh(fixed *
/// prod_{e' != e} tanhs[e'])`, clamped.
fn check_messages(tanhs: &[f64], fixed: f64, llr_clamp: f64, out: &mut [f64]) {
    debug_assert_eq!(tanhs.len(), out.len());
    let mut prefix = fixed;
    for (o, &t) in out.iter_mut().zip(tanhs) {
        *o = prefix;
        prefix *= t;
    }
    let mut suffix = 1.0;
    for (o, &t) in out.iter_mut().zip(tanhs).rev() {
        *o = (2.0 * (*o * suffix).atanh()).clamp(-llr_clamp, llr_clamp);
        suffix *= t;
    }
}

/// Decodes a terminated LLR stream of `L + nu` blocks into `L` source blocks.
pub fn decode_sliding(
    graph: &WindowGraph,
    llr_stream: &[LlrBlock],
    source: &SourceModel,
    params: &DecoderParams,
) -> Result<DecodeResult, DecodeError> {
    decode_inner(graph, llr_stream, source, params, None)
}

/// As [`decode_sliding`], additionally recording one posterior snapshot per
/// iteration.
pub fn decode_sliding_traced(
    graph: &WindowGraph,
    llr_stream: &[LlrBlock],
    source: &SourceModel,
    params: &DecoderParams,
) -> Result<(DecodeResult, Vec<TraceSnapshot>), DecodeError> {
    let mut trace = Vec::new();
    let result = decode_inner(graph, llr_stream, source, params, Some(&mut trace))?;
    Ok((result, trace))
}

fn decode_inner(
    graph: &WindowGraph,
    llr_stream: &[LlrBlock],
    source: &SourceModel,
    params: &DecoderParams,
    mut trace: Option<&mut Vec<TraceSnapshot>>,
) -> Result<DecodeResult, DecodeError> {
    params.validate(graph.nu)?;
    if llr_stream.len() < graph.nu + 1 {
        return Err(DecodeError::StreamTooShort {
            blocks: llr_stream.len(),
            needed: graph.nu + 1,
        });
    }
    let data_blocks = llr_stream.len() - graph.nu;
    let clamp = params.llr_clamp;
    let mut channel: Vec<Vec<f64>> = Vec::with_capacity(llr_stream.len());
    for (t, block) in llr_stream.iter().enumerate() {
        if block.len() != graph.m {
            return Err(DecodeError::BlockLength {
                block: t,
                expected: graph.m,
                got: block.len(),
            });
        }
        if let Some(index) = block.llrs().iter().position(|l| !l.is_finite()) {
            return Err(DecodeError::NonFiniteLlr { block: t, index });
        }
        channel.push(
            block
                .llrs()
                .iter()
                .map(|&l| (0.5 * l.clamp(-clamp, clamp)).tanh())
                .collect(),
        );
    }

    let (k, m, nu, window) = (graph.k, graph.m, graph.nu, params.window_blocks);
    let slots = nu + 1;
    let prior = source.prior_llr();
    let saturated_tanh = (0.5 * clamp).tanh();

    // Message slot (q, j, i): edge between check (p + q, j) and the source
    // bit wired to its slot i. One flat array per direction.
    let slot_of = |q: usize, j: usize, i: usize| (q * m + j) * slots + i;
    let mut var_to_check = vec![0.0f64; window * m * slots];
    let mut check_to_var = vec![0.0f64; window * m * slots];
    let mut totals = vec![0.0f64; window * k];
    let mut cur_bits = vec![0u8; window * k];
    let mut prev_bits = vec![0u8; window * k];
    let mut tanh_buf = vec![0.0f64; slots];
    let mut active_buf: Vec<usize> = Vec::with_capacity(slots);
    let mut msg_buf = vec![0.0f64; slots];

    let mut decided: Vec<SourceBlock> = Vec::with_capacity(data_blocks);
    let mut iterations = vec![0u32; data_blocks];
    let mut converged = vec![false; data_blocks];

    let init_vc = prior.clamp(-clamp, clamp);
    let block_slots = m * slots;
    let mut position = 0usize;
    let mut entered = false;
    while position < data_blocks {
        // Active spans at this position.
        let parity_span = window.min(llr_stream.len() - position);
        let source_span = window.min(data_blocks - position);
        let flush = position + window >= llr_stream.len();

        // Messages persist across slides (the bulk of the window is already
        // converged); only the entering block starts from the prior.
        if !entered {
            var_to_check[..parity_span * block_slots].fill(init_vc);
            check_to_var[..parity_span * block_slots].fill(0.0);
            entered = true;
        } else {
            let prev_span = window.min(llr_stream.len() - (position - 1));
            var_to_check.copy_within(block_slots..prev_span * block_slots, 0);
            check_to_var.copy_within(block_slots..prev_span * block_slots, 0);
            if parity_span == prev_span {
                let start = (parity_span - 1) * block_slots;
                var_to_check[start..start + block_slots].fill(init_vc);
                check_to_var[start..start + block_slots].fill(0.0);
            }
        }
        let mut iters_used = params.iterations_per_position;
        let mut stable = false;
        let mut stable_streak = 0u32;

        for iteration in 0..params.iterations_per_position {
            // Check pass.
            for q in 0..parity_span {
                let t_parity = position + q;
                let ch_tanhs = &channel[t_parity];
                for j in 0..m {
                    active_buf.clear();
                    let mut fixed = ch_tanhs[j];
                    for i in 0..slots {
                        let Some(t_src) = t_parity.checked_sub(i) else { break };
                        if t_src >= data_blocks {
                            continue; // all-zero termination block
                        }
                        if t_src < position {
                            // committed bit re-enters as a saturated LLR
                            let bit = decided[t_src].bits()[graph.check_rows[i][j] as usize];
                            fixed *= if bit == 0 { saturated_tanh } else { -saturated_tanh };
                        } else {
                            tanh_buf[active_buf.len()] =
                                (0.5 * var_to_check[slot_of(q, j, i)]).tanh();
                            active_buf.push(i);
                        }
                    }
                    let degree = active_buf.len();
                    if degree == 0 {
                        continue;
                    }
                    check_messages(&tanh_buf[..degree], fixed, clamp, &mut msg_buf[..degree]);
                    for (&i, &msg) in active_buf.iter().zip(&msg_buf[..degree]) {
                        check_to_var[slot_of(q, j, i)] = msg;
                    }
                }
            }

            // Variable pass and hard decisions.
            for o in 0..source_span {
                for (r, adj) in graph.var_adj.iter().enumerate() {
                    let mut total = prior;
                    for &(i, j) in adj {
                        let q = o + i as usize;
                        if q < parity_span {
                            total += check_to_var[slot_of(q, j as usize, i as usize)];
                        }
                    }
                    totals[o * k + r] = total;
                    cur_bits[o * k + r] = u8::from(total < 0.0);
                    for &(i, j) in adj {
                        let q = o + i as usize;
                        if q < parity_span {
                            let slot = slot_of(q, j as usize, i as usize);
                            var_to_check[slot] =
                                (total - check_to_var[slot]).clamp(-clamp, clamp);
                        }
                    }
                }
            }

            if let Some(sink) = trace.as_deref_mut() {
                sink.push(TraceSnapshot {
                    position,
                    iteration,
                    totals: totals[..source_span * k].to_vec(),
                });
            }

            if params.early_stop && iteration > 0 {
                if cur_bits[..source_span * k] == prev_bits[..source_span * k] {
                    stable_streak += 1;
                    if stable_streak >= 2 {
                        stable = true;
                        iters_used = iteration + 1;
                        break;
                    }
                } else {
                    stable_streak = 0;
                }
            }
            prev_bits[..source_span * k].copy_from_slice(&cur_bits[..source_span * k]);
        }

        // Commit: the oldest block, or everything left once the window has
        // absorbed the end of the stream.
        let commit = if flush { source_span } else { 1 };
        for o in 0..commit {
            let t = position + o;
            decided.push(SourceBlock::new(cur_bits[o * k..(o + 1) * k].to_vec()));
            iterations[t] = iters_used;
            converged[t] = stable;
        }
        position += commit;
    }

    Ok(DecodeResult {
        blocks: decided,
        iterations,
        converged,
    })
}
