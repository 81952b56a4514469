//! Monte-Carlo sweep orchestration: configuration parsing and validation,
//! deterministic parallel frame simulation, stopping rules, and CSV emission.
//!
//! Frames are the unit of parallel work. Every frame derives its own RNG
//! stream from `(seed, SNR-point index, frame index)` and frames are consumed
//! in fixed-size batches with results reduced in frame order, so a sweep is
//! bit-identical for any worker count. Batches keep the stopping rule
//! deterministic: the error counts are only inspected on batch boundaries.

use std::fmt;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::Deserialize;

use crate::analysis::{ber_lower_bound, esn0_to_ebn0, AnalysisError};
use crate::bitcore::{sample_source_block, RngState, SourceModel};
use crate::channel::{awgn_llr, bpsk_awgn_transmit, AwgnChannel};
use crate::codebook::{
    build_submatrices, encode_stream, source_bit_row_weights, CodeError, Construction,
    GeneratorSpec, SubmatrixSet,
};
use crate::decoder::{build_window_graph, decode_sliding, DecodeError, DecoderParams, WindowGraph};

/// Supported configuration schema version.
pub const CONFIG_SCHEMA_VERSION: u32 = 1;

/// Exact CSV column order of the sweep output.
pub const CSV_HEADER: &str =
    "es_n0_db,eb_n0_db,frames,bit_errors,bits_counted,ber,frame_errors,fer,lower_bound_ber,wall_seconds";

/// Frames processed between stopping-rule checks; fixed so that results do
/// not depend on the worker count.
const FRAME_BATCH: u64 = 32;

/// Stopping rule for one SNR point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StopRule {
    pub min_bit_errors: u64,
    pub max_frames: u64,
}

/// One validated simulation sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub generator: GeneratorSpec,
    pub theta: f64,
    /// Source blocks per frame (`L`); each frame is terminated independently.
    pub blocks_per_frame: usize,
    pub esn0_db_list: Vec<f64>,
    pub decoder: DecoderParams,
    pub stop: StopRule,
    pub seed: u64,
    pub workers: usize,
}

/// Flat on-disk schema. Unknown keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    schema_version: u32,
    k: usize,
    m: usize,
    nu: usize,
    construction: String,
    code_seed: u64,
    theta: f64,
    blocks_per_frame: Option<usize>,
    esn0_db_list: Vec<f64>,
    window_blocks: Option<usize>,
    iterations_per_position: Option<u32>,
    llr_clamp: Option<f64>,
    early_stop: Option<bool>,
    min_bit_errors: Option<u64>,
    max_frames: Option<u64>,
    seed: u64,
    workers: Option<usize>,
}

#[derive(Debug)]
pub enum SimError {
    Config(String),
    Code(CodeError),
    Decode(DecodeError),
    Analysis(AnalysisError),
    Io(std::io::Error),
}

impl fmt::Display for SimError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SimError::Config(msg) => write!(f, "config: {msg}"),
            SimError::Code(e) => write!(f, "code construction: {e}"),
            SimError::Decode(e) => write!(f, "decoder: {e}"),
            SimError::Analysis(e) => write!(f, "analysis: {e}"),
            SimError::Io(e) => write!(f, "i/o: {e}"),
        }
    }
}

impl std::error::Error for SimError {}

impl From<CodeError> for SimError {
    fn from(e: CodeError) -> Self {
        SimError::Code(e)
    }
}

impl From<DecodeError> for SimError {
    fn from(e: DecodeError) -> Self {
        SimError::Decode(e)
    }
}

impl From<AnalysisError> for SimError {
    fn from(e: AnalysisError) -> Self {
        SimError::Analysis(e)
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e)
    }
}

impl SimConfig {
    /// Parses and validates the flat key-value config format.
    pub fn from_toml_str(text: &str) -> Result<Self, SimError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| SimError::Config(e.message().to_string()))?;
        if raw.schema_version != CONFIG_SCHEMA_VERSION {
            return Err(SimError::Config(format!(
                "schema_version: expected {CONFIG_SCHEMA_VERSION}, got {}",
                raw.schema_version
            )));
        }
        let construction = match raw.construction.as_str() {
            "perm" => Construction::PermutationPartition,
            "random" => Construction::RandomColumnWeight1,
            other => {
                return Err(SimError::Config(format!(
                    "construction: expected \"perm\" or \"random\", got \"{other}\""
                )))
            }
        };
        let generator = GeneratorSpec {
            k: raw.k,
            m: raw.m,
            nu: raw.nu,
            construction,
            seed: raw.code_seed,
        };
        let defaults = DecoderParams::for_memory(raw.nu);
        let cfg = SimConfig {
            generator,
            theta: raw.theta,
            blocks_per_frame: raw.blocks_per_frame.unwrap_or(40),
            esn0_db_list: raw.esn0_db_list,
            decoder: DecoderParams {
                window_blocks: raw.window_blocks.unwrap_or(defaults.window_blocks),
                iterations_per_position: raw
                    .iterations_per_position
                    .unwrap_or(defaults.iterations_per_position),
                llr_clamp: raw.llr_clamp.unwrap_or(defaults.llr_clamp),
                early_stop: raw.early_stop.unwrap_or(defaults.early_stop),
            },
            stop: StopRule {
                min_bit_errors: raw.min_bit_errors.unwrap_or(100),
                max_frames: raw.max_frames.unwrap_or(100_000),
            },
            seed: raw.seed,
            workers: raw.workers.unwrap_or(1),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let field = |name: &str, msg: String| Err(SimError::Config(format!("{name}: {msg}")));
        if self.generator.k == 0 || self.generator.m == 0 {
            return field("k/m", "must be positive".into());
        }
        if !(0.0..=0.5).contains(&self.theta) {
            return field("theta", format!("must lie in [0, 0.5], got {}", self.theta));
        }
        if self.blocks_per_frame == 0 {
            return field("blocks_per_frame", "must be positive".into());
        }
        if self.esn0_db_list.is_empty() {
            return field("esn0_db_list", "must not be empty".into());
        }
        if !self.esn0_db_list.windows(2).all(|w| w[0] < w[1]) {
            return field("esn0_db_list", "must be strictly increasing".into());
        }
        if self.decoder.window_blocks < self.generator.nu + 1 {
            return field(
                "window_blocks",
                format!("must be at least nu + 1 = {}", self.generator.nu + 1),
            );
        }
        if self.decoder.iterations_per_position == 0 {
            return field("iterations_per_position", "must be positive".into());
        }
        if !self.decoder.llr_clamp.is_finite() || self.decoder.llr_clamp <= 0.0 {
            return field("llr_clamp", "must be positive and finite".into());
        }
        if self.stop.min_bit_errors == 0 {
            return field("min_bit_errors", "must be at least 1".into());
        }
        if self.stop.max_frames == 0 {
            return field("max_frames", "must be at least 1".into());
        }
        if self.workers == 0 {
            return field("workers", "must be positive".into());
        }
        Ok(())
    }
}

/// Measured and analytic figures for one SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub es_n0_db: f64,
    pub eb_n0_db: f64,
    pub frames: u64,
    pub bit_errors: u64,
    pub bits_counted: u64,
    pub ber: f64,
    /// Erroneous source blocks (the streaming frame unit).
    pub frame_errors: u64,
    /// Block-error rate: `frame_errors / (frames * L)`.
    pub fer: f64,
    pub lower_bound_ber: f64,
    pub wall_seconds: f64,
}

#[derive(Debug, Clone, Copy, Default)]
struct FrameStats {
    bit_errors: u64,
    block_errors: u64,
}

/// Precomputed per-sweep state shared by every SNR point.
pub struct SweepContext {
    cfg: SimConfig,
    subs: SubmatrixSet,
    weights: Vec<u32>,
    graph: WindowGraph,
    pool: rayon::ThreadPool,
}

impl SweepContext {
    pub fn new(cfg: SimConfig) -> Result<Self, SimError> {
        cfg.validate()?;
        let subs = build_submatrices(&cfg.generator, &RngState::new(cfg.generator.seed))?;
        let weights = source_bit_row_weights(&subs);
        let graph = build_window_graph(&subs, &cfg.decoder)?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| SimError::Config(format!("workers: {e}")))?;
        Ok(Self {
            cfg,
            subs,
            weights,
            graph,
            pool,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    /// The realized code, e.g. for sidecar export.
    pub fn submatrices(&self) -> &SubmatrixSet {
        &self.subs
    }

    /// Realized generator row weights.
    pub fn row_weights(&self) -> &[u32] {
        &self.weights
    }

    fn run_frame(&self, point_index: usize, frame_index: u64, ch: &AwgnChannel) -> FrameStats {
        let cfg = &self.cfg;
        let model = SourceModel::new(cfg.theta);
        let stream_id = ((point_index as u64) << 32) | frame_index;
        let mut rng = RngState::new(cfg.seed).with_stream(stream_id).rng();
        let source: Vec<_> = (0..cfg.blocks_per_frame)
            .map(|_| sample_source_block(&model, cfg.generator.k, &mut rng))
            .collect();
        let codeword = encode_stream(&self.subs, &source).expect("validated lengths");
        let llrs: Vec<_> = codeword
            .blocks()
            .iter()
            .map(|b| awgn_llr(&bpsk_awgn_transmit(b, ch, &mut rng), ch))
            .collect();
        let decoded = decode_sliding(&self.graph, &llrs, &model, &cfg.decoder)
            .expect("validated stream");
        let mut stats = FrameStats::default();
        for (u, hat) in source.iter().zip(&decoded.blocks) {
            let diff = u
                .bits()
                .iter()
                .zip(hat.bits())
                .filter(|(a, b)| a != b)
                .count() as u64;
            stats.bit_errors += diff;
            stats.block_errors += u64::from(diff > 0);
        }
        stats
    }

    /// Simulates one SNR point until `min_bit_errors` are collected or
    /// `max_frames` frames are spent, whichever comes first (checked on
    /// deterministic batch boundaries).
    pub fn run_point(&self, point_index: usize, es_n0_db: f64) -> Result<SimResult, SimError> {
        let cfg = &self.cfg;
        let started = Instant::now();
        let ch = AwgnChannel::from_esn0(es_n0_db, cfg.generator.rate());
        let lower_bound_ber = ber_lower_bound(&self.weights, cfg.theta, ch.sigma())?;

        let mut frames = 0u64;
        let mut bit_errors = 0u64;
        let mut block_errors = 0u64;
        while frames < cfg.stop.max_frames && bit_errors < cfg.stop.min_bit_errors {
            let batch = FRAME_BATCH.min(cfg.stop.max_frames - frames);
            let stats: Vec<FrameStats> = self.pool.install(|| {
                (frames..frames + batch)
                    .into_par_iter()
                    .map(|f| self.run_frame(point_index, f, &ch))
                    .collect()
            });
            for s in stats {
                bit_errors += s.bit_errors;
                block_errors += s.block_errors;
            }
            frames += batch;
        }

        let bits_counted = frames * cfg.blocks_per_frame as u64 * cfg.generator.k as u64;
        let blocks = frames * cfg.blocks_per_frame as u64;
        let eb_n0_db = if cfg.theta == 0.0 {
            f64::INFINITY
        } else {
            esn0_to_ebn0(es_n0_db, cfg.theta)
        };
        Ok(SimResult {
            es_n0_db,
            eb_n0_db,
            frames,
            bit_errors,
            bits_counted,
            ber: bit_errors as f64 / bits_counted as f64,
            frame_errors: block_errors,
            fer: block_errors as f64 / blocks as f64,
            lower_bound_ber,
            wall_seconds: started.elapsed().as_secs_f64(),
        })
    }
}

/// Runs every SNR point of the sweep in order.
pub fn run_sweep(cfg: &SimConfig) -> Result<Vec<SimResult>, SimError> {
    let ctx = SweepContext::new(cfg.clone())?;
    cfg.esn0_db_list
        .iter()
        .enumerate()
        .map(|(idx, &es)| ctx.run_point(idx, es))
        .collect()
}

fn fmt_float(x: f64) -> String {
    format!("{x:.5e}")
}

/// Writes the sweep table in the pinned CSV layout: floats in scientific
/// notation with six significant digits, counters as plain integers.
pub fn write_csv(rows: &[SimResult], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_float(r.es_n0_db),
            fmt_float(r.eb_n0_db),
            r.frames,
            r.bit_errors,
            r.bits_counted,
            fmt_float(r.ber),
            r.frame_errors,
            fmt_float(r.fer),
            fmt_float(r.lower_bound_ber),
            fmt_float(r.wall_seconds),
        )?;
    }
    Ok(())
}

/// CSV bytes with the trailing wall-clock column blanked, for comparing
/// reruns: wall time is the single legitimately non-reproducible field.
pub fn csv_without_timing(csv: &str) -> String {
    csv.lines()
        .map(|line| match line.rfind(',') {
            Some(idx) => &line[..idx],
            None => line,
        })
        .collect::<Vec<_>>()
        .join("\n")
}
