//! Command-line front end: Monte-Carlo sweeps plus the analytic curves
//! (genie-aided BER bound, system capacity, partial mutual information,
//! error exponents, source entropy), all emitted as CSV.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ldgm_jscc::analysis::{
    bound_curve, error_exponent, esn0_to_ebn0, partial_mutual_information, system_capacity,
    BiosChannelSpec,
};
use ldgm_jscc::bitcore::{binary_entropy, RngState};
use ldgm_jscc::codebook::{build_submatrices, source_bit_row_weights, Construction, GeneratorSpec};
use ldgm_jscc::harness::{run_sweep, write_csv, SimConfig, SimError};

#[derive(Parser)]
#[command(
    name = "ldgm-jscc",
    about = "Convolutional LDGM joint source-channel coding simulator",
    version
)]
struct Cli {
    /// Override the RNG seed used by the subcommand.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the Monte-Carlo BER/FER sweep described by a config file.
    Simulate {
        /// Flat key-value config file (see README for the schema).
        #[arg(long)]
        config: PathBuf,
        /// Also write the realized code as a JSON sidecar for exact replay.
        #[arg(long)]
        code_out: Option<PathBuf>,
    },
    /// Genie-aided BER lower-bound curve for one realized code.
    Bound {
        #[arg(long)]
        k: usize,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        nu: usize,
        /// "perm" or "random".
        #[arg(long)]
        construction: String,
        #[arg(long)]
        theta: f64,
        /// Comma-separated E_s/N_0 list in dB.
        #[arg(long)]
        esn0: String,
    },
    /// System capacity (source digits per channel use) over an SNR grid.
    Capacity {
        #[arg(long)]
        theta: f64,
        #[arg(long)]
        esn0: String,
    },
    /// Partial mutual information of a BIOS channel over a grid of input
    /// distributions.
    Pmi {
        /// "bsc:<epsilon>" or "awgn:<sigma>".
        #[arg(long)]
        channel: String,
        /// Comma-separated list of P(X=1) values.
        #[arg(long)]
        p: String,
    },
    /// Partial error exponent E(p, R).
    Exponent {
        /// "bsc:<epsilon>" or "awgn:<sigma>".
        #[arg(long)]
        channel: String,
        #[arg(long)]
        p: f64,
        /// Rate in nats per symbol.
        #[arg(long)]
        rate: f64,
    },
    /// Binary source entropy in bits.
    Entropy {
        #[arg(long)]
        theta: f64,
    },
}

enum AppError {
    Usage(String),
    Config(String),
    Runtime(String),
}

impl AppError {
    fn report(&self) -> ExitCode {
        let (code, msg) = match self {
            AppError::Usage(m) => (2, m),
            AppError::Config(m) => (3, m),
            AppError::Runtime(m) => (4, m),
        };
        eprintln!("error: {msg}");
        ExitCode::from(code)
    }
}

impl From<SimError> for AppError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(_) => AppError::Config(e.to_string()),
            other => AppError::Runtime(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => e.report(),
    }
}

fn run(cli: Cli) -> Result<(), AppError> {
    let mut csv = String::new();
    match cli.command {
        Command::Simulate { config, code_out } => {
            let text = fs::read_to_string(&config).map_err(|e| {
                AppError::Config(format!("cannot read {}: {e}", config.display()))
            })?;
            let mut cfg = SimConfig::from_toml_str(&text)?;
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            if let Some(path) = code_out {
                let subs = build_submatrices(
                    &cfg.generator,
                    &RngState::new(cfg.generator.seed),
                )
                .map_err(|e| AppError::Runtime(e.to_string()))?;
                fs::write(&path, subs.to_json())
                    .map_err(|e| AppError::Runtime(format!("cannot write sidecar: {e}")))?;
            }
            let rows = run_sweep(&cfg)?;
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf).map_err(|e| AppError::Runtime(e.to_string()))?;
            csv = String::from_utf8(buf).expect("csv is ascii");
        }
        Command::Bound {
            k,
            m,
            nu,
            construction,
            theta,
            esn0,
        } => {
            let construction = parse_construction(&construction)?;
            let theta = check_theta(theta, true)?;
            let esn0 = parse_list(&esn0, "esn0")?;
            let spec = GeneratorSpec {
                k,
                m,
                nu,
                construction,
                seed: cli.seed.unwrap_or(0),
            };
            let subs = build_submatrices(&spec, &RngState::new(spec.seed))
                .map_err(|e| AppError::Usage(e.to_string()))?;
            let weights = source_bit_row_weights(&subs);
            let curve = bound_curve(&weights, theta, spec.rate(), &esn0)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            csv.push_str("es_n0_db,eb_n0_db,lower_bound_ber\n");
            for point in curve.rows {
                let eb = if theta == 0.0 {
                    f64::INFINITY
                } else {
                    esn0_to_ebn0(point.es_n0_db, theta)
                };
                csv.push_str(&format!(
                    "{:.5e},{:.5e},{:.5e}\n",
                    point.es_n0_db, eb, point.ber_lower_bound
                ));
            }
        }
        Command::Capacity { theta, esn0 } => {
            let theta = check_theta(theta, false)?;
            let esn0 = parse_list(&esn0, "esn0")?;
            csv.push_str("es_n0_db,eb_n0_db,system_capacity\n");
            for es in esn0 {
                let r = system_capacity(theta, es)
                    .map_err(|e| AppError::Runtime(e.to_string()))?;
                csv.push_str(&format!(
                    "{:.5e},{:.5e},{:.5e}\n",
                    es,
                    esn0_to_ebn0(es, theta),
                    r
                ));
            }
        }
        Command::Pmi { channel, p } => {
            let ch = parse_channel(&channel)?;
            let ps = parse_list(&p, "p")?;
            csv.push_str("p,i0_bits,i1_bits,i_bits\n");
            for p in ps {
                if !(0.0..=1.0).contains(&p) {
                    return Err(AppError::Usage(format!("p must lie in [0, 1], got {p}")));
                }
                let pmi = partial_mutual_information(p, &ch)
                    .map_err(|e| AppError::Runtime(e.to_string()))?;
                csv.push_str(&format!(
                    "{p:.5e},{:.5e},{:.5e},{:.5e}\n",
                    pmi.i0, pmi.i1, pmi.i
                ));
            }
        }
        Command::Exponent { channel, p, rate } => {
            let ch = parse_channel(&channel)?;
            if !(0.0..=1.0).contains(&p) {
                return Err(AppError::Usage(format!("p must lie in [0, 1], got {p}")));
            }
            if rate < 0.0 {
                return Err(AppError::Usage(format!("rate must be nonnegative, got {rate}")));
            }
            let res = error_exponent(p, rate, &ch)
                .map_err(|e| AppError::Runtime(e.to_string()))?;
            csv.push_str("p,rate_nats,exponent_nats,argmax_gamma\n");
            csv.push_str(&format!(
                "{p:.5e},{rate:.5e},{:.5e},{:.5e}\n",
                res.value, res.argmax_gamma
            ));
        }
        Command::Entropy { theta } => {
            if !(0.0..=1.0).contains(&theta) {
                return Err(AppError::Usage(format!(
                    "theta must lie in [0, 1], got {theta}"
                )));
            }
            csv.push_str("theta,entropy_bits\n");
            csv.push_str(&format!("{theta:.5e},{:.5e}\n", binary_entropy(theta)));
        }
    }

    match cli.out {
        Some(path) => fs::write(&path, csv)
            .map_err(|e| AppError::Runtime(format!("cannot write {}: {e}", path.display()))),
        None => {
            print!("{csv}");
            std::io::stdout()
                .flush()
                .map_err(|e| AppError::Runtime(e.to_string()))
        }
    }
}

fn parse_construction(text: &str) -> Result<Construction, AppError> {
    match text {
        "perm" => Ok(Construction::PermutationPartition),
        "random" => Ok(Construction::RandomColumnWeight1),
        other => Err(AppError::Usage(format!(
            "construction must be \"perm\" or \"random\", got \"{other}\""
        ))),
    }
}

fn check_theta(theta: f64, allow_zero: bool) -> Result<f64, AppError> {
    let ok = if allow_zero {
        (0.0..=0.5).contains(&theta)
    } else {
        theta > 0.0 && theta <= 0.5
    };
    if ok {
        Ok(theta)
    } else {
        Err(AppError::Usage(format!(
            "theta must lie in {}0, 0.5], got {theta}",
            if allow_zero { "[" } else { "(" }
        )))
    }
}

fn parse_list(text: &str, name: &str) -> Result<Vec<f64>, AppError> {
    let values: Result<Vec<f64>, _> = text.split(',').map(|s| s.trim().parse()).collect();
    match values {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(AppError::Usage(format!(
            "--{name} expects a comma-separated list of numbers, got \"{text}\""
        ))),
    }
}

fn parse_channel(text: &str) -> Result<BiosChannelSpec, AppError> {
    let usage = || {
        AppError::Usage(format!(
            "channel must be \"bsc:<epsilon>\" or \"awgn:<sigma>\", got \"{text}\""
        ))
    };
    let (kind, value) = text.split_once(':').ok_or_else(usage)?;
    let value: f64 = value.trim().parse().map_err(|_| usage())?;
    match kind {
        "bsc" => {
            if value > 0.0 && value < 0.5 {
                Ok(BiosChannelSpec::bsc(value))
            } else {
                Err(AppError::Usage(format!(
                    "BSC crossover must lie in (0, 0.5), got {value}"
                )))
            }
        }
        "awgn" => {
            if value > 0.0 {
                Ok(BiosChannelSpec::bpsk_awgn(value))
            } else {
                Err(AppError::Usage(format!(
                    "AWGN sigma must be positive, got {value}"
                )))
            }
        }
        _ => Err(usage()),
    }
}
