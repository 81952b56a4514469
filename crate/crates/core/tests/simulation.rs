//! End-to-end simulation invariants on a small code: BER monotone in SNR
//! within Monte-Carlo bands, the measured error rate never significantly
//! below the genie-aided bound, and sidecar replay.

use ldgm_jscc::codebook::{build_submatrices, Construction, GeneratorSpec, SubmatrixSet};
use ldgm_jscc::decoder::DecoderParams;
use ldgm_jscc::harness::{run_sweep, SimConfig, StopRule};
use ldgm_jscc::bitcore::RngState;

fn small_sweep(esn0_db_list: Vec<f64>) -> SimConfig {
    SimConfig {
        generator: GeneratorSpec {
            k: 64,
            m: 64,
            nu: 3,
            construction: Construction::PermutationPartition,
            seed: 3,
        },
        theta: 0.125,
        blocks_per_frame: 20,
        esn0_db_list,
        decoder: DecoderParams::for_memory(3),
        stop: StopRule {
            min_bit_errors: 60,
            max_frames: 600,
        },
        seed: 21,
        workers: 1,
    }
}

#[test]
fn ber_monotone_in_snr_within_mc_bands() {
    let rows = run_sweep(&small_sweep(vec![0.0, 1.0, 2.0, 3.0, 4.0])).unwrap();
    for pair in rows.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let sd = |r: &ldgm_jscc::harness::SimResult| {
            (r.ber.max(1e-12) * (1.0 - r.ber) / r.bits_counted as f64).sqrt()
        };
        assert!(
            b.ber <= a.ber + 3.0 * (sd(a) + sd(b)),
            "BER rose from {:.3e} at {} dB to {:.3e} at {} dB",
            a.ber,
            a.es_n0_db,
            b.ber,
            b.es_n0_db
        );
    }
}

#[test]
fn measured_ber_never_significantly_below_bound() {
    // The genie bound is a true lower bound on the decoder's BER; a finite
    // sample may dip below it only within statistical noise.
    let rows = run_sweep(&small_sweep(vec![2.0, 3.0, 4.0])).unwrap();
    for row in rows {
        let sd = (row.ber.max(1e-12) / row.bits_counted as f64).sqrt();
        assert!(
            row.ber + 3.0 * sd >= row.lower_bound_ber,
            "BER {:.3e} (+3sd {:.3e}) sits below the bound {:.3e} at {} dB",
            row.ber,
            3.0 * sd,
            row.lower_bound_ber,
            row.es_n0_db
        );
        if row.bit_errors >= 100 {
            assert!(
                row.ber >= row.lower_bound_ber,
                "with {} errors collected, BER {:.3e} < bound {:.3e} at {} dB",
                row.bit_errors,
                row.ber,
                row.lower_bound_ber,
                row.es_n0_db
            );
        }
    }
}

#[test]
fn sidecar_replays_the_exact_code() {
    let spec = GeneratorSpec {
        k: 48,
        m: 36,
        nu: 2,
        construction: Construction::RandomColumnWeight1,
        seed: 99,
    };
    let subs = build_submatrices(&spec, &RngState::new(spec.seed)).unwrap();
    let replayed = SubmatrixSet::from_json(&subs.to_json()).unwrap();
    assert_eq!(subs, replayed);
    assert_eq!(
        ldgm_jscc::codebook::source_bit_row_weights(&subs),
        ldgm_jscc::codebook::source_bit_row_weights(&replayed)
    );
}
