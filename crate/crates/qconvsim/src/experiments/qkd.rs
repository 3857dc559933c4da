//! Entanglement-based BBM92 key distribution over the converted path
//! qubits: passive 50:50 basis choice at the analysis splitters, Z bits from
//! outputs 0/3 and X bits from outputs 1/2, sifting on matched-basis
//! coincidences.

use serde::Serialize;

use super::joint::{sample_coincidences, CoincidenceTable};
use super::{domains, ExperimentError, Scenario};
use crate::stochastics::substream;

/// Which sifted basis feeds the key-rate accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyBasis {
    Both,
    Z,
    X,
}

/// Sifted-key statistics of one basis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BasisStats {
    pub sifted_bits: u64,
    pub error_bits: u64,
    pub qber: f64,
}

impl BasisStats {
    fn from_counts(sifted: u64, errors: u64) -> Self {
        Self {
            sifted_bits: sifted,
            error_bits: errors,
            qber: if sifted > 0 {
                errors as f64 / sifted as f64
            } else {
                0.0
            },
        }
    }
}

/// Raw-key result of a BBM92 run.
#[derive(Debug, Clone, Serialize)]
pub struct QkdReport {
    pub sifted_bits: u64,
    pub error_bits: u64,
    pub qber: f64,
    pub raw_key_rate_bps: f64,
    pub z_basis: BasisStats,
    pub x_basis: BasisStats,
    /// Simulated wall time: pulses / repetition rate.
    pub elapsed_s: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum OutputBasis {
    Z,
    X,
}

/// Output-port classification: outputs 0 and 3 project Z (bits 0/1),
/// outputs 1 and 2 project X (bits 0/1).
fn classify(output: usize) -> (OutputBasis, u8) {
    match output {
        0 => (OutputBasis::Z, 0),
        3 => (OutputBasis::Z, 1),
        1 => (OutputBasis::X, 0),
        2 => (OutputBasis::X, 1),
        _ => unreachable!("four analysis outputs"),
    }
}

/// Runs BBM92 over `scenario.pulses` pulses, sifting both bases.
pub fn run_bbm92(scenario: &Scenario) -> Result<QkdReport, ExperimentError> {
    run_bbm92_with_basis(scenario, KeyBasis::Both)
}

/// BBM92 with the sifted key restricted to the chosen basis; the per-basis
/// breakdown is always reported.
pub fn run_bbm92_with_basis(
    scenario: &Scenario,
    key_basis: KeyBasis,
) -> Result<QkdReport, ExperimentError> {
    let table = CoincidenceTable::compute(
        scenario,
        scenario.source.theta,
        scenario.analysis_phase_alice,
        scenario.analysis_phase_bob,
    )?;
    let mut rng = substream(scenario.seed, domains::QKD, 0);
    let counts = sample_coincidences(&table, scenario.pulses, &mut rng);

    let mut z_sifted = 0u64;
    let mut z_errors = 0u64;
    let mut x_sifted = 0u64;
    let mut x_errors = 0u64;
    for out_a in 0..4 {
        for out_b in 0..4 {
            let n = counts.counts[out_a][out_b];
            if n == 0 {
                continue;
            }
            let (basis_a, bit_a) = classify(out_a);
            let (basis_b, bit_b) = classify(out_b);
            if basis_a != basis_b {
                continue;
            }
            let bit_b = match basis_b {
                OutputBasis::Z if scenario.z_basis_flip => bit_b ^ 1,
                OutputBasis::X if scenario.x_basis_flip => bit_b ^ 1,
                _ => bit_b,
            };
            match basis_a {
                OutputBasis::Z => {
                    z_sifted += n;
                    if bit_a != bit_b {
                        z_errors += n;
                    }
                }
                OutputBasis::X => {
                    x_sifted += n;
                    if bit_a != bit_b {
                        x_errors += n;
                    }
                }
            }
        }
    }

    let (sifted, errors) = match key_basis {
        KeyBasis::Both => (z_sifted + x_sifted, z_errors + x_errors),
        KeyBasis::Z => (z_sifted, z_errors),
        KeyBasis::X => (x_sifted, x_errors),
    };
    if sifted == 0 {
        return Err(ExperimentError::NoKey);
    }
    let elapsed_s = scenario.pulses as f64 / scenario.source.rep_rate_hz;
    Ok(QkdReport {
        sifted_bits: sifted,
        error_bits: errors,
        qber: errors as f64 / sifted as f64,
        raw_key_rate_bps: sifted as f64 / elapsed_s,
        z_basis: BasisStats::from_counts(z_sifted, z_errors),
        x_basis: BasisStats::from_counts(x_sifted, x_errors),
        elapsed_s,
    })
}

/// Residual between the X-basis error rate and the `(1 − V)/2` value the
/// fringe visibility predicts for it.
pub fn qber_visibility_consistency(report: &QkdReport, fit: &super::FringeFit) -> f64 {
    (report.x_basis.qber - (1.0 - fit.visibility) / 2.0).abs()
}
