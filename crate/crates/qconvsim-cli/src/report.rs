//! Machine-readable run reports. The `results` section is a deterministic
//! function of (scenario, seed); wall-clock time lives outside it.

use serde::Serialize;

use qconvsim::experiments::{FringeFit, QkdReport, ScanVariable};
use qconvsim::tomography::CountSet;

#[derive(Debug, Serialize)]
pub struct ReportFile {
    pub tool_version: String,
    pub scenario_hash: String,
    pub seed: u64,
    pub experiment: String,
    pub results: ResultsSection,
    pub wall_clock_seconds: f64,
}

#[derive(Debug, Serialize)]
#[serde(untagged)]
pub enum ResultsSection {
    Tomo(TomoResults),
    Fringe(FringeResults),
    Qkd(QkdResults),
    Convert(ConvertResults),
    Standalone(StandaloneResults),
}

#[derive(Debug, Serialize)]
pub struct TomoStateResult {
    pub label: String,
    pub counts: CountSet,
    pub fidelity: f64,
    pub likelihood: f64,
    pub optimizer_iterations: usize,
}

#[derive(Debug, Serialize)]
pub struct TomoResults {
    pub shots_per_basis: u64,
    pub states: Vec<TomoStateResult>,
    pub average_fidelity: f64,
}

#[derive(Debug, Serialize)]
pub struct FringeResults {
    pub scan: ScanVariable,
    pub points: usize,
    pub pulses_per_point: u64,
    pub fit: FringeFit,
    pub bell_violation: bool,
}

#[derive(Debug, Serialize)]
pub struct QkdResults {
    pub key_basis: String,
    #[serde(flatten)]
    pub report: QkdReport,
}

#[derive(Debug, Serialize)]
pub struct ConvertStateResult {
    pub label: String,
    pub aligned_trace: f64,
    pub leakage_trace: f64,
    pub windowed_fidelity: f64,
    pub reverse_round_trip_fidelity: f64,
}

#[derive(Debug, Serialize)]
pub struct ConvertResults {
    pub states: Vec<ConvertStateResult>,
    pub average_windowed_fidelity: f64,
}

#[derive(Debug, Serialize)]
pub struct StandaloneResults {
    /// Stokes parameters (S0..S3) from linear inversion of the counts.
    pub stokes: [f64; 4],
    pub linear_physical: bool,
    pub mle_likelihood: f64,
    /// Reconstructed density matrix, real and imaginary parts row-major.
    pub mle_density_re: [[f64; 2]; 2],
    pub mle_density_im: [[f64; 2]; 2],
    pub fidelity_vs_target: Option<f64>,
}
