//! Two-photon interference fringes: scanning either Alice's analysis phase
//! or the source phase θ, recording coincidences between Alice's output 1
//! and Bob's output 2 (the X-analysis ports), and fitting the visibility.

use rayon::prelude::*;
use serde::Serialize;

use super::joint::{sample_coincidences, CoincidenceTable};
use super::{domains, ExperimentError, Scenario};
use crate::stochastics::substream;

/// Fringe visibility above which a CHSH-type Bell inequality can be
/// violated: `1/√2`.
pub const BELL_VISIBILITY_THRESHOLD: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Which knob a fringe scan moves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ScanVariable {
    /// Alice's analysis phase; fringe period 2π.
    AlicePhase,
    /// The source phase θ, which enters the fringe as 2θ; period π.
    SourceTheta,
}

impl ScanVariable {
    /// Angular frequency of the fringe in the scanned variable.
    pub fn fringe_frequency(self) -> f64 {
        match self {
            ScanVariable::AlicePhase => 1.0,
            ScanVariable::SourceTheta => 2.0,
        }
    }
}

/// One scan point: coincidence count with its Poisson standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FringePoint {
    pub scan_value_rad: f64,
    pub coincidences: u64,
    pub stderr: f64,
}

/// Values held fixed during the scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanSnapshot {
    pub theta: f64,
    pub phi_alice: f64,
    pub phi_bob: f64,
    pub pulses_per_point: u64,
}

/// Phase-scan coincidence record of one fringe measurement.
#[derive(Debug, Clone, Serialize)]
pub struct FringeDataset {
    pub points: Vec<FringePoint>,
    pub scan: ScanVariable,
    pub fixed: ScanSnapshot,
}

/// Analytic fringe of the ideal two-photon experiment:
/// `½ (1 + cos(φ_A + φ_B + 2θ))`, period 2π in each analysis phase.
pub fn ideal_fringe(theta: f64, phi_a: f64, phi_b: f64) -> f64 {
    0.5 * (1.0 + (phi_a + phi_b + 2.0 * theta).cos())
}

/// Runs a Monte Carlo fringe scan over `grid` (radians, strictly
/// increasing). The non-scanned phases are taken from the scenario. Each
/// grid point draws its counts from its own substream, so point order and
/// parallelism cannot change the dataset.
pub fn run_fringe_scan(
    scenario: &Scenario,
    scan: ScanVariable,
    grid: &[f64],
) -> Result<FringeDataset, ExperimentError> {
    if grid.len() < 8 {
        return Err(ExperimentError::GridTooSmall(grid.len()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(ExperimentError::FitFailure(
            "scan grid must be strictly increasing".into(),
        ));
    }
    let points: Result<Vec<FringePoint>, ExperimentError> = grid
        .par_iter()
        .enumerate()
        .map(|(idx, &value)| {
            let (theta, phi_a) = match scan {
                ScanVariable::AlicePhase => (scenario.source.theta, value),
                ScanVariable::SourceTheta => (value, scenario.analysis_phase_alice),
            };
            let table =
                CoincidenceTable::compute(scenario, theta, phi_a, scenario.analysis_phase_bob)?;
            let mut rng = substream(scenario.seed, domains::FRINGE, idx as u64);
            let counts = sample_coincidences(&table, scenario.pulses, &mut rng);
            // the recorded fringe pair: Alice output 1 × Bob output 2
            let n = counts.counts[1][2];
            Ok(FringePoint {
                scan_value_rad: value,
                coincidences: n,
                stderr: (n as f64).sqrt(),
            })
        })
        .collect();
    Ok(FringeDataset {
        points: points?,
        scan,
        fixed: ScanSnapshot {
            theta: scenario.source.theta,
            phi_alice: scenario.analysis_phase_alice,
            phi_bob: scenario.analysis_phase_bob,
            pulses_per_point: scenario.pulses,
        },
    })
}

/// Evenly spaced scan grid of `n` points over `[0, span)`.
pub fn scan_grid(n: usize, span: f64) -> Vec<f64> {
    (0..n).map(|k| k as f64 * span / n as f64).collect()
}

/// Fitted fringe `C(x) = A (1 + V cos(ωx + φ0))`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub visibility: f64,
    pub phase_offset_rad: f64,
    /// Weighted sum of squared residuals.
    pub residual: f64,
    pub visibility_std_error: f64,
}

/// Weighted least-squares fringe fit with Poisson weights.
///
/// The model is linear in `(β0, β1, β2) = (A, A·V·cos φ0, −A·V·sin φ0)`
/// against the regressors `(1, cos ωx, sin ωx)`, so the normal equations are
/// solved exactly; the visibility standard error follows from the parameter
/// covariance by the delta method. The fitted `V` equals the contrast
/// `(C_max − C_min)/(C_max + C_min)` of the fitted curve by construction.
pub fn fit_visibility(d: &FringeDataset) -> Result<FringeFit, ExperimentError> {
    if d.points.len() < 8 {
        return Err(ExperimentError::GridTooSmall(d.points.len()));
    }
    let omega = d.scan.fringe_frequency();

    // weighted normal equations for beta = (A, A V cos φ0, −A V sin φ0)
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for p in &d.points {
        let x = [
            1.0,
            (omega * p.scan_value_rad).cos(),
            (omega * p.scan_value_rad).sin(),
        ];
        let w = 1.0 / (p.coincidences as f64).max(1.0);
        for i in 0..3 {
            for j in 0..3 {
                xtx[i][j] += w * x[i] * x[j];
            }
            xty[i] += w * x[i] * p.coincidences as f64;
        }
    }

    let cov = invert_3x3(&xtx).ok_or_else(|| {
        ExperimentError::FitFailure("singular normal equations: degenerate scan grid".into())
    })?;
    let mut beta = [0.0f64; 3];
    for i in 0..3 {
        for j in 0..3 {
            beta[i] += cov[i][j] * xty[j];
        }
    }

    let amplitude = beta[0];
    if amplitude <= 0.0 {
        return Err(ExperimentError::FitFailure(format!(
            "nonpositive fitted amplitude {amplitude}"
        )));
    }
    let modulation = (beta[1] * beta[1] + beta[2] * beta[2]).sqrt();
    let visibility = modulation / amplitude;
    let phase_offset_rad = (-beta[2]).atan2(beta[1]);

    let mut residual = 0.0;
    for p in &d.points {
        let model = beta[0]
            + beta[1] * (omega * p.scan_value_rad).cos()
            + beta[2] * (omega * p.scan_value_rad).sin();
        let w = 1.0 / (p.coincidences as f64).max(1.0);
        residual += w * (p.coincidences as f64 - model).powi(2);
    }

    // delta method: V = √(β1² + β2²)/β0
    let grad = if modulation > 1e-300 {
        [
            -modulation / (amplitude * amplitude),
            beta[1] / (amplitude * modulation),
            beta[2] / (amplitude * modulation),
        ]
    } else {
        // flat fringe: bound the error by the modulation parameters alone
        [0.0, 1.0 / amplitude, 1.0 / amplitude]
    };
    let mut var = 0.0;
    for i in 0..3 {
        for j in 0..3 {
            var += grad[i] * cov[i][j] * grad[j];
        }
    }

    Ok(FringeFit {
        amplitude,
        visibility,
        phase_offset_rad,
        residual,
        visibility_std_error: var.max(0.0).sqrt(),
    })
}

/// Whether the fringe visibility clears the Bell-violation criterion
/// (strictly above `1/√2`).
pub fn bell_check(fit: &FringeFit) -> bool {
    fit.visibility > BELL_VISIBILITY_THRESHOLD
}

fn invert_3x3(m: &[[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv_det = 1.0 / det;
    let mut inv = [[0.0f64; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (a, b, c, d) = (
                m[(j + 1) % 3][(i + 1) % 3],
                m[(j + 1) % 3][(i + 2) % 3],
                m[(j + 2) % 3][(i + 1) % 3],
                m[(j + 2) % 3][(i + 2) % 3],
            );
            inv[i][j] = (a * d - b * c) * inv_det;
        }
    }
    Some(inv)
}
