//! End-to-end experiment orchestration over a [`Scenario`]: single-qubit
//! conversion with tomography, two-photon interference fringe scans, and
//! entanglement-based BBM92 key distribution.
//!
//! One experiment run is a deterministic function of `(Scenario, seed)`:
//! every stochastic draw comes from a substream keyed by the seed, an
//! experiment domain tag and a trial index, so grid points and seeds can be
//! evaluated concurrently without changing any count.

mod fringe;
mod joint;
mod qkd;

pub use fringe::{
    bell_check, fit_visibility, ideal_fringe, run_fringe_scan, scan_grid, FringeDataset, FringeFit,
    FringePoint, ScanSnapshot, ScanVariable, BELL_VISIBILITY_THRESHOLD,
};
pub use qkd::{
    qber_visibility_consistency, run_bbm92, run_bbm92_with_basis, BasisStats, KeyBasis, QkdReport,
};

use rayon::prelude::*;
use thiserror::Error;

use crate::devices::{
    convert, prepare_time_bin, windowed_qubit, ConverterModel, DeviceError, DriveWaveform, EosModel,
};
use crate::statekit::{StateError, StateVector};
use crate::stochastics::{
    misroute_prob, substream, Detector, FiberChannel, PairSource, StochasticsError,
};
use crate::tomography::{
    mle_reconstruct, run_tomography, CountSet, MleConfig, TomoError, TomoResult,
};

/// Substream domain tags, one per experiment kind.
pub(crate) mod domains {
    pub const TOMO: u64 = 1;
    pub const FRINGE: u64 = 2;
    pub const QKD: u64 = 3;
}

/// Intrinsic loss of the passive 50:50 basis-selection split, dB. Quoted
/// circuit insertion losses are port-to-port figures through a Z output and
/// therefore include this split; the model applies the remainder as excess
/// transmission and keeps the split itself in the output routing.
pub const BASIS_SPLIT_DB: f64 = 3.010_299_956_639_812;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("no key: zero sifted bits")]
    NoKey,
    #[error("fringe fit failed: {0}")]
    FitFailure(String),
    #[error("fringe scan needs at least 8 points, got {0}")]
    GridTooSmall(usize),
    #[error(transparent)]
    Device(#[from] DeviceError),
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Stochastics(#[from] StochasticsError),
    #[error(transparent)]
    Tomo(#[from] TomoError),
}

/// Which user's circuit a parameter refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    Alice,
    Bob,
}

/// Full experiment configuration: source, converters, channels, detection
/// and analysis settings for both users.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub source: PairSource,
    pub converter_alice: ConverterModel,
    pub converter_bob: ConverterModel,
    pub channel_alice: FiberChannel,
    pub channel_bob: FiberChannel,
    pub detector_alice: Detector,
    pub detector_bob: Detector,
    /// Analysis phase applied on path 1 ahead of the X-basis interference.
    pub analysis_phase_alice: f64,
    pub analysis_phase_bob: f64,
    /// Coherence factor of each user's analysis interferometer, applied
    /// multiplicatively to the two-photon fringe term.
    pub interference_visibility_alice: f64,
    pub interference_visibility_bob: f64,
    /// Port-to-port circuit insertion loss through a Z output (includes the
    /// 3 dB basis split; see [`BASIS_SPLIT_DB`]).
    pub insertion_loss_alice_db: f64,
    pub insertion_loss_bob_db: f64,
    /// Per-basis bit flips on Bob's side absorbing the port conventions of
    /// the analysis splitters.
    pub z_basis_flip: bool,
    pub x_basis_flip: bool,
    /// Pulses per run; doubles as shots per basis in the tomography
    /// experiment.
    pub pulses: u64,
    pub seed: u64,
}

/// Interference-visibility factor implied by an interferometer extinction
/// ratio `R` (dB): `v = (R − 1)/(R + 1)` in linear terms. The standard
/// amplitude-imbalance model; measured fringe data may constrain the
/// scenario's visibility fields more tightly than the quoted ER does.
pub fn interference_er_to_visibility(er_db: f64) -> f64 {
    let r = 10f64.powf(er_db / 10.0);
    (r - 1.0) / (r + 1.0)
}

impl Scenario {
    /// Noise-free reference scenario: extinction so high it is effectively
    /// infinite, lossless circuits, unit-efficiency jitter-free detectors.
    pub fn ideal() -> Self {
        let converter = ConverterModel {
            eos: EosModel {
                er_through_db: 200.0,
                er_cross_db: 200.0,
                drive: DriveWaveform::nominal(100.0),
            },
            delay_dt_ps: 100.0,
            compensation_phase: 0.0,
            excess_loss_long_db: 0.0,
            excess_loss_short_db: 0.0,
        };
        let detector = Detector {
            efficiency: 1.0,
            dark_rate_hz: 0.0,
            jitter_fwhm_ps: 0.0,
            window_ps: 200.0,
        };
        Self {
            source: PairSource {
                mean_pairs_per_pulse: 6e-4,
                rep_rate_hz: 1e8,
                theta: 0.0,
            },
            converter_alice: converter,
            converter_bob: converter,
            channel_alice: FiberChannel::back_to_back(),
            channel_bob: FiberChannel::back_to_back(),
            detector_alice: detector,
            detector_bob: detector,
            analysis_phase_alice: 0.0,
            analysis_phase_bob: 0.0,
            interference_visibility_alice: 1.0,
            interference_visibility_bob: 1.0,
            insertion_loss_alice_db: 0.0,
            insertion_loss_bob_db: 0.0,
            z_basis_flip: false,
            x_basis_flip: true,
            pulses: 1_000_000,
            seed: 1,
        }
    }

    /// The calibrated back-to-back scenario. Measured device figures: 100 ps
    /// bin separation, 100 MHz repetition, 6e-4 pairs per pulse (60 kHz pair
    /// rate), 17 dB switch extinction in both states, 150 ps detector jitter
    /// FWHM, 10 / 15.5 dB circuit insertion losses. Assumed values, chosen
    /// and documented here because no measurement pins them: detector
    /// efficiency 0.9, dark rate 100 Hz, ±200 ps coincidence window, 5 ps
    /// residual arrival-time spread, and analysis-interferometer coherence
    /// factors 0.9655 / 0.98 constrained by the measured fringe
    /// visibilities.
    pub fn calibrated_back_to_back() -> Self {
        let converter = ConverterModel {
            eos: EosModel {
                er_through_db: 17.0,
                er_cross_db: 17.0,
                drive: DriveWaveform::nominal(100.0),
            },
            delay_dt_ps: 100.0,
            compensation_phase: 0.0,
            excess_loss_long_db: 0.0,
            excess_loss_short_db: 0.0,
        };
        let detector = Detector {
            efficiency: 0.9,
            dark_rate_hz: 100.0,
            jitter_fwhm_ps: 150.0,
            window_ps: 200.0,
        };
        let channel = FiberChannel {
            length_km: 0.0,
            atten_db_per_km: 0.21,
            pol_penalty_db: 0.0,
            arrival_sigma_ps: 5.0,
        };
        Self {
            source: PairSource {
                mean_pairs_per_pulse: 6e-4,
                rep_rate_hz: 1e8,
                theta: 0.0,
            },
            converter_alice: converter,
            converter_bob: converter,
            channel_alice: channel,
            channel_bob: channel,
            detector_alice: detector,
            detector_bob: detector,
            analysis_phase_alice: 0.0,
            analysis_phase_bob: 0.0,
            interference_visibility_alice: 0.9655,
            interference_visibility_bob: 0.98,
            insertion_loss_alice_db: 10.0,
            insertion_loss_bob_db: 15.5,
            z_basis_flip: false,
            x_basis_flip: true,
            pulses: 1_000_000_000,
            seed: 1,
        }
    }

    /// The calibrated scenario with 6.2 km of dispersion-shifted fiber per
    /// arm (12.4 km total): 0.21 dB/km attenuation plus a 1.05 dB
    /// polarization penalty per arm, and 25 ps arrival-time fluctuation at
    /// the switches.
    pub fn calibrated_fiber_12km() -> Self {
        let mut s = Self::calibrated_back_to_back();
        let fiber = FiberChannel {
            length_km: 6.2,
            atten_db_per_km: 0.21,
            pol_penalty_db: 1.05,
            arrival_sigma_ps: 25.0,
        };
        s.channel_alice = fiber;
        s.channel_bob = fiber;
        s
    }

    pub fn converter(&self, party: Party) -> &ConverterModel {
        match party {
            Party::Alice => &self.converter_alice,
            Party::Bob => &self.converter_bob,
        }
    }

    pub fn channel(&self, party: Party) -> &FiberChannel {
        match party {
            Party::Alice => &self.channel_alice,
            Party::Bob => &self.channel_bob,
        }
    }

    pub fn detector(&self, party: Party) -> &Detector {
        match party {
            Party::Alice => &self.detector_alice,
            Party::Bob => &self.detector_bob,
        }
    }

    pub fn insertion_loss_db(&self, party: Party) -> f64 {
        match party {
            Party::Alice => self.insertion_loss_alice_db,
            Party::Bob => self.insertion_loss_bob_db,
        }
    }

    /// Excess power transmission of a user circuit: the quoted port-to-port
    /// insertion loss minus the intrinsic basis split.
    pub fn circuit_excess_transmission(&self, party: Party) -> f64 {
        let excess_db = (self.insertion_loss_db(party) - BASIS_SPLIT_DB).max(0.0);
        10f64.powf(-excess_db / 10.0)
    }

    /// Converter with the channel's arrival-time misrouting folded into its
    /// effective extinction ratios.
    pub fn effective_converter(&self, party: Party) -> Result<ConverterModel, ExperimentError> {
        let base = self.converter(party);
        let channel = self.channel(party);
        let edge = base.eos.drive.edge_position_ps;
        let m_through = misroute_prob(channel.arrival_sigma_ps, edge)?;
        let m_cross = misroute_prob(channel.arrival_sigma_ps, base.delay_dt_ps - edge)?;
        let fold = |er_db: f64, m: f64| -> Result<f64, ExperimentError> {
            let c = crate::devices::eos_crosstalk(er_db)?;
            let leak = 1.0 - (1.0 - c) * (1.0 - m);
            Ok(if leak <= 0.0 {
                f64::INFINITY
            } else {
                10.0 * ((1.0 - leak) / leak).log10()
            })
        };
        let mut eff = *base;
        eff.eos.er_through_db = fold(base.eos.er_through_db, m_through)?;
        eff.eos.er_cross_db = fold(base.eos.er_cross_db, m_cross)?;
        Ok(eff)
    }
}

/// Outcome of converting and reconstructing one input state.
#[derive(Debug, Clone)]
pub struct ConversionOutcome {
    pub label: String,
    pub input: StateVector,
    /// The synthesized projective counts the reconstruction consumed.
    pub counts: CountSet,
    pub tomo: TomoResult,
}

/// Runs the single-qubit conversion experiment: each time-bin input state is
/// converted, collapsed onto the detector's path qubit, measured with
/// `scenario.pulses` shots per basis, and reconstructed by maximum
/// likelihood against its ideal path-encoded target.
pub fn run_single_qubit_conversion(
    scenario: &Scenario,
    inputs: &[(String, StateVector)],
) -> Result<Vec<ConversionOutcome>, ExperimentError> {
    let converter = scenario.effective_converter(Party::Alice)?;
    let detector = scenario.detector(Party::Alice);
    inputs
        .par_iter()
        .enumerate()
        .map(|(idx, (label, input))| {
            let slots = convert(input, &converter)?;
            let windowed = windowed_qubit(&slots, detector.window_ps, detector.jitter_fwhm_ps);
            let rho = windowed.normalized()?;
            let mut rng = substream(scenario.seed, domains::TOMO, idx as u64);
            let counts = run_tomography(&rho, scenario.pulses, true, &mut rng)?;
            let target = input.density();
            let tomo = mle_reconstruct(&counts, &MleConfig::default(), Some(&target))?;
            Ok(ConversionOutcome {
                label: label.clone(),
                input: input.clone(),
                counts,
                tomo,
            })
        })
        .collect()
}

/// The six cardinal time-bin states as labeled conversion inputs, prepared
/// by the on-chip state-preparation stage (TO-MZI split fraction plus MODL
/// TOPS phase).
pub fn cardinal_inputs() -> Vec<(String, StateVector)> {
    use std::f64::consts::{FRAC_PI_2, PI};
    [
        ("zero", 0.0, 0.0),
        ("one", 1.0, 0.0),
        ("plus", 0.5, 0.0),
        ("minus", 0.5, PI),
        ("plus_i", 0.5, FRAC_PI_2),
        ("minus_i", 0.5, -FRAC_PI_2),
    ]
    .into_iter()
    .map(|(label, split, phase)| {
        let state = prepare_time_bin(split, phase).expect("valid preparation settings");
        (label.to_string(), state)
    })
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statekit::fidelity;
    use approx::assert_relative_eq;

    #[test]
    fn excess_transmission_subtracts_basis_split() {
        let s = Scenario::calibrated_back_to_back();
        // 10 dB quoted − 3.01 dB split = 6.99 dB excess
        assert_relative_eq!(
            s.circuit_excess_transmission(Party::Alice),
            0.2,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            s.circuit_excess_transmission(Party::Bob),
            10f64.powf(-(15.5 - BASIS_SPLIT_DB) / 10.0),
            epsilon = 1e-15
        );
        // an ideal circuit with no quoted loss has no excess either
        assert_relative_eq!(
            Scenario::ideal().circuit_excess_transmission(Party::Alice),
            1.0
        );
    }

    #[test]
    fn er_to_visibility_mapping() {
        assert_relative_eq!(interference_er_to_visibility(12.0), 0.881, epsilon = 5e-4);
        assert_relative_eq!(interference_er_to_visibility(20.0), 0.980, epsilon = 5e-4);
    }

    #[test]
    fn effective_converter_folds_arrival_fluctuation() {
        let mut s = Scenario::calibrated_back_to_back();
        s.channel_alice.arrival_sigma_ps = 25.0;
        let eff = s.effective_converter(Party::Alice).unwrap();
        let c_base = crate::devices::eos_crosstalk(17.0).unwrap();
        let c_eff = crate::devices::eos_crosstalk(eff.eos.er_through_db).unwrap();
        let m = misroute_prob(25.0, 50.0).unwrap();
        assert_relative_eq!(c_eff, 1.0 - (1.0 - c_base) * (1.0 - m), epsilon = 1e-12);
        assert!(c_eff > c_base);

        // negligible fluctuation leaves the switch unchanged
        let s2 = Scenario::ideal();
        let eff2 = s2.effective_converter(Party::Bob).unwrap();
        let c2 = crate::devices::eos_crosstalk(eff2.eos.er_through_db).unwrap();
        assert_relative_eq!(
            c2,
            crate::devices::eos_crosstalk(200.0).unwrap(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn ideal_conversion_recovers_all_cardinal_states() {
        let mut s = Scenario::ideal();
        s.pulses = 1_000_000;
        let outcomes = run_single_qubit_conversion(&s, &cardinal_inputs()).unwrap();
        assert_eq!(outcomes.len(), 6);
        for o in &outcomes {
            let f = o.tomo.fidelity_vs_target.unwrap();
            assert!(f > 0.999, "{}: fidelity {f}", o.label);
        }
    }

    #[test]
    fn compensation_error_costs_the_expected_overlap() {
        // π/4 compensation error on |+⟩: pure-state overlap cos²(π/8)
        let mut s = Scenario::ideal();
        s.pulses = 2_000_000;
        s.converter_alice.compensation_phase = std::f64::consts::FRAC_PI_4;
        let inputs = vec![("plus".to_string(), crate::statekit::ket_plus())];
        let outcomes = run_single_qubit_conversion(&s, &inputs).unwrap();
        let f = outcomes[0].tomo.fidelity_vs_target.unwrap();
        let expected = (std::f64::consts::PI / 8.0).cos().powi(2);
        assert_relative_eq!(f, expected, epsilon = 2e-3);
    }

    #[test]
    fn calibrated_conversion_lands_in_the_reported_band() {
        let mut s = Scenario::calibrated_back_to_back();
        s.pulses = 100_000;
        let outcomes = run_single_qubit_conversion(&s, &cardinal_inputs()).unwrap();
        let avg: f64 = outcomes
            .iter()
            .map(|o| o.tomo.fidelity_vs_target.unwrap())
            .sum::<f64>()
            / outcomes.len() as f64;
        assert!(
            (0.955..=0.995).contains(&avg),
            "average fidelity {avg} out of band"
        );
        for o in &outcomes {
            assert!(o.tomo.fidelity_vs_target.unwrap() >= 0.95, "{}", o.label);
        }
    }

    #[test]
    fn windowed_pipeline_matches_direct_state_math() {
        // deterministic cross-check of the pipeline used by the experiment
        let s = Scenario::calibrated_back_to_back();
        let converter = s.effective_converter(Party::Alice).unwrap();
        let slots = convert(&crate::statekit::ket0(), &converter).unwrap();
        let rho = windowed_qubit(&slots, 200.0, 150.0).normalized().unwrap();
        let f = fidelity(&rho, &crate::statekit::ket0().density()).unwrap();
        // aligned weight (1-c) against leakage c·w on the wrong path
        let c = crate::devices::eos_crosstalk(converter.eos.er_through_db).unwrap();
        let w = crate::devices::slot_window_acceptance(
            100.0,
            200.0,
            crate::stochastics::fwhm_to_sigma(150.0),
        );
        let expected = (1.0 - c) / (1.0 - c + c * w);
        assert_relative_eq!(f, expected, epsilon = 1e-9);
    }
}
