//! Scenario file schema: a JSON document mirroring the library's
//! [`Scenario`] field for field, with units spelled out in the field names.
//! Unknown fields are rejected; validation reports every violation with its
//! field path.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use qconvsim::devices::{ConverterModel, DriveWaveform, EosModel};
use qconvsim::experiments::Scenario;
use qconvsim::stochastics::{Detector, FiberChannel, PairSource};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    pub mean_pairs_per_pulse: f64,
    pub rep_rate_hz: f64,
    pub theta_rad: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DriveFile {
    pub v0_volts: f64,
    pub v_pi_volts: f64,
    pub edge_position_ps: f64,
    pub edge_width_ps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ConverterFile {
    pub er_through_db: f64,
    pub er_cross_db: f64,
    pub drive: DriveFile,
    pub delay_dt_ps: f64,
    pub compensation_phase_rad: f64,
    pub excess_loss_long_db: f64,
    pub excess_loss_short_db: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ChannelFile {
    pub length_km: f64,
    pub atten_db_per_km: f64,
    pub pol_penalty_db: f64,
    pub arrival_sigma_ps: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct DetectorFile {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_fwhm_ps: f64,
    pub window_ps: f64,
}

/// On-disk scenario document.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub source: SourceFile,
    pub converter_alice: ConverterFile,
    pub converter_bob: ConverterFile,
    pub channel_alice: ChannelFile,
    pub channel_bob: ChannelFile,
    /// Exactly two entries: Alice's detectors, then Bob's.
    pub detectors: Vec<DetectorFile>,
    pub analysis_phase_alice_rad: f64,
    pub analysis_phase_bob_rad: f64,
    pub interference_visibility_alice: f64,
    pub interference_visibility_bob: f64,
    pub insertion_loss_alice_db: f64,
    pub insertion_loss_bob_db: f64,
    pub z_basis_flip: bool,
    pub x_basis_flip: bool,
    pub pulses: u64,
    pub seed: u64,
}

impl ScenarioFile {
    /// All schema violations, each tagged with its field path. Empty means
    /// valid.
    pub fn violations(&self) -> Vec<String> {
        let mut v = Vec::new();
        let mut need = |ok: bool, path: &str, msg: String| {
            if !ok {
                v.push(format!("{path}: {msg}"));
            }
        };

        need(
            self.source.mean_pairs_per_pulse >= 0.0,
            "source.mean_pairs_per_pulse",
            format!("must be >= 0, got {}", self.source.mean_pairs_per_pulse),
        );
        need(
            self.source.rep_rate_hz > 0.0,
            "source.rep_rate_hz",
            format!("must be > 0, got {}", self.source.rep_rate_hz),
        );

        for (name, c) in [
            ("converter_alice", &self.converter_alice),
            ("converter_bob", &self.converter_bob),
        ] {
            need(
                c.er_through_db >= 0.0,
                &format!("{name}.er_through_db"),
                format!("must be >= 0 dB, got {}", c.er_through_db),
            );
            need(
                c.er_cross_db >= 0.0,
                &format!("{name}.er_cross_db"),
                format!("must be >= 0 dB, got {}", c.er_cross_db),
            );
            need(
                c.delay_dt_ps > 0.0,
                &format!("{name}.delay_dt_ps"),
                format!("must be > 0 ps, got {}", c.delay_dt_ps),
            );
            need(
                c.drive.v_pi_volts > 0.0,
                &format!("{name}.drive.v_pi_volts"),
                format!("must be > 0 V, got {}", c.drive.v_pi_volts),
            );
            need(
                c.drive.edge_width_ps < c.delay_dt_ps,
                &format!("{name}.drive.edge_width_ps"),
                format!(
                    "edge must be steeper than the bin separation {} ps, got {}",
                    c.delay_dt_ps, c.drive.edge_width_ps
                ),
            );
            need(
                c.excess_loss_long_db >= 0.0,
                &format!("{name}.excess_loss_long_db"),
                format!("must be >= 0 dB, got {}", c.excess_loss_long_db),
            );
            need(
                c.excess_loss_short_db >= 0.0,
                &format!("{name}.excess_loss_short_db"),
                format!("must be >= 0 dB, got {}", c.excess_loss_short_db),
            );
        }

        for (name, ch) in [
            ("channel_alice", &self.channel_alice),
            ("channel_bob", &self.channel_bob),
        ] {
            need(
                ch.length_km >= 0.0,
                &format!("{name}.length_km"),
                format!("must be >= 0, got {}", ch.length_km),
            );
            need(
                ch.atten_db_per_km >= 0.0,
                &format!("{name}.atten_db_per_km"),
                format!("must be >= 0, got {}", ch.atten_db_per_km),
            );
            need(
                ch.pol_penalty_db >= 0.0,
                &format!("{name}.pol_penalty_db"),
                format!("must be >= 0, got {}", ch.pol_penalty_db),
            );
            need(
                ch.arrival_sigma_ps >= 0.0,
                &format!("{name}.arrival_sigma_ps"),
                format!("must be >= 0, got {}", ch.arrival_sigma_ps),
            );
        }

        need(
            self.detectors.len() == 2,
            "detectors",
            format!(
                "need exactly 2 entries (alice, bob), got {}",
                self.detectors.len()
            ),
        );
        for (i, d) in self.detectors.iter().enumerate() {
            need(
                (0.0..=1.0).contains(&d.efficiency),
                &format!("detectors[{i}].efficiency"),
                format!("must be in [0, 1], got {}", d.efficiency),
            );
            need(
                d.dark_rate_hz >= 0.0,
                &format!("detectors[{i}].dark_rate_hz"),
                format!("must be >= 0, got {}", d.dark_rate_hz),
            );
            need(
                d.jitter_fwhm_ps >= 0.0,
                &format!("detectors[{i}].jitter_fwhm_ps"),
                format!("must be >= 0, got {}", d.jitter_fwhm_ps),
            );
            need(
                d.window_ps > 0.0,
                &format!("detectors[{i}].window_ps"),
                format!("must be > 0, got {}", d.window_ps),
            );
        }

        for (path, value) in [
            (
                "interference_visibility_alice",
                self.interference_visibility_alice,
            ),
            (
                "interference_visibility_bob",
                self.interference_visibility_bob,
            ),
        ] {
            need(
                (0.0..=1.0).contains(&value),
                path,
                format!("must be in [0, 1], got {value}"),
            );
        }
        need(
            self.insertion_loss_alice_db >= 0.0,
            "insertion_loss_alice_db",
            format!("must be >= 0 dB, got {}", self.insertion_loss_alice_db),
        );
        need(
            self.insertion_loss_bob_db >= 0.0,
            "insertion_loss_bob_db",
            format!("must be >= 0 dB, got {}", self.insertion_loss_bob_db),
        );
        need(
            self.pulses > 0,
            "pulses",
            format!("must be > 0, got {}", self.pulses),
        );

        v
    }

    /// SHA-256 over the canonical (re-serialized) form: insensitive to
    /// formatting, sensitive to every field value.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("scenario serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }

    pub fn to_scenario(&self) -> Scenario {
        let converter = |c: &ConverterFile| ConverterModel {
            eos: EosModel {
                er_through_db: c.er_through_db,
                er_cross_db: c.er_cross_db,
                drive: DriveWaveform {
                    v0_volts: c.drive.v0_volts,
                    v_pi_volts: c.drive.v_pi_volts,
                    edge_position_ps: c.drive.edge_position_ps,
                    edge_width_ps: c.drive.edge_width_ps,
                },
            },
            delay_dt_ps: c.delay_dt_ps,
            compensation_phase: c.compensation_phase_rad,
            excess_loss_long_db: c.excess_loss_long_db,
            excess_loss_short_db: c.excess_loss_short_db,
        };
        let channel = |ch: &ChannelFile| FiberChannel {
            length_km: ch.length_km,
            atten_db_per_km: ch.atten_db_per_km,
            pol_penalty_db: ch.pol_penalty_db,
            arrival_sigma_ps: ch.arrival_sigma_ps,
        };
        let detector = |d: &DetectorFile| Detector {
            efficiency: d.efficiency,
            dark_rate_hz: d.dark_rate_hz,
            jitter_fwhm_ps: d.jitter_fwhm_ps,
            window_ps: d.window_ps,
        };
        Scenario {
            source: PairSource {
                mean_pairs_per_pulse: self.source.mean_pairs_per_pulse,
                rep_rate_hz: self.source.rep_rate_hz,
                theta: self.source.theta_rad,
            },
            converter_alice: converter(&self.converter_alice),
            converter_bob: converter(&self.converter_bob),
            channel_alice: channel(&self.channel_alice),
            channel_bob: channel(&self.channel_bob),
            detector_alice: detector(&self.detectors[0]),
            detector_bob: detector(&self.detectors[1]),
            analysis_phase_alice: self.analysis_phase_alice_rad,
            analysis_phase_bob: self.analysis_phase_bob_rad,
            interference_visibility_alice: self.interference_visibility_alice,
            interference_visibility_bob: self.interference_visibility_bob,
            insertion_loss_alice_db: self.insertion_loss_alice_db,
            insertion_loss_bob_db: self.insertion_loss_bob_db,
            z_basis_flip: self.z_basis_flip,
            x_basis_flip: self.x_basis_flip,
            pulses: self.pulses,
            seed: self.seed,
        }
    }

    /// Mirrors a library scenario into the file schema; used to emit and
    /// cross-check the shipped scenario files.
    #[cfg_attr(not(test), allow(dead_code))]
    pub fn from_scenario(s: &Scenario) -> Self {
        let converter = |c: &ConverterModel| ConverterFile {
            er_through_db: c.eos.er_through_db,
            er_cross_db: c.eos.er_cross_db,
            drive: DriveFile {
                v0_volts: c.eos.drive.v0_volts,
                v_pi_volts: c.eos.drive.v_pi_volts,
                edge_position_ps: c.eos.drive.edge_position_ps,
                edge_width_ps: c.eos.drive.edge_width_ps,
            },
            delay_dt_ps: c.delay_dt_ps,
            compensation_phase_rad: c.compensation_phase,
            excess_loss_long_db: c.excess_loss_long_db,
            excess_loss_short_db: c.excess_loss_short_db,
        };
        let channel = |ch: &FiberChannel| ChannelFile {
            length_km: ch.length_km,
            atten_db_per_km: ch.atten_db_per_km,
            pol_penalty_db: ch.pol_penalty_db,
            arrival_sigma_ps: ch.arrival_sigma_ps,
        };
        let detector = |d: &Detector| DetectorFile {
            efficiency: d.efficiency,
            dark_rate_hz: d.dark_rate_hz,
            jitter_fwhm_ps: d.jitter_fwhm_ps,
            window_ps: d.window_ps,
        };
        Self {
            source: SourceFile {
                mean_pairs_per_pulse: s.source.mean_pairs_per_pulse,
                rep_rate_hz: s.source.rep_rate_hz,
                theta_rad: s.source.theta,
            },
            converter_alice: converter(&s.converter_alice),
            converter_bob: converter(&s.converter_bob),
            channel_alice: channel(&s.channel_alice),
            channel_bob: channel(&s.channel_bob),
            detectors: vec![detector(&s.detector_alice), detector(&s.detector_bob)],
            analysis_phase_alice_rad: s.analysis_phase_alice,
            analysis_phase_bob_rad: s.analysis_phase_bob,
            interference_visibility_alice: s.interference_visibility_alice,
            interference_visibility_bob: s.interference_visibility_bob,
            insertion_loss_alice_db: s.insertion_loss_alice_db,
            insertion_loss_bob_db: s.insertion_loss_bob_db,
            z_basis_flip: s.z_basis_flip,
            x_basis_flip: s.x_basis_flip,
            pulses: s.pulses,
            seed: s.seed,
        }
    }
}
