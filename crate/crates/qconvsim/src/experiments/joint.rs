//! Two-photon coincidence engine shared by the fringe and QKD experiments.
//!
//! The source emits `(|t0,t0⟩ + e^{i2θ}|t1,t1⟩)/√2`; each photon passes its
//! user's converter and the four-output analysis circuit (BS1/BS2 select the
//! basis passively, BS3 interferes the X arms). The engine evaluates the
//! exact per-pair joint probability of every (output A, output B, slot pair)
//! combination, folds in channel/circuit transmissions, detector efficiency,
//! time-tag spreads and the coincidence window, and exposes per-pulse
//! category probabilities that a multinomial sampler turns into counts.
//!
//! Multi-pair pulses contribute phase-uncorrelated accidentals at O(μ²);
//! higher-order simultaneous-click terms are beyond the model's resolution
//! and are truncated.

use num_complex::Complex64;

use super::{Party, Scenario};
use crate::devices::{eos_crosstalk, slot_window_acceptance};
use crate::stochastics::{misroute_prob, survival};

/// Amplitudes from input path (column) to analysis output (row): BS1/BS2
/// split each path between its Z output and the X arm, BS3 interferes the
/// two X arms. Outputs 0 and 3 measure Z, outputs 1 and 2 measure X.
fn output_amplitudes() -> [[Complex64; 2]; 4] {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = Complex64::new(0.0, 0.0);
    [
        [Complex64::new(s, 0.0), z],
        [Complex64::new(0.0, 0.5), Complex64::new(-0.5, 0.0)],
        [Complex64::new(-0.5, 0.0), Complex64::new(0.0, 0.5)],
        [z, Complex64::new(s, 0.0)],
    ]
}

/// One user's photon parameters after converter, channel and circuit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct PartyModel {
    /// Effective leak fraction of the through state (switch crosstalk
    /// compounded with arrival-time misrouting).
    leak_through: f64,
    leak_cross: f64,
    /// Power transmission of the delay arms.
    g_long2: f64,
    g_short2: f64,
    /// Net phase on the aligned path-1 amplitude: analysis − compensation.
    chi: f64,
    visibility: f64,
    /// Channel × circuit-excess × detector-efficiency power transmission.
    transmission: f64,
    tag_sigma_ps: f64,
    dark_per_gate: f64,
}

impl PartyModel {
    pub(crate) fn from_scenario(
        scenario: &Scenario,
        party: Party,
        analysis_phase: f64,
    ) -> Result<Self, super::ExperimentError> {
        let converter = scenario.converter(party);
        let channel = scenario.channel(party);
        let detector = scenario.detector(party);

        let c_t = eos_crosstalk(converter.eos.er_through_db)?;
        let c_x = eos_crosstalk(converter.eos.er_cross_db)?;
        let edge = converter.eos.drive.edge_position_ps;
        let m_t = misroute_prob(channel.arrival_sigma_ps, edge)?;
        let m_x = misroute_prob(channel.arrival_sigma_ps, converter.delay_dt_ps - edge)?;

        let visibility = match party {
            Party::Alice => scenario.interference_visibility_alice,
            Party::Bob => scenario.interference_visibility_bob,
        };

        Ok(Self {
            leak_through: 1.0 - (1.0 - c_t) * (1.0 - m_t),
            leak_cross: 1.0 - (1.0 - c_x) * (1.0 - m_x),
            g_long2: 10f64.powf(-converter.excess_loss_long_db / 10.0),
            g_short2: 10f64.powf(-converter.excess_loss_short_db / 10.0),
            chi: analysis_phase - converter.compensation_phase,
            visibility,
            transmission: survival(channel.total_loss_db())?
                * scenario.circuit_excess_transmission(party)
                * detector.efficiency,
            tag_sigma_ps: (detector.jitter_sigma_ps().powi(2) + channel.arrival_sigma_ps.powi(2))
                .sqrt(),
            dark_per_gate: detector.dark_prob_per_gate(),
        })
    }

    /// Marginal routing probability of this photon to output `o`, per pair,
    /// before transmission.
    fn output_marginal(&self, u: &[[Complex64; 2]; 4], o: usize) -> f64 {
        let p0 = u[o][0].norm_sqr();
        let p1 = u[o][1].norm_sqr();
        0.5 * ((1.0 - self.leak_through) * self.g_long2 * p0
            + self.leak_through * self.g_short2 * p1)
            + 0.5
                * ((1.0 - self.leak_cross) * self.g_short2 * p1
                    + self.leak_cross * self.g_long2 * p0)
    }

    /// Distribution of this photon over temporal slots (early, aligned,
    /// late), per pair, before transmission.
    fn slot_weights(&self) -> [f64; 3] {
        [
            0.5 * self.leak_through * self.g_short2,
            0.5 * ((1.0 - self.leak_through) * self.g_long2
                + (1.0 - self.leak_cross) * self.g_short2),
            0.5 * self.leak_cross * self.g_long2,
        ]
    }
}

/// Per-pulse outcome probabilities of a configured two-user experiment.
#[derive(Debug, Clone)]
pub(crate) struct CoincidenceTable {
    /// True-pair coincidence probability per pulse, indexed `[out_a][out_b]`.
    pub p_true: [[f64; 4]; 4],
    /// Accidental coincidence probability per pulse (multi-pair + darks).
    pub p_accidental: [[f64; 4]; 4],
}

impl CoincidenceTable {
    /// Evaluates the table at the given operating phases. The coincidence
    /// window is Alice's detector window; both scenarios ship equal values.
    pub(crate) fn compute(
        scenario: &Scenario,
        theta: f64,
        phase_a: f64,
        phase_b: f64,
    ) -> Result<Self, super::ExperimentError> {
        let a = PartyModel::from_scenario(scenario, Party::Alice, phase_a)?;
        let b = PartyModel::from_scenario(scenario, Party::Bob, phase_b)?;
        let u = output_amplitudes();
        let delay = scenario.converter_alice.delay_dt_ps;
        let window = scenario.detector_alice.window_ps;
        let mu = scenario.source.mean_pairs_per_pulse;

        let sigma_c = (a.tag_sigma_ps.powi(2) + b.tag_sigma_ps.powi(2)).sqrt();
        let acc = |delta_ps: f64| slot_window_acceptance(delta_ps, window, sigma_c);
        let acc0 = acc(0.0);
        let acc1 = acc(delay);

        // aligned amplitudes per branch
        let a0_a = ((1.0 - a.leak_through) * a.g_long2).sqrt();
        let a1_a = ((1.0 - a.leak_cross) * a.g_short2).sqrt();
        let a0_b = ((1.0 - b.leak_through) * b.g_long2).sqrt();
        let a1_b = ((1.0 - b.leak_cross) * b.g_short2).sqrt();
        let branch_phase = Complex64::from_polar(1.0, 2.0 * theta + a.chi + b.chi);
        let v_joint = a.visibility * b.visibility;

        let mut p_true = [[0.0f64; 4]; 4];
        for (oa, row) in p_true.iter_mut().enumerate() {
            for (ob, p) in row.iter_mut().enumerate() {
                // coherent aligned-aligned block: two interfering branches
                let amp0 = a0_a * a0_b * (u[oa][0] * u[ob][0]);
                let amp1 = a1_a * a1_b * (u[oa][1] * u[ob][1]) * branch_phase;
                let coherent =
                    0.5 * (amp0.norm_sqr() + amp1.norm_sqr()) + v_joint * (amp0 * amp1.conj()).re;
                let mut prob = coherent * acc0;

                let pa0 = u[oa][0].norm_sqr();
                let pa1 = u[oa][1].norm_sqr();
                let pb0 = u[ob][0].norm_sqr();
                let pb1 = u[ob][1].norm_sqr();

                // leaked photon paired with an aligned partner (±Δt offsets)
                prob += 0.5
                    * a.leak_through
                    * a.g_short2
                    * (1.0 - b.leak_through)
                    * b.g_long2
                    * pa1
                    * pb0
                    * acc1;
                prob += 0.5
                    * (1.0 - a.leak_through)
                    * a.g_long2
                    * b.leak_through
                    * b.g_short2
                    * pa0
                    * pb1
                    * acc1;
                prob += 0.5
                    * a.leak_cross
                    * a.g_long2
                    * (1.0 - b.leak_cross)
                    * b.g_short2
                    * pa0
                    * pb1
                    * acc1;
                prob += 0.5
                    * (1.0 - a.leak_cross)
                    * a.g_short2
                    * b.leak_cross
                    * b.g_long2
                    * pa1
                    * pb0
                    * acc1;

                // both photons leaked in the same switch state (aligned tags)
                prob += 0.5
                    * a.leak_through
                    * a.g_short2
                    * b.leak_through
                    * b.g_short2
                    * pa1
                    * pb1
                    * acc0;
                prob +=
                    0.5 * a.leak_cross * a.g_long2 * b.leak_cross * b.g_long2 * pa0 * pb0 * acc0;

                *p = mu * a.transmission * b.transmission * prob;
            }
        }

        // accidental window acceptance for uncorrelated photons: average the
        // pair acceptance over both photons' slot distributions
        let slots_a = a.slot_weights();
        let slots_b = b.slot_weights();
        let norm_a: f64 = slots_a.iter().sum();
        let norm_b: f64 = slots_b.iter().sum();
        let mut acc_uncorr = 0.0;
        for (i, wa) in slots_a.iter().enumerate() {
            for (j, wb) in slots_b.iter().enumerate() {
                let delta = (i as f64 - j as f64) * delay;
                acc_uncorr += wa / norm_a * wb / norm_b * acc(delta);
            }
        }

        let mut p_accidental = [[0.0f64; 4]; 4];
        for (oa, row) in p_accidental.iter_mut().enumerate() {
            for (ob, p) in row.iter_mut().enumerate() {
                let photon_a = mu * a.transmission * a.output_marginal(&u, oa);
                let photon_b = mu * b.transmission * b.output_marginal(&u, ob);
                // cross-pair coincidences: E[k(k−1)] = μ² for Poisson pairs
                let multi_pair = photon_a * photon_b * acc_uncorr;
                // dark-assisted coincidences
                let darks = a.dark_per_gate * photon_b
                    + photon_a * b.dark_per_gate
                    + a.dark_per_gate * b.dark_per_gate;
                *p = multi_pair + darks;
            }
        }

        Ok(Self {
            p_true,
            p_accidental,
        })
    }

    /// Coincidence probability (true + accidental) for one output pair.
    #[cfg(test)]
    pub(crate) fn coincidence_prob(&self, out_a: usize, out_b: usize) -> f64 {
        self.p_true[out_a][out_b] + self.p_accidental[out_a][out_b]
    }

    #[cfg(test)]
    pub(crate) fn total_coincidence_prob(&self) -> f64 {
        let mut total = 0.0;
        for oa in 0..4 {
            for ob in 0..4 {
                total += self.coincidence_prob(oa, ob);
            }
        }
        total
    }
}

/// Coincidence counts sampled from a [`CoincidenceTable`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct CoincidenceCounts {
    pub counts: [[u64; 4]; 4],
    pub pulses: u64,
}

/// Draws multinomial per-pulse outcomes: the 16 true and 16 accidental
/// coincidence categories are sampled by chained conditional binomials, so
/// the joint distribution is exactly multinomial and fully determined by
/// the RNG stream.
pub(crate) fn sample_coincidences(
    table: &CoincidenceTable,
    pulses: u64,
    rng: &mut impl rand::Rng,
) -> CoincidenceCounts {
    let mut counts = [[0u64; 4]; 4];
    let mut remaining = pulses;
    let mut p_rest = 1.0f64;
    let mut categories = Vec::with_capacity(32);
    for oa in 0..4 {
        for ob in 0..4 {
            categories.push((oa, ob, table.p_true[oa][ob]));
        }
    }
    for oa in 0..4 {
        for ob in 0..4 {
            categories.push((oa, ob, table.p_accidental[oa][ob]));
        }
    }
    for (oa, ob, p) in categories {
        // probabilities below 1e-18 cannot produce a count at any feasible
        // pulse budget and would underflow the sampler
        if remaining == 0 || p <= 1e-18 {
            p_rest -= p;
            continue;
        }
        let cond = (p / p_rest).clamp(1e-18, 1.0);
        let n = crate::stochastics::draw_binomial(remaining, cond, rng);
        counts[oa][ob] += n;
        remaining -= n;
        p_rest -= p;
    }
    CoincidenceCounts { counts, pulses }
}
