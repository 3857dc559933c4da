//! Monte Carlo layer: photon-pair statistics, channel loss, switch timing
//! error, detector clicks and coincidence counting.
//!
//! Determinism contract: every stochastic operation takes an explicit RNG
//! handle; there is no global RNG state. Independent trials (pulses, grid
//! points, seeds) draw from substreams derived from `(master seed, domain,
//! index)` via [`substream`], so parallel and sequential execution produce
//! identical tallies.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StochasticsError {
    #[error("mean pair number must be nonnegative, got {0}")]
    NegativeMean(f64),
    #[error("loss must be nonnegative dB, got {0}")]
    NegativeLoss(f64),
    #[error("timing spread must be nonnegative, got {0}")]
    NegativeSigma(f64),
    #[error("probability out of range: {0}")]
    InvalidProbability(f64),
}

/// Gaussian FWHM → standard deviation: `σ = FWHM / (2√(2 ln 2))`.
pub fn fwhm_to_sigma(fwhm: f64) -> f64 {
    fwhm / (2.0 * (2.0 * std::f64::consts::LN_2).sqrt())
}

/// Standard normal CDF via `erfc`.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

/// Deterministic per-trial RNG substream: the stream is fully determined by
/// `(seed, domain, index)`, so trials can run in any order or in parallel.
pub fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    key[16..24].copy_from_slice(&index.to_le_bytes());
    key[24..32].copy_from_slice(&0x9e37_79b9_7f4a_7c15u64.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Pulsed parametric photon-pair source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairSource {
    /// Mean pairs per pump pulse (μ).
    pub mean_pairs_per_pulse: f64,
    pub rep_rate_hz: f64,
    /// Source phase θ of the two-photon state.
    pub theta: f64,
}

/// Fiber link between the source and one user.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiberChannel {
    pub length_km: f64,
    pub atten_db_per_km: f64,
    pub pol_penalty_db: f64,
    /// Gaussian fluctuation of the photon arrival time at the switch, ps.
    pub arrival_sigma_ps: f64,
}

impl FiberChannel {
    /// Back-to-back link: no fiber, no polarization penalty, negligible
    /// arrival fluctuation.
    pub fn back_to_back() -> Self {
        Self {
            length_km: 0.0,
            atten_db_per_km: 0.0,
            pol_penalty_db: 0.0,
            arrival_sigma_ps: 0.0,
        }
    }

    pub fn total_loss_db(&self) -> f64 {
        self.length_km * self.atten_db_per_km + self.pol_penalty_db
    }
}

/// Single-photon detector: efficiency, darks, Gaussian jitter and the
/// acceptance window half-width (clicks are kept within `±window_ps` of the
/// expected arrival).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detector {
    pub efficiency: f64,
    pub dark_rate_hz: f64,
    pub jitter_fwhm_ps: f64,
    pub window_ps: f64,
}

impl Detector {
    pub fn jitter_sigma_ps(&self) -> f64 {
        fwhm_to_sigma(self.jitter_fwhm_ps)
    }

    /// Dark-count probability per gate; the gate spans `±window_ps`.
    pub fn dark_prob_per_gate(&self) -> f64 {
        self.dark_rate_hz * 2.0 * self.window_ps * 1e-12
    }
}

/// Number of pairs generated in one pulse, `k ~ Poisson(μ)`.
pub fn draw_pairs(mu: f64, rng: &mut impl Rng) -> Result<u32, StochasticsError> {
    if mu < 0.0 || mu.is_nan() {
        return Err(StochasticsError::NegativeMean(mu));
    }
    if mu == 0.0 {
        return Ok(0);
    }
    let poisson = Poisson::new(mu).expect("mu validated positive");
    Ok(poisson.sample(rng) as u32)
}

/// Power survival probability of a loss in dB: `p = 10^(−loss/10)`.
pub fn survival(loss_db: f64) -> Result<f64, StochasticsError> {
    if loss_db < 0.0 || loss_db.is_nan() {
        return Err(StochasticsError::NegativeLoss(loss_db));
    }
    Ok(10f64.powf(-loss_db / 10.0))
}

/// Probability that arrival-time fluctuation of spread `σ` pushes a photon
/// across a switch edge `offset` away: `P = ½·erfc(offset / (σ√2))`.
pub fn misroute_prob(arrival_sigma_ps: f64, edge_offset_ps: f64) -> Result<f64, StochasticsError> {
    if arrival_sigma_ps < 0.0 || arrival_sigma_ps.is_nan() {
        return Err(StochasticsError::NegativeSigma(arrival_sigma_ps));
    }
    if edge_offset_ps < 0.0 || edge_offset_ps.is_nan() {
        return Err(StochasticsError::NegativeSigma(edge_offset_ps));
    }
    if arrival_sigma_ps == 0.0 {
        return Ok(if edge_offset_ps > 0.0 { 0.0 } else { 0.5 });
    }
    Ok(0.5 * libm::erfc(edge_offset_ps / (arrival_sigma_ps * std::f64::consts::SQRT_2)))
}

/// One detector click: pulse index, detector id and jittered time tag.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Click {
    pub pulse: u64,
    pub detector: usize,
    pub tag_ps: f64,
}

/// Detection attempt for a photon arriving with probability `arrival_prob`
/// at `true_time_ps`. Click probability is
/// `1 − (1 − η·arrival_prob)(1 − p_dark)`; the returned tag is the true time
/// plus Gaussian jitter (dark clicks tag at the window center).
pub fn detect(
    arrival_prob: f64,
    true_time_ps: f64,
    d: &Detector,
    rng: &mut impl Rng,
) -> Result<Option<f64>, StochasticsError> {
    if !(0.0..=1.0).contains(&arrival_prob) {
        return Err(StochasticsError::InvalidProbability(arrival_prob));
    }
    let p_photon = d.efficiency * arrival_prob;
    let p_dark = d.dark_prob_per_gate();
    let u: f64 = rng.gen();
    if u < p_photon {
        let jitter = if d.jitter_fwhm_ps > 0.0 {
            let z: f64 = rng.sample(rand_distr::StandardNormal);
            z * d.jitter_sigma_ps()
        } else {
            0.0
        };
        Ok(Some(true_time_ps + jitter))
    } else if u < p_photon + (1.0 - p_photon) * p_dark {
        Ok(Some(0.0))
    } else {
        Ok(None)
    }
}

/// Number of shifted pulse pairings pooled into the accidental estimate.
pub const ACCIDENTAL_OFFSETS: u64 = 64;

/// Aggregated counting result of a two-party run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tally {
    /// Singles per detector, one slot per detector id on each side.
    pub singles_a: Vec<u64>,
    pub singles_b: Vec<u64>,
    /// Coincidences per (detector a, detector b) pair, row-major.
    pub coincidences: Vec<u64>,
    /// Raw accidental count pooled over [`ACCIDENTAL_OFFSETS`] deliberately
    /// offset pulse pairings; divide by the offset count for the per-pulse
    /// accidental estimate.
    pub accidentals_estimate: u64,
    pub elapsed_pulses: u64,
}

impl Tally {
    pub fn new(n_det_a: usize, n_det_b: usize, elapsed_pulses: u64) -> Self {
        Self {
            singles_a: vec![0; n_det_a],
            singles_b: vec![0; n_det_b],
            coincidences: vec![0; n_det_a * n_det_b],
            accidentals_estimate: 0,
            elapsed_pulses,
        }
    }

    pub fn coincidence(&self, det_a: usize, det_b: usize) -> u64 {
        self.coincidences[det_a * self.singles_b.len() + det_b]
    }

    pub fn total_coincidences(&self) -> u64 {
        self.coincidences.iter().sum()
    }

    /// Accidental coincidences normalized to a single pulse pairing.
    pub fn accidentals_per_pairing(&self) -> f64 {
        self.accidentals_estimate as f64 / ACCIDENTAL_OFFSETS as f64
    }

    /// Coincidence-to-accidental ratio.
    pub fn car(&self) -> f64 {
        self.total_coincidences() as f64 / self.accidentals_per_pairing().max(f64::MIN_POSITIVE)
    }
}

/// Counts coincidences between two click streams sharing the pulse clock:
/// a coincidence is one click on each side in the same pulse with
/// `|Δtag| ≤ window_ps`. The accidental estimate repeats the match with side
/// B shifted by 1..=[`ACCIDENTAL_OFFSETS`] pulses; pooling several shifted
/// pairings keeps the estimate usable at low rates. Streams must be sorted
/// by pulse index.
pub fn coincide(
    clicks_a: &[Click],
    clicks_b: &[Click],
    window_ps: f64,
    n_det_a: usize,
    n_det_b: usize,
    elapsed_pulses: u64,
) -> Tally {
    let mut tally = Tally::new(n_det_a, n_det_b, elapsed_pulses);
    for click in clicks_a {
        tally.singles_a[click.detector] += 1;
    }
    for click in clicks_b {
        tally.singles_b[click.detector] += 1;
    }

    let matched = |offset: u64, tally: &mut Tally, record: bool| {
        let mut j = 0usize;
        for a in clicks_a {
            let target = a.pulse + offset;
            while j < clicks_b.len() && clicks_b[j].pulse < target {
                j += 1;
            }
            let mut k = j;
            while k < clicks_b.len() && clicks_b[k].pulse == target {
                if (a.tag_ps - clicks_b[k].tag_ps).abs() <= window_ps {
                    if record {
                        tally.coincidences[a.detector * n_det_b + clicks_b[k].detector] += 1;
                    } else {
                        tally.accidentals_estimate += 1;
                    }
                }
                k += 1;
            }
        }
    };
    matched(0, &mut tally, true);
    for offset in 1..=ACCIDENTAL_OFFSETS {
        matched(offset, &mut tally, false);
    }
    tally
}

/// Binomial draw that stays inside the regime the library sampler handles:
/// trial counts above `i32::MAX` are split into independent chunks (the sum
/// of independent binomials with equal `p` is binomial in the summed trial
/// count, so the distribution is unchanged).
pub fn draw_binomial(n: u64, p: f64, rng: &mut impl Rng) -> u64 {
    use rand_distr::{Binomial, Distribution};
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    const CHUNK: u64 = i32::MAX as u64;
    let mut total = 0u64;
    let mut remaining = n;
    while remaining > 0 {
        let take = remaining.min(CHUNK);
        total += Binomial::new(take, p)
            .expect("validated probability")
            .sample(rng);
        remaining -= take;
    }
    total
}

/// Measures the coincidence-to-accidental ratio of a bare pair source at
/// each mean pair number in `mus`, with ideal detection on both sides:
/// true coincidences scale with μ while multi-pair accidentals scale with
/// μ², so the returned CARs fall as μ grows.
pub fn car_sweep(mus: &[f64], pulses: u64, seed: u64) -> Vec<f64> {
    let detector = Detector {
        efficiency: 1.0,
        dark_rate_hz: 0.0,
        jitter_fwhm_ps: 0.0,
        window_ps: 300.0,
    };
    mus.iter()
        .enumerate()
        .map(|(idx, &mu)| {
            let mut rng = substream(seed, idx as u64, 0);
            let mut clicks_a = Vec::new();
            let mut clicks_b = Vec::new();
            for pulse in 0..pulses {
                let k = draw_pairs(mu, &mut rng).expect("mu nonnegative");
                if k == 0 {
                    continue;
                }
                if let Some(tag) = detect(1.0, 0.0, &detector, &mut rng).expect("valid prob") {
                    clicks_a.push(Click {
                        pulse,
                        detector: 0,
                        tag_ps: tag,
                    });
                }
                if let Some(tag) = detect(1.0, 0.0, &detector, &mut rng).expect("valid prob") {
                    clicks_b.push(Click {
                        pulse,
                        detector: 0,
                        tag_ps: tag,
                    });
                }
            }
            coincide(&clicks_a, &clicks_b, 300.0, 1, 1, pulses).car()
        })
        .collect()
}
