//! Transfer-matrix models of the on-chip components (beam splitters, TO-MZI,
//! TOPS, EOS drive) and the composite time-bin ↔ path encoding converter,
//! including finite switch extinction and temporal-slot bookkeeping.
//!
//! Conventions, fixed once:
//! - Beam splitters carry `i` on the cross terms:
//!   `[[√(1−r), i√r], [i√r, √(1−r)]]` for cross power fraction `r`.
//! - The switch routes the `t0` bin to the long delay arm (which becomes
//!   path `|0⟩`) and the `t1` bin to the short arm (path `|1⟩`).
//! - Switch leakage is incoherent population in temporally shifted slots:
//!   `t0` leaked to the short arm exits one `Δt` early on path 1, `t1`
//!   leaked to the long arm exits one `Δt` late on path 0. Leakage never
//!   interferes with the aligned block.

use num_complex::Complex64;
use thiserror::Error;

use crate::statekit::{DensityMatrix, StateVector};
use crate::stochastics::{fwhm_to_sigma, normal_cdf};

#[derive(Debug, Error, PartialEq)]
pub enum DeviceError {
    #[error("cross power fraction must be in [0, 1], got {0}")]
    InvalidSplitRatio(f64),
    #[error("extinction ratio must be nonnegative dB, got {0}")]
    NegativeExtinctionRatio(f64),
    #[error(
        "drive edge width {edge_width_ps} ps must be below the bin separation {delay_dt_ps} ps"
    )]
    EdgeTooSlow {
        edge_width_ps: f64,
        delay_dt_ps: f64,
    },
    #[error("half-wave voltage must be positive, got {0}")]
    NonPositiveHalfWaveVoltage(f64),
    #[error("delay must be positive, got {0} ps")]
    NonPositiveDelay(f64),
    #[error(transparent)]
    State(#[from] crate::statekit::StateError),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// 2×2 complex amplitude transfer matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transfer2 {
    entries: [Complex64; 4],
}

impl Transfer2 {
    pub fn new(entries: [Complex64; 4]) -> Self {
        Self { entries }
    }

    pub fn identity() -> Self {
        Self::new([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)])
    }

    /// Phase `e^{iφ}` on the second mode.
    pub fn phase_on_mode1(phi: f64) -> Self {
        Self::new([
            c(1.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            Complex64::from_polar(1.0, phi),
        ])
    }

    pub fn entries(&self) -> &[Complex64; 4] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * 2 + j]
    }

    /// `self · other` (other acts first).
    pub fn compose(&self, other: &Self) -> Self {
        let a = &self.entries;
        let b = &other.entries;
        Self::new([
            a[0] * b[0] + a[1] * b[2],
            a[0] * b[1] + a[1] * b[3],
            a[2] * b[0] + a[3] * b[2],
            a[2] * b[1] + a[3] * b[3],
        ])
    }

    pub fn apply(&self, v: &StateVector) -> StateVector {
        assert_eq!(v.dim(), 2, "Transfer2 acts on single-qubit vectors");
        let a = v.amplitude(0);
        let b = v.amplitude(1);
        StateVector::qubit(
            self.entries[0] * a + self.entries[1] * b,
            self.entries[2] * a + self.entries[3] * b,
        )
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        let e = &self.entries;
        let dot_cols = e[0].conj() * e[1] + e[2].conj() * e[3];
        let n0 = e[0].norm_sqr() + e[2].norm_sqr();
        let n1 = e[1].norm_sqr() + e[3].norm_sqr();
        (n0 - 1.0).abs() <= tol && (n1 - 1.0).abs() <= tol && dot_cols.norm() <= tol
    }
}

/// Beam splitter with cross power fraction `r`, `i` on the cross terms.
pub fn bs_transfer(r: f64) -> Result<Transfer2, DeviceError> {
    if !(0.0..=1.0).contains(&r) || r.is_nan() {
        return Err(DeviceError::InvalidSplitRatio(r));
    }
    let t = (1.0 - r).sqrt();
    let x = r.sqrt();
    Ok(Transfer2::new([c(t, 0.0), c(0.0, x), c(0.0, x), c(t, 0.0)]))
}

/// Thermo-optic MZI configuration: the target cross power fraction and the
/// internal phase that realizes it between two 50:50 couplers
/// (`r = cos²(φ_int/2)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MziSetting {
    pub cross_fraction: f64,
    pub internal_phase: f64,
}

impl MziSetting {
    pub fn from_cross_fraction(r: f64) -> Result<Self, DeviceError> {
        if !(0.0..=1.0).contains(&r) || r.is_nan() {
            return Err(DeviceError::InvalidSplitRatio(r));
        }
        Ok(Self {
            cross_fraction: r,
            internal_phase: 2.0 * r.sqrt().acos(),
        })
    }
}

/// Transfer matrix of a configured TO-MZI.
///
/// Physically the device is two 50:50 couplers around the internal phase; its
/// port phases are calibrated out against the rest of the circuit, so the
/// effective matrix is the variable coupler with the configured cross power.
/// `r = 0` is a routing identity, `r = 1` a full swap (with the cross phase
/// `i`).
pub fn mzi_transfer(setting: &MziSetting) -> Transfer2 {
    bs_transfer(setting.cross_fraction).expect("setting holds a validated fraction")
}

/// Thermo-optic phase shifter setting.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TopsSetting {
    pub phase: f64,
}

impl TopsSetting {
    pub fn new(phase: f64) -> Self {
        Self { phase }
    }

    /// Linear heater map `phase = κ · power`; the curve shape only matters
    /// for plotting against a power axis, never for visibilities.
    pub fn from_heater_power(power_mw: f64, kappa_rad_per_mw: f64) -> Self {
        Self {
            phase: kappa_rad_per_mw * power_mw,
        }
    }

    /// Phase reduced to [0, 2π) for comparisons.
    pub fn phase_mod_2pi(&self) -> f64 {
        self.phase.rem_euclid(std::f64::consts::TAU)
    }
}

/// Prepares `√(1−r)|t0⟩ + e^{iφ}√r|t1⟩`: the TO-MZI sets the bin intensity
/// split (cross port feeds the long arm, i.e. the late bin) and the MODL
/// TOPS sets the relative phase.
pub fn prepare_time_bin(r: f64, phi: f64) -> Result<StateVector, DeviceError> {
    if !(0.0..=1.0).contains(&r) || r.is_nan() {
        return Err(DeviceError::InvalidSplitRatio(r));
    }
    Ok(StateVector::qubit(
        c((1.0 - r).sqrt(), 0.0),
        Complex64::from_polar(r.sqrt(), phi),
    ))
}

/// Crosstalk power fraction of a switch state with the given extinction
/// ratio: `c = 1/(1 + 10^(ER/10))`, in (0, 0.5].
pub fn eos_crosstalk(er_db: f64) -> Result<f64, DeviceError> {
    if er_db < 0.0 || er_db.is_nan() {
        return Err(DeviceError::NegativeExtinctionRatio(er_db));
    }
    Ok(1.0 / (1.0 + 10f64.powf(er_db / 10.0)))
}

/// Square-wave drive applied to the switch: a steep edge between the two bins
/// moves the modulation voltage from `V0` (through) to `V0 + Vπ` (cross).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriveWaveform {
    pub v0_volts: f64,
    pub v_pi_volts: f64,
    /// Edge placement relative to the `t0` bin center, ps.
    pub edge_position_ps: f64,
    pub edge_width_ps: f64,
}

impl DriveWaveform {
    /// Nominal drive: edge halfway between the bins, comfortably steep.
    pub fn nominal(delay_dt_ps: f64) -> Self {
        Self {
            v0_volts: 0.0,
            v_pi_volts: 3.5,
            edge_position_ps: delay_dt_ps / 2.0,
            edge_width_ps: delay_dt_ps / 4.0,
        }
    }

    pub fn validate(&self, delay_dt_ps: f64) -> Result<(), DeviceError> {
        if self.v_pi_volts <= 0.0 {
            return Err(DeviceError::NonPositiveHalfWaveVoltage(self.v_pi_volts));
        }
        if self.edge_width_ps >= delay_dt_ps {
            return Err(DeviceError::EdgeTooSlow {
                edge_width_ps: self.edge_width_ps,
                delay_dt_ps,
            });
        }
        Ok(())
    }
}

/// High-speed electro-optic switch: finite extinction in both drive states.
/// The through and cross extinction ratios are carried independently.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EosModel {
    pub er_through_db: f64,
    pub er_cross_db: f64,
    pub drive: DriveWaveform,
}

impl EosModel {
    pub fn crosstalk_through(&self) -> Result<f64, DeviceError> {
        eos_crosstalk(self.er_through_db)
    }

    pub fn crosstalk_cross(&self) -> Result<f64, DeviceError> {
        eos_crosstalk(self.er_cross_db)
    }
}

/// The composite time-bin → path converter: EOS plus matched delay lines
/// differing by `Δt`, with a compensation TOPS for the path phase.
///
/// The path phase difference accumulated in the delay arms is absorbed into
/// the compensation calibration, so `compensation_phase = 0` means perfect
/// compensation and the residual phase applied to the path-1 amplitude is
/// `−compensation_phase`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConverterModel {
    pub eos: EosModel,
    pub delay_dt_ps: f64,
    pub compensation_phase: f64,
    pub excess_loss_long_db: f64,
    pub excess_loss_short_db: f64,
}

impl ConverterModel {
    /// Lossless, infinite-extinction, perfectly compensated converter.
    pub fn ideal(delay_dt_ps: f64) -> Self {
        Self {
            eos: EosModel {
                er_through_db: f64::INFINITY,
                er_cross_db: f64::INFINITY,
                drive: DriveWaveform::nominal(delay_dt_ps),
            },
            delay_dt_ps,
            compensation_phase: 0.0,
            excess_loss_long_db: 0.0,
            excess_loss_short_db: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), DeviceError> {
        if self.delay_dt_ps <= 0.0 {
            return Err(DeviceError::NonPositiveDelay(self.delay_dt_ps));
        }
        self.eos.drive.validate(self.delay_dt_ps)?;
        self.eos.crosstalk_through()?;
        self.eos.crosstalk_cross()?;
        Ok(())
    }

    pub(crate) fn amplitude_transmission_long(&self) -> f64 {
        10f64.powf(-self.excess_loss_long_db / 20.0)
    }

    pub(crate) fn amplitude_transmission_short(&self) -> f64 {
        10f64.powf(-self.excess_loss_short_db / 20.0)
    }
}

/// Temporal slot of a photon relative to the aligned output time.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    /// One `Δt` early (through-state leakage).
    Early,
    /// The design output time.
    Aligned,
    /// One `Δt` late (cross-state leakage).
    Late,
}

impl Slot {
    pub const ALL: [Slot; 3] = [Slot::Early, Slot::Aligned, Slot::Late];

    fn index(self) -> usize {
        match self {
            Slot::Early => 0,
            Slot::Aligned => 1,
            Slot::Late => 2,
        }
    }

    /// Offset of the slot center from the aligned time, in units of `Δt`.
    pub fn offset(self) -> f64 {
        match self {
            Slot::Early => -1.0,
            Slot::Aligned => 0.0,
            Slot::Late => 1.0,
        }
    }
}

/// Subnormalized state over path ⊗ time-slot modes, stored as one 2×2 path
/// block per slot. Different slots are distinguishable in principle, so the
/// state is block-diagonal in the slot index by construction; the trace
/// deficit is loss.
#[derive(Debug, Clone, PartialEq)]
pub struct SlotState {
    pub delay_dt_ps: f64,
    blocks: [DensityMatrix; 3],
}

impl SlotState {
    pub fn new(delay_dt_ps: f64) -> Self {
        Self {
            delay_dt_ps,
            blocks: [
                DensityMatrix::zeros(2),
                DensityMatrix::zeros(2),
                DensityMatrix::zeros(2),
            ],
        }
    }

    pub fn block(&self, slot: Slot) -> &DensityMatrix {
        &self.blocks[slot.index()]
    }

    pub fn block_mut(&mut self, slot: Slot) -> &mut DensityMatrix {
        &mut self.blocks[slot.index()]
    }

    pub fn slot_trace(&self, slot: Slot) -> f64 {
        self.blocks[slot.index()].trace()
    }

    pub fn trace(&self) -> f64 {
        self.blocks.iter().map(|b| b.trace()).sum()
    }

    /// Normalized pure state of the aligned block, when it has weight.
    pub fn aligned_pure_state(&self) -> Option<StateVector> {
        let b = self.block(Slot::Aligned);
        let t = b.trace();
        if t < 1e-15 {
            return None;
        }
        // the aligned block is rank 1 by construction: read the amplitudes
        // off the dominant column
        let (a0, a1) = if b.entry(0, 0).re >= b.entry(1, 1).re {
            let a0 = b.entry(0, 0).re.max(0.0).sqrt();
            let a1 = if a0 > 0.0 {
                b.entry(1, 0) / a0
            } else {
                c(0.0, 0.0)
            };
            (c(a0, 0.0), a1)
        } else {
            let a1 = b.entry(1, 1).re.max(0.0).sqrt();
            let a0 = if a1 > 0.0 {
                b.entry(0, 1) / a1
            } else {
                c(0.0, 0.0)
            };
            (a0, c(a1, 0.0))
        };
        StateVector::qubit(a0, a1).normalized().ok()
    }

    /// Full 6×6 block-diagonal matrix, basis index `path · 3 + slot` with
    /// slots ordered early, aligned, late.
    pub fn to_matrix(&self) -> Vec<Complex64> {
        let mut m = vec![c(0.0, 0.0); 36];
        for slot in Slot::ALL {
            let b = &self.blocks[slot.index()];
            for p in 0..2 {
                for q in 0..2 {
                    let row = p * 3 + slot.index();
                    let col = q * 3 + slot.index();
                    m[row * 6 + col] = b.entry(p, q);
                }
            }
        }
        m
    }
}

/// Converts a time-bin qubit `α|t0⟩ + β|t1⟩` to a path-encoded [`SlotState`].
///
/// The aligned slot carries the coherent converted qubit
/// `√(1−c_t)·g_L·α|0⟩ + e^{−iφ_comp}·√(1−c_x)·g_S·β|1⟩` (per-arm amplitude
/// transmissions `g`); through-state leakage `c_t|α|²` exits early on path 1
/// and cross-state leakage `c_x|β|²` exits late on path 0, both as
/// incoherent population.
pub fn convert(tb: &StateVector, m: &ConverterModel) -> Result<SlotState, DeviceError> {
    assert_eq!(tb.dim(), 2, "converter acts on single-qubit states");
    m.validate()?;
    let c_t = m.eos.crosstalk_through()?;
    let c_x = m.eos.crosstalk_cross()?;
    let g_long = m.amplitude_transmission_long();
    let g_short = m.amplitude_transmission_short();

    let alpha = tb.amplitude(0);
    let beta = tb.amplitude(1);

    let mut out = SlotState::new(m.delay_dt_ps);

    let v = StateVector::qubit(
        alpha * (1.0 - c_t).sqrt() * g_long,
        beta * Complex64::from_polar(1.0, -m.compensation_phase) * (1.0 - c_x).sqrt() * g_short,
    );
    *out.block_mut(Slot::Aligned) = v.density();

    let early = c_t * alpha.norm_sqr() * g_short * g_short;
    out.block_mut(Slot::Early).set_entry(1, 1, c(early, 0.0));

    let late = c_x * beta.norm_sqr() * g_long * g_long;
    out.block_mut(Slot::Late).set_entry(0, 0, c(late, 0.0));

    Ok(out)
}

/// Runs the converter in reverse: a path qubit `α|0⟩ + β|1⟩` becomes a
/// time-bin [`SlotState`] (basis index 0 = `|t0⟩`, 1 = `|t1⟩`). Mirror of
/// [`convert`]: path 0 traverses the long arm back to the `t0` bin, path 1
/// the short arm to `t1`; leakage exits in the matching shifted slots.
pub fn reverse_convert(
    path_state: &StateVector,
    m: &ConverterModel,
) -> Result<SlotState, DeviceError> {
    assert_eq!(path_state.dim(), 2, "converter acts on single-qubit states");
    m.validate()?;
    let c_t = m.eos.crosstalk_through()?;
    let c_x = m.eos.crosstalk_cross()?;
    let g_long = m.amplitude_transmission_long();
    let g_short = m.amplitude_transmission_short();

    let alpha = path_state.amplitude(0);
    let beta = path_state.amplitude(1);

    let mut out = SlotState::new(m.delay_dt_ps);

    let v = StateVector::qubit(
        alpha * (1.0 - c_t).sqrt() * g_long,
        beta * Complex64::from_polar(1.0, -m.compensation_phase) * (1.0 - c_x).sqrt() * g_short,
    );
    *out.block_mut(Slot::Aligned) = v.density();

    // path 0 leaked past the reversed switch skips the long delay: one Δt
    // early at the t0 position; path 1 leaked picks up an extra delay.
    let early = c_t * alpha.norm_sqr() * g_short * g_short;
    out.block_mut(Slot::Early).set_entry(0, 0, c(early, 0.0));

    let late = c_x * beta.norm_sqr() * g_long * g_long;
    out.block_mut(Slot::Late).set_entry(1, 1, c(late, 0.0));

    Ok(out)
}

/// Probability that a photon whose wavepacket center sits `offset_ps` from
/// the window center lands inside `±window_ps`, under Gaussian timing spread
/// `sigma_ps`. `sigma = 0` degenerates to the sharp indicator.
pub fn slot_window_acceptance(offset_ps: f64, window_ps: f64, sigma_ps: f64) -> f64 {
    if sigma_ps <= 0.0 {
        return if offset_ps.abs() <= window_ps {
            1.0
        } else {
            0.0
        };
    }
    normal_cdf((window_ps - offset_ps) / sigma_ps) - normal_cdf((-window_ps - offset_ps) / sigma_ps)
}

/// Collapses a [`SlotState`] onto the path qubit a jitter-limited detector
/// sees: the aligned block plus the leakage populations weighted by the
/// probability `w` that a photon offset by `±Δt` still falls inside the
/// `±window_ps` acceptance, given Gaussian jitter of the stated FWHM. The
/// result is subnormalized; callers normalize on demand.
pub fn windowed_qubit(s: &SlotState, window_ps: f64, jitter_fwhm_ps: f64) -> DensityMatrix {
    assert!(window_ps > 0.0, "window must be positive");
    let sigma = fwhm_to_sigma(jitter_fwhm_ps);
    let w = slot_window_acceptance(s.delay_dt_ps, window_ps, sigma);
    let leak = s
        .block(Slot::Early)
        .add(s.block(Slot::Late))
        .expect("blocks share dim 2");
    s.block(Slot::Aligned)
        .add(&leak.scaled(w))
        .expect("blocks share dim 2")
}
