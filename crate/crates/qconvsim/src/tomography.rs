//! Single-qubit state tomography: projective measurement settings, linear
//! (Stokes) inversion, and maximum-likelihood reconstruction over the
//! Cholesky-style `T` parametrization.
//!
//! The analyzer is the tomography TO-MZI preceded by the MODL TOPS. Settings
//! follow the calibration table — Z: (through, 0); X: (50:50, 0);
//! Y: (50:50, π/2) — and a fixed calibration offset of `−π/2` on the TOPS
//! phase aligns those table phases with the X/Y measurement bases under the
//! `i`-on-cross beam-splitter convention. Resulting port mapping:
//! Z → (|0⟩, |1⟩), X → (|+⟩, |−⟩), Y → (|−i⟩, |+i⟩).

use num_complex::Complex64;
use rand::Rng;
use thiserror::Error;

use crate::devices::{bs_transfer, DeviceError, MziSetting, Transfer2};
use crate::statekit::{
    fidelity, ket0, ket1, ket_minus, ket_minus_i, ket_plus, ket_plus_i, DensityMatrix, StateError,
    StateVector, StokesVector,
};

/// Calibration offset added to the table TOPS phase inside the analyzer.
pub const TOPS_CALIBRATION_OFFSET: f64 = -std::f64::consts::FRAC_PI_2;

/// Predicted probabilities are clamped at this floor inside the likelihood,
/// which is singular when a projector probability reaches zero with counts
/// present.
pub const LIKELIHOOD_PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TomoError {
    #[error("incomplete tomography: no counts in the {0:?} basis")]
    IncompleteTomography(Basis),
    #[error("optimizer failed to converge after all restarts")]
    NonConvergence { best: Box<TomoResult> },
    #[error(transparent)]
    State(#[from] StateError),
    #[error(transparent)]
    Device(#[from] DeviceError),
}

/// Measurement basis of the analyzer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Basis {
    Z,
    X,
    Y,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::Z, Basis::X, Basis::Y];
}

/// Analyzer configuration for one projective basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasSetting {
    pub basis: Basis,
    pub mzi: MziSetting,
    pub tops_phase: f64,
}

/// The calibration-table row for a basis: Z uses the through MZI with TOPS
/// phase 0; X the 50:50 MZI with phase 0; Y the 50:50 MZI with phase π/2.
pub fn setting_for(basis: Basis) -> MeasSetting {
    let (r, phase) = match basis {
        Basis::Z => (0.0, 0.0),
        Basis::X => (0.5, 0.0),
        Basis::Y => (0.5, std::f64::consts::FRAC_PI_2),
    };
    MeasSetting {
        basis,
        mzi: MziSetting::from_cross_fraction(r).expect("table fractions are valid"),
        tops_phase: phase,
    }
}

/// Transfer matrix of the configured analyzer: TOPS phase (plus calibration
/// offset) on path 1, then the MZI.
pub fn analyzer_unitary(setting: &MeasSetting) -> Transfer2 {
    let mzi = bs_transfer(setting.mzi.cross_fraction).expect("validated fraction");
    let phase = Transfer2::phase_on_mode1(setting.tops_phase + TOPS_CALIBRATION_OFFSET);
    mzi.compose(&phase)
}

/// Born-rule port probabilities of the analyzer for the given state.
pub fn expected_probs(rho: &DensityMatrix, setting: &MeasSetting) -> Result<(f64, f64), TomoError> {
    if rho.dim() != 2 {
        return Err(StateError::WrongDimension {
            expected: 2,
            got: rho.dim(),
        }
        .into());
    }
    let u = analyzer_unitary(setting);
    let rotated = rho.apply_unitary(u.entries())?;
    Ok((rotated.entry(0, 0).re, rotated.entry(1, 1).re))
}

/// Projective counts for the six cardinal projectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct CountSet {
    pub n_zero: u64,
    pub n_one: u64,
    pub n_plus: u64,
    pub n_minus: u64,
    pub n_plus_i: u64,
    pub n_minus_i: u64,
}

impl CountSet {
    pub fn total_z(&self) -> u64 {
        self.n_zero + self.n_one
    }

    pub fn total_x(&self) -> u64 {
        self.n_plus + self.n_minus
    }

    pub fn total_y(&self) -> u64 {
        self.n_plus_i + self.n_minus_i
    }

    pub fn total(&self, basis: Basis) -> u64 {
        match basis {
            Basis::Z => self.total_z(),
            Basis::X => self.total_x(),
            Basis::Y => self.total_y(),
        }
    }

    fn require_complete(&self) -> Result<(), TomoError> {
        for basis in Basis::ALL {
            if self.total(basis) == 0 {
                return Err(TomoError::IncompleteTomography(basis));
            }
        }
        Ok(())
    }

    /// The six (projector state, count, basis) records in a fixed order.
    fn projector_counts(&self) -> [(StateVector, u64, Basis); 6] {
        [
            (ket0(), self.n_zero, Basis::Z),
            (ket1(), self.n_one, Basis::Z),
            (ket_plus(), self.n_plus, Basis::X),
            (ket_minus(), self.n_minus, Basis::X),
            (ket_plus_i(), self.n_plus_i, Basis::Y),
            (ket_minus_i(), self.n_minus_i, Basis::Y),
        ]
    }
}

/// Stokes inversion of the counts: `S1 = (n+ − n−)/N_X`,
/// `S2 = (n+i − n−i)/N_Y`, `S3 = (n0 − n1)/N_Z`, `S0 = 1`. The flag reports
/// whether the reconstructed matrix is PSD; raw inversion of noisy counts
/// may step outside the Bloch ball.
pub fn linear_reconstruct(c: &CountSet) -> Result<(DensityMatrix, bool), TomoError> {
    c.require_complete()?;
    let s1 = (c.n_plus as f64 - c.n_minus as f64) / c.total_x() as f64;
    let s2 = (c.n_plus_i as f64 - c.n_minus_i as f64) / c.total_y() as f64;
    let s3 = (c.n_zero as f64 - c.n_one as f64) / c.total_z() as f64;
    let (rho, physical) = StokesVector::new(1.0, s1, s2, s3).density();
    Ok((rho, physical))
}

/// Parameters of the positivity-enforcing parametrization
/// `ρ = T†T / Tr(T†T)` with lower-triangular `T = [[t0, 0], [t2 + i·t3, t1]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TParams {
    pub t: [f64; 4],
}

impl TParams {
    pub fn density(&self) -> DensityMatrix {
        let [t0, t1, t2, t3] = self.t;
        let e00 = t0 * t0 + t2 * t2 + t3 * t3;
        let e11 = t1 * t1;
        let e10 = Complex64::new(t1 * t2, t1 * t3);
        let tr = (e00 + e11).max(1e-300);
        DensityMatrix::new(
            2,
            vec![
                Complex64::new(e00 / tr, 0.0),
                (e10 / tr).conj(),
                e10 / tr,
                Complex64::new(e11 / tr, 0.0),
            ],
        )
        .expect("2x2 entries")
    }

    /// Inverts a physical density matrix back to `T` parameters (used to
    /// seed the optimizer from the linear inversion).
    pub fn from_density(rho: &DensityMatrix) -> Self {
        let r00 = rho.entry(0, 0).re.max(0.0);
        let r11 = rho.entry(1, 1).re.max(0.0);
        let r10 = rho.entry(1, 0);
        if r11 > 1e-12 {
            let t1 = r11.sqrt();
            let t2 = r10.re / t1;
            let t3 = r10.im / t1;
            let det = (r00 * r11 - r10.norm_sqr()).max(0.0);
            let t0 = (det / r11).sqrt();
            Self {
                t: [t0, t1, t2, t3],
            }
        } else {
            Self {
                t: [r00.sqrt(), 0.0, 0.0, 0.0],
            }
        }
    }
}

/// The weighted least-squares likelihood
/// `L(ρ) = Σᵢ [N_b ⟨φᵢ|ρ|φᵢ⟩ − nᵢ]² / (2 N_b ⟨φᵢ|ρ|φᵢ⟩)` over the six
/// projectors, with `N_b` the total of the basis each projector belongs to
/// (the bases are measured in separate analyzer configurations).
pub fn likelihood(c: &CountSet, rho: &DensityMatrix) -> f64 {
    let mut total = 0.0;
    for (proj, n_i, basis) in c.projector_counts() {
        let n_basis = c.total(basis) as f64;
        if n_basis == 0.0 {
            continue;
        }
        let pred = born_prob(rho, &proj).max(LIKELIHOOD_PROB_FLOOR);
        let diff = n_basis * pred - n_i as f64;
        total += diff * diff / (2.0 * n_basis * pred);
    }
    total
}

fn born_prob(rho: &DensityMatrix, proj: &StateVector) -> f64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..2 {
        for j in 0..2 {
            acc += proj.amplitude(i).conj() * rho.entry(i, j) * proj.amplitude(j);
        }
    }
    acc.re
}

/// Optimizer configuration for [`mle_reconstruct`].
#[derive(Debug, Clone, Copy)]
pub struct MleConfig {
    /// Total restarts; the first seeds from the linear inversion when that
    /// is physical, the second from the maximally mixed state, the rest
    /// from random points.
    pub restarts: usize,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    /// Convergence threshold on the simplex likelihood spread.
    pub tol: f64,
    /// Seed for the random restart points; fixed so reconstruction is a
    /// deterministic function of the counts.
    pub seed: u64,
}

impl Default for MleConfig {
    fn default() -> Self {
        Self {
            restarts: 5,
            max_evals: 100_000,
            tol: 1e-10,
            seed: 0x746f_6d6f,
        }
    }
}

/// Result of a maximum-likelihood reconstruction.
#[derive(Debug, Clone)]
pub struct TomoResult {
    pub rho_rec: DensityMatrix,
    pub likelihood: f64,
    pub fidelity_vs_target: Option<f64>,
    pub iterations: usize,
    pub restarts_used: usize,
}

/// Maximum-likelihood reconstruction: minimizes [`likelihood`] over the
/// `T` parameters with a Nelder–Mead simplex and several restarts. The
/// result is PSD, Hermitian and trace-1 by construction for any counts.
/// `target`, when supplied, is the ideal state the fidelity is quoted
/// against.
pub fn mle_reconstruct(
    c: &CountSet,
    config: &MleConfig,
    target: Option<&DensityMatrix>,
) -> Result<TomoResult, TomoError> {
    c.require_complete()?;

    let objective = |t: &[f64; 4]| likelihood(c, &TParams { t: *t }.density());

    let mut starts: Vec<[f64; 4]> = Vec::with_capacity(config.restarts);
    if let Ok((rho_lin, physical)) = linear_reconstruct(c) {
        if physical {
            starts.push(TParams::from_density(&rho_lin).t);
        }
    }
    let s = std::f64::consts::FRAC_1_SQRT_2;
    starts.push([s, s, 0.0, 0.0]); // maximally mixed
    let mut rng = crate::stochastics::substream(config.seed, 0x6d6c65, 0);
    while starts.len() < config.restarts.max(2) {
        starts.push([
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
            rng.gen::<f64>() * 2.0 - 1.0,
        ]);
    }

    let mut best: Option<([f64; 4], f64)> = None;
    let mut total_evals = 0usize;
    let mut any_converged = false;
    for start in &starts {
        let (x, f, evals, converged) =
            nelder_mead(&objective, *start, config.max_evals, config.tol);
        total_evals += evals;
        any_converged |= converged;
        // strict comparison: ties keep the earlier restart
        let improved = match &best {
            Some((_, f_best)) => f < *f_best,
            None => true,
        };
        if improved {
            best = Some((x, f));
        }
    }

    let (x_best, f_best) = best.expect("at least one restart ran");
    let rho_rec = TParams { t: x_best }.density();
    let fidelity_vs_target = match target {
        Some(t) => Some(fidelity(&rho_rec, t)?),
        None => None,
    };
    let result = TomoResult {
        rho_rec,
        likelihood: f_best,
        fidelity_vs_target,
        iterations: total_evals,
        restarts_used: starts.len(),
    };
    if !any_converged {
        return Err(TomoError::NonConvergence {
            best: Box::new(result),
        });
    }
    Ok(result)
}

/// Standard Nelder–Mead on 4 parameters. Returns the best point, its value,
/// the number of evaluations, and whether the simplex spread fell below
/// `tol` within the budget.
fn nelder_mead(
    f: &dyn Fn(&[f64; 4]) -> f64,
    x0: [f64; 4],
    max_evals: usize,
    tol: f64,
) -> ([f64; 4], f64, usize, bool) {
    const ALPHA: f64 = 1.0; // reflection
    const GAMMA: f64 = 2.0; // expansion
    const BETA: f64 = 0.5; // contraction
    const DELTA: f64 = 0.5; // shrink

    let mut evals = 0usize;
    let eval = |x: &[f64; 4], evals: &mut usize| {
        *evals += 1;
        f(x)
    };

    let mut simplex: Vec<([f64; 4], f64)> = Vec::with_capacity(5);
    let fx0 = eval(&x0, &mut evals);
    simplex.push((x0, fx0));
    for i in 0..4 {
        let mut x = x0;
        x[i] += if x[i].abs() > 1e-6 {
            0.15 * x[i].abs()
        } else {
            0.1
        };
        let fx = eval(&x, &mut evals);
        simplex.push((x, fx));
    }

    let mut converged = false;
    while evals < max_evals {
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
        if simplex[4].1 - simplex[0].1 < tol {
            converged = true;
            break;
        }

        let mut centroid = [0.0f64; 4];
        for (x, _) in simplex.iter().take(4) {
            for k in 0..4 {
                centroid[k] += x[k] / 4.0;
            }
        }
        let worst = simplex[4];

        let mut reflected = [0.0f64; 4];
        for k in 0..4 {
            reflected[k] = centroid[k] + ALPHA * (centroid[k] - worst.0[k]);
        }
        let f_r = eval(&reflected, &mut evals);

        if f_r < simplex[0].1 {
            let mut expanded = [0.0f64; 4];
            for k in 0..4 {
                expanded[k] = centroid[k] + GAMMA * (reflected[k] - centroid[k]);
            }
            let f_e = eval(&expanded, &mut evals);
            simplex[4] = if f_e < f_r {
                (expanded, f_e)
            } else {
                (reflected, f_r)
            };
        } else if f_r < simplex[3].1 {
            simplex[4] = (reflected, f_r);
        } else {
            let (base, f_base) = if f_r < worst.1 {
                (reflected, f_r)
            } else {
                (worst.0, worst.1)
            };
            let mut contracted = [0.0f64; 4];
            for k in 0..4 {
                contracted[k] = centroid[k] + BETA * (base[k] - centroid[k]);
            }
            let f_c = eval(&contracted, &mut evals);
            if f_c < f_base {
                simplex[4] = (contracted, f_c);
            } else {
                // shrink toward the best vertex
                let best = simplex[0].0;
                for v in simplex.iter_mut().skip(1) {
                    for (vk, bk) in v.0.iter_mut().zip(best.iter()) {
                        *vk = bk + DELTA * (*vk - bk);
                    }
                    v.1 = eval(&v.0, &mut evals);
                }
            }
        }
    }

    simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap());
    (simplex[0].0, simplex[0].1, evals, converged)
}

/// Synthesizes tomography counts for a known state: per basis, the port
/// probabilities drive either a deterministic rounded split (`noise` off) or
/// a binomial draw (`noise` on). Ports map to projector labels per the
/// analyzer convention.
pub fn run_tomography(
    rho_true: &DensityMatrix,
    shots_per_basis: u64,
    noise: bool,
    rng: &mut impl Rng,
) -> Result<CountSet, TomoError> {
    assert!(shots_per_basis > 0, "need at least one shot per basis");
    let mut counts = CountSet {
        n_zero: 0,
        n_one: 0,
        n_plus: 0,
        n_minus: 0,
        n_plus_i: 0,
        n_minus_i: 0,
    };
    for basis in Basis::ALL {
        let setting = setting_for(basis);
        let (p0, _) = expected_probs(rho_true, &setting)?;
        let p0 = p0.clamp(0.0, 1.0);
        let n0 = if noise {
            crate::stochastics::draw_binomial(shots_per_basis, p0, rng)
        } else {
            (shots_per_basis as f64 * p0).round() as u64
        };
        let n1 = shots_per_basis - n0;
        match basis {
            Basis::Z => {
                counts.n_zero = n0;
                counts.n_one = n1;
            }
            Basis::X => {
                counts.n_plus = n0;
                counts.n_minus = n1;
            }
            Basis::Y => {
                counts.n_minus_i = n0;
                counts.n_plus_i = n1;
            }
        }
    }
    Ok(counts)
}
