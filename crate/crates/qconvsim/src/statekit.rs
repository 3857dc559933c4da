//! Dense complex linear algebra for 1- and 2-qubit states: state vectors,
//! density matrices, Pauli/Stokes decomposition, and fidelity.
//!
//! Basis convention, fixed globally: index 0 is the early time bin `|t0⟩` or
//! path `|0⟩`; index 1 is the late bin `|t1⟩` or path `|1⟩`. Two-qubit basis
//! index is signal ⊗ idler (row-major Kronecker order).
//!
//! All values are immutable after construction and every operation is a pure
//! function, so everything here is safe to share across threads.

use num_complex::Complex64;
use thiserror::Error;

use crate::linalg;

/// Absolute tolerance for invariant checks (Hermiticity, PSD, unitarity).
pub const INVARIANT_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("degenerate state: vector has (near-)zero norm")]
    DegenerateState,
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("operation requires dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("matrix is not unitary within {INVARIANT_TOL}")]
    NonUnitary,
    #[error("entry count {0} is not a square matrix size")]
    NotSquare(usize),
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// The Pauli basis `σ0..σ3` (identity, X, Y, Z), row-major 2×2.
pub fn pauli(i: usize) -> [Complex64; 4] {
    match i {
        0 => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)],
        1 => [c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)],
        2 => [c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0)],
        3 => [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0)],
        _ => panic!("pauli index must be 0..=3"),
    }
}

/// A pure state as a vector of complex amplitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    pub fn new(amplitudes: Vec<Complex64>) -> Self {
        assert!(amplitudes.len() >= 2, "state needs at least two amplitudes");
        Self { amplitudes }
    }

    /// Single-qubit state `a|0⟩ + b|1⟩` (not normalized automatically).
    pub fn qubit(a: Complex64, b: Complex64) -> Self {
        Self::new(vec![a, b])
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitude(&self, i: usize) -> Complex64 {
        self.amplitudes[i]
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|a| a.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Unit-norm copy; direction is preserved.
    pub fn normalized(&self) -> Result<Self, StateError> {
        let n = self.norm();
        if n < 1e-12 {
            return Err(StateError::DegenerateState);
        }
        Ok(Self::new(self.amplitudes.iter().map(|a| a / n).collect()))
    }

    /// Inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<Complex64, StateError> {
        if self.dim() != other.dim() {
            return Err(StateError::DimensionMismatch(self.dim(), other.dim()));
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(other.amplitudes.iter())
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Kronecker product `self ⊗ other`.
    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.dim() * other.dim());
        for a in &self.amplitudes {
            for b in &other.amplitudes {
                amps.push(a * b);
            }
        }
        Self::new(amps)
    }

    /// Projector `|ψ⟩⟨ψ|` as a density matrix. Expects a normalized input.
    pub fn density(&self) -> DensityMatrix {
        let n = self.dim();
        let mut entries = vec![c(0.0, 0.0); n * n];
        for i in 0..n {
            for j in 0..n {
                entries[i * n + j] = self.amplitudes[i] * self.amplitudes[j].conj();
            }
        }
        DensityMatrix { dim: n, entries }
    }
}

/// `|0⟩`
pub fn ket0() -> StateVector {
    StateVector::qubit(c(1.0, 0.0), c(0.0, 0.0))
}
/// `|1⟩`
pub fn ket1() -> StateVector {
    StateVector::qubit(c(0.0, 0.0), c(1.0, 0.0))
}
/// `|+⟩ = (|0⟩ + |1⟩)/√2`
pub fn ket_plus() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::qubit(c(s, 0.0), c(s, 0.0))
}
/// `|−⟩ = (|0⟩ − |1⟩)/√2`
pub fn ket_minus() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::qubit(c(s, 0.0), c(-s, 0.0))
}
/// `|+i⟩ = (|0⟩ + i|1⟩)/√2`
pub fn ket_plus_i() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::qubit(c(s, 0.0), c(0.0, s))
}
/// `|−i⟩ = (|0⟩ − i|1⟩)/√2`
pub fn ket_minus_i() -> StateVector {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    StateVector::qubit(c(s, 0.0), c(0.0, -s))
}

/// The six cardinal single-qubit states with their conventional labels.
pub fn cardinal_states() -> Vec<(&'static str, StateVector)> {
    vec![
        ("zero", ket0()),
        ("one", ket1()),
        ("plus", ket_plus()),
        ("minus", ket_minus()),
        ("plus_i", ket_plus_i()),
        ("minus_i", ket_minus_i()),
    ]
}

/// A (possibly subnormalized) density matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    dim: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    pub fn new(dim: usize, entries: Vec<Complex64>) -> Result<Self, StateError> {
        if entries.len() != dim * dim {
            return Err(StateError::NotSquare(entries.len()));
        }
        Ok(Self { dim, entries })
    }

    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            entries: vec![c(0.0, 0.0); dim * dim],
        }
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.entries[i * dim + i] = c(1.0 / dim as f64, 0.0);
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.dim + j]
    }

    pub(crate) fn set_entry(&mut self, i: usize, j: usize, v: Complex64) {
        let d = self.dim;
        self.entries[i * d + j] = v;
    }

    pub fn trace(&self) -> f64 {
        linalg::trace(self.dim, &self.entries).re
    }

    /// Scales all entries; used for subnormalized (lossy) states.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim: self.dim,
            entries: self.entries.iter().map(|e| e * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, StateError> {
        if self.dim != other.dim {
            return Err(StateError::DimensionMismatch(self.dim, other.dim));
        }
        Ok(Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .zip(other.entries.iter())
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    /// Trace-1 copy.
    pub fn normalized(&self) -> Result<Self, StateError> {
        let t = self.trace();
        if t < 1e-15 {
            return Err(StateError::DegenerateState);
        }
        Ok(self.scaled(1.0 / t))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let adj = linalg::adjoint(self.dim, &self.entries);
        linalg::max_abs_diff(&adj, &self.entries) <= tol
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::hermitian_eigen(self.dim, &self.entries).values
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    /// Hermitian, PSD and trace-1 within `tol`.
    pub fn is_physical(&self, tol: f64) -> bool {
        self.is_hermitian(tol) && self.min_eigenvalue() >= -tol && (self.trace() - 1.0).abs() <= tol
    }

    /// Kronecker product `self ⊗ other`. Trace is multiplicative.
    pub fn tensor(&self, other: &Self) -> Self {
        Self {
            dim: self.dim * other.dim,
            entries: linalg::kron(self.dim, &self.entries, other.dim, &other.entries),
        }
    }

    /// Conjugation `U ρ U†`. Rejects matrices that are not unitary within
    /// [`INVARIANT_TOL`]; trace and spectrum are preserved.
    pub fn apply_unitary(&self, u: &[Complex64]) -> Result<Self, StateError> {
        if u.len() != self.dim * self.dim {
            return Err(StateError::DimensionMismatch(u.len(), self.dim * self.dim));
        }
        if !linalg::is_unitary(self.dim, u, INVARIANT_TOL) {
            return Err(StateError::NonUnitary);
        }
        let tmp = linalg::mat_mul(self.dim, u, &self.entries);
        let entries = linalg::mat_mul(self.dim, &tmp, &linalg::adjoint(self.dim, u));
        Ok(Self {
            dim: self.dim,
            entries,
        })
    }

    /// Stokes decomposition `S_i = Tr(ρ σ_i)`; single-qubit states only.
    pub fn stokes(&self) -> Result<StokesVector, StateError> {
        if self.dim != 2 {
            return Err(StateError::WrongDimension {
                expected: 2,
                got: self.dim,
            });
        }
        let mut s = [0.0f64; 4];
        for (i, si) in s.iter_mut().enumerate() {
            let prod = linalg::mat_mul(2, &self.entries, &pauli(i));
            *si = linalg::trace(2, &prod).re;
        }
        Ok(StokesVector {
            s0: s[0],
            s1: s[1],
            s2: s[2],
            s3: s[3],
        })
    }

    /// Partial trace of a two-qubit state down to the kept subsystem.
    pub fn partial_trace(&self, keep: Subsystem) -> Result<Self, StateError> {
        if self.dim != 4 {
            return Err(StateError::WrongDimension {
                expected: 4,
                got: self.dim,
            });
        }
        let mut out = Self::zeros(2);
        for i in 0..2 {
            for j in 0..2 {
                let mut acc = c(0.0, 0.0);
                for k in 0..2 {
                    let (row, col) = match keep {
                        Subsystem::First => (i * 2 + k, j * 2 + k),
                        Subsystem::Second => (k * 2 + i, k * 2 + j),
                    };
                    acc += self.entries[row * 4 + col];
                }
                out.set_entry(i, j, acc);
            }
        }
        Ok(out)
    }
}

/// Which tensor factor a partial trace keeps.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subsystem {
    First,
    Second,
}

/// Pauli expectation values `(S0, S1, S2, S3)` of a single-qubit state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s0: f64,
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn new(s0: f64, s1: f64, s2: f64, s3: f64) -> Self {
        Self { s0, s1, s2, s3 }
    }

    /// Bloch-vector length `√(S1² + S2² + S3²)`.
    pub fn bloch_norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }

    /// Reconstructs `ρ = ½ Σ S_i σ_i`. The result is Hermitian with trace
    /// `S0` by construction but may fail positivity for raw inverted counts;
    /// the returned flag is `true` iff the matrix is PSD within
    /// [`INVARIANT_TOL`].
    pub fn density(&self) -> (DensityMatrix, bool) {
        let s = [self.s0, self.s1, self.s2, self.s3];
        let mut entries = vec![c(0.0, 0.0); 4];
        for (i, si) in s.iter().enumerate() {
            for (k, p) in pauli(i).iter().enumerate() {
                entries[k] += p * (0.5 * si);
            }
        }
        let rho = DensityMatrix { dim: 2, entries };
        let physical = rho.min_eigenvalue() >= -INVARIANT_TOL;
        (rho, physical)
    }
}

/// Uhlmann fidelity `F = [Tr √(√ρ_aim ρ √ρ_aim)]²`.
///
/// The matrix square roots come from a Hermitian eigendecomposition with
/// eigenvalues clamped at zero, so PSD inputs carrying `-1e-12`-level
/// numerical eigenvalues are handled.
pub fn fidelity(rho: &DensityMatrix, rho_aim: &DensityMatrix) -> Result<f64, StateError> {
    if rho.dim() != rho_aim.dim() {
        return Err(StateError::DimensionMismatch(rho.dim(), rho_aim.dim()));
    }
    let n = rho.dim();
    let sqrt_aim = linalg::hermitian_sqrt(n, rho_aim.entries());
    let inner = linalg::mat_mul(n, &linalg::mat_mul(n, &sqrt_aim, rho.entries()), &sqrt_aim);
    let eig = linalg::hermitian_eigen(n, &inner);
    // Rank-deficient sandwiches carry O(1e-17) numerical eigenvalues whose
    // square roots would pollute the trace at the 1e-9 level; cut them
    // relative to the leading eigenvalue.
    let lam_max = eig.values.iter().cloned().fold(0.0, f64::max);
    let cutoff = lam_max * 1e-12;
    let tr: f64 = eig
        .values
        .iter()
        .filter(|&&l| l > cutoff)
        .map(|&l| l.sqrt())
        .sum();
    Ok(tr * tr)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_pure(dim: usize, rng: &mut impl Rng) -> StateVector {
        let amps: Vec<Complex64> = (0..dim)
            .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
            .collect();
        StateVector::new(amps).normalized().unwrap()
    }

    /// Random unitary from Gram-Schmidt QR of a random complex matrix.
    fn random_unitary(dim: usize, rng: &mut impl Rng) -> Vec<Complex64> {
        let mut cols: Vec<Vec<Complex64>> = (0..dim)
            .map(|_| {
                (0..dim)
                    .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
                    .collect()
            })
            .collect();
        for i in 0..dim {
            for j in 0..i {
                let proj: Complex64 = (0..dim).map(|k| cols[j][k].conj() * cols[i][k]).sum();
                let prev = cols[j].clone();
                for (cik, cjk) in cols[i].iter_mut().zip(prev.iter()) {
                    *cik -= proj * cjk;
                }
            }
            let norm: f64 = cols[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            for c in cols[i].iter_mut() {
                *c /= norm;
            }
        }
        let mut u = vec![Complex64::new(0.0, 0.0); dim * dim];
        for (j, col) in cols.iter().enumerate() {
            for i in 0..dim {
                u[i * dim + j] = col[i];
            }
        }
        u
    }

    #[test]
    fn normalize_examples() {
        let v = StateVector::qubit(Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(v.normalized().unwrap(), v);

        let v = StateVector::qubit(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0));
        let n = v.normalized().unwrap();
        let s = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(n.amplitude(0).re, s, epsilon = 1e-15);
        assert_relative_eq!(n.amplitude(1).re, s, epsilon = 1e-15);

        let z = StateVector::qubit(Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
        assert_eq!(z.normalized(), Err(StateError::DegenerateState));
    }

    #[test]
    fn density_of_examples() {
        let rho = ket0().density();
        assert_relative_eq!(rho.entry(0, 0).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(rho.entry(1, 1).re, 0.0, epsilon = 1e-15);

        let rho = ket_plus().density();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(rho.entry(i, j).re, 0.5, epsilon = 1e-15);
                assert_relative_eq!(rho.entry(i, j).im, 0.0, epsilon = 1e-15);
            }
        }

        let rho = ket_plus_i().density();
        assert_relative_eq!(rho.entry(0, 1).im, -0.5, epsilon = 1e-15);
        assert_relative_eq!(rho.entry(1, 0).im, 0.5, epsilon = 1e-15);
        assert_relative_eq!(rho.trace(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn tensor_examples() {
        let v = ket0().tensor(&ket0());
        assert_eq!(v.dim(), 4);
        assert_relative_eq!(v.amplitude(0).re, 1.0);
        assert_relative_eq!(v.amplitude(3).norm(), 0.0);

        let dm = ket0().density().tensor(&DensityMatrix::maximally_mixed(2));
        assert_relative_eq!(dm.entry(0, 0).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(dm.entry(1, 1).re, 0.5, epsilon = 1e-15);
        assert_relative_eq!(dm.entry(2, 2).re, 0.0, epsilon = 1e-15);
        assert_relative_eq!(dm.trace(), 1.0, epsilon = 1e-15);

        // (|00⟩ + e^{i2θ}|11⟩)/√2 at θ = 0 from basis tensors
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bell = StateVector::new(
            ket0()
                .tensor(&ket0())
                .amplitudes()
                .iter()
                .zip(ket1().tensor(&ket1()).amplitudes())
                .map(|(a, b)| (a + b) * s)
                .collect(),
        );
        assert_relative_eq!(bell.amplitude(0).re, s, epsilon = 1e-15);
        assert_relative_eq!(bell.amplitude(3).re, s, epsilon = 1e-15);
        assert_relative_eq!(bell.norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn apply_examples() {
        let rho = ket0().density();
        let id = linalg::identity(2);
        assert_eq!(rho.apply_unitary(&id).unwrap(), rho);

        let flipped = rho.apply_unitary(&pauli(1)).unwrap();
        assert_relative_eq!(flipped.entry(1, 1).re, 1.0, epsilon = 1e-15);
        assert_relative_eq!(flipped.entry(0, 0).re, 0.0, epsilon = 1e-15);

        // 50:50 splitter on |0⟩⟨0| -> off-diagonal magnitude 0.5,
        // checked against the direct matrix product U ρ U†.
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bs = [
            Complex64::new(s, 0.0),
            Complex64::new(0.0, s),
            Complex64::new(0.0, s),
            Complex64::new(s, 0.0),
        ];
        let split = rho.apply_unitary(&bs).unwrap();
        let direct = linalg::mat_mul(
            2,
            &linalg::mat_mul(2, &bs, rho.entries()),
            &linalg::adjoint(2, &bs),
        );
        assert!(linalg::max_abs_diff(split.entries(), &direct) < 1e-15);
        assert_relative_eq!(split.entry(0, 1).norm(), 0.5, epsilon = 1e-12);

        let not_unitary = [
            Complex64::new(1.0, 0.0),
            Complex64::new(1.0, 0.0),
            Complex64::new(0.0, 0.0),
            Complex64::new(1.0, 0.0),
        ];
        assert_eq!(rho.apply_unitary(&not_unitary), Err(StateError::NonUnitary));
    }

    #[test]
    fn stokes_examples() {
        let s = ket0().density().stokes().unwrap();
        assert_relative_eq!(s.s0, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.s3, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.s1, 0.0, epsilon = 1e-12);

        let s = DensityMatrix::maximally_mixed(2).stokes().unwrap();
        assert_relative_eq!(s.bloch_norm(), 0.0, epsilon = 1e-12);

        let s = ket_plus_i().density().stokes().unwrap();
        assert_relative_eq!(s.s2, 1.0, epsilon = 1e-12);
        assert_relative_eq!(s.s1, 0.0, epsilon = 1e-12);
        assert_relative_eq!(s.s3, 0.0, epsilon = 1e-12);

        assert!(DensityMatrix::maximally_mixed(4).stokes().is_err());
    }

    #[test]
    fn density_from_stokes_examples() {
        let (rho, phys) = StokesVector::new(1.0, 0.0, 0.0, 0.0).density();
        assert!(phys);
        assert_relative_eq!(rho.entry(0, 0).re, 0.5, epsilon = 1e-15);

        let (rho, phys) = StokesVector::new(1.0, 1.0, 0.0, 0.0).density();
        assert!(phys);
        assert!(linalg::max_abs_diff(rho.entries(), ket_plus().density().entries()) < 1e-15);

        // (1,1,1,1): Hermitian but |S| = √3 > 1 -> negative eigenvalue.
        // Oracle: analytic 2x2 eigenvalues  (tr ± √(tr² - 4 det))/2.
        let (rho, phys) = StokesVector::new(1.0, 1.0, 1.0, 1.0).density();
        assert!(!phys);
        assert!(rho.is_hermitian(1e-15));
        let tr = rho.trace();
        let det = (rho.entry(0, 0) * rho.entry(1, 1) - rho.entry(0, 1) * rho.entry(1, 0)).re;
        let lam_min = 0.5 * (tr - (tr * tr - 4.0 * det).sqrt());
        assert!(lam_min < -1e-3);
        assert_relative_eq!(rho.min_eigenvalue(), lam_min, epsilon = 1e-12);
    }

    #[test]
    fn fidelity_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let rho = random_pure(2, &mut rng).density();
        assert_relative_eq!(fidelity(&rho, &rho).unwrap(), 1.0, epsilon = 1e-9);

        assert_relative_eq!(
            fidelity(&ket0().density(), &ket1().density()).unwrap(),
            0.0,
            epsilon = 1e-12
        );
        assert_relative_eq!(
            fidelity(&ket0().density(), &DensityMatrix::maximally_mixed(2)).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert!(fidelity(&ket0().density(), &DensityMatrix::maximally_mixed(4)).is_err());
    }

    #[test]
    fn fidelity_matches_pure_overlap_oracle() {
        // For pure states F(|ψ⟩⟨ψ|, |φ⟩⟨φ|) = |⟨ψ|φ⟩|².
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let psi = random_pure(2, &mut rng);
            let phi = random_pure(2, &mut rng);
            let f = fidelity(&psi.density(), &phi.density()).unwrap();
            let overlap = psi.inner(&phi).unwrap().norm_sqr();
            assert_relative_eq!(f, overlap, epsilon = 1e-10);
        }
    }

    #[test]
    fn partial_trace_examples() {
        let rho00 = ket0().tensor(&ket0()).density();
        let reduced = rho00.partial_trace(Subsystem::Second).unwrap();
        assert!(linalg::max_abs_diff(reduced.entries(), ket0().density().entries()) < 1e-15);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let mut bell = vec![Complex64::new(0.0, 0.0); 4];
        bell[0] = Complex64::new(s, 0.0);
        bell[3] = Complex64::new(s, 0.0);
        let bell = StateVector::new(bell).density();
        let reduced = bell.partial_trace(Subsystem::Second).unwrap();
        assert!(
            linalg::max_abs_diff(
                reduced.entries(),
                DensityMatrix::maximally_mixed(2).entries()
            ) < 1e-12
        );

        // product state marginal, both subsystems
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_pure(2, &mut rng).density();
        let b = random_pure(2, &mut rng).density();
        let prod = a.tensor(&b);
        assert!(
            linalg::max_abs_diff(
                prod.partial_trace(Subsystem::First).unwrap().entries(),
                a.entries()
            ) < 1e-12
        );
        assert!(
            linalg::max_abs_diff(
                prod.partial_trace(Subsystem::Second).unwrap().entries(),
                b.entries()
            ) < 1e-12
        );
    }

    #[test]
    fn unitary_preserves_trace_and_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for dim in [2usize, 4] {
            for _ in 0..50 {
                let rho = {
                    // random mixed state: convex mix of two pure states
                    let p: f64 = rng.gen();
                    let a = random_pure(dim, &mut rng).density().scaled(p);
                    let b = random_pure(dim, &mut rng).density().scaled(1.0 - p);
                    a.add(&b).unwrap()
                };
                let u = random_unitary(dim, &mut rng);
                let rotated = rho.apply_unitary(&u).unwrap();
                assert_relative_eq!(rotated.trace(), rho.trace(), epsilon = 1e-9);
                let ev_a = rho.eigenvalues();
                let ev_b = rotated.eigenvalues();
                for (a, b) in ev_a.iter().zip(ev_b.iter()) {
                    assert_relative_eq!(a, b, epsilon = 1e-9);
                }
            }
        }
    }

    #[test]
    fn stokes_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            // random physical Stokes vector (inside Bloch ball)
            let r: f64 = rng.gen::<f64>();
            let th: f64 = rng.gen::<f64>() * std::f64::consts::PI;
            let ph: f64 = rng.gen::<f64>() * std::f64::consts::TAU;
            let s = StokesVector::new(
                1.0,
                r * th.sin() * ph.cos(),
                r * th.sin() * ph.sin(),
                r * th.cos(),
            );
            let (rho, phys) = s.density();
            assert!(phys);
            let back = rho.stokes().unwrap();
            assert_relative_eq!(back.s1, s.s1, epsilon = 1e-12);
            assert_relative_eq!(back.s2, s.s2, epsilon = 1e-12);
            assert_relative_eq!(back.s3, s.s3, epsilon = 1e-12);

            // and the other direction, from the matrix
            let (rho2, _) = back.density();
            assert!(linalg::max_abs_diff(rho2.entries(), rho.entries()) < 1e-12);
        }
    }

    #[test]
    fn fidelity_one_iff_equal_for_pure_target() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..50 {
            let target = random_pure(2, &mut rng);
            let same = fidelity(&target.density(), &target.density()).unwrap();
            assert!((same - 1.0).abs() < 1e-9);

            let other = random_pure(2, &mut rng);
            let f = fidelity(&other.density(), &target.density()).unwrap();
            let overlap = target.inner(&other).unwrap().norm_sqr();
            // F < 1 whenever the states genuinely differ
            if overlap < 1.0 - 1e-6 {
                assert!(f < 1.0 - 1e-7);
            }
        }
    }
}
