//! Minimal dense complex linear algebra for the tiny matrices (n ≤ 6) this
//! crate works with. Row-major storage throughout.

use num_complex::Complex64;

pub(crate) fn identity(n: usize) -> Vec<Complex64> {
    let mut m = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = Complex64::new(1.0, 0.0);
    }
    m
}

pub(crate) fn mat_mul(n: usize, a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub(crate) fn adjoint(n: usize, a: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

pub(crate) fn kron(na: usize, a: &[Complex64], nb: usize, b: &[Complex64]) -> Vec<Complex64> {
    let n = na * nb;
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for i in 0..na {
        for j in 0..na {
            let aij = a[i * na + j];
            for k in 0..nb {
                for l in 0..nb {
                    out[(i * nb + k) * n + (j * nb + l)] = aij * b[k * nb + l];
                }
            }
        }
    }
    out
}

pub(crate) fn trace(n: usize, a: &[Complex64]) -> Complex64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

pub(crate) fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}

/// Checks `u† u = I` to within `tol` (max-entry norm).
pub(crate) fn is_unitary(n: usize, u: &[Complex64], tol: f64) -> bool {
    let prod = mat_mul(n, &adjoint(n, u), u);
    max_abs_diff(&prod, &identity(n)) <= tol
}

pub(crate) struct HermitianEigen {
    /// Eigenvalues in ascending order.
    pub values: Vec<f64>,
    /// Eigenvectors as columns, row-major: column `k` is the eigenvector of
    /// `values[k]`.
    pub vectors: Vec<Complex64>,
}

/// Eigendecomposition of a Hermitian matrix by the cyclic complex Jacobi
/// method. Assumes the input is Hermitian; only the strict upper triangle
/// drives the rotations. Plenty fast and accurate at the dimensions used
/// here (2–6).
pub(crate) fn hermitian_eigen(n: usize, a: &[Complex64]) -> HermitianEigen {
    let mut m = a.to_vec();
    let mut v = identity(n);

    let scale: f64 = a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-15 * scale;

    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in (p + 1)..n {
                off += m[p * n + q].norm();
            }
        }
        if off <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p * n + q];
                let rho = apq.norm();
                if rho <= 1e-300 {
                    continue;
                }
                let app = m[p * n + p].re;
                let aqq = m[q * n + q].re;
                let tau = (aqq - app) / (2.0 * rho);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                let u = apq / rho; // e^{i arg(apq)}

                // m <- r† m r with r = I except the (p,q) block
                // [ c        s·u ]
                // [ -s·u*    c   ]
                for k in 0..n {
                    let mkp = m[k * n + p];
                    let mkq = m[k * n + q];
                    m[k * n + p] = mkp * c - mkq * s * u.conj();
                    m[k * n + q] = mkp * s * u + mkq * c;
                }
                for k in 0..n {
                    let mpk = m[p * n + k];
                    let mqk = m[q * n + k];
                    m[p * n + k] = mpk * c - mqk * s * u;
                    m[q * n + k] = mpk * s * u.conj() + mqk * c;
                }
                // rounding can leave a tiny imaginary residue on the diagonal
                m[p * n + p] = Complex64::new(m[p * n + p].re, 0.0);
                m[q * n + q] = Complex64::new(m[q * n + q].re, 0.0);
                m[p * n + q] = Complex64::new(0.0, 0.0);
                m[q * n + p] = Complex64::new(0.0, 0.0);

                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = vkp * c - vkq * s * u.conj();
                    v[k * n + q] = vkp * s * u + vkq * c;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[i * n + i].re.partial_cmp(&m[j * n + j].re).unwrap());

    let values: Vec<f64> = order.iter().map(|&i| m[i * n + i].re).collect();
    let mut vectors = vec![Complex64::new(0.0, 0.0); n * n];
    for (new_col, &old_col) in order.iter().enumerate() {
        for row in 0..n {
            vectors[row * n + new_col] = v[row * n + old_col];
        }
    }
    HermitianEigen { values, vectors }
}

/// Matrix square root of a Hermitian PSD matrix via eigendecomposition,
/// clamping tiny negative eigenvalues to zero before the square root.
pub(crate) fn hermitian_sqrt(n: usize, a: &[Complex64]) -> Vec<Complex64> {
    let eig = hermitian_eigen(n, a);
    let mut out = vec![Complex64::new(0.0, 0.0); n * n];
    for k in 0..n {
        let lam = eig.values[k].max(0.0).sqrt();
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] += eig.vectors[i * n + k] * eig.vectors[j * n + k].conj() * lam;
            }
        }
    }
    out
}
