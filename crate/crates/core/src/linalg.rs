//! Small dense self-adjoint matrices.
//!
//! Everything downstream reduces to one question: is a small covariance-like
//! matrix positive semidefinite? This module answers it with a cyclic Jacobi
//! eigen-solver (Hermitian inputs go through the real `[[Re, -Im], [Im, Re]]`
//! embedding) and provides the Schur complement used to peel off
//! normalised blocks.

use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default relative tolerance for [`is_psd`].
pub const DEFAULT_PSD_TOL: f64 = 1e-9;

const JACOBI_MAX_SWEEPS: usize = 100;
const PIVOT_EPS: f64 = 1e-14;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("malformed matrix: {0}")]
    Malformed(String),
    #[error("non-finite entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("degenerate pivot {pivot:e} at index {index} of the leading block")]
    DegeneratePivot { index: usize, pivot: f64 },
    #[error("split {split} is outside 1..{dim}")]
    InvalidSplit { split: usize, dim: usize },
    #[error("tolerance must be finite and non-negative, got {0}")]
    InvalidTolerance(f64),
    #[error("Jacobi iteration did not converge after {0} sweeps")]
    NoConvergence(usize),
}

/// Field of matrix entries: `f64` for symmetric, `Complex64` for Hermitian.
pub trait Scalar:
    Copy
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + 'static
{
    const ZERO: Self;
    const ONE: Self;
    fn conj(self) -> Self;
    fn re(self) -> f64;
    fn from_re(x: f64) -> Self;
    fn modulus(self) -> f64;
    fn finite(self) -> bool;
    fn scale(self, s: f64) -> Self;
    /// Ascending eigenvalues of a self-adjoint matrix in this field.
    fn eigenvalues_of(m: &SelfAdjointMatrix<Self>) -> Result<Vec<f64>, LinalgError>;
}

impl Scalar for f64 {
    const ZERO: Self = 0.0;
    const ONE: Self = 1.0;
    fn conj(self) -> Self {
        self
    }
    fn re(self) -> f64 {
        self
    }
    fn from_re(x: f64) -> Self {
        x
    }
    fn modulus(self) -> f64 {
        self.abs()
    }
    fn finite(self) -> bool {
        self.is_finite()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn eigenvalues_of(m: &SelfAdjointMatrix<Self>) -> Result<Vec<f64>, LinalgError> {
        let (mut values, _) = jacobi_eigen(&m.data, m.n)?;
        values.sort_by(f64::total_cmp);
        Ok(values)
    }
}

impl Scalar for Complex64 {
    const ZERO: Self = Complex64::new(0.0, 0.0);
    const ONE: Self = Complex64::new(1.0, 0.0);
    fn conj(self) -> Self {
        Complex64::conj(&self)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn from_re(x: f64) -> Self {
        Complex64::new(x, 0.0)
    }
    fn modulus(self) -> f64 {
        self.norm()
    }
    fn finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
    fn eigenvalues_of(m: &SelfAdjointMatrix<Self>) -> Result<Vec<f64>, LinalgError> {
        // Each eigenvalue of H appears twice in the real embedding.
        let n = m.n;
        let big = 2 * n;
        let mut data = vec![0.0; big * big];
        for i in 0..n {
            for j in 0..n {
                let z = m.get(i, j);
                data[i * big + j] = z.re;
                data[i * big + j + n] = -z.im;
                data[(i + n) * big + j] = z.im;
                data[(i + n) * big + j + n] = z.re;
            }
        }
        let (mut values, _) = jacobi_eigen(&data, big)?;
        values.sort_by(f64::total_cmp);
        Ok(values.chunks(2).map(|pair| 0.5 * (pair[0] + pair[1])).collect())
    }
}

/// Dense square matrix equal to its own conjugate transpose, stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound(serialize = "T: Serialize", deserialize = "T: Deserialize<'de>"))]
pub struct SelfAdjointMatrix<T> {
    n: usize,
    data: Vec<T>,
}

pub type SymmetricMatrix = SelfAdjointMatrix<f64>;
pub type HermitianMatrix = SelfAdjointMatrix<Complex64>;

impl<T: Scalar> fmt::Debug for SelfAdjointMatrix<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.data.chunks(self.n)).finish()
    }
}

impl<T: Scalar> SelfAdjointMatrix<T> {
    /// Builds a matrix from full rows, requiring exact self-adjointness.
    pub fn from_rows(rows: &[Vec<T>]) -> Result<Self, LinalgError> {
        let n = rows.len();
        if n == 0 {
            return Err(LinalgError::Malformed("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(LinalgError::Malformed(format!(
                    "row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        let m = Self { n, data };
        m.validate()?;
        Ok(m)
    }

    /// Builds a matrix from its lower triangle (`i >= j`), mirroring the rest.
    /// Diagonal entries keep only their real part.
    pub fn from_lower(n: usize, f: impl Fn(usize, usize) -> T) -> Result<Self, LinalgError> {
        if n == 0 {
            return Err(LinalgError::Malformed("empty matrix".into()));
        }
        let mut data = vec![T::ZERO; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = f(i, j);
                if !v.finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
                if i == j {
                    data[i * n + i] = T::from_re(v.re());
                } else {
                    data[i * n + j] = v;
                    data[j * n + i] = v.conj();
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn identity(n: usize) -> Self {
        Self::from_lower(n, |i, j| if i == j { T::ONE } else { T::ZERO })
            .expect("identity is well formed")
    }

    pub fn from_diagonal(diag: &[f64]) -> Result<Self, LinalgError> {
        Self::from_lower(diag.len(), |i, j| {
            if i == j {
                T::from_re(diag[i])
            } else {
                T::ZERO
            }
        })
    }

    fn validate(&self) -> Result<(), LinalgError> {
        let n = self.n;
        for i in 0..n {
            for j in 0..n {
                let v = self.data[i * n + j];
                if !v.finite() {
                    return Err(LinalgError::NonFinite { row: i, col: j });
                }
                if v != self.data[j * n + i].conj() {
                    return Err(LinalgError::Malformed(format!(
                        "entry ({i}, {j}) is not the conjugate of ({j}, {i})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<T>> {
        self.data.chunks(self.n).map(<[T]>::to_vec).collect()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> Result<Vec<f64>, LinalgError> {
        T::eigenvalues_of(self)
    }

    pub fn spectral_norm(&self) -> Result<f64, LinalgError> {
        let ev = self.eigenvalues()?;
        Ok(ev.first().unwrap().abs().max(ev.last().unwrap().abs()))
    }

    pub fn min_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(self.eigenvalues()?[0])
    }

    /// `true` iff `λ_min ≥ −tol · max(1, ‖m‖₂)`.
    pub fn is_psd(&self, tol: f64) -> Result<bool, LinalgError> {
        if !tol.is_finite() || tol < 0.0 {
            return Err(LinalgError::InvalidTolerance(tol));
        }
        let ev = self.eigenvalues()?;
        let lo = ev[0];
        let norm = lo.abs().max(ev[ev.len() - 1].abs());
        Ok(lo >= -tol * norm.max(1.0))
    }

    /// `P m Pᵀ` for the permutation sending index `i` to `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, LinalgError> {
        let n = self.n;
        let mut seen = vec![false; n];
        if perm.len() != n || perm.iter().any(|&p| p >= n || std::mem::replace(&mut seen[p], true)) {
            return Err(LinalgError::Malformed("not a permutation".into()));
        }
        let mut data = vec![T::ZERO; n * n];
        for i in 0..n {
            for j in 0..n {
                data[perm[i] * n + perm[j]] = self.data[i * n + j];
            }
        }
        Ok(Self { n, data })
    }

    /// `D − C A⁻¹ C*` for the partition `[[A, C*], [C, D]]` with `A` the
    /// leading `split × split` block. `A` must be positive definite; a
    /// non-positive Cholesky pivot is reported, never pseudo-inverted.
    pub fn schur_complement(&self, split: usize) -> Result<Self, LinalgError> {
        let n = self.n;
        if split == 0 || split >= n {
            return Err(LinalgError::InvalidSplit { split, dim: n });
        }
        let k = split;
        let chol = cholesky(self, k)?;
        let rest = n - k;
        // Solve A X = C* column by column, X is k × rest.
        let mut x = vec![T::ZERO; k * rest];
        for c in 0..rest {
            let rhs: Vec<T> = (0..k).map(|r| self.get(r, k + c)).collect();
            let sol = cholesky_solve(&chol, k, &rhs);
            for r in 0..k {
                x[r * rest + c] = sol[r];
            }
        }
        Self::from_lower(rest, |i, j| {
            let mut acc = self.get(k + i, k + j);
            for t in 0..k {
                acc = acc - self.get(k + i, t) * x[t * rest + j];
            }
            acc
        })
    }

    /// Determinant by Gaussian elimination with partial pivoting. Real for
    /// self-adjoint input, so the real part is returned.
    pub fn determinant(&self) -> f64 {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = T::ONE;
        for col in 0..n {
            let pivot_row = (col..n)
                .max_by(|&r, &s| a[r * n + col].modulus().total_cmp(&a[s * n + col].modulus()))
                .unwrap();
            let pivot = a[pivot_row * n + col];
            if pivot.modulus() == 0.0 {
                return 0.0;
            }
            if pivot_row != col {
                for t in 0..n {
                    a.swap(pivot_row * n + t, col * n + t);
                }
                det = -det;
            }
            det = det * pivot;
            for r in col + 1..n {
                let factor = a[r * n + col] / pivot;
                for t in col..n {
                    a[r * n + t] = a[r * n + t] - factor * a[col * n + t];
                }
            }
        }
        det.re()
    }
}

impl SymmetricMatrix {
    /// Eigenvalues (unsorted) and row-major eigenvector matrix `Q` with
    /// `m = Q diag(λ) Qᵀ`; column `c` of `Q` belongs to `values[c]`.
    pub fn eigen_decomposition(&self) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
        jacobi_eigen(&self.data, self.n)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

impl HermitianMatrix {
    /// Real part of every entry; PSD is preserved.
    pub fn real_part(&self) -> SymmetricMatrix {
        SymmetricMatrix::from_lower(self.n, |i, j| self.get(i, j).re).expect("finite")
    }
}

/// Free-function form of [`SelfAdjointMatrix::is_psd`].
pub fn is_psd<T: Scalar>(m: &SelfAdjointMatrix<T>, tol: f64) -> Result<bool, LinalgError> {
    m.is_psd(tol)
}

pub fn eigenvalues_sym<T: Scalar>(m: &SelfAdjointMatrix<T>) -> Result<Vec<f64>, LinalgError> {
    m.eigenvalues()
}

pub fn schur_complement<T: Scalar>(
    m: &SelfAdjointMatrix<T>,
    split: usize,
) -> Result<SelfAdjointMatrix<T>, LinalgError> {
    m.schur_complement(split)
}

/// Lower Cholesky factor of the leading `k × k` block.
fn cholesky<T: Scalar>(m: &SelfAdjointMatrix<T>, k: usize) -> Result<Vec<T>, LinalgError> {
    let scale = (0..k).map(|i| m.get(i, i).re().abs()).fold(1.0_f64, f64::max);
    let mut l = vec![T::ZERO; k * k];
    for j in 0..k {
        let mut d = m.get(j, j).re();
        for t in 0..j {
            d -= l[j * k + t].modulus().powi(2);
        }
        if !(d > PIVOT_EPS * scale) {
            return Err(LinalgError::DegeneratePivot { index: j, pivot: d });
        }
        let djj = d.sqrt();
        l[j * k + j] = T::from_re(djj);
        for i in j + 1..k {
            let mut acc = m.get(i, j);
            for t in 0..j {
                acc = acc - l[i * k + t] * l[j * k + t].conj();
            }
            l[i * k + j] = acc.scale(1.0 / djj);
        }
    }
    Ok(l)
}

fn cholesky_solve<T: Scalar>(l: &[T], k: usize, rhs: &[T]) -> Vec<T> {
    let mut y = rhs.to_vec();
    for i in 0..k {
        let mut acc = y[i];
        for t in 0..i {
            acc = acc - l[i * k + t] * y[t];
        }
        y[i] = acc / l[i * k + i];
    }
    for i in (0..k).rev() {
        let mut acc = y[i];
        for t in i + 1..k {
            acc = acc - l[t * k + i].conj() * y[t];
        }
        y[i] = acc / l[i * k + i];
    }
    y
}

/// Cyclic Jacobi on a real symmetric row-major matrix. Returns unsorted
/// eigenvalues and the accumulated rotation matrix.
fn jacobi_eigen(input: &[f64], n: usize) -> Result<(Vec<f64>, Vec<f64>), LinalgError> {
    let mut a = input.to_vec();
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }
    let frob2: f64 = a.iter().map(|x| x * x).sum();
    if frob2 == 0.0 {
        return Ok((vec![0.0; n], v));
    }
    for _sweep in 0..JACOBI_MAX_SWEEPS {
        let mut off = 0.0;
        for p in 0..n {
            for q in p + 1..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off <= frob2 * f64::EPSILON * f64::EPSILON * 1e-2 {
            return Ok(((0..n).map(|i| a[i * n + i]).collect(), v));
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    Err(LinalgError::NoConvergence(JACOBI_MAX_SWEEPS))
}
