//! Quantum states and observables.

use serde::{Deserialize, Serialize};

use super::matrix::{c, inner, norm, CMatrix, C64, I, ONE, ZERO};
use crate::error::{Error, Result};

/// Largest supported Hilbert-space dimension (single factor or joint).
pub const MAX_DIM: usize = 64;
pub const NORM_TOL: f64 = 1e-12;
pub const HERMITIAN_TOL: f64 = 1e-12;
pub const DENSITY_PSD_TOL: f64 = 1e-10;

fn check_dim(n: usize) -> Result<()> {
    if !(2..=MAX_DIM).contains(&n) {
        return Err(Error::malformed(format!("dimension {n} is outside 2..={MAX_DIM}")));
    }
    Ok(())
}

/// A self-adjoint operator on one factor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ObservableRepr", into = "ObservableRepr")]
pub struct Observable {
    matrix: CMatrix,
}

impl Observable {
    /// Accepts matrices Hermitian within [`HERMITIAN_TOL`] and stores their
    /// exact Hermitian part.
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_dim(matrix.dim())?;
        if !matrix.is_finite() {
            return Err(Error::malformed("observable has a non-finite entry"));
        }
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::malformed("observable is not Hermitian"));
        }
        Ok(Self { matrix: matrix.hermitian_part() })
    }

    pub fn pauli_x() -> Self {
        Self { matrix: CMatrix::from_fn(2, |i, j| if i != j { ONE } else { ZERO }) }
    }

    pub fn pauli_y() -> Self {
        Self { matrix: CMatrix::from_fn(2, |i, j| match (i, j) { (0, 1) => -I, (1, 0) => I, _ => ZERO }) }
    }

    pub fn pauli_z() -> Self {
        Self { matrix: CMatrix::diagonal(&[1.0, -1.0]) }
    }

    /// `n̂ · σ` for a non-zero Bloch vector (normalised first).
    pub fn bloch(n: [f64; 3]) -> Result<Self> {
        let len = (n[0] * n[0] + n[1] * n[1] + n[2] * n[2]).sqrt();
        if !(len > 1e-12) || !len.is_finite() {
            return Err(Error::malformed("Bloch vector must be non-zero and finite"));
        }
        let [x, y, z] = n.map(|v| v / len);
        Ok(Self {
            matrix: CMatrix::from_rows(&[vec![c(z, 0.0), c(x, -y)], vec![c(x, y), c(-z, 0.0)]])?,
        })
    }

    /// Spin observable along polar angle `theta`, azimuth `phi`.
    pub fn spin(theta: f64, phi: f64) -> Self {
        let (st, ct) = theta.sin_cos();
        let (sp, cp) = phi.sin_cos();
        Self::bloch([st * cp, st * sp, ct]).expect("unit vector")
    }

    pub fn diagonal(d: &[f64]) -> Result<Self> {
        Self::new(CMatrix::diagonal(d))
    }

    /// `x = (a + a†)/√2` truncated to `n` levels, `ħ = 1`.
    pub fn position(n: usize) -> Result<Self> {
        check_dim(n)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(CMatrix::from_fn(n, |i, j| {
            if i + 1 == j {
                c(s * (j as f64).sqrt(), 0.0)
            } else if j + 1 == i {
                c(s * (i as f64).sqrt(), 0.0)
            } else {
                ZERO
            }
        }))
    }

    /// `p = i(a† − a)/√2` truncated to `n` levels, `ħ = 1`.
    pub fn momentum(n: usize) -> Result<Self> {
        check_dim(n)?;
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(CMatrix::from_fn(n, |i, j| {
            if i + 1 == j {
                c(0.0, -s * (j as f64).sqrt())
            } else if j + 1 == i {
                c(0.0, s * (i as f64).sqrt())
            } else {
                ZERO
            }
        }))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn power(&self, m: u32) -> Self {
        Self { matrix: self.matrix.pow(m).hermitian_part() }
    }

    /// True when the operator is `λ I` within `tol`.
    pub fn is_scalar(&self, tol: f64) -> bool {
        let n = self.dim();
        let lambda = self.matrix.trace() / n as f64;
        self.matrix.max_abs_diff(&CMatrix::identity(n).scale(lambda)) <= tol
    }

    /// Ascending eigenvalues.
    pub fn spectrum(&self) -> Result<Vec<f64>> {
        Ok(self.matrix.to_hermitian().eigenvalues()?)
    }
}

/// Complex matrix as separate real and imaginary parts.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixRepr {
    pub re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<Vec<f64>>>,
}

impl MatrixRepr {
    pub fn from_matrix(m: &CMatrix) -> Self {
        let rows = m.rows();
        let im: Vec<Vec<f64>> = rows.iter().map(|r| r.iter().map(|z| z.im).collect()).collect();
        let has_im = im.iter().flatten().any(|&x| x != 0.0);
        Self {
            re: rows.iter().map(|r| r.iter().map(|z| z.re).collect()).collect(),
            im: has_im.then_some(im),
        }
    }

    pub fn to_matrix(&self) -> Result<CMatrix> {
        let n = self.re.len();
        let im = match &self.im {
            Some(im) => {
                if im.len() != n || im.iter().zip(&self.re).any(|(a, b)| a.len() != b.len()) {
                    return Err(Error::malformed("real and imaginary parts differ in shape"));
                }
                im.clone()
            }
            None => self.re.iter().map(|r| vec![0.0; r.len()]).collect(),
        };
        let rows: Vec<Vec<C64>> =
            self.re.iter().zip(&im).map(|(r, i)| r.iter().zip(i).map(|(&a, &b)| c(a, b)).collect()).collect();
        CMatrix::from_rows(&rows)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ObservableRepr {
    Bloch { bloch: [f64; 3] },
    Matrix(MatrixRepr),
}

impl TryFrom<ObservableRepr> for Observable {
    type Error = Error;
    fn try_from(r: ObservableRepr) -> Result<Self> {
        match r {
            ObservableRepr::Bloch { bloch } => Observable::bloch(bloch),
            ObservableRepr::Matrix(m) => Observable::new(m.to_matrix()?),
        }
    }
}

impl From<Observable> for ObservableRepr {
    fn from(o: Observable) -> Self {
        ObservableRepr::Matrix(MatrixRepr::from_matrix(&o.matrix))
    }
}

/// A normalised pure state or a density matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub enum QuantumState {
    Pure(Vec<C64>),
    Mixed(CMatrix),
}

impl QuantumState {
    pub fn pure(v: Vec<C64>) -> Result<Self> {
        check_dim(v.len())?;
        if v.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::malformed("state has a non-finite amplitude"));
        }
        let nv = norm(&v);
        if (nv - 1.0).abs() > NORM_TOL {
            return Err(Error::malformed(format!("state norm is {nv}, expected 1")));
        }
        Ok(Self::Pure(v))
    }

    /// Normalises a non-zero vector.
    pub fn pure_normalized(v: Vec<C64>) -> Result<Self> {
        let nv = norm(&v);
        if !(nv > 0.0) || !nv.is_finite() {
            return Err(Error::malformed("cannot normalise a zero or non-finite vector"));
        }
        Self::pure(v.into_iter().map(|z| z / nv).collect())
    }

    pub fn mixed(rho: CMatrix) -> Result<Self> {
        check_dim(rho.dim())?;
        if !rho.is_finite() || !rho.is_hermitian(HERMITIAN_TOL) {
            return Err(Error::malformed("density matrix must be finite and Hermitian"));
        }
        let rho = rho.hermitian_part();
        let tr = rho.trace().re;
        if (tr - 1.0).abs() > NORM_TOL {
            return Err(Error::malformed(format!("density matrix trace is {tr}, expected 1")));
        }
        if !rho.to_hermitian().is_psd(DENSITY_PSD_TOL)? {
            return Err(Error::malformed("density matrix is not positive semidefinite"));
        }
        Ok(Self::Mixed(rho))
    }

    /// `Σ p_k ρ_k` of valid states with probabilities summing to one.
    pub fn mixture(parts: &[(f64, QuantumState)]) -> Result<Self> {
        let first = parts.first().ok_or_else(|| Error::malformed("empty mixture"))?;
        let n = first.1.dim();
        let mut rho = CMatrix::zeros(n);
        for (p, s) in parts {
            if s.dim() != n || !(*p >= 0.0) {
                return Err(Error::malformed("mixture components must share a dimension and have non-negative weight"));
            }
            rho = &rho + &s.density().scale(c(*p, 0.0));
        }
        Self::mixed(rho)
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Pure(v) => v.len(),
            Self::Mixed(m) => m.dim(),
        }
    }

    pub fn density(&self) -> CMatrix {
        match self {
            Self::Pure(v) => CMatrix::outer(v, v),
            Self::Mixed(m) => m.clone(),
        }
    }

    /// `⟨X⟩`.
    pub fn expect(&self, x: &CMatrix) -> C64 {
        match self {
            Self::Pure(v) => inner(v, &x.apply(v)),
            Self::Mixed(rho) => rho.trace_product(x),
        }
    }

    /// Matrix `G[a][b] = ⟨X_a X_b⟩` of Hermitian operators.
    pub fn second_moments(&self, ops: &[&CMatrix]) -> Vec<Vec<C64>> {
        match self {
            Self::Pure(v) => {
                let images: Vec<Vec<C64>> = ops.iter().map(|x| x.apply(v)).collect();
                images.iter().map(|a| images.iter().map(|b| inner(a, b)).collect()).collect()
            }
            Self::Mixed(rho) => {
                let left: Vec<CMatrix> = ops.iter().map(|x| rho.matmul(x)).collect();
                left.iter().map(|rx| ops.iter().map(|y| rx.trace_product(y)).collect()).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateRepr {
    Pure {
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        im: Option<Vec<f64>>,
    },
    Mixed {
        density: MatrixRepr,
    },
}

impl TryFrom<StateRepr> for QuantumState {
    type Error = Error;
    fn try_from(r: StateRepr) -> Result<Self> {
        match r {
            StateRepr::Pure { re, im } => {
                let im = im.unwrap_or_else(|| vec![0.0; re.len()]);
                if im.len() != re.len() {
                    return Err(Error::malformed("state re and im differ in length"));
                }
                QuantumState::pure(re.iter().zip(&im).map(|(&a, &b)| c(a, b)).collect())
            }
            StateRepr::Mixed { density } => QuantumState::mixed(density.to_matrix()?),
        }
    }
}

impl From<QuantumState> for StateRepr {
    fn from(s: QuantumState) -> Self {
        match s {
            QuantumState::Pure(v) => {
                let im: Vec<f64> = v.iter().map(|z| z.im).collect();
                StateRepr::Pure {
                    re: v.iter().map(|z| z.re).collect(),
                    im: im.iter().any(|&x| x != 0.0).then_some(im),
                }
            }
            QuantumState::Mixed(m) => StateRepr::Mixed { density: MatrixRepr::from_matrix(&m) },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pauli_spectra_and_bloch() {
        for o in [Observable::pauli_x(), Observable::pauli_y(), Observable::pauli_z()] {
            let s = o.spectrum().unwrap();
            assert!((s[0] + 1.0).abs() < 1e-12 && (s[1] - 1.0).abs() < 1e-12);
        }
        assert_eq!(Observable::bloch([0.0, 0.0, 2.0]).unwrap(), Observable::pauli_z());
        assert_eq!(Observable::bloch([1.0, 0.0, 0.0]).unwrap(), Observable::pauli_x());
        assert!(Observable::bloch([0.0; 3]).is_err());
        assert!(Observable::pauli_x().power(2).is_scalar(1e-15));
        assert!(!Observable::pauli_x().is_scalar(1e-15));
    }

    #[test]
    fn ladder_commutator() {
        let n = 6;
        let x = Observable::position(n).unwrap();
        let p = Observable::momentum(n).unwrap();
        let comm = x.matrix().commutator(p.matrix());
        // [x, p] = i(I − n|n−1⟩⟨n−1|) on the truncated space.
        for k in 0..n {
            let expected = if k + 1 == n { c(0.0, 1.0 - n as f64) } else { I };
            assert!((comm.get(k, k) - expected).norm() < 1e-12);
        }
    }

    #[test]
    fn state_validation() {
        assert!(QuantumState::pure(vec![ONE, ONE]).is_err());
        let s = QuantumState::pure_normalized(vec![ONE, ONE]).unwrap();
        assert!((s.expect(Observable::pauli_x().matrix()).re - 1.0).abs() < 1e-15);
        let bad = CMatrix::diagonal(&[1.5, -0.5]);
        assert!(QuantumState::mixed(bad).is_err());
        let mixed = QuantumState::mixed(CMatrix::diagonal(&[0.5, 0.5])).unwrap();
        assert_eq!(mixed.expect(Observable::pauli_z().matrix()), ZERO);
    }

    #[test]
    fn second_moments_agree_for_pure_and_mixed() {
        let v = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let pure = QuantumState::pure(v).unwrap();
        let mixed = QuantumState::mixed(pure.density()).unwrap();
        let (x, y) = (Observable::pauli_x(), Observable::pauli_y());
        let ops = [x.matrix(), y.matrix()];
        let a = pure.second_moments(&ops);
        let b = mixed.second_moments(&ops);
        for i in 0..2 {
            for j in 0..2 {
                assert!((a[i][j] - b[i][j]).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn json_forms() {
        let o: Observable = serde_json::from_str(r#"{"bloch": [0, 1, 0]}"#).unwrap();
        assert_eq!(o, Observable::pauli_y());
        let o: Observable = serde_json::from_str(r#"{"re": [[0, 0], [0, 0]], "im": [[0, -1], [1, 0]]}"#).unwrap();
        assert_eq!(o, Observable::pauli_y());
        let back: Observable = serde_json::from_str(&serde_json::to_string(&o).unwrap()).unwrap();
        assert_eq!(back, o);
        let s: QuantumState = serde_json::from_str(r#"{"re": [1, 0]}"#).unwrap();
        assert_eq!(s, QuantumState::Pure(vec![ONE, ZERO]));
        let s: QuantumState = serde_json::from_str(r#"{"density": {"re": [[0.5, 0], [0, 0.5]]}}"#).unwrap();
        assert_eq!(s.dim(), 2);
        assert!(serde_json::from_str::<Observable>(r#"{"re": [[0, 1], [0, 0]]}"#).is_err());
    }
}
