//! Local hidden variables for the two-setting, two-outcome scenario.
//!
//! Vertices are the 16 deterministic strategies. Vertex `k` has bits
//! `(a0, a1, b0, b1)` in binary counting, most significant first, with bit
//! 0 meaning outcome −1.

use serde::{Deserialize, Serialize};

use crate::correlators::{chsh_of, CorrelatorTable, VARIANCE_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

pub const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DeterministicStrategy {
    pub a0: i8,
    pub a1: i8,
    pub b0: i8,
    pub b1: i8,
}

impl DeterministicStrategy {
    pub fn from_index(k: usize) -> Self {
        assert!(k < 16, "vertex index {k} out of range");
        let bit = |shift: usize| if (k >> shift) & 1 == 1 { 1 } else { -1 };
        Self { a0: bit(3), a1: bit(2), b0: bit(1), b1: bit(0) }
    }

    pub fn index(&self) -> usize {
        let bit = |v: i8| usize::from(v == 1);
        bit(self.a0) << 3 | bit(self.a1) << 2 | bit(self.b0) << 1 | bit(self.b1)
    }

    pub fn a(&self) -> [f64; 2] {
        [f64::from(self.a0), f64::from(self.a1)]
    }

    pub fn b(&self) -> [f64; 2] {
        [f64::from(self.b0), f64::from(self.b1)]
    }

    /// `E[i][j] = a_i b_j`.
    pub fn correlators(&self) -> [[f64; 2]; 2] {
        let (a, b) = (self.a(), self.b());
        [[a[0] * b[0], a[0] * b[1]], [a[1] * b[0], a[1] * b[1]]]
    }
}

pub fn enumerate_vertices() -> [DeterministicStrategy; 16] {
    std::array::from_fn(DeterministicStrategy::from_index)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawEnsemble")]
pub struct LhvEnsemble {
    weights: [f64; 16],
}

#[derive(Deserialize)]
struct RawEnsemble {
    weights: Vec<f64>,
}

impl TryFrom<RawEnsemble> for LhvEnsemble {
    type Error = Error;

    fn try_from(raw: RawEnsemble) -> Result<Self> {
        let weights: [f64; 16] = raw
            .weights
            .try_into()
            .map_err(|w: Vec<f64>| Error::malformed(format!("expected 16 weights, got {}", w.len())))?;
        Self::new(weights)
    }
}

impl LhvEnsemble {
    pub fn new(weights: [f64; 16]) -> Result<Self> {
        if let Some((k, w)) = weights.iter().enumerate().find(|(_, w)| !w.is_finite() || **w < 0.0) {
            return Err(Error::malformed(format!("weight {k} is invalid: {w}")));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::malformed(format!("weights sum to {total}, not 1")));
        }
        Ok(Self { weights })
    }

    pub fn uniform() -> Self {
        Self { weights: [1.0 / 16.0; 16] }
    }

    pub fn point_mass(vertex: DeterministicStrategy) -> Self {
        let mut weights = [0.0; 16];
        weights[vertex.index()] = 1.0;
        Self { weights }
    }

    /// Rescales non-negative weights to sum to one.
    pub fn normalized(mut weights: [f64; 16]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::malformed("weights must be non-negative with positive sum"));
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self { weights })
    }

    pub fn weights(&self) -> &[f64; 16] {
        &self.weights
    }

    /// Expectation of `f` over the vertices.
    pub fn expect(&self, f: impl Fn(&DeterministicStrategy) -> f64) -> f64 {
        enumerate_vertices().iter().zip(&self.weights).map(|(v, w)| w * f(v)).sum()
    }

    /// True when every weight is 0 or 1.
    pub fn is_deterministic(&self) -> bool {
        self.weights.iter().all(|&w| w == 0.0 || w == 1.0)
    }
}

/// Correlators of an ensemble with Alice's joint covariance `r = C(A_0, A_1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LhvCorrelators {
    pub table: CorrelatorTable,
    pub r: f64,
    /// `r / (Δ_0 Δ_1)`; `None` if either variance vanishes.
    pub r_prime: Option<f64>,
}

pub fn correlators_of(ens: &LhvEnsemble) -> LhvCorrelators {
    let mean_a = [ens.expect(|v| v.a()[0]), ens.expect(|v| v.a()[1])];
    let mean_b = [ens.expect(|v| v.b()[0]), ens.expect(|v| v.b()[1])];
    let var = |m: f64| (1.0 - m * m).max(0.0);
    let mut cov = [[0.0; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            cov[i][j] = ens.expect(|v| v.correlators()[i][j]) - mean_a[i] * mean_b[j];
        }
    }
    let var_a = mean_a.map(var);
    let var_b = mean_b.map(var);
    let table = CorrelatorTable::from_covariances(mean_a, mean_b, var_a, var_b, cov)
        .expect("ensemble moments are finite and variances non-negative");
    let r = ens.expect(|v| f64::from(v.a0 * v.a1)) - mean_a[0] * mean_a[1];
    let r_prime = (var_a[0] > VARIANCE_FLOOR && var_a[1] > VARIANCE_FLOOR).then(|| r / (var_a[0] * var_a[1]).sqrt());
    LhvCorrelators { table, r, r_prime }
}

/// Membership in the local polytope of two-point correlators: all eight
/// CHSH variants bounded by 2.
pub fn is_local(e: &[[f64; 2]; 2], tol: f64) -> Result<bool> {
    if let Some(x) = e.iter().flatten().find(|x| !x.is_finite() || x.abs() > 1.0 + tol) {
        return Err(Error::malformed(format!("correlator {x} is outside [-1, 1]")));
    }
    Ok(max_chsh_variant(e) <= 2.0 + tol)
}

/// Largest `|E00 + E01 + E10 + E11 − 2 E_flip|` over the four flip positions.
pub fn max_chsh_variant(e: &[[f64; 2]; 2]) -> f64 {
    let total: f64 = e.iter().flatten().sum();
    e.iter().flatten().map(|x| (total - 2.0 * x).abs()).fold(0.0, f64::max)
}

/// Raw covariance matrix of the four products, ordered
/// `A_0B_0, A_1B_0, A_0B_1, A_1B_1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductCovariance {
    pub matrix: SymmetricMatrix,
    /// CHSH combination of raw two-point correlators `⟨A_i B_j⟩`.
    pub chsh: f64,
    /// Set when some single-party variance is at or below the floor, so
    /// Pearson normalisation is unavailable.
    pub degenerate: bool,
}

impl ProductCovariance {
    /// `u M uᵀ` for `u = [1, 1, 1, −1]`; equals `4 − chsh²`.
    pub fn contraction(&self) -> f64 {
        let u = CHSH_VECTOR;
        let mut s = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                s += u[a] * self.matrix.get(a, b) * u[b];
            }
        }
        s
    }
}

pub const CHSH_VECTOR: [f64; 4] = [1.0, 1.0, 1.0, -1.0];

/// `(i, j)` of product slot `k` in the `A_0B_0, A_1B_0, A_0B_1, A_1B_1` order.
fn slot(k: usize) -> (usize, usize) {
    (k % 2, k / 2)
}

pub fn product_cov_matrix(ens: &LhvEnsemble) -> ProductCovariance {
    let product = |v: &DeterministicStrategy, k: usize| {
        let (i, j) = slot(k);
        v.correlators()[i][j]
    };
    let means: [f64; 4] = std::array::from_fn(|k| ens.expect(|v| product(v, k)));
    let matrix = SymmetricMatrix::from_lower(4, |a, b| ens.expect(|v| product(v, a) * product(v, b)) - means[a] * means[b])
        .expect("ensemble moments are finite");
    let e = [[means[0], means[2]], [means[1], means[3]]];
    let corr = correlators_of(ens);
    ProductCovariance {
        matrix,
        chsh: chsh_of(&e),
        degenerate: corr.table.is_degenerate(),
    }
}

/// Normalised block matrix with off-diagonal blocks `−R̃_j R̃_kᵀ`:
/// `[[N − R̃_0R̃_0ᵀ, −R̃_0R̃_1ᵀ], [−R̃_1R̃_0ᵀ, N − R̃_1R̃_1ᵀ]]` with
/// `N = [[1, r'], [r', 1]]` and `R̃_j = (ϱ_0j, ϱ_1j)`. Its `u = [1, 1, 1, −1]`
/// contraction is `4 − 𝓑²`.
pub fn locality_matrix(pearson: &[[f64; 2]; 2], r_prime: f64) -> Result<SymmetricMatrix> {
    block_matrix(pearson, r_prime, true)
}

/// Block-diagonal counterpart of [`locality_matrix`]; PSD iff both
/// per-setting uncertainty blocks are.
pub fn quantum_cor_matrix(pearson: &[[f64; 2]; 2], r_prime: f64) -> Result<SymmetricMatrix> {
    block_matrix(pearson, r_prime, false)
}

fn block_matrix(pearson: &[[f64; 2]; 2], r_prime: f64, coupled: bool) -> Result<SymmetricMatrix> {
    Ok(SymmetricMatrix::from_lower(4, |a, b| {
        let (ia, ja) = slot(a);
        let (ib, jb) = slot(b);
        let outer = pearson[ia][ja] * pearson[ib][jb];
        if ja == jb {
            let n = if ia == ib { 1.0 } else { r_prime };
            n - outer
        } else if coupled {
            -outer
        } else {
            0.0
        }
    })?)
}
