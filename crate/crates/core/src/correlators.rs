//! Correlator data for two-setting Bell scenarios.
//!
//! A [`CorrelatorTable`] holds one-point means, variances, covariances and
//! Pearson coefficients for Alice's `A_0, A_1` and Bob's `B_0, B_1`. It can
//! be built from a full [`ProbabilityTable`] (arbitrary real outcome
//! alphabets) or directly from moments.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variances at or below this are treated as zero; Pearson entries that
/// would divide by them are left undefined.
pub const VARIANCE_FLOOR: f64 = 1e-12;
/// Per-context normalisation tolerance of probability tables.
pub const NORMALIZATION_TOL: f64 = 1e-12;
/// Variance spread across the remote party's settings above which a table
/// is flagged as signaling in variance.
pub const SIGNALING_VARIANCE_TOL: f64 = 1e-9;
/// Slack allowed on `|ϱ| ≤ 1` for supplied or computed Pearson entries.
pub const PEARSON_SLACK: f64 = 1e-12;

/// `p(a, b | i, j)` for two settings per party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityTable {
    pub outcomes_a: Vec<f64>,
    pub outcomes_b: Vec<f64>,
    /// `p[i][j][a][b]`, rows indexed by Alice's outcome.
    pub p: [[Vec<Vec<f64>>; 2]; 2],
}

impl ProbabilityTable {
    pub fn from_fn(
        outcomes_a: Vec<f64>,
        outcomes_b: Vec<f64>,
        f: impl Fn(usize, usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let (na, nb) = (outcomes_a.len(), outcomes_b.len());
        let dist = |i, j| -> Vec<Vec<f64>> {
            (0..na).map(|a| (0..nb).map(|b| f(i, j, a, b)).collect()).collect()
        };
        let table = Self {
            p: [[dist(0, 0), dist(0, 1)], [dist(1, 0), dist(1, 1)]],
            outcomes_a,
            outcomes_b,
        };
        table.validate()?;
        Ok(table)
    }

    /// `p(a, b | i, j) = 1/2` iff `a·b = (−1)^{ij}`, outcomes `±1`.
    pub fn pr_box() -> Self {
        let outcomes = vec![-1.0, 1.0];
        Self::from_fn(outcomes.clone(), outcomes.clone(), |i, j, a, b| {
            let sign = if i * j == 1 { -1.0 } else { 1.0 };
            if outcomes[a] * outcomes[b] == sign {
                0.5
            } else {
                0.0
            }
        })
        .expect("PR box is normalised")
    }

    pub fn validate(&self) -> Result<()> {
        if self.outcomes_a.is_empty() || self.outcomes_b.is_empty() {
            return Err(Error::malformed("outcome alphabets must be non-empty"));
        }
        if let Some(x) = self.outcomes_a.iter().chain(&self.outcomes_b).find(|x| !x.is_finite()) {
            return Err(Error::malformed(format!("non-finite outcome value {x}")));
        }
        for i in 0..2 {
            for j in 0..2 {
                let dist = &self.p[i][j];
                if dist.len() != self.outcomes_a.len()
                    || dist.iter().any(|row| row.len() != self.outcomes_b.len())
                {
                    return Err(Error::malformed(format!(
                        "p[{i}][{j}] must be {}x{}",
                        self.outcomes_a.len(),
                        self.outcomes_b.len()
                    )));
                }
                let mut total = 0.0;
                for row in dist {
                    for &q in row {
                        if !q.is_finite() || q < 0.0 {
                            return Err(Error::malformed(format!("p[{i}][{j}] has invalid entry {q}")));
                        }
                        total += q;
                    }
                }
                if (total - 1.0).abs() > NORMALIZATION_TOL {
                    return Err(Error::malformed(format!("p[{i}][{j}] sums to {total}, not 1")));
                }
            }
        }
        Ok(())
    }

    /// Alice's marginal for setting `i` given Bob's setting `j`.
    pub fn marginal_a(&self, i: usize, j: usize) -> Vec<f64> {
        self.p[i][j].iter().map(|row| row.iter().sum()).collect()
    }

    /// Bob's marginal for setting `j` given Alice's setting `i`.
    pub fn marginal_b(&self, i: usize, j: usize) -> Vec<f64> {
        let dist = &self.p[i][j];
        (0..self.outcomes_b.len()).map(|b| dist.iter().map(|row| row[b]).sum()).collect()
    }

    fn is_pm1(&self) -> bool {
        let pm1 = |xs: &[f64]| xs.iter().all(|&x| x == 1.0 || x == -1.0);
        pm1(&self.outcomes_a) && pm1(&self.outcomes_b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelatorTable {
    pub means_a: [f64; 2],
    pub means_b: [f64; 2],
    pub var_a: [f64; 2],
    pub var_b: [f64; 2],
    /// `cov[i][j] = C(A_i, B_j)`.
    pub cov: [[f64; 2]; 2],
    /// `None` where a variance is at or below [`VARIANCE_FLOOR`].
    pub pearson: [[Option<f64>; 2]; 2],
    pub signaling_in_variance: bool,
    /// Raw two-point correlators `⟨A_i B_j⟩`, present only for `±1`-valued data.
    pub pm1_correlators: Option<[[f64; 2]; 2]>,
}

impl CorrelatorTable {
    /// Moments computed per setting pair; the reported means and variances
    /// are those of Bob's (resp. Alice's) setting 0 context.
    pub fn from_probability_table(pt: &ProbabilityTable) -> Result<Self> {
        pt.validate()?;
        let weighted = |xs: &[f64], probs: &[f64], pow: i32| -> f64 {
            xs.iter().zip(probs).map(|(x, q)| x.powi(pow) * q).sum()
        };
        let mut mean_a = [[0.0; 2]; 2];
        let mut var_a = [[0.0; 2]; 2];
        let mut mean_b = [[0.0; 2]; 2];
        let mut var_b = [[0.0; 2]; 2];
        let mut cov = [[0.0; 2]; 2];
        let mut two_point = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                let ma = pt.marginal_a(i, j);
                let mb = pt.marginal_b(i, j);
                let m1a = weighted(&pt.outcomes_a, &ma, 1);
                let m1b = weighted(&pt.outcomes_b, &mb, 1);
                mean_a[i][j] = m1a;
                mean_b[i][j] = m1b;
                var_a[i][j] = (weighted(&pt.outcomes_a, &ma, 2) - m1a * m1a).max(0.0);
                var_b[i][j] = (weighted(&pt.outcomes_b, &mb, 2) - m1b * m1b).max(0.0);
                let mut e = 0.0;
                for (a, row) in pt.p[i][j].iter().enumerate() {
                    for (b, q) in row.iter().enumerate() {
                        e += pt.outcomes_a[a] * pt.outcomes_b[b] * q;
                    }
                }
                two_point[i][j] = e;
                cov[i][j] = e - m1a * m1b;
            }
        }
        let mut pearson = [[None; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                pearson[i][j] = pearson_from(cov[i][j], var_a[i][j], var_b[i][j]);
            }
        }
        let spread = (0..2)
            .map(|i| (var_a[i][0] - var_a[i][1]).abs())
            .chain((0..2).map(|j| (var_b[0][j] - var_b[1][j]).abs()))
            .fold(0.0_f64, f64::max);
        Ok(Self {
            means_a: [mean_a[0][0], mean_a[1][0]],
            means_b: [mean_b[0][0], mean_b[0][1]],
            var_a: [var_a[0][0], var_a[1][0]],
            var_b: [var_b[0][0], var_b[0][1]],
            cov,
            pearson,
            signaling_in_variance: spread > SIGNALING_VARIANCE_TOL,
            pm1_correlators: pt.is_pm1().then_some(two_point),
        })
    }

    /// Builds a table from covariances and one-point moments.
    pub fn from_covariances(
        means_a: [f64; 2],
        means_b: [f64; 2],
        var_a: [f64; 2],
        var_b: [f64; 2],
        cov: [[f64; 2]; 2],
    ) -> Result<Self> {
        let all = means_a.iter().chain(&means_b).chain(&var_a).chain(&var_b).chain(cov.iter().flatten());
        if all.clone().any(|x| !x.is_finite()) {
            return Err(Error::malformed("non-finite moment"));
        }
        if var_a.iter().chain(&var_b).any(|&v| v < 0.0) {
            return Err(Error::malformed("negative variance"));
        }
        let mut pearson = [[None; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                pearson[i][j] = pearson_from(cov[i][j], var_a[i], var_b[j]);
            }
        }
        let pm1_signature = |m: &[f64; 2], v: &[f64; 2]| (0..2).all(|s| (v[s] - (1.0 - m[s] * m[s])).abs() <= 1e-9);
        let pm1_correlators = (pm1_signature(&means_a, &var_a) && pm1_signature(&means_b, &var_b)).then(|| {
            let mut e = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    e[i][j] = cov[i][j] + means_a[i] * means_b[j];
                }
            }
            e
        });
        Ok(Self {
            means_a,
            means_b,
            var_a,
            var_b,
            cov,
            pearson,
            signaling_in_variance: false,
            pm1_correlators,
        })
    }

    /// Builds a table from Pearson coefficients plus optional moments
    /// (defaults: zero means, unit variances).
    pub fn from_pearson_with_moments(
        pearson: [[f64; 2]; 2],
        means_a: [f64; 2],
        means_b: [f64; 2],
        var_a: [f64; 2],
        var_b: [f64; 2],
    ) -> Result<Self> {
        for (i, row) in pearson.iter().enumerate() {
            for (j, &r) in row.iter().enumerate() {
                if !r.is_finite() || r.abs() > 1.0 + PEARSON_SLACK {
                    return Err(Error::malformed(format!("pearson[{i}][{j}] = {r} is outside [-1, 1]")));
                }
            }
        }
        if let Some(v) = var_a.iter().chain(&var_b).find(|&&v| !(v > VARIANCE_FLOOR)) {
            return Err(Error::degenerate(format!("variance {v} is too small to carry a Pearson coefficient")));
        }
        let mut cov = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                cov[i][j] = pearson[i][j] * (var_a[i] * var_b[j]).sqrt();
            }
        }
        let mut table = Self::from_covariances(means_a, means_b, var_a, var_b, cov)?;
        table.pearson = pearson.map(|row| row.map(Some));
        Ok(table)
    }

    pub fn from_pearson(pearson: [[f64; 2]; 2]) -> Result<Self> {
        Self::from_pearson_with_moments(pearson, [0.0; 2], [0.0; 2], [1.0; 2], [1.0; 2])
    }

    /// `ϱ_ij = (−1)^{ij}/√2`, the Tsirelson point.
    pub fn tsirelson() -> Self {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        Self::from_pearson([[s, s], [s, -s]]).expect("valid")
    }

    /// `ϱ_ij = (−1)^{ij}` at the Pearson level.
    pub fn pr_box() -> Self {
        Self::from_pearson([[1.0, 1.0], [1.0, -1.0]]).expect("valid")
    }

    pub fn uncorrelated() -> Self {
        Self::from_pearson([[0.0; 2]; 2]).expect("valid")
    }

    pub fn is_degenerate(&self) -> bool {
        self.pearson.iter().flatten().any(Option::is_none)
    }

    /// All four Pearson coefficients, or a degenerate-data error.
    pub fn pearson_matrix(&self) -> Result<[[f64; 2]; 2]> {
        let mut out = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.pearson[i][j].ok_or_else(|| {
                    Error::degenerate(format!("Pearson coefficient ({i}, {j}) is undefined (zero variance)"))
                })?;
            }
        }
        Ok(out)
    }
}

fn pearson_from(cov: f64, var_a: f64, var_b: f64) -> Option<f64> {
    (var_a > VARIANCE_FLOOR && var_b > VARIANCE_FLOOR).then(|| (cov / (var_a * var_b).sqrt()).clamp(-1.0, 1.0))
}

/// `ϱ00 + ϱ10 + ϱ01 − ϱ11` of a raw 2×2 array indexed `[i][j]`.
pub fn chsh_of(rho: &[[f64; 2]; 2]) -> f64 {
    rho[0][0] + rho[1][0] + rho[0][1] - rho[1][1]
}

/// Bell-CHSH parameter at the Pearson level.
pub fn chsh(ct: &CorrelatorTable) -> Result<f64> {
    Ok(chsh_of(&ct.pearson_matrix()?))
}

/// Location of the largest marginal discrepancy for one party, reported
/// only when it exceeds the tolerance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarginalDiscrepancy {
    /// The party's own setting.
    pub setting: usize,
    /// Index into the party's outcome alphabet.
    pub outcome: usize,
    pub discrepancy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoSignalingReport {
    pub max_discrepancy_a: f64,
    pub max_discrepancy_b: f64,
    pub worst_a: Option<MarginalDiscrepancy>,
    pub worst_b: Option<MarginalDiscrepancy>,
    pub pass: bool,
}

pub fn check_no_signaling(pt: &ProbabilityTable, tol: f64) -> Result<NoSignalingReport> {
    pt.validate()?;
    let worst = |pairs: Vec<(usize, Vec<f64>, Vec<f64>)>| -> Option<MarginalDiscrepancy> {
        pairs
            .into_iter()
            .flat_map(|(setting, m0, m1)| {
                m0.into_iter().zip(m1).enumerate().map(move |(outcome, (x, y))| MarginalDiscrepancy {
                    setting,
                    outcome,
                    discrepancy: (x - y).abs(),
                })
            })
            .max_by(|a, b| a.discrepancy.total_cmp(&b.discrepancy))
    };
    let a = worst((0..2).map(|i| (i, pt.marginal_a(i, 0), pt.marginal_a(i, 1))).collect());
    let b = worst((0..2).map(|j| (j, pt.marginal_b(0, j), pt.marginal_b(1, j))).collect());
    let da = a.map_or(0.0, |d| d.discrepancy);
    let db = b.map_or(0.0, |d| d.discrepancy);
    Ok(NoSignalingReport {
        max_discrepancy_a: da,
        max_discrepancy_b: db,
        worst_a: a.filter(|d| d.discrepancy > tol),
        worst_b: b.filter(|d| d.discrepancy > tol),
        pass: da <= tol && db <= tol,
    })
}

/// Pairwise Pearson blocks of a three-party, two-setting scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TripartiteCorrelatorTable {
    /// `ϱ^{AB}_{ij}`.
    pub pearson_ab: [[f64; 2]; 2],
    /// `ϱ^{AC}_{ik}`.
    pub pearson_ac: [[f64; 2]; 2],
    /// `ϱ^{BC}_{jk}`.
    pub pearson_bc: [[f64; 2]; 2],
    #[serde(default = "unit_pair")]
    pub var_a: [f64; 2],
    #[serde(default = "unit_pair")]
    pub var_b: [f64; 2],
    #[serde(default = "unit_pair")]
    pub var_c: [f64; 2],
}

fn unit_pair() -> [f64; 2] {
    [1.0, 1.0]
}

impl TripartiteCorrelatorTable {
    pub fn new(pearson_ab: [[f64; 2]; 2], pearson_ac: [[f64; 2]; 2], pearson_bc: [[f64; 2]; 2]) -> Result<Self> {
        let t = Self {
            pearson_ab,
            pearson_ac,
            pearson_bc,
            var_a: unit_pair(),
            var_b: unit_pair(),
            var_c: unit_pair(),
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, block) in [("ab", &self.pearson_ab), ("ac", &self.pearson_ac), ("bc", &self.pearson_bc)] {
            for (i, row) in block.iter().enumerate() {
                for (j, &r) in row.iter().enumerate() {
                    if !r.is_finite() || r.abs() > 1.0 + PEARSON_SLACK {
                        return Err(Error::malformed(format!("pearson_{name}[{i}][{j}] = {r} is outside [-1, 1]")));
                    }
                }
            }
        }
        if let Some(v) = self.var_a.iter().chain(&self.var_b).chain(&self.var_c).find(|&&v| !(v > VARIANCE_FLOOR)) {
            return Err(Error::degenerate(format!("variance {v} is too small")));
        }
        Ok(())
    }
}
