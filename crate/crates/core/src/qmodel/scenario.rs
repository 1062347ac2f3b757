//! Multi-party scenarios: a joint state plus two observables per party.
//!
//! Tensor factors are ordered Alice, Bob, Charlie, then any further
//! parties; Alice's index is the most significant.

use serde::{Deserialize, Serialize};

use super::matrix::{embed, CMatrix, C64};
use super::state::{Observable, QuantumState, MAX_DIM};
use crate::correlators::{CorrelatorTable, TripartiteCorrelatorTable, VARIANCE_FLOOR};
use crate::error::{Error, Result};

pub const ALICE: usize = 0;
pub const BOB: usize = 1;
pub const CHARLIE: usize = 2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ScenarioRepr", into = "ScenarioRepr")]
pub struct QuantumScenario {
    dims: Vec<usize>,
    state: QuantumState,
    observables: Vec<[Observable; 2]>,
    lifted: Vec<[CMatrix; 2]>,
}

impl QuantumScenario {
    pub fn new(dims: Vec<usize>, state: QuantumState, observables: Vec<[Observable; 2]>) -> Result<Self> {
        if dims.len() < 2 {
            return Err(Error::malformed("a scenario needs at least two parties"));
        }
        if dims.len() != observables.len() {
            return Err(Error::malformed(format!("{} factors but {} observable pairs", dims.len(), observables.len())));
        }
        let total = dims.iter().try_fold(1usize, |acc, &d| acc.checked_mul(d)).unwrap_or(usize::MAX);
        if total > MAX_DIM {
            return Err(Error::malformed(format!("joint dimension {total} exceeds {MAX_DIM}")));
        }
        if state.dim() != total {
            return Err(Error::malformed(format!("state dimension {} does not match dims product {total}", state.dim())));
        }
        for (p, (pair, &d)) in observables.iter().zip(&dims).enumerate() {
            if pair.iter().any(|o| o.dim() != d) {
                return Err(Error::malformed(format!("party {p} observables must be {d}x{d}")));
            }
        }
        let lifted = observables
            .iter()
            .enumerate()
            .map(|(p, pair)| [embed(pair[0].matrix(), p, &dims), embed(pair[1].matrix(), p, &dims)])
            .collect();
        Ok(Self { dims, state, observables, lifted })
    }

    pub fn bipartite(dims: [usize; 2], state: QuantumState, alice: [Observable; 2], bob: [Observable; 2]) -> Result<Self> {
        Self::new(dims.to_vec(), state, vec![alice, bob])
    }

    pub fn parties(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn state(&self) -> &QuantumState {
        &self.state
    }

    pub fn observables(&self, party: usize) -> &[Observable; 2] {
        &self.observables[party]
    }

    /// Party operators acting on the joint space.
    pub fn lifted(&self, party: usize) -> &[CMatrix; 2] {
        &self.lifted[party]
    }

    /// First and second moments of every observable.
    pub fn moment_table(&self) -> MomentTable {
        let ops: Vec<&CMatrix> = self.lifted.iter().flatten().collect();
        let means = ops.iter().map(|x| self.state.expect(x).re).collect();
        MomentTable { means, gram: self.state.second_moments(&ops) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRepr {
    pub dims: Vec<usize>,
    pub state: QuantumState,
    pub alice_obs: [Observable; 2],
    pub bob_obs: [Observable; 2],
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub charlie_obs: Option<[Observable; 2]>,
    /// Parties after Charlie, in factor order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub more_obs: Vec<[Observable; 2]>,
}

impl TryFrom<ScenarioRepr> for QuantumScenario {
    type Error = Error;
    fn try_from(r: ScenarioRepr) -> Result<Self> {
        let mut obs = vec![r.alice_obs, r.bob_obs];
        match r.charlie_obs {
            Some(c) => obs.push(c),
            None if !r.more_obs.is_empty() => return Err(Error::malformed("more_obs requires charlie_obs")),
            None => {}
        }
        obs.extend(r.more_obs);
        QuantumScenario::new(r.dims, r.state, obs)
    }
}

impl From<QuantumScenario> for ScenarioRepr {
    fn from(s: QuantumScenario) -> Self {
        let mut obs = s.observables.into_iter();
        let alice_obs = obs.next().expect("at least two parties");
        let bob_obs = obs.next().expect("at least two parties");
        let charlie_obs = obs.next();
        Self { dims: s.dims, state: s.state, alice_obs, bob_obs, charlie_obs, more_obs: obs.collect() }
    }
}

/// Moments indexed by `2 · party + setting`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentTable {
    pub means: Vec<f64>,
    /// `gram[a][b] = ⟨X_a X_b⟩`.
    pub gram: Vec<Vec<C64>>,
}

pub fn slot(party: usize, setting: usize) -> usize {
    2 * party + setting
}

pub fn observable_name(party: usize, setting: usize) -> String {
    let letter = ["A", "B", "C"].get(party).map_or_else(|| format!("M{party}"), |s| s.to_string());
    format!("{letter}_{setting}")
}

impl MomentTable {
    /// `⟨X_a X_b⟩ − ⟨X_a⟩⟨X_b⟩`.
    pub fn cov(&self, a: usize, b: usize) -> C64 {
        self.gram[a][b] - self.means[a] * self.means[b]
    }

    pub fn var(&self, a: usize) -> f64 {
        self.cov(a, a).re.max(0.0)
    }

    pub fn sd(&self, party: usize, setting: usize) -> Result<f64> {
        let v = self.var(slot(party, setting));
        if v <= VARIANCE_FLOOR {
            return Err(Error::degenerate(format!("{} has zero variance", observable_name(party, setting))));
        }
        Ok(v.sqrt())
    }

    /// Real covariances `C(X_i, Y_j)` between two distinct parties.
    pub fn cross_cov(&self, p: usize, q: usize) -> [[f64; 2]; 2] {
        std::array::from_fn(|i| std::array::from_fn(|j| self.cov(slot(p, i), slot(q, j)).re))
    }

    /// Pearson block `ϱ^{pq}_{ij}`.
    pub fn pearson(&self, p: usize, q: usize) -> Result<[[f64; 2]; 2]> {
        let sp = [self.sd(p, 0)?, self.sd(p, 1)?];
        let sq = [self.sd(q, 0)?, self.sd(q, 1)?];
        let cov = self.cross_cov(p, q);
        Ok(std::array::from_fn(|i| std::array::from_fn(|j| (cov[i][j] / (sp[i] * sq[j])).clamp(-1.0, 1.0))))
    }

    /// Single-party statistics of `X_0, X_1`.
    pub fn party_stats(&self, party: usize) -> Result<PartyStats> {
        let (a0, a1) = (slot(party, 0), slot(party, 1));
        let sd = [self.sd(party, 0)?, self.sd(party, 1)?];
        let denom = sd[0] * sd[1];
        let c01 = self.cov(a0, a1);
        Ok(PartyStats {
            means: [self.means[a0], self.means[a1]],
            var: [self.var(a0), self.var(a1)],
            eta: c01.im / denom,
            nu: c01.re / denom,
            r_q: self.cov(a1, a0),
        })
    }
}

/// `η = Im⟨X_0X_1⟩ / (Δ_0Δ_1)`, `ν = (Re⟨X_0X_1⟩ − ⟨X_0⟩⟨X_1⟩) / (Δ_0Δ_1)`,
/// `r_Q = ⟨X_1X_0⟩ − ⟨X_1⟩⟨X_0⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PartyStats {
    pub means: [f64; 2],
    pub var: [f64; 2],
    pub eta: f64,
    pub nu: f64,
    pub r_q: C64,
}

/// Alice–Bob moments of a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantumMoments {
    pub means_a: [f64; 2],
    pub means_b: [f64; 2],
    pub var_a: [f64; 2],
    pub var_b: [f64; 2],
    /// `cov[i][j] = C(A_i, B_j)`.
    pub cov: [[f64; 2]; 2],
    pub pearson: [[f64; 2]; 2],
    pub eta_a: f64,
    pub eta_b: f64,
    pub nu_a: f64,
    pub nu_b: f64,
    pub r_q: C64,
    pub r_q_bob: C64,
}

impl QuantumMoments {
    pub fn correlator_table(&self) -> CorrelatorTable {
        let mut t = CorrelatorTable::from_covariances(self.means_a, self.means_b, self.var_a, self.var_b, self.cov)
            .expect("quantum moments are finite");
        t.pearson = self.pearson.map(|row| row.map(Some));
        t
    }
}

pub fn moments(sc: &QuantumScenario) -> Result<QuantumMoments> {
    moments_between(sc, ALICE, BOB)
}

/// Moments of parties `p` (in Alice's role) and `q` (in Bob's).
pub fn moments_between(sc: &QuantumScenario, p: usize, q: usize) -> Result<QuantumMoments> {
    let t = sc.moment_table();
    let a = t.party_stats(p)?;
    let b = t.party_stats(q)?;
    Ok(QuantumMoments {
        means_a: a.means,
        means_b: b.means,
        var_a: a.var,
        var_b: b.var,
        cov: t.cross_cov(p, q),
        pearson: t.pearson(p, q)?,
        eta_a: a.eta,
        eta_b: b.eta,
        nu_a: a.nu,
        nu_b: b.nu,
        r_q: a.r_q,
        r_q_bob: b.r_q,
    })
}

/// Pairwise Pearson blocks of a three-party scenario.
pub fn tripartite_table(sc: &QuantumScenario) -> Result<TripartiteCorrelatorTable> {
    if sc.parties() != 3 {
        return Err(Error::malformed("tripartite table needs exactly three parties"));
    }
    let t = sc.moment_table();
    let var = |p: usize| [t.var(slot(p, 0)), t.var(slot(p, 1))];
    let mut tct = TripartiteCorrelatorTable::new(t.pearson(ALICE, BOB)?, t.pearson(ALICE, CHARLIE)?, t.pearson(BOB, CHARLIE)?)?;
    tct.var_a = var(ALICE);
    tct.var_b = var(BOB);
    tct.var_c = var(CHARLIE);
    Ok(tct)
}

/// Alice's Pearson block with each further party, plus Alice's `ν`.
pub fn pearson_blocks_with_alice(sc: &QuantumScenario) -> Result<(Vec<[[f64; 2]; 2]>, f64)> {
    let t = sc.moment_table();
    let blocks = (1..sc.parties()).map(|q| t.pearson(ALICE, q)).collect::<Result<Vec<_>>>()?;
    Ok((blocks, t.party_stats(ALICE)?.nu))
}

/// Largest `|C(X, Y)|` over pairs of observables of distinct non-Alice parties.
pub fn max_cross_covariance_excluding_alice(sc: &QuantumScenario) -> f64 {
    let t = sc.moment_table();
    let mut m: f64 = 0.0;
    for p in 1..sc.parties() {
        for q in p + 1..sc.parties() {
            m = t.cross_cov(p, q).iter().flatten().fold(m, |acc, x| acc.max(x.abs()));
        }
    }
    m
}
