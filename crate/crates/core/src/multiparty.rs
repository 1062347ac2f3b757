//! Tripartite and star-shaped n-party bounds.
//!
//! Alice measures `A_0` or `A_1`; every other experimenter is correlated
//! with her but, for the monogamy and n-party bounds, not with each other.

use serde::{Deserialize, Serialize};

use crate::correlators::{chsh_of, TripartiteCorrelatorTable};
use crate::error::{Error, Result};
use crate::linalg::SymmetricMatrix;

/// Smallest admissible `1 − (ϱ^{BC})²`.
pub const BC_DENOMINATOR_FLOOR: f64 = 1e-12;
pub const MONOGAMY_TOL: f64 = 1e-9;
pub const MAX_EXPERIMENTERS: usize = 8;

/// Inputs of `ζ_ij(l, k)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZetaArgs {
    /// `ϱ^{AB}_{il}`.
    pub ab_il: f64,
    /// `ϱ^{AB}_{jl}`.
    pub ab_jl: f64,
    /// `ϱ^{AC}_{ik}`.
    pub ac_ik: f64,
    /// `ϱ^{AC}_{jk}`.
    pub ac_jk: f64,
    /// `ϱ^{BC}_{lk}`.
    pub bc_lk: f64,
}

impl ZetaArgs {
    pub fn from_table(tct: &TripartiteCorrelatorTable, i: usize, j: usize, l: usize, k: usize) -> Result<Self> {
        for s in [i, j, l, k] {
            check_setting(s)?;
        }
        Ok(Self {
            ab_il: tct.pearson_ab[i][l],
            ab_jl: tct.pearson_ab[j][l],
            ac_ik: tct.pearson_ac[i][k],
            ac_jk: tct.pearson_ac[j][k],
            bc_lk: tct.pearson_bc[l][k],
        })
    }
}

fn check_setting(s: usize) -> Result<()> {
    if s > 1 {
        return Err(Error::malformed(format!("setting index {s} is not 0 or 1")));
    }
    Ok(())
}

/// `[ϱ^{AC}_{ik}ϱ^{AC}_{jk} − ϱ^{BC}(ϱ^{AB}_{il}ϱ^{AC}_{jk} + ϱ^{AB}_{jl}ϱ^{AC}_{ik}) + ϱ^{AB}_{il}ϱ^{AB}_{jl}] / (1 − (ϱ^{BC})²)`.
pub fn zeta(a: &ZetaArgs) -> Result<f64> {
    let vals = [a.ab_il, a.ab_jl, a.ac_ik, a.ac_jk, a.bc_lk];
    if vals.iter().any(|x| !x.is_finite()) {
        return Err(Error::malformed("zeta arguments must be finite"));
    }
    let denom = 1.0 - a.bc_lk * a.bc_lk;
    if denom < BC_DENOMINATOR_FLOOR {
        return Err(Error::degenerate(format!("|pearson_bc| = {} leaves no room for the Schur reduction", a.bc_lk.abs())));
    }
    let num = a.ac_ik * a.ac_jk - a.bc_lk * a.ab_il * a.ac_jk - a.bc_lk * a.ab_jl * a.ac_ik + a.ab_il * a.ab_jl;
    Ok(num / denom)
}

/// `[[ζ_11, ζ_10], [ζ_01, ζ_00]]` for context `(l, k)`, in Alice's `(A_1, A_0)` order.
pub fn zeta_block(tct: &TripartiteCorrelatorTable, l: usize, k: usize) -> Result<[[f64; 2]; 2]> {
    let z = |i, j| ZetaArgs::from_table(tct, i, j, l, k).and_then(|a| zeta(&a));
    Ok([[z(1, 1)?, z(1, 0)?], [z(0, 1)?, z(0, 0)?]])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZetaContext {
    /// `(l, k)`: Bob's and Charlie's settings.
    pub context: (usize, usize),
    pub zeta00: f64,
    pub zeta01: f64,
    pub zeta11: f64,
    /// `(1 − ζ_11)(1 − ζ_00)` before clamping.
    pub radicand: f64,
    /// Some diagonal `1 − ζ_ii` is negative, so no `r'` fits this context.
    pub infeasible: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem4Report {
    pub contexts: [ZetaContext; 2],
    /// `|ζ_01(l,k) − ζ_01(l′,k′)|`.
    pub lhs: f64,
    pub rhs: f64,
    pub context_infeasible: bool,
    pub pass: bool,
}

fn zeta_context(tct: &TripartiteCorrelatorTable, (l, k): (usize, usize), tol: f64) -> Result<ZetaContext> {
    let z = zeta_block(tct, l, k)?;
    let (d1, d0) = (1.0 - z[0][0], 1.0 - z[1][1]);
    Ok(ZetaContext {
        context: (l, k),
        zeta00: z[1][1],
        zeta01: z[1][0],
        zeta11: z[0][0],
        radicand: d1 * d0,
        infeasible: d1 < -tol || d0 < -tol,
    })
}

/// `|ζ_01(l,k) − ζ_01(l′,k′)| ≤ √((1−ζ_11)(1−ζ_00)) + √(…)` for two contexts.
pub fn theorem4_check(
    tct: &TripartiteCorrelatorTable,
    first: (usize, usize),
    second: (usize, usize),
    tol: f64,
) -> Result<Theorem4Report> {
    tct.validate()?;
    let contexts = [zeta_context(tct, first, tol)?, zeta_context(tct, second, tol)?];
    let lhs = (contexts[0].zeta01 - contexts[1].zeta01).abs();
    let rhs: f64 = contexts.iter().map(|c| c.radicand.max(0.0).sqrt()).sum();
    let context_infeasible = contexts.iter().any(|c| c.infeasible);
    let radicands_ok = contexts.iter().all(|c| c.radicand >= -tol);
    Ok(Theorem4Report {
        contexts,
        lhs,
        rhs,
        context_infeasible,
        pass: !context_infeasible && radicands_ok && lhs <= rhs + tol,
    })
}

/// `𝓑²_AB + 𝓑²_AC ≤ 8`, and the implied `|𝓑_AB| + |𝓑_AC| ≤ 4`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonogamyReport {
    pub chsh_ab: f64,
    pub chsh_ac: f64,
    pub sum_sq: f64,
    pub sum_abs: f64,
    pub pass_sq: bool,
    pub pass_abs: bool,
}

pub fn monogamy_check(chsh_ab: f64, chsh_ac: f64) -> MonogamyReport {
    let sum_sq = chsh_ab * chsh_ab + chsh_ac * chsh_ac;
    let sum_abs = chsh_ab.abs() + chsh_ac.abs();
    MonogamyReport {
        chsh_ab,
        chsh_ac,
        sum_sq,
        sum_abs,
        pass_sq: sum_sq <= 8.0 + MONOGAMY_TOL,
        pass_abs: sum_abs <= 4.0 + MONOGAMY_TOL,
    }
}

/// Monogamy of a tripartite table; the hypothesis `ϱ^{BC} = 0` is reported,
/// not enforced.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TripartiteMonogamy {
    #[serde(flatten)]
    pub report: MonogamyReport,
    pub max_abs_pearson_bc: f64,
    pub bc_uncorrelated: bool,
}

pub fn monogamy_from_table(tct: &TripartiteCorrelatorTable, tol: f64) -> Result<TripartiteMonogamy> {
    tct.validate()?;
    let max_abs_pearson_bc = tct.pearson_bc.iter().flatten().fold(0.0f64, |m, x| m.max(x.abs()));
    Ok(TripartiteMonogamy {
        report: monogamy_check(chsh_of(&tct.pearson_ab), chsh_of(&tct.pearson_ac)),
        max_abs_pearson_bc,
        bc_uncorrelated: max_abs_pearson_bc <= tol,
    })
}

/// Alice's Pearson block with each of `n` mutually uncorrelated experimenters.
///
/// `blocks[s][i][c]` is `ϱ^s_{i,·}` for Alice's setting `i` and the
/// experimenter's setting in context `c` (`i_s` for `c = 0`, `j_s` for `c = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NPartyRepr", into = "NPartyRepr")]
pub struct NPartyCorrelators {
    blocks: Vec<[[f64; 2]; 2]>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NPartyRepr {
    experimenters: Vec<[[f64; 2]; 2]>,
}

impl TryFrom<NPartyRepr> for NPartyCorrelators {
    type Error = Error;
    fn try_from(r: NPartyRepr) -> Result<Self> {
        Self::new(r.experimenters)
    }
}

impl From<NPartyCorrelators> for NPartyRepr {
    fn from(n: NPartyCorrelators) -> Self {
        Self { experimenters: n.blocks }
    }
}

impl NPartyCorrelators {
    pub fn new(blocks: Vec<[[f64; 2]; 2]>) -> Result<Self> {
        if blocks.is_empty() || blocks.len() > MAX_EXPERIMENTERS {
            return Err(Error::malformed(format!(
                "between 1 and {MAX_EXPERIMENTERS} experimenters are supported, got {}",
                blocks.len()
            )));
        }
        for (s, b) in blocks.iter().enumerate() {
            if b.iter().flatten().any(|x| !x.is_finite() || x.abs() > 1.0) {
                return Err(Error::malformed(format!("experimenter {s} has a correlator outside [-1, 1]")));
            }
        }
        Ok(Self { blocks })
    }

    pub fn n(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[[[f64; 2]; 2]] {
        &self.blocks
    }

    /// `𝓑_s` for each experimenter.
    pub fn chsh(&self) -> Vec<f64> {
        self.blocks.iter().map(chsh_of).collect()
    }

    /// The same data with an uncorrelated experimenter appended.
    pub fn with_silent_experimenter(&self) -> Result<Self> {
        let mut blocks = self.blocks.clone();
        blocks.push([[0.0; 2]; 2]);
        Self::new(blocks)
    }
}

/// `[[I_n, V], [Vᵀ, [[1, r'], [r', 1]]]]` with `V[s] = (ϱ^s_{0,c}, ϱ^s_{1,c})`.
pub fn build_multipartite_matrix(npc: &NPartyCorrelators, r_prime: f64, context: usize) -> Result<SymmetricMatrix> {
    check_setting(context)?;
    if !(r_prime.abs() <= 1.0) {
        return Err(Error::malformed(format!("r' = {r_prime} is outside [-1, 1]")));
    }
    let n = npc.n();
    let b = &npc.blocks;
    Ok(SymmetricMatrix::from_lower(n + 2, |a, c| match (a < n, c < n) {
        (true, true) => f64::from(u8::from(a == c)),
        (false, true) => b[c][a - n][context],
        (true, false) => b[a][c - n][context],
        (false, false) if a == c => 1.0,
        (false, false) => r_prime,
    })?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NPartyReport {
    pub n: usize,
    pub r_prime: f64,
    pub chsh: Vec<f64>,
    pub sum_abs_b: f64,
    /// `√(2n)(√(1+r') + √(1−r'))`.
    pub refined_bound: f64,
    /// `2√(2n)`.
    pub bound: f64,
    /// Smallest eigenvalue of `[[1, r'], [r', 1]] − Σ_s v_s v_sᵀ` per context.
    pub schur_min_eigenvalues: [f64; 2],
    pub pass_refined: bool,
    pub pass_outer: bool,
    pub pass: bool,
}

/// Checks the n-party chain `Σ|𝓑_s| ≤ √(2n)(√(1+r')+√(1−r')) ≤ 2√(2n)`.
///
/// Both context matrices must be positive semidefinite at `r_prime`;
/// otherwise the data cannot come from the model and a precondition error
/// is returned.
pub fn nparty_bound_check(npc: &NPartyCorrelators, r_prime: f64, tol: f64) -> Result<NPartyReport> {
    let mut schur_min_eigenvalues = [0.0; 2];
    for (context, slot) in schur_min_eigenvalues.iter_mut().enumerate() {
        let m = build_multipartite_matrix(npc, r_prime, context)?;
        if !m.is_psd(tol)? {
            return Err(Error::Precondition(format!(
                "the context-{context} matrix is not positive semidefinite at r' = {r_prime}"
            )));
        }
        let reduced = rank_one_reduction(npc, r_prime, context);
        *slot = reduced.min_eigenvalue()?;
    }
    let n = npc.n();
    let chsh = npc.chsh();
    let sum_abs_b: f64 = chsh.iter().map(|x| x.abs()).sum();
    let root = (2.0 * n as f64).sqrt();
    let refined_bound = root * ((1.0 + r_prime).max(0.0).sqrt() + (1.0 - r_prime).max(0.0).sqrt());
    let bound = 2.0 * root;
    let pass_refined = sum_abs_b <= refined_bound + tol;
    let pass_outer = refined_bound <= bound + tol;
    Ok(NPartyReport {
        n,
        r_prime,
        chsh,
        sum_abs_b,
        refined_bound,
        bound,
        schur_min_eigenvalues,
        pass_refined,
        pass_outer,
        pass: pass_refined && pass_outer,
    })
}

/// `[[1, r'], [r', 1]] − Σ_s v_s v_sᵀ`, the Schur complement of the identity block.
pub fn rank_one_reduction(npc: &NPartyCorrelators, r_prime: f64, context: usize) -> SymmetricMatrix {
    let mut m = [[1.0, r_prime], [r_prime, 1.0]];
    for b in &npc.blocks {
        let v = [b[0][context], b[1][context]];
        for (a, row) in m.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x -= v[a] * v[c];
            }
        }
    }
    SymmetricMatrix::from_lower(2, |a, c| m[a][c]).expect("finite entries")
}
