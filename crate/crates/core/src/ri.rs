//! Relativistic-independence feasibility.
//!
//! Alice's normalised uncertainty block `[[1, r'], [r', 1]]` must dominate
//! the rank-one term contributed by Bob's setting `j`. That confines `r'` to
//! an interval per `j`; the data are RI-feasible when a single `r'` serves
//! both settings (and likewise for Bob with the roles swapped).

use std::f64::consts::PI;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::correlators::{CorrelatorTable, TripartiteCorrelatorTable};
use crate::error::{Error, Result};
use crate::lhv;
use crate::linalg::{SymmetricMatrix, DEFAULT_PSD_TOL};

/// Additive slack for closed-interval intersection and bound checks.
pub const DEFAULT_TOL: f64 = 1e-9;
/// `|ϱ^{BC}|` above this violates the uncorrelated Bob–Charlie precondition.
pub const BC_ZERO_TOL: f64 = 1e-9;

/// Which setting(s) an interval belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Context {
    /// Alice's `r'` given Bob's setting `j`.
    Bob(usize),
    /// Bob's `r̄'` given Alice's setting `i`.
    Alice(usize),
    /// Alice's `r'` given Bob's `j` and Charlie's `k`.
    BobCharlie(usize, usize),
}

impl fmt::Display for Context {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Context::Bob(j) => write!(f, "j={j}"),
            Context::Alice(i) => write!(f, "i={i}"),
            Context::BobCharlie(j, k) => write!(f, "j={j},k={k}"),
        }
    }
}

impl Serialize for Context {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

/// Closed interval `[center − half_width, center + half_width]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RInterval {
    pub context: Context,
    pub lo: f64,
    pub hi: f64,
    #[serde(skip)]
    pub center: f64,
    #[serde(skip)]
    pub half_width: f64,
}

impl RInterval {
    /// Radicands slightly below zero are clamped; the caller decides what
    /// counts as infeasible.
    pub fn new(context: Context, center: f64, radicand: f64) -> Self {
        let half_width = radicand.max(0.0).sqrt();
        Self {
            context,
            lo: center - half_width,
            hi: center + half_width,
            center,
            half_width,
        }
    }

    pub fn contains(&self, x: f64, tol: f64) -> bool {
        self.lo - tol <= x && x <= self.hi + tol
    }

    /// `|c_a − c_b| − (w_a + w_b)`: positive iff the intervals are disjoint,
    /// in which case it is their distance.
    pub fn separation(&self, other: &RInterval) -> f64 {
        (self.center - other.center).abs() - (self.half_width + other.half_width)
    }
}

/// `[max lo, min hi]` of a set of intervals, if it is non-empty within `tol`.
/// An intersection that only exists thanks to the slack collapses to the
/// midpoint of the crossed endpoints.
pub fn common_interval(intervals: &[RInterval], tol: f64) -> Option<(f64, f64)> {
    let lo = intervals.iter().map(|iv| iv.lo).fold(f64::NEG_INFINITY, f64::max);
    let hi = intervals.iter().map(|iv| iv.hi).fold(f64::INFINITY, f64::min);
    if lo <= hi {
        Some((lo, hi))
    } else if lo <= hi + tol {
        let mid = 0.5 * (lo + hi);
        Some((mid, mid))
    } else {
        None
    }
}

fn pair_interval(context: Context, x: f64, y: f64) -> RInterval {
    RInterval::new(context, x * y, (1.0 - x * x) * (1.0 - y * y))
}

/// Alice's admissible `r'` given Bob's setting `j`:
/// centre `ϱ_0j ϱ_1j`, half-width `√((1 − ϱ_0j²)(1 − ϱ_1j²))`.
pub fn r_interval_bipartite(ct: &CorrelatorTable, j: usize) -> Result<RInterval> {
    check_setting(j)?;
    let rho = ct.pearson_matrix()?;
    Ok(pair_interval(Context::Bob(j), rho[0][j], rho[1][j]))
}

/// Bob's admissible `r̄'` given Alice's setting `i`.
pub fn r_interval_bipartite_swapped(ct: &CorrelatorTable, i: usize) -> Result<RInterval> {
    check_setting(i)?;
    let rho = ct.pearson_matrix()?;
    Ok(pair_interval(Context::Alice(i), rho[i][0], rho[i][1]))
}

fn check_setting(s: usize) -> Result<()> {
    if s > 1 {
        return Err(Error::malformed(format!("setting index {s} must be 0 or 1")));
    }
    Ok(())
}

/// The normalised `(B_j, A_1, A_0)` matrix whose PSD-ness at `r'` is
/// equivalent to `r' ∈ r_interval_bipartite(j)`.
pub fn bipartite_matrix(rho: &[[f64; 2]; 2], j: usize, r_prime: f64) -> Result<SymmetricMatrix> {
    check_setting(j)?;
    let entries = [
        [1.0, rho[1][j], rho[0][j]],
        [rho[1][j], 1.0, r_prime],
        [rho[0][j], r_prime, 1.0],
    ];
    Ok(SymmetricMatrix::from_lower(3, |a, b| entries[a][b])?)
}

/// Both rows of the two-setting correlator bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TlmReport {
    pub pass: bool,
    pub lhs: [f64; 2],
    pub rhs: [f64; 2],
    /// `rhs − lhs` per row.
    pub slack: [f64; 2],
}

impl TlmReport {
    /// First failing row (1-based), if any.
    pub fn violated_row(&self, tol: f64) -> Option<usize> {
        self.slack.iter().position(|&s| s < -tol).map(|r| r + 1)
    }
}

/// Row 1: `|ϱ00ϱ10 − ϱ01ϱ11| ≤ Σ_j √((1−ϱ0j²)(1−ϱ1j²))`; row 2 swaps roles.
pub fn tlm_check(ct: &CorrelatorTable, tol: f64) -> Result<TlmReport> {
    Ok(tlm_check_pearson(&ct.pearson_matrix()?, tol))
}

pub fn tlm_check_pearson(rho: &[[f64; 2]; 2], tol: f64) -> TlmReport {
    let alice = [pair_interval(Context::Bob(0), rho[0][0], rho[1][0]), pair_interval(Context::Bob(1), rho[0][1], rho[1][1])];
    let bob = [pair_interval(Context::Alice(0), rho[0][0], rho[0][1]), pair_interval(Context::Alice(1), rho[1][0], rho[1][1])];
    let row = |iv: &[RInterval; 2]| ((iv[0].center - iv[1].center).abs(), iv[0].half_width + iv[1].half_width);
    let (l1, r1) = row(&alice);
    let (l2, r2) = row(&bob);
    let slack = [r1 - l1, r2 - l2];
    TlmReport {
        pass: slack.iter().all(|&s| s >= -tol),
        lhs: [l1, l2],
        rhs: [r1, r2],
        slack,
    }
}

/// RI feasibility of bipartite Pearson data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Feasibility {
    pub feasible: bool,
    /// Intersection of Alice's intervals.
    pub alice: Option<(f64, f64)>,
    /// Intersection of Bob's intervals.
    pub bob: Option<(f64, f64)>,
    /// Midpoint of Alice's intersection.
    pub witness_r: Option<f64>,
    /// Midpoint of Bob's intersection.
    pub witness_r_bob: Option<f64>,
    /// Alice's two intervals followed by Bob's two.
    pub intervals: Vec<RInterval>,
}

pub fn ri_feasible_bipartite(ct: &CorrelatorTable, tol: f64) -> Result<Feasibility> {
    let intervals = vec![
        r_interval_bipartite(ct, 0)?,
        r_interval_bipartite(ct, 1)?,
        r_interval_bipartite_swapped(ct, 0)?,
        r_interval_bipartite_swapped(ct, 1)?,
    ];
    // Decided on the same quantity as the bound rows, so the verdicts agree.
    let meets = |a: &RInterval, b: &RInterval| a.separation(b) <= tol;
    let alice = meets(&intervals[0], &intervals[1]).then(|| common_interval(&intervals[..2], f64::INFINITY)).flatten();
    let bob = meets(&intervals[2], &intervals[3]).then(|| common_interval(&intervals[2..], f64::INFINITY)).flatten();
    let mid = |(lo, hi): (f64, f64)| 0.5 * (lo + hi);
    Ok(Feasibility {
        feasible: alice.is_some() && bob.is_some(),
        witness_r: alice.map(mid),
        witness_r_bob: bob.map(mid),
        alice,
        bob,
        intervals,
    })
}

/// Distance between Alice's two `r'` intervals; zero iff they meet within
/// [`DEFAULT_TOL`].
pub fn epsilon_gap(ct: &CorrelatorTable) -> Result<f64> {
    epsilon_gap_with_tol(ct, DEFAULT_TOL)
}

/// As [`epsilon_gap`], treating intervals closer than `tol` as touching.
pub fn epsilon_gap_with_tol(ct: &CorrelatorTable, tol: f64) -> Result<f64> {
    let d0 = r_interval_bipartite(ct, 0)?;
    let d1 = r_interval_bipartite(ct, 1)?;
    if d0.separation(&d1) <= tol {
        return Ok(0.0);
    }
    let base = d0.center - d1.center;
    let mut best = f64::INFINITY;
    for s0 in [-1.0, 1.0] {
        for s1 in [-1.0, 1.0] {
            best = best.min((base + s0 * d0.half_width + s1 * d1.half_width).abs());
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Violation {
    /// 1 for Alice's row, 2 for Bob's.
    pub row: usize,
    pub lhs: f64,
    pub rhs: f64,
}

/// Aggregate classification of bipartite data.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    /// Local-polytope membership; only known for `±1`-valued data.
    pub local: Option<bool>,
    pub quantum_compatible: bool,
    pub ri_feasible: bool,
    pub witness_r: Option<f64>,
    pub witness_r_bob: Option<f64>,
    pub epsilon: f64,
    pub chsh: f64,
    pub intervals: Vec<RInterval>,
    pub violated: Option<Violation>,
    pub signaling_in_variance: bool,
}

pub fn classify(ct: &CorrelatorTable, tol: f64) -> Result<Verdict> {
    let rho = ct.pearson_matrix()?;
    let tlm = tlm_check_pearson(&rho, tol);
    let feas = ri_feasible_bipartite(ct, tol)?;
    let local = ct.pm1_correlators.map(|e| lhv::is_local(&e, tol)).transpose()?;
    let violated = tlm.violated_row(tol).map(|row| Violation {
        row,
        lhs: tlm.lhs[row - 1],
        rhs: tlm.rhs[row - 1],
    });
    Ok(Verdict {
        local,
        quantum_compatible: tlm.pass,
        ri_feasible: feas.feasible,
        witness_r: feas.witness_r,
        witness_r_bob: feas.witness_r_bob,
        epsilon: epsilon_gap_with_tol(ct, tol)?,
        chsh: crate::correlators::chsh_of(&rho),
        intervals: feas.intervals,
        violated,
        signaling_in_variance: ct.signaling_in_variance,
    })
}

/// Every `(j, k)` context, in the order `(0,0), (0,1), (1,0), (1,1)`.
pub const ALL_CONTEXTS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Lemma1Report {
    /// One interval per context; empty when some context is infeasible.
    pub intervals: Vec<RInterval>,
    /// Contexts whose diagonal condition `1 − (ϱ^{AB}_{ij})² − (ϱ^{AC}_{ik})² ≥ 0` fails.
    pub infeasible_contexts: Vec<Context>,
    /// Midpoint of the common intersection, if any.
    pub common_r: Option<f64>,
}

/// Alice's `r'` intervals `[d_jk(−), d_jk(+)]` when Charlie joins with
/// `ϱ^{BC} = 0`.
pub fn lemma1_intervals(tct: &TripartiteCorrelatorTable, contexts: &[(usize, usize); 4], tol: f64) -> Result<Lemma1Report> {
    tct.validate()?;
    let (ab, ac, bc) = (&tct.pearson_ab, &tct.pearson_ac, &tct.pearson_bc);
    let mut intervals = Vec::with_capacity(4);
    let mut infeasible_contexts = Vec::new();
    for &(j, k) in contexts {
        check_setting(j)?;
        check_setting(k)?;
        if bc[j][k].abs() > BC_ZERO_TOL {
            return Err(Error::Precondition(format!(
                "Bob and Charlie must be uncorrelated, but pearson_bc[{j}][{k}] = {}",
                bc[j][k]
            )));
        }
        let diag = [0, 1].map(|i| 1.0 - ab[i][j] * ab[i][j] - ac[i][k] * ac[i][k]);
        if diag.iter().any(|&d| d < -tol) {
            infeasible_contexts.push(Context::BobCharlie(j, k));
            continue;
        }
        let center = ab[0][j] * ab[1][j] + ac[0][k] * ac[1][k];
        intervals.push(RInterval::new(Context::BobCharlie(j, k), center, diag[0].max(0.0) * diag[1].max(0.0)));
    }
    if !infeasible_contexts.is_empty() {
        return Ok(Lemma1Report { intervals: Vec::new(), infeasible_contexts, common_r: None });
    }
    let common_r = common_interval(&intervals, tol).map(|(lo, hi)| 0.5 * (lo + hi));
    Ok(Lemma1Report { intervals, infeasible_contexts, common_r })
}

/// The normalised `(C_k, B_j, A_1, A_0)` matrix of a tripartite context.
pub fn tripartite_matrix(tct: &TripartiteCorrelatorTable, j: usize, k: usize, r_prime: f64) -> Result<SymmetricMatrix> {
    check_setting(j)?;
    check_setting(k)?;
    let (ab, ac, bc) = (&tct.pearson_ab, &tct.pearson_ac, &tct.pearson_bc);
    let entries = [
        [1.0, bc[j][k], ac[1][k], ac[0][k]],
        [bc[j][k], 1.0, ab[1][j], ab[0][j]],
        [ac[1][k], ab[1][j], 1.0, r_prime],
        [ac[0][k], ab[0][j], r_prime, 1.0],
    ];
    Ok(SymmetricMatrix::from_lower(4, |a, b| entries[a][b])?)
}

/// `cos²θ · σ₀/σ₁ + sin²θ · σ₁/σ₀`, Alice's locally measurable bound on `r' sin 2θ`.
pub fn g_theta(theta: f64, sigma0: f64, sigma1: f64) -> Result<f64> {
    if !(sigma0 > 0.0 && sigma1 > 0.0) || !sigma0.is_finite() || !sigma1.is_finite() {
        return Err(Error::malformed(format!("standard deviations must be positive, got {sigma0}, {sigma1}")));
    }
    if !(theta.abs() <= PI + 1e-12) {
        return Err(Error::malformed(format!("theta {theta} is outside [-pi, pi]")));
    }
    let (s, c) = theta.sin_cos();
    Ok(c * c * sigma0 / sigma1 + s * s * sigma1 / sigma0)
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Minimises `g(θ, τ)` over `τ ∈ [lo, hi]` by golden-section search, where
/// `family(τ) = (σ₀(τ), σ₁(τ))`. Assumes `g` is unimodal in `τ`.
pub fn minimize_g(theta: f64, family: impl Fn(f64) -> (f64, f64), lo: f64, hi: f64, xtol: f64) -> Result<(f64, f64)> {
    if !(lo < hi) || !(xtol > 0.0) {
        return Err(Error::malformed("need lo < hi and a positive tolerance"));
    }
    let g = |tau: f64| {
        let (s0, s1) = family(tau);
        g_theta(theta, s0, s1)
    };
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (g(x1)?, g(x2)?);
    while b - a > xtol {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = g(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = g(x2)?;
        }
    }
    let tau = 0.5 * (a + b);
    Ok((tau, g(tau)?))
}

/// `min_τ g(θ, τ) / sin 2θ`: Alice's estimate of `r'` from a family that
/// contains a saturating member.
pub fn estimate_r_prime(theta: f64, family: impl Fn(f64) -> (f64, f64), lo: f64, hi: f64) -> Result<f64> {
    let s = (2.0 * theta).sin();
    if s.abs() < 1e-12 {
        return Err(Error::malformed("sin 2θ vanishes; r' is not identifiable"));
    }
    let (_, g) = minimize_g(theta, family, lo, hi, 1e-10)?;
    Ok(g / s)
}

/// One `(j, k)` context of the Alice–Charlie PR box with Bob uncorrelated
/// from Charlie.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrContext {
    pub j: usize,
    pub k: usize,
    /// The only `r_jk` for which the context matrix is PSD.
    pub forced_r: f64,
    /// Grid points `(ϱ^{AB}_{0j}, ϱ^{AB}_{1j}, r)` at which the matrix is PSD.
    pub feasible_grid_points: Vec<[f64; 3]>,
    /// Determinant of the Schur complement at `ϱ^{AB} = 0, r = 0`.
    pub schur_det_at_zero: f64,
    pub psd_at_zero: bool,
    /// `A_0 A_1 = (A_0 C_k)(A_1 C_k)`.
    pub product_a0_a1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PrBoxDemo {
    pub contexts: Vec<PrContext>,
    /// True iff every feasible grid point has `ϱ^{AB} = 0`.
    pub rho_ab_forced_zero: bool,
    /// Whether one `r` serves every context.
    pub ri_feasible: bool,
    pub grid_step: f64,
}

/// Alice–Charlie PR box, `⟨A_i C_k⟩ = (−1)^{ik}`, with `ϱ^{BC} = 0`.
pub fn pr_box_demo() -> Result<PrBoxDemo> {
    const STEPS: usize = 16;
    let step = 2.0 / STEPS as f64;
    let grid: Vec<f64> = (0..=STEPS).map(|n| -1.0 + step * n as f64).collect();
    let pr = [[1.0, 1.0], [1.0, -1.0]];
    let mut contexts = Vec::with_capacity(4);
    for (j, k) in ALL_CONTEXTS {
        let tct_at = |x0: f64, x1: f64| {
            let mut ab = [[0.0; 2]; 2];
            ab[0][j] = x0;
            ab[1][j] = x1;
            TripartiteCorrelatorTable::new(ab, pr, [[0.0; 2]; 2])
        };
        let mut feasible_grid_points = Vec::new();
        for &x0 in &grid {
            for &x1 in &grid {
                for &r in &grid {
                    if tripartite_matrix(&tct_at(x0, x1)?, j, k, r)?.is_psd(DEFAULT_PSD_TOL)? {
                        feasible_grid_points.push([x0, x1, r]);
                    }
                }
            }
        }
        let at_zero = tripartite_matrix(&tct_at(0.0, 0.0)?, j, k, 0.0)?;
        let forced_r = pr[1][k];
        contexts.push(PrContext {
            j,
            k,
            forced_r,
            feasible_grid_points,
            schur_det_at_zero: at_zero.schur_complement(2)?.determinant(),
            psd_at_zero: at_zero.is_psd(DEFAULT_PSD_TOL)?,
            product_a0_a1: pr[0][k] * pr[1][k],
        });
    }
    let rho_ab_forced_zero = contexts
        .iter()
        .all(|c| c.feasible_grid_points.iter().all(|p| p[0] == 0.0 && p[1] == 0.0));
    let forced: Vec<f64> = contexts.iter().map(|c| c.forced_r).collect();
    let ri_feasible = forced.iter().all(|&r| r == forced[0]);
    Ok(PrBoxDemo { contexts, rho_ab_forced_zero, ri_feasible, grid_step: step })
}
