//! Quantum-side inequalities evaluated on scenarios.

use serde::Serialize;

use super::matrix::{embed, CMatrix};
use super::scenario::{moments, slot, QuantumScenario, ALICE, BOB};
use crate::correlators::{chsh_of, VARIANCE_FLOOR};
use crate::error::{Error, Result};
use crate::linalg::HermitianMatrix;
use crate::ri::tlm_check_pearson;

const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// `Δ₀²Δ₁² ≥ (Re C(X₀,X₁))² + (Im ⟨X₀X₁⟩)²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SrReport {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

pub fn sr_check(sc: &QuantumScenario, party: usize, tol: f64) -> Result<SrReport> {
    let t = sc.moment_table();
    t.party_stats(party)?;
    let c01 = t.cov(slot(party, 0), slot(party, 1));
    let lhs = t.var(slot(party, 0)) * t.var(slot(party, 1));
    let rhs = c01.norm_sqr();
    Ok(SrReport { lhs, rhs, pass: lhs >= rhs - tol })
}

/// Raw covariance matrix of `(B_j, A_1, A_0)` with `[1][2] = r_Q`.
pub fn quantum_cov_matrix(sc: &QuantumScenario, j: usize) -> Result<HermitianMatrix> {
    if j > 1 {
        return Err(Error::malformed("Bob's setting must be 0 or 1"));
    }
    let t = sc.moment_table();
    t.party_stats(ALICE)?;
    t.sd(BOB, j)?;
    let order = [slot(BOB, j), slot(ALICE, 1), slot(ALICE, 0)];
    Ok(HermitianMatrix::from_lower(3, |a, b| t.cov(order[a], order[b]))?)
}

/// [`quantum_cov_matrix`] scaled to unit diagonal.
pub fn normalized_quantum_cov_matrix(sc: &QuantumScenario, j: usize) -> Result<HermitianMatrix> {
    let m = quantum_cov_matrix(sc, j)?;
    let sd: Vec<f64> = (0..3).map(|k| m.get(k, k).re.sqrt()).collect();
    Ok(HermitianMatrix::from_lower(3, |a, b| m.get(a, b) / (sd[a] * sd[b]))?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRow {
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

/// `(1 − ϱ_1j²)(1 − ϱ_0j²) ≥ (ν − ϱ_0jϱ_1j)² + η²` for one setting of the
/// other party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NsRow {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Theorem2Report {
    /// Rows with the `−η²` terms.
    pub rows: [BoundRow; 2],
    /// Right-hand sides of the same rows without them.
    pub plain_rhs: [f64; 2],
    /// Alice's per-`j` relation, then Bob's per-`i` relation.
    pub ns_alice: [NsRow; 2],
    pub ns_bob: [NsRow; 2],
    pub eta_a: f64,
    pub eta_b: f64,
    /// Smallest radicand before clamping at zero.
    pub min_radicand: f64,
    pub pass: bool,
}

pub fn theorem2_check(sc: &QuantumScenario, tol: f64) -> Result<Theorem2Report> {
    let m = moments(sc)?;
    let rho = m.pearson;
    let plain = tlm_check_pearson(&rho, tol);
    let mut min_radicand = f64::INFINITY;
    let mut radical = |x: f64, y: f64, eta: f64| {
        let v = (1.0 - x * x) * (1.0 - y * y) - eta * eta;
        min_radicand = min_radicand.min(v);
        v.max(0.0).sqrt()
    };
    let r1 = radical(rho[0][0], rho[1][0], m.eta_a) + radical(rho[0][1], rho[1][1], m.eta_a);
    let r2 = radical(rho[0][0], rho[0][1], m.eta_b) + radical(rho[1][0], rho[1][1], m.eta_b);
    let rows = [(plain.lhs[0], r1), (plain.lhs[1], r2)].map(|(lhs, rhs)| BoundRow { lhs, rhs, slack: rhs - lhs });
    let ns = |x: f64, y: f64, nu: f64, eta: f64| {
        let lhs = (1.0 - x * x) * (1.0 - y * y);
        let rhs = (nu - x * y).powi(2) + eta * eta;
        NsRow { lhs, rhs, pass: lhs >= rhs - tol }
    };
    let ns_alice = [0, 1].map(|j| ns(rho[0][j], rho[1][j], m.nu_a, m.eta_a));
    let ns_bob = [0, 1].map(|i| ns(rho[i][0], rho[i][1], m.nu_b, m.eta_b));
    let pass = rows.iter().all(|r| r.slack >= -tol)
        && min_radicand >= -tol
        && ns_alice.iter().chain(&ns_bob).all(|r| r.pass);
    Ok(Theorem2Report {
        rows,
        plain_rhs: plain.rhs,
        ns_alice,
        ns_bob,
        eta_a: m.eta_a,
        eta_b: m.eta_b,
        min_radicand,
        pass,
    })
}

/// `|𝓑| ≤ 2√2 √(1 − max(η_A², η_B²))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TsirelsonEtaReport {
    pub chsh: f64,
    pub bound: f64,
    pub eta_a: f64,
    pub eta_b: f64,
    pub pass: bool,
}

pub fn tsirelson_eta_bound(sc: &QuantumScenario, tol: f64) -> Result<TsirelsonEtaReport> {
    let m = moments(sc)?;
    let chsh = chsh_of(&m.pearson);
    let eta2 = (m.eta_a * m.eta_a).max(m.eta_b * m.eta_b);
    let bound = TSIRELSON * (1.0 - eta2).max(0.0).sqrt();
    Ok(TsirelsonEtaReport { chsh, bound, eta_a: m.eta_a, eta_b: m.eta_b, pass: chsh.abs() <= bound + tol })
}

/// `(𝓑/2√2)² + |r'|² ≤ 1` with `r' = r_Q / (Δ₀Δ₁)`.
///
/// The inequality is guaranteed only when `ϱ_ij = (−1)^{ij} ϱ`; other
/// configurations can violate it (for instance `A₀ = A₁`, where `|r'| = 1`
/// while `𝓑 = 2ϱ_00`). `symmetric_configuration` records which case applies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem3Report {
    pub chsh_term: f64,
    /// `|r'|² = ν² + η²`.
    pub r_term: f64,
    /// `ν²`, the contribution of the real part alone.
    pub r_term_real: f64,
    pub total: f64,
    pub symmetric_configuration: bool,
    pub pass: bool,
}

pub const SYMMETRIC_CONFIGURATION_TOL: f64 = 1e-9;

pub fn theorem3_check(sc: &QuantumScenario, tol: f64) -> Result<Theorem3Report> {
    let m = moments(sc)?;
    let rho = m.pearson;
    let chsh_term = (chsh_of(&rho) / TSIRELSON).powi(2);
    let r_term = m.nu_a * m.nu_a + m.eta_a * m.eta_a;
    let total = chsh_term + r_term;
    let base = rho[0][0];
    let symmetric_configuration = [(0, 1, 1.0), (1, 0, 1.0), (1, 1, -1.0)]
        .iter()
        .all(|&(i, j, s)| (rho[i][j] - s * base).abs() <= SYMMETRIC_CONFIGURATION_TOL);
    Ok(Theorem3Report {
        chsh_term,
        r_term,
        r_term_real: m.nu_a * m.nu_a,
        total,
        symmetric_configuration,
        pass: total <= 1.0 + tol,
    })
}

/// Additive uncertainty relation for Alice's pair sharpened by `D = A_i^m`.
///
/// For a sign `s`, positivity of the `(D, A_1, A_0)` covariance matrix gives
/// `Δ²(A₁) + Δ²(A₀) ≥ −2s·Re r_Q + |C(A₁,D) + s·C(A₀,D)|² / Δ²(D)`.
/// Choosing `s = −sign(Re r_Q)` yields a bound at least `2|Re r_Q|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HigherMomentReport {
    pub lhs: f64,
    pub sign: i8,
    /// `2|Re r_Q|`.
    pub rhs_basic: f64,
    /// The bound for the requested sign.
    pub rhs_signed: f64,
    /// The bound for the sign that makes the first term `2|Re r_Q|`.
    pub rhs_enhanced: f64,
    /// `2|Re r_Q| + |C(A₁,D) + s·C(A₀,D)|²/Δ²(D)` with the requested sign,
    /// which need not hold when `s·Re r_Q > 0`.
    pub rhs_unsigned_variant: f64,
    pub pass: bool,
}

pub fn higher_moment_ur(sc: &QuantumScenario, i: usize, m: u32, sign: i8, tol: f64) -> Result<HigherMomentReport> {
    if i > 1 || m < 2 || !(sign == 1 || sign == -1) {
        return Err(Error::malformed("need setting 0 or 1, power m > 1 and sign ±1"));
    }
    let a = sc.observables(ALICE);
    let power = a[i].power(m);
    if power.is_scalar(1e-12) {
        return Err(Error::degenerate(format!("A_{i}^{m} is proportional to the identity")));
    }
    let d = embed(power.matrix(), ALICE, sc.dims());
    let [a0, a1] = sc.lifted(ALICE);
    let ops: [&CMatrix; 3] = [&d, a1, a0];
    let means: Vec<f64> = ops.iter().map(|x| sc.state().expect(x).re).collect();
    let g = sc.state().second_moments(&ops);
    let cov = |x: usize, y: usize| g[x][y] - means[x] * means[y];
    let var_d = cov(0, 0).re;
    if var_d <= VARIANCE_FLOOR {
        return Err(Error::degenerate(format!("A_{i}^{m} has zero variance in this state")));
    }
    let lhs = cov(1, 1).re + cov(2, 2).re;
    let re_r = cov(1, 2).re;
    let extra = |s: f64| (cov(1, 0) + cov(2, 0) * s).norm_sqr() / var_d;
    let s = f64::from(sign);
    let rhs_signed = -2.0 * s * re_r + extra(s);
    let rhs_enhanced = 2.0 * re_r.abs()
        + if re_r > 0.0 {
            extra(-1.0)
        } else if re_r < 0.0 {
            extra(1.0)
        } else {
            extra(1.0).max(extra(-1.0))
        };
    Ok(HigherMomentReport {
        lhs,
        sign,
        rhs_basic: 2.0 * re_r.abs(),
        rhs_signed,
        rhs_enhanced,
        rhs_unsigned_variant: 2.0 * re_r.abs() + extra(s),
        pass: lhs >= rhs_signed - tol && lhs >= rhs_enhanced - tol,
    })
}

/// Position/momentum statistics for Alice in a truncated oscillator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OscillatorReport {
    /// `⟨[x, p]⟩ / 2i`.
    pub c: f64,
    pub sigma_x: f64,
    pub sigma_p: f64,
    /// `σ_x σ_p`, bounded below by `|c|`.
    pub lhs: f64,
    pub eta: f64,
    pub chsh: f64,
    /// `|⟨[x, p]⟩ − i|`, zero when the state avoids the top level.
    pub truncation_error: f64,
    pub tsirelson_eta: TsirelsonEtaReport,
}

pub fn oscillator_check(sc: &QuantumScenario, tol: f64) -> Result<OscillatorReport> {
    let [x, p] = sc.lifted(ALICE);
    let comm = sc.state().expect(&x.commutator(p));
    let m = moments(sc)?;
    let (sigma_x, sigma_p) = (m.var_a[0].sqrt(), m.var_a[1].sqrt());
    Ok(OscillatorReport {
        c: comm.im / 2.0,
        sigma_x,
        sigma_p,
        lhs: sigma_x * sigma_p,
        eta: m.eta_a,
        chsh: chsh_of(&m.pearson),
        truncation_error: (comm - super::matrix::I).norm(),
        tsirelson_eta: tsirelson_eta_bound(sc, tol)?,
    })
}
