//! End-to-end acceptance suite. Prints one line per criterion and exits
//! non-zero if any fails.

use std::f64::consts::{FRAC_1_SQRT_2, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ribounds::correlators::{chsh_of, CorrelatorTable, TripartiteCorrelatorTable};
use ribounds::lhv::{correlators_of, is_local, product_cov_matrix, LhvEnsemble};
use ribounds::multiparty::{monogamy_from_table, nparty_bound_check, NPartyCorrelators};
use ribounds::optimizer::{constrained_max, maximize_chsh, OptConfig};
use ribounds::qmodel::sampling::*;
use ribounds::qmodel::{self, Observable, QuantumScenario, QuantumState};
use ribounds::ri::{self, lemma1_intervals, tripartite_matrix, ALL_CONTEXTS};

const TSIRELSON: f64 = 2.0 * SQRT_2;

type Check = Result<String, String>;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn tsirelson_reproduction() -> Check {
    let start = Instant::now();
    let r = maximize_chsh(&OptConfig { restarts: 32, max_evals: 4000, seed: 0, tol: 1e-12 }).map_err(|e| e.to_string())?;
    let took = start.elapsed();
    ensure(r.best_value >= TSIRELSON - 1e-6, || format!("best {} below 2√2 − 1e-6", r.best_value))?;
    ensure(r.trajectory_max <= TSIRELSON + 1e-9, || format!("trajectory reached {}", r.trajectory_max))?;
    ensure(took < Duration::from_secs(10), || format!("took {took:?}"))?;
    Ok(format!("best {:.15}, trajectory max {:.15}, {} evaluations, {took:.2?}", r.best_value, r.trajectory_max, r.evaluations))
}

fn random_kind(r: &mut ChaCha8Rng) -> ObservableKind {
    if r.random::<bool>() {
        ObservableKind::Gue
    } else {
        ObservableKind::Pm1
    }
}

fn universality() -> Check {
    let mut r = rng(2);
    let mut failures = 0;
    let mut worst = f64::INFINITY;
    for _ in 0..10_000 {
        let (da, db) = (r.random_range(2..=4), r.random_range(2..=4));
        let kind = random_kind(&mut r);
        let sc = random_bipartite_scenario(da, db, kind, &mut r);
        let t = qmodel::moments(&sc).map_err(|e| e.to_string())?.correlator_table();
        let rep = ri::tlm_check(&t, 1e-9).map_err(|e| e.to_string())?;
        worst = worst.min(rep.slack[0].min(rep.slack[1]));
        failures += usize::from(!rep.pass);
    }
    ensure(failures == 0, || format!("{failures} of 10000 scenarios fail"))?;
    Ok(format!("10000 scenarios pass, smallest slack {worst:.3e}"))
}

fn eta_tightening() -> Check {
    let mut r = rng(3);
    let (mut eligible, mut tighter, mut violations) = (0, 0, 0);
    for _ in 0..1000 {
        let (da, db) = (r.random_range(2..=4), r.random_range(2..=4));
        let sc = random_bipartite_scenario(da, db, ObservableKind::Gue, &mut r);
        let t2 = qmodel::theorem2_check(&sc, 1e-9).map_err(|e| e.to_string())?;
        violations += usize::from(!t2.pass);
        if t2.eta_a.abs() > 0.1 {
            eligible += 1;
            tighter += usize::from(t2.rows[0].rhs < t2.plain_rhs[0]);
        }
    }
    ensure(violations == 0, || format!("{violations} violations"))?;
    ensure(eligible > 0, || "no sample with |η_A| > 0.1".into())?;
    let frac = tighter as f64 / eligible as f64;
    ensure(frac >= 0.99, || format!("tighter in only {tighter}/{eligible}"))?;
    Ok(format!("always holds; tighter in {tighter}/{eligible} samples with |η_A| > 0.1"))
}

fn eta_curve() -> Check {
    let config = OptConfig { restarts: 8, max_evals: 4000, seed: 0, tol: 1e-12 };
    let expected = [(0.0, 2.828), (0.25, 2.738), (0.5, 2.449), (FRAC_1_SQRT_2, 2.000), (0.9, 1.233)];
    let mut parts = Vec::new();
    for (eta, rounded) in expected {
        let (p, _) = constrained_max(eta, &config).map_err(|e| e.to_string())?;
        let closed = TSIRELSON * (1.0 - eta * eta).sqrt();
        ensure(p.feasible, || format!("η = {eta} not attained (got {})", p.achieved_eta))?;
        ensure((p.max_chsh - closed).abs() <= 5e-3, || format!("η = {eta}: max {} vs {closed}", p.max_chsh))?;
        ensure((p.max_chsh - rounded).abs() <= 5e-3, || format!("η = {eta}: max {} vs {rounded}", p.max_chsh))?;
        parts.push(format!("{eta:.3}→{:.4}", p.max_chsh));
    }
    Ok(parts.join(", "))
}

fn pr_box() -> Check {
    let v = ri::classify(&CorrelatorTable::pr_box(), 1e-9).map_err(|e| e.to_string())?;
    ensure(!v.ri_feasible, || "PR box reported feasible".into())?;
    ensure((v.epsilon - 2.0).abs() <= 1e-12, || format!("epsilon {}", v.epsilon))?;
    let demo = ri::pr_box_demo().map_err(|e| e.to_string())?;
    for c in &demo.contexts {
        let want = if c.k == 0 { 1.0 } else { -1.0 };
        ensure(c.forced_r == want, || format!("context ({}, {}) forced r = {}", c.j, c.k, c.forced_r))?;
        ensure(c.feasible_grid_points == vec![[0.0, 0.0, want]], || format!("context ({}, {}) grid {:?}", c.j, c.k, c.feasible_grid_points))?;
    }
    ensure(!demo.ri_feasible, || "demo reported a common r".into())?;
    Ok(format!("ri_feasible = false, epsilon = {}, r_jk = (−1)^k in all four contexts", v.epsilon))
}

fn four_interval_oracle() -> Check {
    const MARGIN: f64 = 1e-3;
    let mut r = rng(6);
    let grid: Vec<f64> = (0..=200).map(|n| -1.0 + 0.01 * n as f64).collect();
    let (mut compared, mut skipped, mut mismatches) = (0usize, 0usize, 0usize);
    let (mut feasible_tables, mut verdict_mismatches) = (0, 0);
    for _ in 0..1000 {
        let scale = if r.random::<bool>() { 1.0 } else { 0.7 };
        let mut block = || [[0; 2]; 2].map(|row| row.map(|_: i32| scale * r.random_range(-1.0..1.0)));
        let tct = TripartiteCorrelatorTable::new(block(), block(), [[0.0; 2]; 2]).map_err(|e| e.to_string())?;
        let rep = lemma1_intervals(&tct, &ALL_CONTEXTS, 1e-9).map_err(|e| e.to_string())?;
        let mut interval_any = false;
        let mut oracle_any = false;
        for &x in &grid {
            let near_edge = rep.intervals.iter().any(|iv| (x - iv.lo).abs() < MARGIN || (x - iv.hi).abs() < MARGIN);
            if near_edge {
                skipped += 1;
                continue;
            }
            let inside = rep.infeasible_contexts.is_empty() && rep.intervals.iter().all(|iv| iv.lo <= x && x <= iv.hi);
            let mut psd = true;
            for &(j, k) in &ALL_CONTEXTS {
                let m = tripartite_matrix(&tct, j, k, x).map_err(|e| e.to_string())?;
                psd &= m.is_psd(1e-9).map_err(|e| e.to_string())?;
            }
            compared += 1;
            mismatches += usize::from(inside != psd);
            interval_any |= inside;
            oracle_any |= psd;
        }
        feasible_tables += usize::from(oracle_any);
        verdict_mismatches += usize::from(interval_any != oracle_any);
    }
    ensure(mismatches == 0 && verdict_mismatches == 0, || format!("{mismatches} grid and {verdict_mismatches} table disagreements"))?;
    ensure(feasible_tables > 0 && feasible_tables < 1000, || format!("{feasible_tables} feasible tables: sample is one-sided"))?;
    Ok(format!("{compared} grid points agree ({skipped} boundary points excluded); {feasible_tables}/1000 tables feasible"))
}

fn lhv_soundness() -> Check {
    let mut r = rng(7);
    let mut worst_contraction: f64 = 0.0;
    let mut witnessed = 0;
    for n in 0..1000 {
        let mut w = [0.0; 16];
        w.iter_mut().for_each(|x| *x = -r.random::<f64>().ln());
        // Sparse ensembles probe the polytope faces.
        if n % 4 == 0 {
            w.iter_mut().for_each(|x| {
                if r.random::<f64>() < 0.7 {
                    *x = 0.0
                }
            });
            w[r.random_range(0..16)] += 1.0;
        }
        let ens = LhvEnsemble::normalized(w).map_err(|e| e.to_string())?;
        let c = correlators_of(&ens);
        let e = c.table.pm1_correlators.ok_or("±1 data lost its correlators")?;
        ensure(is_local(&e, 1e-9).map_err(|e| e.to_string())?, || format!("ensemble {n} not local"))?;
        let pc = product_cov_matrix(&ens);
        ensure(pc.matrix.is_psd(1e-9).map_err(|e| e.to_string())?, || format!("ensemble {n}: product covariance not PSD"))?;
        let gap = (pc.contraction() - (4.0 - pc.chsh * pc.chsh)).abs();
        worst_contraction = worst_contraction.max(gap);
        ensure(gap <= 1e-9, || format!("ensemble {n}: contraction off by {gap}"))?;
        if c.table.is_degenerate() {
            continue;
        }
        let tlm = ri::tlm_check(&c.table, 1e-9).map_err(|e| e.to_string())?;
        ensure(tlm.pass, || format!("ensemble {n} fails the correlator bound"))?;
        let rp = c.r_prime.ok_or("non-degenerate ensemble without r'")?;
        let f = ri::ri_feasible_bipartite(&c.table, 1e-9).map_err(|e| e.to_string())?;
        ensure(f.feasible, || format!("ensemble {n} infeasible"))?;
        ensure(f.intervals[..2].iter().all(|iv| iv.contains(rp, 1e-9)), || format!("ensemble {n}: r' = {rp} is not a witness"))?;
        witnessed += 1;
    }
    Ok(format!("1000 ensembles local; {witnessed} non-degenerate with r' = C(A0,A1)/(Δ0Δ1) as witness; max contraction error {worst_contraction:.1e}"))
}

fn monogamy() -> Check {
    let mut r = rng(8);
    let mut max_sum: f64 = 0.0;
    for n in 0..500 {
        let sc = tripartite_uncorrelated_bc(&mut r);
        let t = qmodel::tripartite_table(&sc).map_err(|e| e.to_string())?;
        let m = monogamy_from_table(&t, 1e-9).map_err(|e| e.to_string())?;
        ensure(m.bc_uncorrelated, || format!("scenario {n}: Bob–Charlie correlation {}", m.max_abs_pearson_bc))?;
        ensure(m.report.pass_sq, || format!("scenario {n}: sum of squares {}", m.report.sum_sq))?;
        max_sum = max_sum.max(m.report.sum_sq);
    }
    let mut worst_ac: f64 = 0.0;
    for _ in 0..20 {
        let sc = tsirelson_tripartite([random_bloch_observable(&mut r), random_bloch_observable(&mut r)]);
        let t = qmodel::tripartite_table(&sc).map_err(|e| e.to_string())?;
        ensure((chsh_of(&t.pearson_ab) - TSIRELSON).abs() < 1e-12, || "Tsirelson scenario lost its value".into())?;
        worst_ac = worst_ac.max(chsh_of(&t.pearson_ac).abs());
    }
    ensure(worst_ac <= 1e-6, || format!("|B_AC| = {worst_ac} at B_AB = 2√2"))?;
    Ok(format!("500 scenarios, largest B²_AB + B²_AC = {max_sum:.6}; at B_AB = 2√2, |B_AC| ≤ {worst_ac:.1e}"))
}

fn nparty_bound() -> Check {
    let mut r = rng(9);
    let mut parts = Vec::new();
    for n in 1..=4 {
        let mut max_ratio: f64 = 0.0;
        for s in 0..250 {
            let sc = nparty_uncorrelated(n, &mut r).map_err(|e| e.to_string())?;
            let (blocks, nu) = qmodel::pearson_blocks_with_alice(&sc).map_err(|e| e.to_string())?;
            let npc = NPartyCorrelators::new(blocks).map_err(|e| e.to_string())?;
            let rep = nparty_bound_check(&npc, nu, 1e-9).map_err(|e| format!("n = {n}, sample {s}: {e}"))?;
            ensure(rep.pass_refined, || format!("n = {n}: {} > {}", rep.sum_abs_b, rep.refined_bound))?;
            ensure(rep.pass_outer, || format!("n = {n}: refined bound {} > {}", rep.refined_bound, rep.bound))?;
            ensure(rep.sum_abs_b <= 2.0 * (2.0 * n as f64).sqrt() + 1e-9, || format!("n = {n}: {}", rep.sum_abs_b))?;
            max_ratio = max_ratio.max(rep.sum_abs_b / rep.refined_bound);
        }
        parts.push(format!("n={n}: max Σ|B|/bound {max_ratio:.4}"));
    }
    Ok(parts.join(", "))
}

fn chsh_heisenberg() -> Check {
    let mut r = rng(10);
    let (mut worst_total, mut worst_trunc): (f64, f64) = (0.0, 0.0);
    for _ in 0..200 {
        let sc = oscillator_scenario(12, 24, &mut r).map_err(|e| e.to_string())?;
        let o = qmodel::oscillator_check(&sc, 1e-9).map_err(|e| e.to_string())?;
        let total = (o.chsh / TSIRELSON).powi(2) + (o.c.abs() / o.lhs).powi(2);
        worst_total = worst_total.max(total);
        worst_trunc = worst_trunc.max(o.truncation_error);
    }
    ensure(worst_total <= 1.0 + 1e-3, || format!("(B/2√2)² + (c/σxσp)² reached {worst_total}"))?;
    ensure(worst_trunc < 1e-3, || format!("truncation error {worst_trunc}"))?;
    Ok(format!("200 states, largest total {worst_total:.6}, truncation error {worst_trunc:.1e}"))
}

fn higher_moment() -> Check {
    let mut r = rng(11);
    let (mut strict, mut total) = (0, 0);
    for n in 0..500 {
        let db = r.random_range(2..=3);
        let sc = random_bipartite_scenario(3, db, ObservableKind::Gue, &mut r);
        let (i, m) = (n % 2, 2 + (n / 2) % 2);
        let h = qmodel::higher_moment_ur(&sc, i, m as u32, 1, 1e-9).map_err(|e| e.to_string())?;
        ensure(h.pass, || format!("sample {n}: lhs {} < enhanced {}", h.lhs, h.rhs_enhanced))?;
        strict += usize::from(h.rhs_enhanced > h.rhs_basic);
        total += 1;
    }
    ensure(2 * strict >= total, || format!("enhanced bound strictly larger in only {strict}/{total}"))?;
    let mut min_rhs = f64::INFINITY;
    for _ in 0..50 {
        let sc = qutrit_eigenstate_scenario(&mut r)?;
        for m in [2, 3] {
            let h = qmodel::higher_moment_ur(&sc, 1, m, 1, 1e-9).map_err(|e| e.to_string())?;
            ensure(h.pass, || "eigenstate sample fails".into())?;
            min_rhs = min_rhs.min(h.rhs_enhanced);
        }
    }
    ensure(min_rhs > 1e-6, || format!("eigenstate bound collapsed to {min_rhs}"))?;
    Ok(format!("{strict}/{total} strictly above the basic bound; eigenstates keep rhs ≥ {min_rhs:.3e}"))
}

/// Product state whose Alice factor is an eigenvector of `A_0`.
fn qutrit_eigenstate_scenario(r: &mut ChaCha8Rng) -> Result<QuantumScenario, String> {
    let u = random_unitary(3, r);
    let d: Vec<f64> = (0..3).map(|_| r.random_range(-2.0..2.0)).collect();
    let a0 = Observable::new(u.matmul(&qmodel::CMatrix::diagonal(&d)).matmul(&u.adjoint()).hermitian_part()).map_err(|e| e.to_string())?;
    let a1 = random_gue_observable(3, r);
    let k = r.random_range(0..3);
    let v: Vec<qmodel::C64> = (0..3).map(|row| u.get(row, k)).collect();
    let bob = random_state(2, r);
    let psi: Vec<qmodel::C64> = v.iter().flat_map(|a| bob.iter().map(move |b| a * b)).collect();
    let state = QuantumState::pure_normalized(psi).map_err(|e| e.to_string())?;
    QuantumScenario::bipartite([3, 2], state, [a0, a1], [Observable::pauli_x(), Observable::pauli_z()]).map_err(|e| e.to_string())
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Check);
    let criteria: [Criterion; 11] = [
        ("tsirelson reproduction", tsirelson_reproduction),
        ("correlator bound universality", universality),
        ("eta tightening", eta_tightening),
        ("eta curve", eta_curve),
        ("pr-box infeasibility", pr_box),
        ("tripartite interval oracle", four_interval_oracle),
        ("lhv soundness", lhv_soundness),
        ("monogamy", monogamy),
        ("n-party bound", nparty_bound),
        ("chsh-heisenberg", chsh_heisenberg),
        ("higher-moment relation", higher_moment),
    ];
    let mut failed = 0;
    for (n, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let took = start.elapsed();
        match result {
            Ok(detail) => println!("PASS {:>2} {name}: {detail} [{took:.2?}]", n + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {why} [{took:.2?}]", n + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
