#![allow(clippy::needless_range_loop)]

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use ribounds::correlators::{chsh_of, CorrelatorTable, ProbabilityTable, TripartiteCorrelatorTable};
use ribounds::lhv::{correlators_of, is_local, max_chsh_variant, product_cov_matrix, LhvEnsemble};
use ribounds::linalg::SymmetricMatrix;
use ribounds::multiparty::{nparty_bound_check, zeta_block, NPartyCorrelators};
use ribounds::optimizer::start_point;
use ribounds::qmodel::sampling::{
    nparty_uncorrelated, qubit_scenario, random_bipartite_scenario, random_bloch_observable, ObservableKind, QUBIT_PARAMS,
};
use ribounds::qmodel::{
    moments, pearson_blocks_with_alice, theorem2_check, CMatrix, QuantumScenario, QuantumState, ALICE, C64,
};
use ribounds::ri::{
    bipartite_matrix, epsilon_gap, lemma1_intervals, r_interval_bipartite, ri_feasible_bipartite, tlm_check_pearson,
    tripartite_matrix, ALL_CONTEXTS,
};

const TOL: f64 = 1e-9;

fn pearson_entry() -> impl Strategy<Value = f64> {
    -1.0..=1.0f64
}

fn pearson_block() -> impl Strategy<Value = [[f64; 2]; 2]> {
    [[pearson_entry(), pearson_entry()], [pearson_entry(), pearson_entry()]]
}

fn rotation(n: usize, angles: &[f64]) -> Vec<Vec<f64>> {
    let mut q: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    let mut t = angles.iter().cycle();
    for _ in 0..2 {
        for a in 0..n {
            for b in a + 1..n {
                let (s, c) = t.next().unwrap().sin_cos();
                for row in q.iter_mut() {
                    let (x, y) = (row[a], row[b]);
                    row[a] = c * x - s * y;
                    row[b] = s * x + c * y;
                }
            }
        }
    }
    q
}

/// `Q diag(λ) Qᵀ`.
fn with_spectrum(lambda: &[f64], angles: &[f64]) -> SymmetricMatrix {
    let n = lambda.len();
    let q = rotation(n, angles);
    SymmetricMatrix::from_lower(n, |i, j| (0..n).map(|k| q[i][k] * lambda[k] * q[j][k]).sum()).unwrap()
}

fn spectrum() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=7).prop_flat_map(|n| {
        let magnitude = prop_oneof![1e-2..2.0f64, -2.0..-1e-2f64];
        (prop::collection::vec(magnitude, n), prop::collection::vec(-3.2..3.2f64, n * n))
    })
}

fn ensemble() -> impl Strategy<Value = LhvEnsemble> {
    prop::array::uniform16(0.0..1.0f64)
        .prop_filter("positive mass", |w| w.iter().sum::<f64>() > 1e-3)
        .prop_map(|w| LhvEnsemble::normalized(w).unwrap())
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn psd_test_agrees_with_known_spectrum((lambda, angles) in spectrum()) {
        let m = with_spectrum(&lambda, &angles);
        let expected = lambda.iter().all(|&l| l >= 0.0);
        prop_assert_eq!(m.is_psd(0.0).unwrap(), expected);
        let mut got = m.eigenvalues().unwrap();
        let mut want = lambda.clone();
        got.sort_by(f64::total_cmp);
        want.sort_by(f64::total_cmp);
        for (g, w) in got.iter().zip(&want) {
            prop_assert!((g - w).abs() < 1e-10, "{g} vs {w}");
        }
    }

    #[test]
    fn schur_complement_preserves_psd((lambda, angles) in spectrum(), split in 1usize..3) {
        let m = with_spectrum(&lambda, &angles);
        prop_assume!(split < m.dim());
        let lead = SymmetricMatrix::from_lower(split, |i, j| m.get(i, j)).unwrap();
        prop_assume!(lead.min_eigenvalue().unwrap() > 1e-3);
        let s = m.schur_complement(split).unwrap();
        prop_assert_eq!(m.is_psd(TOL).unwrap(), s.is_psd(TOL).unwrap());
    }

    #[test]
    fn spectrum_is_permutation_invariant((lambda, angles) in spectrum(), key in prop::collection::vec(any::<u32>(), 7)) {
        let m = with_spectrum(&lambda, &angles);
        let n = m.dim();
        let mut perm: Vec<usize> = (0..n).collect();
        perm.sort_by_key(|&i| key[i]);
        let mut a = m.eigenvalues().unwrap();
        let mut b = m.permuted(&perm).unwrap().eigenvalues().unwrap();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() < 1e-10);
        }
    }

    #[test]
    fn pearson_of_any_distribution_is_bounded(
        na in 2usize..=4,
        nb in 2usize..=4,
        outcomes in prop::collection::vec(-5.0..5.0f64, 8),
        weights in prop::collection::vec(0.0..1.0f64, 64),
    ) {
        let oa = outcomes[..na].to_vec();
        let ob = outcomes[4..4 + nb].to_vec();
        let norm: Vec<f64> = (0..4).map(|c| weights[c * 16..c * 16 + na * nb].iter().sum::<f64>()).collect();
        prop_assume!(norm.iter().all(|&s| s > 1e-6));
        let p = |i: usize, j: usize, a: usize, b: usize| weights[(2 * i + j) * 16 + a * nb + b] / norm[2 * i + j];
        let pt = ProbabilityTable::from_fn(oa.clone(), ob.clone(), p).unwrap();
        let ct = CorrelatorTable::from_probability_table(&pt).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let (mut ea, mut eb, mut eaa, mut ebb, mut eab) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for a in 0..na {
                    for b in 0..nb {
                        let q = p(i, j, a, b);
                        ea += q * oa[a];
                        eb += q * ob[b];
                        eaa += q * oa[a] * oa[a];
                        ebb += q * ob[b] * ob[b];
                        eab += q * oa[a] * ob[b];
                    }
                }
                let (va, vb) = (eaa - ea * ea, ebb - eb * eb);
                if va > 1e-9 && vb > 1e-9 {
                    let raw = (eab - ea * eb) / (va * vb).sqrt();
                    prop_assert!(raw.abs() <= 1.0 + 1e-9);
                    let lib = ct.pearson[i][j].unwrap();
                    prop_assert!(lib.abs() <= 1.0);
                    prop_assert!((lib - raw.clamp(-1.0, 1.0)).abs() < 1e-8, "{lib} vs {raw}");
                }
            }
        }
    }

    #[test]
    fn pearson_survives_affine_relabelling(
        weights in prop::collection::vec(0.01..1.0f64, 16),
        scale in prop::array::uniform2(0.1..10.0f64),
        shift in prop::array::uniform2(-10.0..10.0f64),
    ) {
        let outcomes = vec![-1.0, 1.0];
        let p = |i: usize, j: usize, a: usize, b: usize| {
            let c = 4 * (2 * i + j);
            weights[c + 2 * a + b] / weights[c..c + 4].iter().sum::<f64>()
        };
        let before = CorrelatorTable::from_probability_table(&ProbabilityTable::from_fn(outcomes.clone(), outcomes.clone(), p).unwrap()).unwrap();
        let relabel = |k: usize| outcomes.iter().map(|x| scale[k] * x + shift[k]).collect::<Vec<_>>();
        let after = CorrelatorTable::from_probability_table(&ProbabilityTable::from_fn(relabel(0), relabel(1), p).unwrap()).unwrap();
        let (x, y) = (before.pearson_matrix().unwrap(), after.pearson_matrix().unwrap());
        for i in 0..2 {
            for j in 0..2 {
                prop_assert!((x[i][j] - y[i][j]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn lhv_chsh_is_at_most_two(ens in ensemble()) {
        let corr = correlators_of(&ens);
        let e = corr.table.pm1_correlators.unwrap();
        prop_assert!(chsh_of(&e).abs() <= 2.0 + 1e-12);
        prop_assert!(max_chsh_variant(&e) <= 2.0 + 1e-12);
        prop_assert!(is_local(&e, 1e-12).unwrap());
        let pc = product_cov_matrix(&ens);
        prop_assert!(pc.matrix.is_psd(TOL).unwrap());
        prop_assert!((pc.contraction() - (4.0 - pc.chsh * pc.chsh)).abs() < 1e-10);
    }

    #[test]
    fn lhv_data_is_ri_feasible_with_its_own_r(ens in ensemble()) {
        let corr = correlators_of(&ens);
        prop_assume!(!corr.table.is_degenerate());
        let rp = corr.r_prime.unwrap();
        let f = ri_feasible_bipartite(&corr.table, TOL).unwrap();
        prop_assert!(f.feasible);
        let (lo, hi) = f.alice.unwrap();
        prop_assert!(lo - 1e-7 <= rp && rp <= hi + 1e-7, "{rp} not in [{lo}, {hi}]");
    }

    #[test]
    fn full_support_ensembles_do_not_saturate_uncertainty(w in prop::array::uniform16(0.01..1.0f64)) {
        let ens = LhvEnsemble::normalized(w).unwrap();
        let corr = correlators_of(&ens);
        let v = corr.table.var_a;
        prop_assert!(v[0] * v[1] - corr.r * corr.r >= 1e-12);
    }

    #[test]
    fn locality_is_the_chsh_polytope(e in pearson_block()) {
        let local = is_local(&e, 0.0).unwrap();
        prop_assert_eq!(local, max_chsh_variant(&e) <= 2.0);
        if chsh_of(&e).abs() > 2.0 {
            prop_assert!(!local);
        }
    }

    #[test]
    fn intervals_match_psd_on_a_grid(rho in pearson_block(), j in 0usize..2) {
        let iv = r_interval_bipartite(&CorrelatorTable::from_pearson(rho).unwrap(), j).unwrap();
        for k in 0..=200 {
            let r = -1.0 + 0.01 * f64::from(k);
            if (r - iv.lo).abs() < 1e-3 || (r - iv.hi).abs() < 1e-3 {
                continue;
            }
            let psd = bipartite_matrix(&rho, j, r).unwrap().is_psd(TOL).unwrap();
            prop_assert_eq!(psd, iv.contains(r, 0.0), "r' = {}", r);
        }
    }

    #[test]
    fn tlm_is_ri_feasibility(rho in pearson_block()) {
        let ct = CorrelatorTable::from_pearson(rho).unwrap();
        let f = ri_feasible_bipartite(&ct, TOL).unwrap();
        let t = tlm_check_pearson(&rho, TOL);
        prop_assert_eq!(t.pass, f.feasible);
        prop_assert_eq!(t.slack[0] >= -TOL, f.alice.is_some());
        prop_assert_eq!(t.slack[1] >= -TOL, f.bob.is_some());
        prop_assert_eq!(epsilon_gap(&ct).unwrap() == 0.0, f.alice.is_some());
        if let Some(w) = f.witness_r {
            for j in 0..2 {
                let m = bipartite_matrix(&rho, j, w).unwrap();
                prop_assert!(m.min_eigenvalue().unwrap() >= -1e-7);
            }
        }
    }

    #[test]
    fn shrinking_correlations_keeps_feasibility(rho in pearson_block(), s in 0.0..=1.0f64) {
        prop_assume!(tlm_check_pearson(&rho, TOL).pass);
        let scaled = rho.map(|row| row.map(|x| s * x));
        prop_assert!(tlm_check_pearson(&scaled, TOL).pass);
    }

    #[test]
    fn silent_charlie_reproduces_the_bipartite_intervals(rho in pearson_block()) {
        let tct = TripartiteCorrelatorTable::new(rho, [[0.0; 2]; 2], [[0.0; 2]; 2]).unwrap();
        let ct = CorrelatorTable::from_pearson(rho).unwrap();
        let report = lemma1_intervals(&tct, &ALL_CONTEXTS, TOL).unwrap();
        for (iv, &(j, _)) in report.intervals.iter().zip(&ALL_CONTEXTS) {
            let two = r_interval_bipartite(&ct, j).unwrap();
            prop_assert!((iv.lo - two.lo).abs() < 1e-12 && (iv.hi - two.hi).abs() < 1e-12);
        }
    }

    #[test]
    fn zeta_determinant_matches_schur_block(
        ab in pearson_block(),
        ac in pearson_block(),
        bc in -0.95..0.95f64,
        r in -1.0..=1.0f64,
        l in 0usize..2,
        k in 0usize..2,
    ) {
        let mut bct = [[0.0; 2]; 2];
        bct[l][k] = bc;
        let tct = TripartiteCorrelatorTable::new(ab, ac, bct).unwrap();
        let z = zeta_block(&tct, l, k).unwrap();
        let s = tripartite_matrix(&tct, l, k, r).unwrap().schur_complement(2).unwrap();
        let want = [[1.0 - z[0][0], r - z[0][1]], [r - z[1][0], 1.0 - z[1][1]]];
        for a in 0..2 {
            for b in 0..2 {
                prop_assert!((s.get(a, b) - want[a][b]).abs() < 1e-9);
            }
        }
        let det = (1.0 - z[0][0]) * (1.0 - z[1][1]) - (r - z[1][0]).powi(2);
        prop_assert!((s.determinant() - det).abs() < 1e-9);
    }

    #[test]
    fn silent_experimenter_preserves_the_sum(seed in any::<u64>(), n in 1usize..=3) {
        let mut r = rng(seed);
        let sc = nparty_uncorrelated(n, &mut r).unwrap();
        let (blocks, r_prime) = pearson_blocks_with_alice(&sc).unwrap();
        let npc = NPartyCorrelators::new(blocks).unwrap();
        let small = nparty_bound_check(&npc, r_prime, TOL).unwrap();
        let big = nparty_bound_check(&npc.with_silent_experimenter().unwrap(), r_prime, TOL).unwrap();
        prop_assert!(small.pass && big.pass);
        prop_assert_eq!(big.n, small.n + 1);
        prop_assert!((big.sum_abs_b - small.sum_abs_b).abs() < 1e-12);
        prop_assert!(big.refined_bound > small.refined_bound);
        prop_assert!(big.bound > small.bound);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quantum_moments_respect_the_uncertainty_disc(seed in any::<u64>(), da in 2usize..=4, db in 2usize..=3, pm1 in any::<bool>()) {
        let kind = if pm1 { ObservableKind::Pm1 } else { ObservableKind::Gue };
        let sc = random_bipartite_scenario(da, db, kind, &mut rng(seed));
        let m = moments(&sc).unwrap();
        prop_assert!(m.nu_a * m.nu_a + m.eta_a * m.eta_a <= 1.0 + 1e-12);
        prop_assert!(m.nu_b * m.nu_b + m.eta_b * m.eta_b <= 1.0 + 1e-12);
        let t2 = theorem2_check(&sc, TOL).unwrap();
        prop_assert!(t2.pass);
        for row in 0..2 {
            prop_assert!(t2.rows[row].rhs <= t2.plain_rhs[row] + 1e-12);
        }
    }

    #[test]
    fn binary_zero_mean_relation_matches_product_form(seed in any::<u64>()) {
        // Bloch observables on the singlet: ±1 outcomes, zero means.
        let mut r = rng(seed);
        let sc = singlet_scenario(&mut r);
        let m = moments(&sc).unwrap();
        prop_assert!(m.means_a.iter().chain(&m.means_b).all(|x| x.abs() < 1e-12));
        let stats = sc.moment_table().party_stats(ALICE).unwrap();
        let t2 = theorem2_check(&sc, TOL).unwrap();
        for j in 0..2 {
            // Δ²(A0Bj)Δ²(A1Bj) ≥ (½⟨{A0,A1}⟩ − C0j C1j)² + (⟨[A0,A1]⟩/2i)².
            let (c0, c1) = (m.cov[0][j], m.cov[1][j]);
            let lhs = (1.0 - c0 * c0) * (1.0 - c1 * c1);
            let rhs = (stats.nu - c0 * c1).powi(2) + stats.eta * stats.eta;
            let ns = t2.ns_alice[j];
            prop_assert!((ns.lhs - lhs).abs() < 1e-10 && (ns.rhs - rhs).abs() < 1e-10);
            prop_assert!(lhs >= rhs - 1e-10);
        }
    }

    #[test]
    fn optimizer_points_decode(seed in any::<u64>(), index in 0usize..64) {
        let p = start_point(seed, index, QUBIT_PARAMS);
        prop_assert!(p.iter().all(|x| (-std::f64::consts::PI..std::f64::consts::PI).contains(x)));
        let sc = qubit_scenario(&p).unwrap();
        let rho = sc.state().density();
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
        for party in 0..2 {
            for o in sc.observables(party) {
                prop_assert!(o.matrix().is_hermitian(1e-12));
                let sq = o.matrix().matmul(o.matrix());
                prop_assert!(sq.max_abs_diff(&CMatrix::identity(2)) < 1e-12);
            }
        }
    }
}

fn singlet_scenario(r: &mut ChaCha8Rng) -> QuantumScenario {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let singlet = QuantumState::pure(vec![z, C64::new(h, 0.0), C64::new(-h, 0.0), z]).unwrap();
    let mut obs = || random_bloch_observable(r);
    let alice = [obs(), obs()];
    let bob = [obs(), obs()];
    QuantumScenario::bipartite([2, 2], singlet, alice, bob).unwrap()
}
