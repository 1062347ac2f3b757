//! Random and structured scenario generators.

use rand::Rng;
use rand_distr::StandardNormal;

use super::matrix::{c, inner, kron_vec, CMatrix, C64, ONE, ZERO};
use super::scenario::QuantumScenario;
use super::state::{Observable, QuantumState};
use crate::error::{Error, Result};

fn gaussian_c<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    c(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Normalised complex Gaussian vector.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<C64> {
    loop {
        let v: Vec<C64> = (0..dim).map(|_| gaussian_c(rng)).collect();
        let n = super::matrix::norm(&v);
        if n > 1e-8 {
            return v.into_iter().map(|z| z / n).collect();
        }
    }
}

/// Unitary from Gram–Schmidt on complex Gaussian columns.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    while cols.len() < dim {
        let mut v: Vec<C64> = (0..dim).map(|_| gaussian_c(rng)).collect();
        for u in &cols {
            let proj = inner(u, &v);
            v.iter_mut().zip(u).for_each(|(x, y)| *x -= proj * y);
        }
        let n = super::matrix::norm(&v);
        if n > 1e-8 {
            cols.push(v.into_iter().map(|z| z / n).collect());
        }
    }
    CMatrix::from_fn(dim, |i, j| cols[j][i])
}

/// `(G + G†)/2` with complex Gaussian `G`.
pub fn random_gue_observable<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Observable {
    let entries: Vec<C64> = (0..dim * dim).map(|_| gaussian_c(rng)).collect();
    let g = CMatrix::from_fn(dim, |i, j| entries[i * dim + j]);
    Observable::new(g.hermitian_part()).expect("Hermitian by construction")
}

/// `U diag(±1) U†` with both signs present.
pub fn random_pm1_observable<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Observable {
    let mut signs: Vec<f64> = (0..dim).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect();
    if signs.iter().all(|&s| s == signs[0]) {
        signs[0] = -signs[0];
    }
    let u = random_unitary(dim, rng);
    let m = u.matmul(&CMatrix::diagonal(&signs)).matmul(&u.adjoint());
    Observable::new(m.hermitian_part()).expect("Hermitian by construction")
}

pub fn random_unit_vector<R: Rng + ?Sized>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = std::array::from_fn(|_| rng.sample(StandardNormal));
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-8 {
            return v.map(|x| x / n);
        }
    }
}

/// Uniform random unit vector orthogonal to `r` (any direction if `r ≈ 0`).
pub fn random_unit_vector_orthogonal_to<R: Rng + ?Sized>(r: [f64; 3], rng: &mut R) -> [f64; 3] {
    let rn = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    loop {
        let mut v = random_unit_vector(rng);
        if rn > 1e-12 {
            let d = (v[0] * r[0] + v[1] * r[1] + v[2] * r[2]) / (rn * rn);
            v = [v[0] - d * r[0], v[1] - d * r[1], v[2] - d * r[2]];
        }
        let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if n > 1e-6 {
            return v.map(|x| x / n);
        }
    }
}

pub fn random_bloch_observable<R: Rng + ?Sized>(rng: &mut R) -> Observable {
    Observable::bloch(random_unit_vector(rng)).expect("unit vector")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ObservableKind {
    /// Gaussian unitary ensemble: generic spectra.
    Gue,
    /// Random eigenbasis with `±1` spectrum.
    Pm1,
}

pub fn random_observable<R: Rng + ?Sized>(dim: usize, kind: ObservableKind, rng: &mut R) -> Observable {
    match kind {
        ObservableKind::Gue => random_gue_observable(dim, rng),
        ObservableKind::Pm1 => random_pm1_observable(dim, rng),
    }
}

/// Random pure state on `da × db` with random observables.
pub fn random_bipartite_scenario<R: Rng + ?Sized>(da: usize, db: usize, kind: ObservableKind, rng: &mut R) -> QuantumScenario {
    let state = QuantumState::Pure(random_state(da * db, rng));
    let alice = [random_observable(da, kind, rng), random_observable(da, kind, rng)];
    let bob = [random_observable(db, kind, rng), random_observable(db, kind, rng)];
    QuantumScenario::bipartite([da, db], state, alice, bob).expect("dimensions are consistent")
}

/// Number of parameters of [`qubit_scenario`].
pub const QUBIT_PARAMS: usize = 9;

/// `cos α |00⟩ + sin α |11⟩` with spin observables at polar/azimuthal
/// angle pairs: `[α, θ_A0, φ_A0, θ_A1, φ_A1, θ_B0, φ_B0, θ_B1, φ_B1]`.
/// Every finite parameter vector decodes to a valid scenario.
pub fn qubit_scenario(params: &[f64]) -> Result<QuantumScenario> {
    if params.len() != QUBIT_PARAMS || params.iter().any(|x| !x.is_finite()) {
        return Err(Error::malformed(format!("expected {QUBIT_PARAMS} finite parameters")));
    }
    let (s, co) = params[0].sin_cos();
    let state = QuantumState::Pure(vec![c(co, 0.0), ZERO, ZERO, c(s, 0.0)]);
    let spin = |k: usize| Observable::spin(params[1 + 2 * k], params[2 + 2 * k]);
    QuantumScenario::bipartite([2, 2], state, [spin(0), spin(1)], [spin(2), spin(3)])
}

/// `|Φ+⟩` with `A = (σz, σx)` and `B = ((σz ± σx)/√2)`; reaches `𝓑 = 2√2`.
pub fn tsirelson_scenario() -> QuantumScenario {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
    qubit_scenario(&[FRAC_PI_4, 0.0, 0.0, FRAC_PI_2, 0.0, FRAC_PI_4, 0.0, -FRAC_PI_4, 0.0]).expect("valid parameters")
}

/// Bloch vector of a qubit density matrix.
pub fn bloch_vector(rho: &CMatrix) -> [f64; 3] {
    let r01 = rho.get(0, 1);
    [2.0 * r01.re, -2.0 * r01.im, (rho.get(0, 0) - rho.get(1, 1)).re]
}

/// Reduced density matrix of `psi` on factor `keep` of `dims`.
pub fn reduced_density(psi: &[C64], dims: &[usize], keep: usize) -> CMatrix {
    let d = dims[keep];
    let after: usize = dims[keep + 1..].iter().product();
    let total: usize = dims.iter().product();
    let mut rho = CMatrix::zeros(d);
    for a in 0..total {
        for b in 0..total {
            let (ka, kb) = ((a / after) % d, (b / after) % d);
            if a - ka * after == b - kb * after {
                rho.set(ka, kb, rho.get(ka, kb) + psi[a] * psi[b].conj());
            }
        }
    }
    rho
}

/// `ρ_sub ⊗ I/d` on the remaining factors, re-ordered into `dims` order.
/// `parties` lists, in order, the factors `rho_sub` acts on.
pub fn embed_with_maximally_mixed(rho_sub: &CMatrix, parties: &[usize], dims: &[usize]) -> CMatrix {
    let total: usize = dims.iter().product();
    let digits = |mut x: usize| {
        let mut out = vec![0; dims.len()];
        for k in (0..dims.len()).rev() {
            out[k] = x % dims[k];
            x /= dims[k];
        }
        out
    };
    let sub_index = |ds: &[usize]| parties.iter().fold(0, |acc, &p| acc * dims[p] + ds[p]);
    let rest: usize = (0..dims.len()).filter(|k| !parties.contains(k)).map(|k| dims[k]).product();
    let scale = 1.0 / rest as f64;
    CMatrix::from_fn(total, |a, b| {
        let (da, db) = (digits(a), digits(b));
        let others_equal = (0..dims.len()).filter(|k| !parties.contains(k)).all(|k| da[k] == db[k]);
        if others_equal {
            rho_sub.get(sub_index(&da), sub_index(&db)) * scale
        } else {
            ZERO
        }
    })
}

/// Three qubits with `C(B_j, C_k) = 0` by construction:
/// `ρ = p |ψ⟩⟨ψ|_AB ⊗ I/2 + (1 − p) |φ⟩⟨φ|_AC ⊗ I/2`, with Charlie's
/// observables orthogonal to the Bloch vector of `φ`'s reduction on C.
pub fn tripartite_uncorrelated_bc<R: Rng + ?Sized>(rng: &mut R) -> QuantumScenario {
    let p: f64 = rng.random();
    let psi = random_state(4, rng);
    let phi = random_state(4, rng);
    let alice = [random_bloch_observable(rng), random_bloch_observable(rng)];
    let bob = [random_bloch_observable(rng), random_bloch_observable(rng)];
    let charlie = charlie_like_pair(&phi, rng);
    tripartite_mixture(p, &psi, &phi, [alice, bob, charlie])
}

fn charlie_like_pair<R: Rng + ?Sized>(phi: &[C64], rng: &mut R) -> [Observable; 2] {
    let r = bloch_vector(&reduced_density(phi, &[2, 2], 1));
    [0, 1].map(|_| Observable::bloch(random_unit_vector_orthogonal_to(r, rng)).expect("unit vector"))
}

fn tripartite_mixture(p: f64, psi_ab: &[C64], phi_ac: &[C64], obs: [[Observable; 2]; 3]) -> QuantumScenario {
    let dims = [2, 2, 2];
    let ab = embed_with_maximally_mixed(&CMatrix::outer(psi_ab, psi_ab), &[0, 1], &dims);
    let ac = embed_with_maximally_mixed(&CMatrix::outer(phi_ac, phi_ac), &[0, 2], &dims);
    let rho = &ab.scale(c(p, 0.0)) + &ac.scale(c(1.0 - p, 0.0));
    let state = QuantumState::mixed(rho).expect("convex mixture of states");
    QuantumScenario::new(dims.to_vec(), state, obs.to_vec()).expect("dimensions are consistent")
}

/// `|Φ+⟩_AB ⊗ I/2` with Tsirelson-optimal Alice and Bob observables and
/// arbitrary Charlie observables.
pub fn tsirelson_tripartite(charlie: [Observable; 2]) -> QuantumScenario {
    let ts = tsirelson_scenario();
    let phi_plus = match ts.state() {
        QuantumState::Pure(v) => v.clone(),
        QuantumState::Mixed(_) => unreachable!("tsirelson scenario is pure"),
    };
    let obs = [ts.observables(0).clone(), ts.observables(1).clone(), charlie];
    tripartite_mixture(1.0, &phi_plus, &phi_plus, obs)
}

/// Alice plus `n` experimenters that are pairwise uncorrelated:
/// `ρ = Σ_s p_s |ψ_s⟩⟨ψ_s|_{A,s} ⊗ I/2^{n−1}`, each experimenter's
/// observables orthogonal to the Bloch vector of `ψ_s` on their qubit.
pub fn nparty_uncorrelated<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Result<QuantumScenario> {
    if n == 0 || n > 4 {
        return Err(Error::malformed("between 1 and 4 experimenters are supported"));
    }
    let dims = vec![2; n + 1];
    let raw: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = raw.iter().sum();
    let total_dim = 1 << (n + 1);
    let mut rho = CMatrix::zeros(total_dim);
    let mut obs = vec![[random_bloch_observable(rng), random_bloch_observable(rng)]];
    for (s, w) in raw.iter().enumerate() {
        let psi = random_state(4, rng);
        obs.push(charlie_like_pair(&psi, rng));
        let part = embed_with_maximally_mixed(&CMatrix::outer(&psi, &psi), &[0, s + 1], &dims);
        rho = &rho + &part.scale(c(w / total, 0.0));
    }
    QuantumScenario::new(dims, QuantumState::mixed(rho)?, obs)
}

/// Truncated oscillator for Alice (`x`, `p` in `dim` levels) entangled with
/// a qubit for Bob; the state lives in the lowest `levels` oscillator levels.
pub fn oscillator_scenario<R: Rng + ?Sized>(levels: usize, dim: usize, rng: &mut R) -> Result<QuantumScenario> {
    if levels == 0 || levels >= dim {
        return Err(Error::malformed("need 0 < levels < dim"));
    }
    let low = random_state(2 * levels, rng);
    let mut psi = vec![ZERO; 2 * dim];
    psi[..2 * levels].copy_from_slice(&low);
    let state = QuantumState::pure(psi)?;
    let alice = [Observable::position(dim)?, Observable::momentum(dim)?];
    let bob = [random_bloch_observable(rng), random_bloch_observable(rng)];
    QuantumScenario::bipartite([dim, 2], state, alice, bob)
}

/// `|0⟩⊗|0⟩` with `A = (σx, σy)`: Alice's `η = 1`.
pub fn maximal_eta_scenario() -> QuantumScenario {
    let state = QuantumState::Pure(kron_vec(&[ONE, ZERO], &[ONE, ZERO]));
    QuantumScenario::bipartite(
        [2, 2],
        state,
        [Observable::pauli_x(), Observable::pauli_y()],
        [Observable::pauli_x(), Observable::pauli_y()],
    )
    .expect("valid")
}
