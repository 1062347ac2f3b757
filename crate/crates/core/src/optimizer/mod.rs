//! Multistart simplex search over two-qubit scenarios.

pub mod nelder_mead;

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use nelder_mead::{nelder_mead, SimplexOptions, SimplexOutcome};

use crate::correlators::chsh_of;
use crate::error::{Error, Result};
use crate::qmodel::moments;
use crate::qmodel::sampling::{qubit_scenario, QUBIT_PARAMS};

const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Objective value reported for parameter points where a Pearson
/// coefficient is undefined; below every attainable CHSH value.
pub const DEGENERATE_VALUE: f64 = -4.0;
pub const INITIAL_STEP: f64 = 0.5;
/// Penalty weights applied in turn, each stage warm-started from the last.
pub const PENALTY_SCHEDULE: [f64; 5] = [1e3, 1e5, 1e7, 1e9, 1e11];
/// Largest `| |η_A| − target |` for a constrained point to count as feasible.
pub const ETA_FEASIBILITY_TOL: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptConfig {
    pub restarts: usize,
    /// Evaluation budget per restart.
    pub max_evals: usize,
    pub seed: u64,
    pub tol: f64,
}

impl Default for OptConfig {
    fn default() -> Self {
        Self { restarts: 32, max_evals: 4000, seed: 0, tol: 1e-12 }
    }
}

impl OptConfig {
    fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_evals == 0 || !(self.tol > 0.0) {
            return Err(Error::malformed("restarts, max_evals and tol must be positive"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OptResult {
    pub best_value: f64,
    pub best_params: Vec<f64>,
    pub best_restart: usize,
    /// Total evaluations over all restarts.
    pub evaluations: usize,
    /// Best value of each restart.
    pub trace: Vec<f64>,
    /// Largest objective value at any evaluated point.
    pub trajectory_max: f64,
}

/// Uniform draw from `[−π, π]^dim` for restart `index`.
pub fn start_point(seed: u64, index: usize, dim: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(index as u64));
    (0..dim).map(|_| rng.random_range(-PI..PI)).collect()
}

/// Runs one simplex search, then one more from its optimum to escape
/// premature collapse.
fn local_search<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], config: &OptConfig) -> Result<SimplexOutcome> {
    let opts = SimplexOptions { step: INITIAL_STEP, tol: config.tol, max_evals: config.max_evals };
    let first = nelder_mead(f, x0, &opts)?;
    let left = config.max_evals.saturating_sub(first.evaluations);
    if left <= x0.len() + 1 {
        return Ok(first);
    }
    let second = nelder_mead(f, &first.best, &SimplexOptions { step: 0.1, max_evals: left, ..opts })?;
    let trajectory_max = first.trajectory_max.max(second.trajectory_max);
    let evaluations = first.evaluations + second.evaluations;
    let best = if second.value > first.value { second } else { first };
    Ok(SimplexOutcome { evaluations, trajectory_max, ..best })
}

/// Multistart maximisation of `objective` over `R^dim`.
///
/// Restarts run in parallel, each from [`start_point`]; the merge picks the
/// largest value with the lowest restart index winning ties, so the result
/// depends only on `config`.
pub fn maximize<F>(objective: &F, dim: usize, config: &OptConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let runs: Vec<SimplexOutcome> = (0..config.restarts)
        .into_par_iter()
        .map(|i| local_search(objective, &start_point(config.seed, i, dim), config))
        .collect::<Result<_>>()?;
    Ok(merge(runs))
}

/// Like [`maximize`] from given starting points.
pub fn maximize_from<F>(objective: &F, starts: &[Vec<f64>], config: &OptConfig) -> Result<OptResult>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    config.validate()?;
    let runs: Vec<SimplexOutcome> = starts.par_iter().map(|x| local_search(objective, x, config)).collect::<Result<_>>()?;
    Ok(merge(runs))
}

fn merge(runs: Vec<SimplexOutcome>) -> OptResult {
    let best_restart = (0..runs.len()).fold(0, |b, i| if runs[i].value > runs[b].value { i } else { b });
    OptResult {
        best_value: runs[best_restart].value,
        best_params: runs[best_restart].best.clone(),
        best_restart,
        evaluations: runs.iter().map(|r| r.evaluations).sum(),
        trace: runs.iter().map(|r| r.value).collect(),
        trajectory_max: runs.iter().map(|r| r.trajectory_max).fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Pearson CHSH value and Alice's `η` of the qubit scenario at `params`.
pub fn qubit_chsh_eta(params: &[f64]) -> Result<(f64, f64)> {
    let m = moments(&qubit_scenario(params)?)?;
    Ok((chsh_of(&m.pearson), m.eta_a))
}

/// CHSH of [`qubit_scenario`]; [`DEGENERATE_VALUE`] where it is undefined.
pub fn chsh_objective(params: &[f64]) -> f64 {
    qubit_chsh_eta(params).map_or(DEGENERATE_VALUE, |(b, _)| b)
}

/// Maximum CHSH over two-qubit scenarios.
pub fn maximize_chsh(config: &OptConfig) -> Result<OptResult> {
    maximize(&chsh_objective, QUBIT_PARAMS, config)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaPoint {
    pub eta: f64,
    pub max_chsh: f64,
    /// `|η_A|` at the maximiser.
    pub achieved_eta: f64,
    /// `2√2 √(1 − η²)`.
    pub bound: f64,
    pub feasible: bool,
}

/// Maximum CHSH subject to `|η_A| = eta`, by quadratic penalty continuation.
pub fn constrained_max(eta: f64, config: &OptConfig) -> Result<(EtaPoint, OptResult)> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::malformed(format!("eta {eta} is outside [0, 1]")));
    }
    let penalised = |w: f64| {
        move |p: &[f64]| match qubit_chsh_eta(p) {
            Ok((b, e)) => b - w * (e.abs() - eta).powi(2),
            Err(_) => DEGENERATE_VALUE - w,
        }
    };
    let mut result = maximize(&penalised(PENALTY_SCHEDULE[0]), QUBIT_PARAMS, config)?;
    let mut evaluations = result.evaluations;
    for &w in &PENALTY_SCHEDULE[1..] {
        result = maximize_from(&penalised(w), &[result.best_params.clone()], config)?;
        evaluations += result.evaluations;
    }
    result.evaluations = evaluations;
    let point = match qubit_chsh_eta(&result.best_params) {
        Ok((b, e)) => EtaPoint {
            eta,
            max_chsh: b,
            achieved_eta: e.abs(),
            bound: eta_bound(eta),
            feasible: (e.abs() - eta).abs() <= ETA_FEASIBILITY_TOL,
        },
        Err(_) => EtaPoint { eta, max_chsh: f64::NAN, achieved_eta: f64::NAN, bound: eta_bound(eta), feasible: false },
    };
    Ok((point, result))
}

pub fn eta_bound(eta: f64) -> f64 {
    TSIRELSON * (1.0 - eta * eta).max(0.0).sqrt()
}

/// [`constrained_max`] at each grid value.
pub fn trace_eta_curve(etas: &[f64], config: &OptConfig) -> Result<Vec<EtaPoint>> {
    etas.iter().map(|&e| constrained_max(e, config).map(|(p, _)| p)).collect()
}
