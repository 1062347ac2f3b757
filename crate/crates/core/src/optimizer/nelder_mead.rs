//! Nelder–Mead simplex search (maximisation).

use crate::error::{Error, Result};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexOptions {
    /// Edge length of the initial axis-aligned simplex.
    pub step: f64,
    /// Stop once `max f − min f` over the simplex falls below this.
    pub tol: f64,
    pub max_evals: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimplexOutcome {
    pub best: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    /// Largest value seen at any evaluated point.
    pub trajectory_max: f64,
    pub converged: bool,
}

struct Counter<'a, F> {
    f: &'a F,
    evals: usize,
    max_seen: f64,
}

impl<F: Fn(&[f64]) -> f64> Counter<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<f64> {
        let v = (self.f)(x);
        self.evals += 1;
        if !v.is_finite() {
            return Err(Error::NonFiniteObjective { params: x.to_vec() });
        }
        self.max_seen = self.max_seen.max(v);
        Ok(v)
    }
}

/// Maximises `f` starting from `x0`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(f: &F, x0: &[f64], opts: &SimplexOptions) -> Result<SimplexOutcome> {
    let n = x0.len();
    let mut c = Counter { f, evals: 0, max_seen: f64::NEG_INFINITY };
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    pts.push(x0.to_vec());
    for k in 0..n {
        let mut p = x0.to_vec();
        p[k] += opts.step;
        pts.push(p);
    }
    let mut vals = Vec::with_capacity(n + 1);
    for p in &pts {
        vals.push(c.eval(p)?);
    }
    let mut converged = false;
    while c.evals < opts.max_evals {
        // Descending by value; the sort is stable so ties keep insertion order.
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        if vals[0] - vals[n] < opts.tol {
            converged = true;
            break;
        }
        let centroid: Vec<f64> = (0..n).map(|d| pts[..n].iter().map(|p| p[d]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> { centroid.iter().zip(&pts[n]).map(|(m, w)| m + t * (m - w)).collect() };
        let xr = along(REFLECT);
        let fr = c.eval(&xr)?;
        if fr > vals[0] {
            let xe = along(REFLECT * EXPAND);
            let fe = c.eval(&xe)?;
            if fe > fr {
                (pts[n], vals[n]) = (xe, fe);
            } else {
                (pts[n], vals[n]) = (xr, fr);
            }
            continue;
        }
        if fr > vals[n - 1] {
            (pts[n], vals[n]) = (xr, fr);
            continue;
        }
        let outside = fr > vals[n];
        let xc = along(if outside { CONTRACT } else { -CONTRACT });
        let fc = c.eval(&xc)?;
        if (outside && fc >= fr) || (!outside && fc > vals[n]) {
            (pts[n], vals[n]) = (xc, fc);
            continue;
        }
        for k in 1..=n {
            let p: Vec<f64> = pts[0].iter().zip(&pts[k]).map(|(b, x)| b + SHRINK * (x - b)).collect();
            vals[k] = c.eval(&p)?;
            pts[k] = p;
        }
    }
    let best = (0..=n).fold(0, |b, i| if vals[i] > vals[b] { i } else { b });
    Ok(SimplexOutcome {
        best: pts[best].clone(),
        value: vals[best],
        evaluations: c.evals,
        trajectory_max: c.max_seen,
        converged,
    })
}
