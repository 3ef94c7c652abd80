//! Exact L1 optimal transport between distributions on a finite metric space.
//!
//! W1 only depends on `mu - nu`: shared mass stays in place, so the solver
//! only moves the positive part of the difference onto the negative part.
//! The Kantorovich potential is recovered from the transportation duals by a
//! c-transform over the whole space, which makes it 1-Lipschitz everywhere.

mod simplex;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{open_ball, FiniteMetricMeasureSpace};

/// Marginal tolerance used when reconstructing couplings.
pub const MARGINAL_TOL: f64 = 1e-10;
/// Maximum allowed difference between total source and target mass.
pub const BALANCE_TOL: f64 = 1e-8;
/// Lipschitz slack accepted by [`kr_dual_value`].
pub const LIPSCHITZ_TOL: f64 = 1e-9;

/// Sparse transport plan with its marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    /// `(i, j, mass)` with `mass > 0`, sorted by `(i, j)`.
    pub entries: Vec<(usize, usize, f64)>,
    pub mu: Vec<f64>,
    pub nu: Vec<f64>,
}

impl Coupling {
    /// `mu ⊗ nu`.
    pub fn product(mu: &[f64], nu: &[f64]) -> Self {
        let mut entries = Vec::new();
        for (i, &a) in mu.iter().enumerate() {
            for (j, &b) in nu.iter().enumerate() {
                if a * b > 0.0 {
                    entries.push((i, j, a * b));
                }
            }
        }
        Self { entries, mu: mu.to_vec(), nu: nu.to_vec() }
    }

    pub fn dense(&self) -> DMatrix<f64> {
        let mut plan = DMatrix::zeros(self.mu.len(), self.nu.len());
        for &(i, j, w) in &self.entries {
            plan[(i, j)] += w;
        }
        plan
    }

    pub fn cost(&self, dist: &DMatrix<f64>) -> f64 {
        self.entries.iter().map(|&(i, j, w)| w * dist[(i, j)]).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MarginalViolation {
    Row { index: usize, expected: f64, actual: f64 },
    Column { index: usize, expected: f64, actual: f64 },
    NegativeEntry { i: usize, j: usize, value: f64 },
}

/// Lists marginal violations of a coupling beyond `tol`.
pub fn validate_coupling(c: &Coupling, tol: f64) -> Vec<MarginalViolation> {
    let mut rows = vec![0.0; c.mu.len()];
    let mut cols = vec![0.0; c.nu.len()];
    let mut out = Vec::new();
    for &(i, j, w) in &c.entries {
        if w < 0.0 {
            out.push(MarginalViolation::NegativeEntry { i, j, value: w });
        }
        rows[i] += w;
        cols[j] += w;
    }
    for (index, (&actual, &expected)) in rows.iter().zip(&c.mu).enumerate() {
        if (actual - expected).abs() > tol {
            out.push(MarginalViolation::Row { index, expected, actual });
        }
    }
    for (index, (&actual, &expected)) in cols.iter().zip(&c.nu).enumerate() {
        if (actual - expected).abs() > tol {
            out.push(MarginalViolation::Column { index, expected, actual });
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransportResult {
    /// W1(mu, nu).
    pub value: f64,
    pub coupling: Coupling,
    /// 1-Lipschitz Kantorovich potential, gauged so that `f(argmax mu) = 0`.
    pub potential: Vec<f64>,
    /// Primal minus dual objective.
    pub gap: f64,
    pub pivots: usize,
}

struct Reduced {
    sources: Vec<usize>,
    targets: Vec<usize>,
    supply: Vec<f64>,
    demand: Vec<f64>,
}

fn check_inputs(mu: &[f64], nu: &[f64], dist: &DMatrix<f64>) -> Result<()> {
    let n = mu.len();
    if nu.len() != n || dist.nrows() != n || dist.ncols() != n {
        return Err(Error::ShapeMismatch(format!(
            "mu has {} entries, nu {}, dist is {}x{}",
            n,
            nu.len(),
            dist.nrows(),
            dist.ncols()
        )));
    }
    for (index, &value) in mu.iter().chain(nu).enumerate() {
        if !(value >= 0.0) || !value.is_finite() {
            return Err(Error::NegativeMass { index: index % n, value });
        }
    }
    let (a, b): (f64, f64) = (mu.iter().sum(), nu.iter().sum());
    if (a - b).abs() > BALANCE_TOL {
        return Err(Error::UnbalancedMarginals { source_mass: a, target_mass: b });
    }
    Ok(())
}

/// Splits `mu - nu` into excess and deficit, dropping atoms below `prune`.
fn reduce(mu: &[f64], nu: &[f64]) -> Reduced {
    let scale = mu.iter().chain(nu).cloned().fold(0.0, f64::max);
    let prune = 1e-15 * scale;
    let mut r = Reduced { sources: Vec::new(), targets: Vec::new(), supply: Vec::new(), demand: Vec::new() };
    for i in 0..mu.len() {
        let diff = mu[i] - nu[i];
        if diff > prune {
            r.sources.push(i);
            r.supply.push(diff);
        } else if -diff > prune {
            r.targets.push(i);
            r.demand.push(-diff);
        }
    }
    // rebalance rounding residue so the solver sees equal totals
    let (s, t): (f64, f64) = (r.supply.iter().sum(), r.demand.iter().sum());
    if !r.sources.is_empty() && !r.targets.is_empty() && s != t {
        let k = t / s;
        for w in &mut r.supply {
            *w *= k;
        }
    }
    if r.sources.is_empty() != r.targets.is_empty() {
        r.sources.clear();
        r.targets.clear();
        r.supply.clear();
        r.demand.clear();
    }
    r
}

fn solve_reduced(r: &Reduced, dist: &DMatrix<f64>) -> Result<Option<simplex::TransportSolution>> {
    if r.sources.is_empty() {
        return Ok(None);
    }
    let n = r.targets.len();
    let mut cost = vec![0.0; r.sources.len() * n];
    for (a, &i) in r.sources.iter().enumerate() {
        for (b, &j) in r.targets.iter().enumerate() {
            cost[a * n + b] = dist[(i, j)];
        }
    }
    simplex::solve(&r.supply, &r.demand, &cost).map(Some)
}

/// W1 value only; skips potential and coupling assembly.
pub fn w1_distance(mu: &[f64], nu: &[f64], dist: &DMatrix<f64>) -> Result<f64> {
    check_inputs(mu, nu, dist)?;
    let r = reduce(mu, nu);
    Ok(solve_reduced(&r, dist)?.map_or(0.0, |s| s.cost))
}

/// Exact W1 with an optimal coupling and a certifying 1-Lipschitz potential.
pub fn w1_exact(mu: &[f64], nu: &[f64], dist: &DMatrix<f64>) -> Result<TransportResult> {
    check_inputs(mu, nu, dist)?;
    let n = mu.len();
    let r = reduce(mu, nu);
    let solution = solve_reduced(&r, dist)?;

    let mut entries: Vec<(usize, usize, f64)> = (0..n)
        .filter_map(|i| {
            let w = mu[i].min(nu[i]);
            (w > 0.0).then_some((i, i, w))
        })
        .collect();
    let mut potential = vec![0.0; n];
    let mut pivots = 0;
    if let Some(sol) = &solution {
        pivots = sol.pivots;
        entries.extend(sol.flows.iter().map(|&(a, b, w)| (r.sources[a], r.targets[b], w)));
        // c-transform: f(k) = min_t d(k, t) - v_t
        for (k, f) in potential.iter_mut().enumerate() {
            *f = r
                .targets
                .iter()
                .zip(&sol.v)
                .map(|(&j, &vj)| dist[(k, j)] - vj)
                .fold(f64::INFINITY, f64::min);
        }
    }
    entries.sort_by_key(|e| (e.0, e.1));

    let anchor = mu
        .iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, &w)| if w > best.1 { (i, w) } else { best })
        .0;
    let shift = potential[anchor];
    for f in &mut potential {
        *f -= shift;
    }

    let coupling = Coupling { entries, mu: mu.to_vec(), nu: nu.to_vec() };
    let value = coupling.cost(dist);
    let dual: f64 = potential.iter().zip(mu.iter().zip(nu)).map(|(f, (a, b))| f * (a - b)).sum();
    Ok(TransportResult { value, coupling, potential, gap: value - dual, pivots })
}

/// `sum f dmu - sum f dnu` for a 1-Lipschitz `f`; a lower bound on W1.
pub fn kr_dual_value(f: &[f64], mu: &[f64], nu: &[f64], dist: &DMatrix<f64>) -> Result<f64> {
    let n = f.len();
    if mu.len() != n || nu.len() != n || dist.nrows() != n {
        return Err(Error::ShapeMismatch("potential, marginals and distances disagree in size".into()));
    }
    let mut worst: Option<(usize, usize, f64)> = None;
    for i in 0..n {
        for j in (i + 1)..n {
            let excess = (f[i] - f[j]).abs() - dist[(i, j)];
            if excess > LIPSCHITZ_TOL && worst.is_none_or(|w| excess > w.2) {
                worst = Some((i, j, excess));
            }
        }
    }
    if let Some((i, j, excess)) = worst {
        return Err(Error::NotLipschitz { i, j, excess });
    }
    Ok(f.iter().zip(mu.iter().zip(nu)).map(|(f, (a, b))| f * (a - b)).sum())
}

/// Cost of the crude plan that keeps the shared mass and ships everything in
/// `B_r(x) \ B_r(y)` across: `m_x(B_r(x) \ B_r(y)) * (d(x,y) + 2r)`,
/// for the r-step walk.
///
/// The shared mass only stays put when `x` has the heavier ball, so the pair
/// is oriented that way first; the value is symmetric in `x` and `y`.
pub fn naive_ball_transport_bound(space: &FiniteMetricMeasureSpace, x: usize, y: usize, r: f64) -> Result<f64> {
    let (bx, by) = (open_ball(space, x, r)?, open_ball(space, y, r)?);
    let d = space.d(x, y);
    if d >= r {
        return Err(Error::OutOfRegime { x, y, distance: d, r });
    }
    let (bx, y) = if by.mass(space) > bx.mass(space) { (by, x) } else { (bx, y) };
    let outside: f64 = bx.members.iter().filter(|&&i| space.d(y, i) >= r).map(|&i| space.measure()[i]).sum();
    Ok(outside / bx.mass(space) * (d + 2.0 * r))
}
