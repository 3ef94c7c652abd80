//! Named verification experiments.
//!
//! Each experiment builds its spaces and kernels from a seed, computes the
//! relevant curvature, spectrum or volume quantities and compares them with
//! the model bound. Every comparison is recorded as a [`Check`] carrying the
//! bound, the computed value, the declared slack and the resulting margin.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::curvature::{kappa_all_pairs, kappa_sampled, CurvatureReport, PairSampling};
use crate::error::{Error, Result};
use crate::model::{self, BgSampling};
use crate::samplers::{self, HeisenbergMetric};
use crate::space::{
    constant_walk, default_labels, gaussian_walk, neighbor_uniform_walk, r_step_walk, validate_space,
    FiniteMetricMeasureSpace, KernelKind, RandomWalkKernel, TriangleCheck,
};
use crate::spectral::{self, check_bracket, laplacian, liouville_check};
use crate::transport::{validate_coupling, w1_exact, LIPSCHITZ_TOL, MARGINAL_TOL};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    EuclideanThm13,
    FiniteBracket,
    HeisenbergCor15,
    EuclideanLemma31,
    BgCounterexample,
    BgModels,
    GaussianSmoke,
    Liouville,
    ModelFunctions,
    GraphClosedForms,
    TransportDuality,
}

impl Experiment {
    pub const ALL: [Experiment; 11] = [
        Experiment::EuclideanThm13,
        Experiment::FiniteBracket,
        Experiment::HeisenbergCor15,
        Experiment::EuclideanLemma31,
        Experiment::BgCounterexample,
        Experiment::BgModels,
        Experiment::GaussianSmoke,
        Experiment::Liouville,
        Experiment::ModelFunctions,
        Experiment::GraphClosedForms,
        Experiment::TransportDuality,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::EuclideanThm13 => "euclidean-thm13",
            Experiment::FiniteBracket => "finite-bracket",
            Experiment::HeisenbergCor15 => "heisenberg-cor15",
            Experiment::EuclideanLemma31 => "euclidean-lemma31",
            Experiment::BgCounterexample => "bg-counterexample",
            Experiment::BgModels => "bg-models",
            Experiment::GaussianSmoke => "gaussian-smoke",
            Experiment::Liouville => "liouville",
            Experiment::ModelFunctions => "model-functions",
            Experiment::GraphClosedForms => "graph-closed-forms",
            Experiment::TransportDuality => "transport-duality",
        }
    }

    /// Tolerance names the experiment accepts, with their defaults.
    pub fn tolerances(self) -> &'static [(&'static str, f64)] {
        match self {
            Experiment::EuclideanThm13 => &[("slack", 0.5)],
            Experiment::FiniteBracket => &[("bracket", spectral::BRACKET_TOL), ("residual", spectral::RESIDUAL_TOL)],
            Experiment::HeisenbergCor15 => &[("slack", 1.0)],
            Experiment::EuclideanLemma31 => &[("slack", 0.02)],
            Experiment::BgCounterexample => &[("slack", 0.0)],
            Experiment::BgModels => &[],
            Experiment::GaussianSmoke => &[("slack", 0.25)],
            Experiment::Liouville => &[],
            Experiment::ModelFunctions => &[("quadrature", 1e-10)],
            Experiment::GraphClosedForms => &[("closed_form", 1e-12)],
            Experiment::TransportDuality => &[("gap", 1e-8)],
        }
    }

    pub fn run(self, options: &ExperimentOptions) -> Result<ExperimentReport> {
        let tol = options.resolve(self)?;
        let mut report = ExperimentReport::new(self, options.seed, &tol);
        let seed = options.seed;
        match self {
            Experiment::EuclideanThm13 => euclidean_thm13(&mut report, seed, tol["slack"])?,
            Experiment::FiniteBracket => finite_bracket(&mut report, seed, tol["bracket"], tol["residual"])?,
            Experiment::HeisenbergCor15 => heisenberg_cor15(&mut report, seed, tol["slack"])?,
            Experiment::EuclideanLemma31 => euclidean_lemma31(&mut report, tol["slack"])?,
            Experiment::BgCounterexample => bg_counterexample(&mut report, tol["slack"])?,
            Experiment::BgModels => bg_models(&mut report, seed)?,
            Experiment::GaussianSmoke => gaussian_smoke(&mut report, seed, tol["slack"])?,
            Experiment::Liouville => liouville(&mut report, seed)?,
            Experiment::ModelFunctions => model_functions(&mut report, tol["quadrature"])?,
            Experiment::GraphClosedForms => graph_closed_forms(&mut report, tol["closed_form"])?,
            Experiment::TransportDuality => transport_duality(&mut report, seed, tol["gap"])?,
        }
        report.passed = report.checks.iter().all(|c| c.passed);
        Ok(report)
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| Error::UnknownExperiment(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentOptions {
    pub seed: u64,
    /// Overrides for the experiment's named tolerances.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { seed: 1, tolerances: BTreeMap::new() }
    }
}

impl ExperimentOptions {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    fn resolve(&self, experiment: Experiment) -> Result<BTreeMap<&'static str, f64>> {
        let known = experiment.tolerances();
        for (name, value) in &self.tolerances {
            if !known.iter().any(|(k, _)| k == name) {
                let names: Vec<&str> = known.iter().map(|(k, _)| *k).collect();
                return Err(Error::InvalidParameter {
                    name: "tol",
                    reason: format!("{experiment} has no tolerance `{name}` (known: {names:?})"),
                });
            }
            if !(value.is_finite() && *value >= 0.0) {
                return Err(Error::InvalidParameter { name: "tol", reason: format!("{name} = {value} is not >= 0") });
            }
        }
        Ok(known.iter().map(|&(k, d)| (k, self.tolerances.get(k).copied().unwrap_or(d))).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// `computed >= bound - slack`.
    AtLeast,
    /// `computed <= bound + slack`.
    AtMost,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub direction: Direction,
    pub bound: f64,
    pub computed: f64,
    pub slack: f64,
    /// Distance from the slackened bound, positive when passing.
    pub margin: f64,
    pub passed: bool,
}

impl Check {
    pub fn at_least(name: impl Into<String>, computed: f64, bound: f64, slack: f64) -> Self {
        let margin = computed - (bound - slack);
        Self { name: name.into(), direction: Direction::AtLeast, bound, computed, slack, margin, passed: margin >= 0.0 }
    }

    pub fn at_most(name: impl Into<String>, computed: f64, bound: f64, slack: f64) -> Self {
        let margin = bound + slack - computed;
        Self { name: name.into(), direction: Direction::AtMost, bound, computed, slack, margin, passed: margin >= 0.0 }
    }

    /// Passes iff `count` is zero.
    pub fn none(name: impl Into<String>, count: usize) -> Self {
        Self::at_most(name, count as f64, 0.0, 0.0)
    }

    /// Passes iff `count` is positive.
    pub fn some(name: impl Into<String>, count: usize) -> Self {
        Self::at_least(name, count as f64, 1.0, 0.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub experiment: Experiment,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    /// Intermediate quantities, keyed by stage.
    pub details: BTreeMap<String, Value>,
    pub passed: bool,
}

impl ExperimentReport {
    fn new(experiment: Experiment, seed: u64, tol: &BTreeMap<&'static str, f64>) -> Self {
        Self {
            experiment,
            seed,
            tolerances: tol.iter().map(|(k, v)| (k.to_string(), *v)).collect(),
            checks: Vec::new(),
            details: BTreeMap::new(),
            passed: false,
        }
    }

    fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    fn detail(&mut self, key: &str, value: Value) {
        self.details.insert(key.to_string(), value);
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

fn curvature_summary(report: &CurvatureReport, space: &FiniteMetricMeasureSpace) -> Value {
    let (x, y) = report.witness;
    json!({
        "pairs": report.pairs.len(),
        "kappa_inf": report.kappa_inf,
        "witness": [space.labels()[x], space.labels()[y]],
        "witness_distance": space.d(x, y),
        "near_radius": report.near_radius,
        "near_kappa_inf": report.near_kappa_inf,
    })
}

fn euclidean_thm13(report: &mut ExperimentReport, seed: u64, slack: f64) -> Result<()> {
    let (side, spacing, r, k, n) = (50, 0.02, 0.3, 0.0, 2.0);
    let grid = samplers::euclidean_grid(side, spacing)?;
    let kernel = r_step_walk(&grid, r)?;
    // every lattice neighbour pair (diagonals included) plus a random sample
    let near = 1.5 * spacing;
    let curv = kappa_sampled(&grid, &kernel, PairSampling::new(40, seed).with_near_radius(near))?;
    let bound = model::theorem1_bound(k, n, r)?;
    report.detail(
        "space",
        json!({ "generator": "euclidean_grid", "side_count": side, "spacing": spacing, "points": grid.len() }),
    );
    report.detail("model", json!({ "K": k, "N": n, "r": r, "bound": bound }));
    report.detail("curvature", curvature_summary(&curv, &grid));
    report.push(Check::at_least("kappa_inf", curv.kappa_inf, bound, slack));
    Ok(())
}

fn heisenberg_cor15(report: &mut ExperimentReport, seed: u64, slack: f64) -> Result<()> {
    let (count, box_size, k, n) = (800, 1.0, 0.0, 5.0);
    let space = samplers::heisenberg_sample(count, box_size, seed, HeisenbergMetric::CarnotCaratheodory)?;
    let validation = validate_space(&space, TriangleCheck::Always);
    let diameter = space.diameter();
    let r = diameter / 3.0;
    let kernel = r_step_walk(&space, r)?;
    let near = r / 3.0;
    let curv = kappa_sampled(&space, &kernel, PairSampling::new(200, seed).with_near_radius(near))?;
    let bound = model::theorem1_bound(k, n, r)?;
    report.detail(
        "space",
        json!({
            "generator": "heisenberg_sample",
            "count": count,
            "box": box_size,
            "metric": "carnot_caratheodory",
            "diameter": diameter,
            "min_separation": space.min_separation(),
        }),
    );
    report.detail("model", json!({ "K": k, "N": n, "r": r, "bound": bound }));
    report.detail("curvature", curvature_summary(&curv, &space));
    report.push(Check::none("metric_axiom_violations", validation.violations.len()));
    report.push(Check::at_least("kappa_inf", curv.kappa_inf, bound, slack));
    Ok(())
}

fn euclidean_lemma31(report: &mut ExperimentReport, slack: f64) -> Result<()> {
    let (side, spacing, r, k, n) = (50, 0.02, 0.3, 0.0, 2.0);
    let grid = samplers::euclidean_grid(side, spacing)?;
    let npts = grid.len();
    let pairs: Vec<(usize, usize)> =
        (0..npts).flat_map(|x| (0..npts).map(move |y| (x, y))).filter(|&(x, y)| x != y && grid.d(x, y) < 0.5 * r).collect();
    let lemma = model::lemma31_check(&grid, k, n, r, &pairs, Some(slack))?;
    let worst = lemma.pairs.iter().min_by(|a, b| a.margin.total_cmp(&b.margin));
    report.detail("model", json!({ "K": k, "N": n, "r": r }));
    report.detail(
        "lemma",
        json!({
            "ordered_pairs": pairs.len(),
            "checked": lemma.pairs.len(),
            "skipped": lemma.skipped,
            "strict_violations": lemma.strict_violations,
            "worst": worst,
        }),
    );
    report.push(Check::none("violations", lemma.violations.len()));
    report.push(Check::at_least("worst_margin", lemma.worst_margin, 0.0, 0.0));
    Ok(())
}

fn bg_counterexample(report: &mut ExperimentReport, slack: f64) -> Result<()> {
    let space = FiniteMetricMeasureSpace::new(
        default_labels(2),
        DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        vec![1.0, 100.0],
    )?;
    let bg = model::check_bishop_gromov(&space, 0.0, 2.0, &BgSampling::Triples(vec![(0, 0.5, 1.5)]), Some(slack))?;
    report.detail("bishop_gromov", serde_json::to_value(&bg)?);
    // the checker itself is under test: it must flag this space
    report.push(Check::some("violations_reported", bg.violations.len()));
    Ok(())
}

fn bg_models(report: &mut ExperimentReport, seed: u64) -> Result<()> {
    let sampling = BgSampling::Budget { centers: 60, radius_pairs: 20, seed };
    let cases: [(&str, FiniteMetricMeasureSpace, f64, f64); 3] = [
        ("euclidean_grid", samplers::euclidean_grid(50, 0.02)?, 0.0, 2.0),
        ("sphere_sample", samplers::sphere_sample(2000, seed)?, 1.0, 2.0),
        ("hyperbolic_sample", samplers::hyperbolic_sample(2000, 2.0, seed)?, -1.0, 2.0),
    ];
    for (name, space, k, n) in &cases {
        let bg = model::check_bishop_gromov(space, *k, *n, &sampling, None)?;
        report.detail(
            name,
            json!({
                "K": k,
                "N": n,
                "slack": bg.slack,
                "checked": bg.checked,
                "unresolved": bg.unresolved,
                "strict_violations": bg.strict_violations,
                "worst": bg.worst,
            }),
        );
        report.push(Check::some(format!("{name}.checked"), bg.checked));
        report.push(Check::none(format!("{name}.violations"), bg.violations.len()));
    }
    Ok(())
}

fn gaussian_smoke(report: &mut ExperimentReport, seed: u64, slack: f64) -> Result<()> {
    let (side, spacing, t) = (40, 0.05, 0.01);
    let grid = samplers::euclidean_grid(side, spacing)?;
    let kernel = gaussian_walk(&grid, t)?;
    let sampling = PairSampling::new(30, seed).with_near_radius(1.5 * spacing).with_near_limit(120);
    let curv = kappa_sampled(&grid, &kernel, sampling)?;
    let bound = model::heat_bound(0.0, t);
    report.detail("space", json!({ "generator": "euclidean_grid", "side_count": side, "spacing": spacing }));
    report.detail("model", json!({ "K": 0.0, "t": t, "bound": bound }));
    report.detail("curvature", curvature_summary(&curv, &grid));
    report.push(Check::at_least("kappa_inf", curv.kappa_inf, bound, slack));
    Ok(())
}

/// A random valid space with `n` points: Euclidean points with random
/// weights, or a random connected weighted graph.
pub fn random_space(rng: &mut impl Rng, n: usize) -> Result<FiniteMetricMeasureSpace> {
    let measure: Vec<f64> = (0..n).map(|_| rng.random_range(0.5..2.0)).collect();
    if rng.random_bool(0.5) {
        let dim = rng.random_range(1..=3);
        let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
        FiniteMetricMeasureSpace::from_fn(default_labels(n), measure, |i, j| {
            pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
        })
    } else {
        let mut d = DMatrix::from_element(n, n, f64::INFINITY);
        for i in 0..n {
            d[(i, i)] = 0.0;
        }
        // random spanning tree, then extra chords
        for i in 1..n {
            let j = rng.random_range(0..i);
            let w = rng.random_range(0.5..2.0);
            d[(i, j)] = w;
            d[(j, i)] = w;
        }
        for _ in 0..n {
            let (i, j) = (rng.random_range(0..n), rng.random_range(0..n));
            if i != j {
                let w: f64 = rng.random_range(0.5..2.0);
                d[(i, j)] = d[(i, j)].min(w);
                d[(j, i)] = d[(i, j)];
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = d[(i, k)] + d[(k, j)];
                    if via < d[(i, j)] {
                        d[(i, j)] = via;
                    }
                }
            }
        }
        FiniteMetricMeasureSpace::new(default_labels(n), d, measure)
    }
}

/// A random row-stochastic kernel on `space`: dense, sparse, r-step,
/// Gaussian or lazy nearest-neighbour.
pub fn random_kernel(rng: &mut impl Rng, space: &FiniteMetricMeasureSpace) -> Result<RandomWalkKernel> {
    let n = space.len();
    let normalize = |row: Vec<f64>| {
        let s: f64 = row.iter().sum();
        row.into_iter().map(|v| v / s).collect::<Vec<f64>>()
    };
    match rng.random_range(0..5) {
        0 => {
            let rows = (0..n).map(|_| normalize((0..n).map(|_| rng.random::<f64>().powi(3) + 1e-3).collect())).collect();
            RandomWalkKernel::from_rows(rows, KernelKind::Custom)
        }
        1 => {
            let rows = (0..n)
                .map(|_| {
                    let support = rng.random_range(1..=n);
                    let mut row = vec![0.0; n];
                    for k in rand::seq::index::sample(rng, n, support) {
                        row[k] = rng.random_range(0.1..1.0);
                    }
                    normalize(row)
                })
                .collect();
            RandomWalkKernel::from_rows(rows, KernelKind::Custom)
        }
        2 => {
            let r = rng.random_range(0.05..1.2) * space.diameter();
            r_step_walk(space, r)
        }
        3 => {
            let diam = space.diameter();
            gaussian_walk(space, rng.random_range(0.01..1.0) * diam * diam)
        }
        _ => {
            let alpha = rng.random_range(0.0..1.0);
            let nu = neighbor_uniform_walk(space);
            let rows = (0..n)
                .map(|x| (0..n).map(|y| (1.0 - alpha) * nu.row(x)[y] + if x == y { alpha } else { 0.0 }).collect())
                .collect();
            RandomWalkKernel::from_rows(rows, KernelKind::Custom)
        }
    }
}

/// One seeded random instance: a space with `2..=15` points and a kernel.
pub fn random_instance(seed: u64, index: u64) -> Result<(FiniteMetricMeasureSpace, RandomWalkKernel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    let n = rng.random_range(2..=15);
    let space = random_space(&mut rng, n)?;
    let kernel = random_kernel(&mut rng, &space)?;
    Ok((space, kernel))
}

const RANDOM_KERNELS: u64 = 200;

struct InstanceOutcome {
    kappa_inf: f64,
    valid: bool,
    verdict: spectral::BracketVerdict,
    max_residual_ratio: f64,
    liouville: spectral::LiouvilleVerdict,
}

fn evaluate_instance(
    space: &FiniteMetricMeasureSpace,
    kernel: &RandomWalkKernel,
    bracket_tol: f64,
    residual_tol: f64,
) -> Result<InstanceOutcome> {
    let valid = validate_space(space, TriangleCheck::Always).is_valid();
    let kappa_inf = kappa_all_pairs(space, kernel)?.kappa_inf;
    let op = laplacian(kernel);
    let spec = spectral::spectrum(&op, true)?;
    let verdict = check_bracket(&spec, kappa_inf.min(1.0), bracket_tol)?;
    let max_residual_ratio = spec
        .residuals
        .as_deref()
        .unwrap_or_default()
        .iter()
        .fold(0.0f64, |m, &r| m.max(r / (residual_tol * spec.norm.max(f64::MIN_POSITIVE))));
    Ok(InstanceOutcome { kappa_inf, valid, verdict, max_residual_ratio, liouville: liouville_check(&op, kappa_inf) })
}

fn random_outcomes(seed: u64, bracket_tol: f64, residual_tol: f64) -> Result<Vec<InstanceOutcome>> {
    (0..RANDOM_KERNELS)
        .into_par_iter()
        .map(|i| {
            let (space, kernel) = random_instance(seed, i)?;
            evaluate_instance(&space, &kernel, bracket_tol, residual_tol)
        })
        .collect()
}

fn finite_bracket(report: &mut ExperimentReport, seed: u64, tol: f64, residual_tol: f64) -> Result<()> {
    let outcomes = random_outcomes(seed, tol, residual_tol)?;
    let invalid = outcomes.iter().filter(|o| !o.valid).count();
    let violations: usize = outcomes.iter().map(|o| o.verdict.violations.len()).sum();
    let envelope: usize = outcomes.iter().map(|o| o.verdict.envelope_violations.len()).sum();
    let checked: usize = outcomes.iter().map(|o| o.verdict.checked.len()).sum();
    let residual = outcomes.iter().map(|o| o.max_residual_ratio).fold(0.0, f64::max);
    let worst = outcomes
        .iter()
        .flat_map(|o| {
            let (lo, hi) = o.verdict.bracket;
            o.verdict.checked.iter().map(move |&l| (l - lo).min(hi - l))
        })
        .fold(f64::INFINITY, f64::min);
    let disk = outcomes.iter().map(|o| o.verdict.disk_excess).fold(f64::NEG_INFINITY, f64::max);
    report.detail(
        "spectrum",
        json!({
            "kernels": outcomes.len(),
            "eigenvalues_checked": checked,
            "positive_kappa": outcomes.iter().filter(|o| o.kappa_inf > 0.0).count(),
            "min_bracket_margin": worst,
            "max_disk_excess": disk,
        }),
    );
    report.push(Check::none("invalid_spaces", invalid));
    report.push(Check::none("bracket_violations", violations));
    report.push(Check::none("envelope_violations", envelope));
    report.push(Check::at_most("max_residual_ratio", residual, 1.0, 0.0));
    Ok(())
}

fn liouville(report: &mut ExperimentReport, seed: u64) -> Result<()> {
    let mut fixtures: Vec<(String, FiniteMetricMeasureSpace, RandomWalkKernel)> = Vec::new();
    for n in 3..=10 {
        let s = samplers::complete_graph(n)?;
        let k = neighbor_uniform_walk(&s);
        fixtures.push((format!("complete_graph({n})"), s, k));
    }
    for n in [5, 9] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ n as u64);
        let s = random_space(&mut rng, n)?;
        let k = constant_walk(&s);
        fixtures.push((format!("constant({n})"), s, k));
    }
    let mut outcomes = random_outcomes(seed, spectral::BRACKET_TOL, 1e-8)?;
    let random_count = outcomes.len();
    for (_, s, k) in &fixtures {
        outcomes.push(evaluate_instance(s, k, spectral::BRACKET_TOL, 1e-8)?);
    }
    let applicable: Vec<&InstanceOutcome> = outcomes.iter().filter(|o| o.liouville.applicable).collect();
    let failures = applicable.iter().filter(|o| o.liouville.holds == Some(false)).count();
    let fixture_dims: BTreeMap<&str, usize> = fixtures
        .iter()
        .zip(&outcomes[random_count..])
        .map(|((name, _, _), o)| (name.as_str(), o.liouville.kernel_dimension))
        .collect();
    report.detail(
        "liouville",
        json!({
            "random_kernels": random_count,
            "fixtures": fixture_dims,
            "applicable": applicable.len(),
        }),
    );
    report.push(Check::some("applicable_kernels", applicable.len()));
    report.push(Check::none("harmonic_dimension_above_one", failures));
    Ok(())
}

fn model_functions(report: &mut ExperimentReport, tol: f64) -> Result<()> {
    let mut exact_misses = 0;
    for n in [1.5, 2.0, 3.0, 5.0, 10.0] {
        for r in [0.1, 1.0, 10.0] {
            if model::theorem1_bound(0.0, n, r)? != 1.0 - 2.0 * n {
                exact_misses += 1;
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 1..=50 {
        let r = std::f64::consts::PI * i as f64 / 51.0;
        let err = (model::f_quadrature(1.0, 2.0, r)? - (1.0 - r.cos())).abs();
        worst = worst.max(err);
    }
    report.detail("flat_bound", json!({ "N": [1.5, 2.0, 3.0, 5.0, 10.0], "r": [0.1, 1.0, 10.0] }));
    report.push(Check::none("flat_bound_inexact", exact_misses));
    report.push(Check::at_most("quadrature_error", worst, 0.0, tol));
    Ok(())
}

fn graph_closed_forms(report: &mut ExperimentReport, tol: f64) -> Result<()> {
    let mut complete_err = 0.0f64;
    for n in 3..=10 {
        let s = samplers::complete_graph(n)?;
        let expected = (n as f64 - 2.0) / (n as f64 - 1.0);
        let curv = kappa_all_pairs(&s, &neighbor_uniform_walk(&s))?;
        for p in &curv.pairs {
            complete_err = complete_err.max((p.kappa - expected).abs());
        }
    }
    let mut cycle_err = 0.0f64;
    for n in 5..=12 {
        let s = samplers::cycle_graph(n)?;
        let curv = kappa_all_pairs(&s, &neighbor_uniform_walk(&s))?;
        cycle_err = cycle_err.max(curv.kappa_inf.abs());
    }
    report.detail("walk", json!("neighbor_uniform"));
    report.push(Check::at_most("complete_graph_error", complete_err, 0.0, tol));
    report.push(Check::at_most("cycle_kappa_inf_error", cycle_err, 0.0, tol));
    Ok(())
}

fn transport_duality(report: &mut ExperimentReport, seed: u64, gap_tol: f64) -> Result<()> {
    let outcomes: Vec<(f64, usize, f64)> = (0..100u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(1000 + i);
            let n = rng.random_range(2..=40);
            let space = random_space(&mut rng, n)?;
            let draw = |rng: &mut ChaCha8Rng| {
                let w: Vec<f64> = (0..n).map(|_| if rng.random_bool(0.3) { 0.0 } else { rng.random::<f64>() }).collect();
                let s: f64 = w.iter().sum();
                if s == 0.0 {
                    vec![1.0 / n as f64; n]
                } else {
                    w.into_iter().map(|v| v / s).collect()
                }
            };
            let (mu, nu) = (draw(&mut rng), draw(&mut rng));
            let res = w1_exact(&mu, &nu, space.dist())?;
            let marg = validate_coupling(&res.coupling, MARGINAL_TOL).len();
            let mut lip = 0.0f64;
            for a in 0..n {
                for b in 0..n {
                    lip = lip.max(res.potential[a] - res.potential[b] - space.d(a, b));
                }
            }
            Ok((res.gap.abs(), marg, lip))
        })
        .collect::<Result<_>>()?;
    let gap = outcomes.iter().map(|o| o.0).fold(0.0, f64::max);
    let marg = outcomes.iter().map(|o| o.1).sum();
    let lip = outcomes.iter().map(|o| o.2).fold(0.0, f64::max);
    report.detail("instances", json!({ "count": outcomes.len(), "max_points": 40 }));
    report.push(Check::at_most("duality_gap", gap, 0.0, gap_tol));
    report.push(Check::none("marginal_violations", marg));
    report.push(Check::at_most("lipschitz_excess", lip, 0.0, LIPSCHITZ_TOL));
    Ok(())
}
