//! Generators for finite metric measure spaces: model geometries and
//! canonical graphs. Every generator is a pure function of its parameters
//! and seed.

pub mod heisenberg;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{default_labels, FiniteMetricMeasureSpace};

pub use heisenberg::{HeisenbergMetric, HeisenbergPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", content = "params", rename_all = "snake_case")]
pub enum Generator {
    EuclideanGrid {
        side_count: usize,
        spacing: f64,
    },
    EuclideanBallSample {
        count: usize,
        #[serde(default = "default_dim")]
        dim: usize,
        #[serde(default = "one")]
        radius: f64,
    },
    SphereSample {
        count: usize,
    },
    HyperbolicSample {
        count: usize,
        radius: f64,
    },
    HeisenbergSample {
        count: usize,
        #[serde(rename = "box")]
        box_size: f64,
        #[serde(default)]
        metric: HeisenbergMetric,
    },
    CycleGraph {
        n: usize,
    },
    CompleteGraph {
        n: usize,
    },
    HypercubeGraph {
        dim: usize,
    },
    PathGraph {
        n: usize,
    },
}

fn default_dim() -> usize {
    2
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    #[serde(flatten)]
    pub generator: Generator,
    #[serde(default)]
    pub seed: u64,
}

impl GeneratorSpec {
    pub fn new(generator: Generator, seed: u64) -> Self {
        Self { generator, seed }
    }

    pub fn generate(&self) -> Result<FiniteMetricMeasureSpace> {
        let seed = self.seed;
        match self.generator {
            Generator::EuclideanGrid { side_count, spacing } => euclidean_grid(side_count, spacing),
            Generator::EuclideanBallSample { count, dim, radius } => euclidean_ball_sample(count, dim, radius, seed),
            Generator::SphereSample { count } => sphere_sample(count, seed),
            Generator::HyperbolicSample { count, radius } => hyperbolic_sample(count, radius, seed),
            Generator::HeisenbergSample { count, box_size, metric } => {
                heisenberg_sample(count, box_size, seed, metric)
            }
            Generator::CycleGraph { n } => cycle_graph(n),
            Generator::CompleteGraph { n } => complete_graph(n),
            Generator::HypercubeGraph { dim } => hypercube_graph(dim),
            Generator::PathGraph { n } => path_graph(n),
        }
    }
}

fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

/// Dense symmetric distance matrix, rows computed in parallel.
fn pairwise<F>(n: usize, distance: F) -> Result<DMatrix<f64>>
where
    F: Fn(usize, usize) -> Result<f64> + Sync,
{
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| ((i + 1)..n).map(|j| distance(i, j)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let mut dist = DMatrix::zeros(n, n);
    for (i, row) in upper.iter().enumerate() {
        for (k, &d) in row.iter().enumerate() {
            let j = i + 1 + k;
            dist[(i, j)] = d;
            dist[(j, i)] = d;
        }
    }
    Ok(dist)
}

fn uniform_space(labels: Vec<String>, dist: DMatrix<f64>) -> Result<FiniteMetricMeasureSpace> {
    let n = labels.len();
    FiniteMetricMeasureSpace::new(labels, dist, vec![1.0; n])
}

/// Planar points under the Euclidean metric with unit weights.
pub fn euclidean_points(points: &[Vec<f64>]) -> Result<FiniteMetricMeasureSpace> {
    let dist = pairwise(points.len(), |i, j| {
        Ok(points[i].iter().zip(&points[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
    })?;
    uniform_space(default_labels(points.len()), dist)
}

/// `side_count × side_count` square lattice with the given spacing.
pub fn euclidean_grid(side_count: usize, spacing: f64) -> Result<FiniteMetricMeasureSpace> {
    if side_count < 2 {
        return Err(invalid("side_count", "need at least 2"));
    }
    if !(spacing > 0.0) {
        return Err(invalid("spacing", "must be positive"));
    }
    let mut points = Vec::with_capacity(side_count * side_count);
    let mut labels = Vec::with_capacity(side_count * side_count);
    for i in 0..side_count {
        for j in 0..side_count {
            points.push([i as f64 * spacing, j as f64 * spacing]);
            labels.push(format!("{i},{j}"));
        }
    }
    let dist = pairwise(points.len(), |a, b| {
        let (p, q) = (points[a], points[b]);
        Ok((p[0] - q[0]).hypot(p[1] - q[1]))
    })?;
    uniform_space(labels, dist)
}

/// Uniform sample of the Euclidean ball of dimension `dim`.
pub fn euclidean_ball_sample(count: usize, dim: usize, radius: f64, seed: u64) -> Result<FiniteMetricMeasureSpace> {
    if count < 2 || dim == 0 || !(radius > 0.0) {
        return Err(invalid("euclidean_ball_sample", "need count >= 2, dim >= 1 and radius > 0"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let points: Vec<Vec<f64>> = (0..count)
        .map(|_| {
            let g: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: f64 = rng.random();
            let scale = radius * u.powf(1.0 / dim as f64) / norm;
            g.into_iter().map(|v| v * scale).collect()
        })
        .collect();
    euclidean_points(&points)
}

/// Unit 2-sphere points under the great-circle distance.
pub fn sphere_points(points: &[[f64; 3]]) -> Result<FiniteMetricMeasureSpace> {
    let dist = pairwise(points.len(), |i, j| {
        let (a, b) = (points[i], points[j]);
        let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
        let cross = [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]];
        let cn = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt();
        Ok(cn.atan2(dot))
    })?;
    uniform_space(default_labels(points.len()), dist)
}

/// Uniform points on the unit sphere from normalized Gaussian vectors.
pub fn sphere_sample(count: usize, seed: u64) -> Result<FiniteMetricMeasureSpace> {
    if count < 2 {
        return Err(invalid("count", "need at least 2"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    while points.len() < count {
        let g: [f64; 3] = [rng.sample(StandardNormal), rng.sample(StandardNormal), rng.sample(StandardNormal)];
        let norm = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
        if norm > 1e-12 {
            points.push([g[0] / norm, g[1] / norm, g[2] / norm]);
        }
    }
    sphere_points(&points)
}

/// Points of the Poincaré disc under the hyperbolic distance.
pub fn hyperbolic_points(points: &[[f64; 2]]) -> Result<FiniteMetricMeasureSpace> {
    if let Some(p) = points.iter().find(|p| p[0].hypot(p[1]) >= 1.0) {
        return Err(invalid("points", format!("({}, {}) is outside the unit disc", p[0], p[1])));
    }
    let dist = pairwise(points.len(), |i, j| {
        let (p, q) = (points[i], points[j]);
        let diff = (p[0] - q[0]).hypot(p[1] - q[1]);
        let denom = ((1.0 - p[0] * p[0] - p[1] * p[1]) * (1.0 - q[0] * q[0] - q[1] * q[1])).sqrt();
        Ok(2.0 * (diff / denom).asinh())
    })?;
    uniform_space(default_labels(points.len()), dist)
}

/// Uniform sample of the hyperbolic disc of radius `radius` (curvature -1).
/// The hyperbolic radius has density proportional to `sinh s`.
pub fn hyperbolic_sample(count: usize, radius: f64, seed: u64) -> Result<FiniteMetricMeasureSpace> {
    if count < 2 {
        return Err(invalid("count", "need at least 2"));
    }
    if !(radius > 0.0) {
        return Err(invalid("radius", "must be positive"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cosh_r = radius.cosh();
    let points: Vec<[f64; 2]> = (0..count)
        .map(|_| {
            let u: f64 = rng.random();
            let phi: f64 = rng.random::<f64>() * std::f64::consts::TAU;
            let s = (1.0 + u * (cosh_r - 1.0)).acosh();
            let e = (0.5 * s).tanh();
            [e * phi.cos(), e * phi.sin()]
        })
        .collect();
    hyperbolic_points(&points)
}

pub fn heisenberg_points(points: &[HeisenbergPoint], metric: HeisenbergMetric) -> Result<FiniteMetricMeasureSpace> {
    let dist = pairwise(points.len(), |i, j| {
        heisenberg::distance(&points[i], &points[j], metric).map_err(|e| {
            Error::Numeric(format!("CC distance failed for pair ({i}, {j}): {e}"))
        })
    })?;
    uniform_space(default_labels(points.len()), dist)
}

/// Haar-uniform points in `[-b, b]² × [-b², b²]`; the box is mapped to
/// itself by the dilations `(x, y, t) -> (λx, λy, λ²t)`.
pub fn heisenberg_sample_points(count: usize, box_size: f64, seed: u64) -> Vec<HeisenbergPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b = box_size;
    (0..count)
        .map(|_| {
            let (u, v, w): (f64, f64, f64) = (rng.random(), rng.random(), rng.random());
            HeisenbergPoint::new(b * (2.0 * u - 1.0), b * (2.0 * v - 1.0), b * b * (2.0 * w - 1.0))
        })
        .collect()
}

pub fn heisenberg_sample(
    count: usize,
    box_size: f64,
    seed: u64,
    metric: HeisenbergMetric,
) -> Result<FiniteMetricMeasureSpace> {
    if count < 2 {
        return Err(invalid("count", "need at least 2"));
    }
    if !(box_size > 0.0) {
        return Err(invalid("box", "must be positive"));
    }
    heisenberg_points(&heisenberg_sample_points(count, box_size, seed), metric)
}

pub fn cycle_graph(n: usize) -> Result<FiniteMetricMeasureSpace> {
    if n < 3 {
        return Err(invalid("n", "a cycle needs at least 3 vertices"));
    }
    let dist = DMatrix::from_fn(n, n, |i, j| {
        let d = i.abs_diff(j);
        d.min(n - d) as f64
    });
    uniform_space(default_labels(n), dist)
}

pub fn complete_graph(n: usize) -> Result<FiniteMetricMeasureSpace> {
    if n < 3 {
        return Err(invalid("n", "need at least 3 vertices"));
    }
    let dist = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { 1.0 });
    uniform_space(default_labels(n), dist)
}

/// Vertices of `{0,1}^dim` under the Hamming distance.
pub fn hypercube_graph(dim: usize) -> Result<FiniteMetricMeasureSpace> {
    if dim == 0 || dim > 16 {
        return Err(invalid("dim", "must be between 1 and 16"));
    }
    let n = 1usize << dim;
    let dist = DMatrix::from_fn(n, n, |i, j| (i ^ j).count_ones() as f64);
    let labels = (0..n).map(|i| format!("{i:0dim$b}")).collect();
    uniform_space(labels, dist)
}

pub fn path_graph(n: usize) -> Result<FiniteMetricMeasureSpace> {
    if n < 2 {
        return Err(invalid("n", "need at least 2 vertices"));
    }
    let dist = DMatrix::from_fn(n, n, |i, j| i.abs_diff(j) as f64);
    uniform_space(default_labels(n), dist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::{validate_space, TriangleCheck};
    use std::f64::consts::PI;

    #[test]
    fn graph_metrics() {
        assert_eq!(cycle_graph(6).unwrap().d(0, 3), 3.0);
        let k4 = complete_graph(4).unwrap();
        assert!((0..4).all(|i| (0..4).all(|j| k4.d(i, j) == if i == j { 0.0 } else { 1.0 })));
        let q3 = hypercube_graph(3).unwrap();
        assert_eq!(q3.d(0b000, 0b101), 2.0);
        assert_eq!(q3.diameter(), 3.0);
        assert_eq!(path_graph(5).unwrap().d(0, 4), 4.0);
        assert!(cycle_graph(2).is_err());
        assert!(path_graph(1).is_err());
    }

    #[test]
    fn grid_shapes() {
        let g = euclidean_grid(2, 1.0).unwrap();
        assert!((g.diameter() - 2f64.sqrt()).abs() < 1e-15);
        let g = euclidean_grid(3, 1.0).unwrap();
        assert_eq!(g.len(), 9);
        assert!(validate_space(&g, TriangleCheck::Always).is_valid());
    }

    #[test]
    fn antipodes_are_pi_apart() {
        let s = sphere_points(&[[0.0, 0.0, 1.0], [0.0, 0.0, -1.0], [1.0, 0.0, 0.0]]).unwrap();
        assert!((s.d(0, 1) - PI).abs() < 1e-15);
        assert!((s.d(0, 2) - PI / 2.0).abs() < 1e-15);
    }

    #[test]
    fn poincare_radius() {
        let s: f64 = 1.7;
        let h = hyperbolic_points(&[[0.0, 0.0], [(0.5 * s).tanh(), 0.0]]).unwrap();
        assert!((h.d(0, 1) - s).abs() < 1e-14);
        assert!(hyperbolic_points(&[[1.0, 0.0]]).is_err());
    }

    #[test]
    fn seeds_are_deterministic() {
        assert_eq!(sphere_sample(50, 3).unwrap(), sphere_sample(50, 3).unwrap());
        assert_ne!(sphere_sample(50, 3).unwrap(), sphere_sample(50, 4).unwrap());
        assert_eq!(hyperbolic_sample(40, 2.0, 9).unwrap(), hyperbolic_sample(40, 2.0, 9).unwrap());
        let a = heisenberg_sample(30, 1.0, 5, HeisenbergMetric::CarnotCaratheodory).unwrap();
        let b = heisenberg_sample(30, 1.0, 5, HeisenbergMetric::CarnotCaratheodory).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn samplers_produce_valid_spaces() {
        for space in [
            sphere_sample(120, 1).unwrap(),
            hyperbolic_sample(120, 2.0, 1).unwrap(),
            euclidean_ball_sample(120, 3, 1.0, 1).unwrap(),
            heisenberg_sample(120, 1.0, 1, HeisenbergMetric::CarnotCaratheodory).unwrap(),
            hypercube_graph(4).unwrap(),
        ] {
            let report = validate_space(&space, TriangleCheck::Always);
            assert!(report.is_valid(), "{:?}", &report.violations[..report.violations.len().min(3)]);
        }
    }

    #[test]
    fn generator_spec_json() {
        let spec: GeneratorSpec =
            serde_json::from_str(r#"{"name":"heisenberg_sample","params":{"count":4,"box":1.0},"seed":7}"#).unwrap();
        assert_eq!(
            spec.generator,
            Generator::HeisenbergSample { count: 4, box_size: 1.0, metric: HeisenbergMetric::CarnotCaratheodory }
        );
        assert_eq!(spec.seed, 7);
        let back: GeneratorSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}
