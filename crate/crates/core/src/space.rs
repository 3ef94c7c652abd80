//! Finite metric measure spaces, open balls and random-walk kernels.
//!
//! A [`FiniteMetricMeasureSpace`] is a dense distance matrix together with a
//! strictly positive weight per point. Kernels are row-stochastic matrices
//! whose row `x` is the probability measure `m_x`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute tolerance for symmetry, stochasticity and triangle checks.
pub const AXIOM_TOL: f64 = 1e-12;

/// Above this size the O(n^3) triangle check only runs when asked for.
pub const TRIANGLE_CHECK_AUTO_LIMIT: usize = 500;

#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMetricMeasureSpace {
    labels: Vec<String>,
    dist: DMatrix<f64>,
    measure: Vec<f64>,
}

impl FiniteMetricMeasureSpace {
    /// Builds a space after checking shapes only. Metric axioms are left to
    /// [`validate_space`], which reports instead of failing.
    pub fn new(labels: Vec<String>, dist: DMatrix<f64>, measure: Vec<f64>) -> Result<Self> {
        let n = measure.len();
        if n == 0 {
            return Err(Error::ShapeMismatch("a space needs at least one point".into()));
        }
        if dist.nrows() != n || dist.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "distance matrix is {}x{} but there are {} weights",
                dist.nrows(),
                dist.ncols(),
                n
            )));
        }
        if labels.len() != n {
            return Err(Error::ShapeMismatch(format!(
                "{} labels for {} points",
                labels.len(),
                n
            )));
        }
        Ok(Self { labels, dist, measure })
    }

    /// Space with labels `0..n` and unit weights.
    pub fn with_unit_weights(dist: DMatrix<f64>) -> Result<Self> {
        let n = dist.nrows();
        Self::new(default_labels(n), dist, vec![1.0; n])
    }

    /// Builds the distance matrix from a symmetric distance function.
    pub fn from_fn<F>(labels: Vec<String>, measure: Vec<f64>, mut distance: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> f64,
    {
        let n = measure.len();
        let mut dist = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in (i + 1)..n {
                let d = distance(i, j);
                dist[(i, j)] = d;
                dist[(j, i)] = d;
            }
        }
        Self::new(labels, dist, measure)
    }

    pub fn len(&self) -> usize {
        self.measure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measure.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn dist(&self) -> &DMatrix<f64> {
        &self.dist
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[(i, j)]
    }

    pub fn measure(&self) -> &[f64] {
        &self.measure
    }

    pub fn diameter(&self) -> f64 {
        self.dist.iter().cloned().fold(0.0, f64::max)
    }

    /// Smallest positive off-diagonal distance.
    pub fn min_separation(&self) -> f64 {
        let n = self.len();
        let mut best = f64::INFINITY;
        for j in 0..n {
            for i in 0..j {
                let d = self.d(i, j);
                if d > 0.0 && d < best {
                    best = d;
                }
            }
        }
        best
    }

    /// Distance from `x` to its nearest other point.
    pub fn nearest_neighbor_distance(&self, x: usize) -> f64 {
        (0..self.len())
            .filter(|&j| j != x)
            .map(|j| self.d(x, j))
            .fold(f64::INFINITY, f64::min)
    }

    pub(crate) fn check_index(&self, index: usize) -> Result<()> {
        if index < self.len() {
            Ok(())
        } else {
            Err(Error::IndexOutOfRange { index, n: self.len() })
        }
    }

    /// Total weight of a set of points.
    pub fn mass_of(&self, members: &[usize]) -> f64 {
        members.iter().map(|&i| self.measure[i]).sum()
    }
}

pub(crate) fn default_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

/// One violated axiom found by [`validate_space`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    Asymmetry { i: usize, j: usize, dij: f64, dji: f64 },
    NegativeDistance { i: usize, j: usize, value: f64 },
    NonzeroDiagonal { i: usize, value: f64 },
    ZeroSeparation { i: usize, j: usize },
    NonFiniteDistance { i: usize, j: usize },
    /// `d(i,k) > d(i,j) + d(j,k)`.
    Triangle { i: usize, j: usize, k: usize, excess: f64 },
    NonpositiveWeight { i: usize, value: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TriangleCheck {
    /// Run the cubic check when `n <= TRIANGLE_CHECK_AUTO_LIMIT`.
    #[default]
    Auto,
    Always,
    Never,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub triangle_checked: bool,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every violated axiom of a finite metric measure space.
pub fn validate_space(space: &FiniteMetricMeasureSpace, triangle: TriangleCheck) -> ValidationReport {
    let n = space.len();
    let dist = &space.dist;
    let mut violations = Vec::new();

    for i in 0..n {
        let w = space.measure[i];
        if !(w > 0.0) || !w.is_finite() {
            violations.push(Violation::NonpositiveWeight { i, value: w });
        }
        let dii = dist[(i, i)];
        if dii.abs() > AXIOM_TOL {
            violations.push(Violation::NonzeroDiagonal { i, value: dii });
        }
    }
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let dij = dist[(i, j)];
            if !dij.is_finite() {
                violations.push(Violation::NonFiniteDistance { i, j });
                continue;
            }
            if dij < 0.0 {
                violations.push(Violation::NegativeDistance { i, j, value: dij });
            } else if dij == 0.0 && i < j {
                violations.push(Violation::ZeroSeparation { i, j });
            }
            if i < j {
                let dji = dist[(j, i)];
                if (dij - dji).abs() > AXIOM_TOL {
                    violations.push(Violation::Asymmetry { i, j, dij, dji });
                }
            }
        }
    }

    let run_triangle = match triangle {
        TriangleCheck::Always => true,
        TriangleCheck::Never => false,
        TriangleCheck::Auto => n <= TRIANGLE_CHECK_AUTO_LIMIT,
    };
    if run_triangle {
        for i in 0..n {
            for k in 0..n {
                let dik = dist[(i, k)];
                for j in 0..n {
                    let excess = dik - (dist[(i, j)] + dist[(j, k)]);
                    if excess > AXIOM_TOL {
                        violations.push(Violation::Triangle { i, j, k, excess });
                    }
                }
            }
        }
    }

    ValidationReport { violations, triangle_checked: run_triangle }
}

/// The open ball `{ i : d(center, i) < radius }`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallIndex {
    pub center: usize,
    pub radius: f64,
    /// Sorted member indices.
    pub members: Vec<usize>,
}

impl BallIndex {
    pub fn contains(&self, i: usize) -> bool {
        self.members.binary_search(&i).is_ok()
    }

    pub fn mass(&self, space: &FiniteMetricMeasureSpace) -> f64 {
        space.mass_of(&self.members)
    }
}

pub fn open_ball(space: &FiniteMetricMeasureSpace, x: usize, r: f64) -> Result<BallIndex> {
    if !(r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    space.check_index(x)?;
    let members = (0..space.len()).filter(|&i| space.d(x, i) < r).collect();
    Ok(BallIndex { center: x, radius: r, members })
}

/// How a kernel was built. Curvature sampling uses the `r` of an r-step walk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum KernelKind {
    RStep { r: f64 },
    Gaussian { t: f64 },
    Delta,
    NeighborUniform,
    Custom,
}

impl KernelKind {
    pub fn radius(&self) -> Option<f64> {
        match *self {
            KernelKind::RStep { r } => Some(r),
            _ => None,
        }
    }
}

/// Row-stochastic transition weights; row `x` is `m_x`.
#[derive(Debug, Clone, PartialEq)]
pub struct RandomWalkKernel {
    n: usize,
    rows: Vec<f64>,
    kind: KernelKind,
}

impl RandomWalkKernel {
    /// Wraps explicit rows, rejecting negative entries and rows that do not
    /// sum to one.
    pub fn from_rows(rows: Vec<Vec<f64>>, kind: KernelKind) -> Result<Self> {
        let n = rows.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != n {
                return Err(Error::ShapeMismatch(format!(
                    "kernel row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            flat.extend_from_slice(row);
        }
        let kernel = Self { n, rows: flat, kind };
        kernel.check_stochastic()?;
        Ok(kernel)
    }

    fn check_stochastic(&self) -> Result<()> {
        for i in 0..self.n {
            let row = self.row(i);
            if let Some((j, &v)) = row.iter().enumerate().find(|(_, v)| !(**v >= 0.0)) {
                return Err(Error::NegativeMass { index: i * self.n + j, value: v });
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > AXIOM_TOL * self.n.max(1) as f64 {
                return Err(Error::Numeric(format!("kernel row {i} sums to {s}")));
            }
        }
        Ok(())
    }

    fn from_weights(n: usize, kind: KernelKind, mut weight: impl FnMut(usize, usize) -> f64) -> Self {
        let mut rows = vec![0.0; n * n];
        for x in 0..n {
            let row = &mut rows[x * n..(x + 1) * n];
            for (i, w) in row.iter_mut().enumerate() {
                *w = weight(x, i);
            }
            let total: f64 = row.iter().sum();
            for w in row.iter_mut() {
                *w /= total;
            }
        }
        Self { n, rows, kind }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn kind(&self) -> KernelKind {
        self.kind
    }

    #[inline]
    pub fn row(&self, x: usize) -> &[f64] {
        &self.rows[x * self.n..(x + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.rows.chunks_exact(self.n.max(1))
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.n, self.n, &self.rows)
    }

    pub fn to_nested(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }
}

/// `m_x = measure restricted to B_r(x)`, normalized.
pub fn r_step_walk(space: &FiniteMetricMeasureSpace, r: f64) -> Result<RandomWalkKernel> {
    if !(r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    let measure = space.measure();
    Ok(RandomWalkKernel::from_weights(space.len(), KernelKind::RStep { r }, |x, i| {
        if space.d(x, i) < r {
            measure[i]
        } else {
            0.0
        }
    }))
}

/// Heat-style surrogate: row `x` proportional to `measure[i] * exp(-d(x,i)^2 / 4t)`.
pub fn gaussian_walk(space: &FiniteMetricMeasureSpace, t: f64) -> Result<RandomWalkKernel> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter { name: "t", reason: format!("must be positive, got {t}") });
    }
    let measure = space.measure();
    Ok(RandomWalkKernel::from_weights(space.len(), KernelKind::Gaussian { t }, |x, i| {
        let d = space.d(x, i);
        measure[i] * (-d * d / (4.0 * t)).exp()
    }))
}

/// Identity kernel, `m_x = delta_x`.
pub fn delta_walk(space: &FiniteMetricMeasureSpace) -> RandomWalkKernel {
    RandomWalkKernel::from_weights(space.len(), KernelKind::Delta, |x, i| if x == i { 1.0 } else { 0.0 })
}

/// Uniform on the nearest neighbours of each point (the simple random walk on
/// an unweighted graph metric). Neighbours are the points at the smallest
/// positive distance from `x`, up to a relative tolerance of 1e-9.
pub fn neighbor_uniform_walk(space: &FiniteMetricMeasureSpace) -> RandomWalkKernel {
    let n = space.len();
    if n == 1 {
        return delta_walk(space);
    }
    let nearest: Vec<f64> = (0..n).map(|x| space.nearest_neighbor_distance(x)).collect();
    RandomWalkKernel::from_weights(n, KernelKind::NeighborUniform, |x, i| {
        if i != x && space.d(x, i) <= nearest[x] * (1.0 + 1e-9) {
            1.0
        } else {
            0.0
        }
    })
}

/// Every row equal to the normalized reference measure.
pub fn constant_walk(space: &FiniteMetricMeasureSpace) -> RandomWalkKernel {
    let measure = space.measure();
    RandomWalkKernel::from_weights(space.len(), KernelKind::Custom, |_, i| measure[i])
}
