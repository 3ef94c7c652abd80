//! Coarse Ricci curvature `κ(x,y) = 1 - W1(m_x, m_y) / d(x,y)`.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::{FiniteMetricMeasureSpace, RandomWalkKernel};
use crate::transport::w1_distance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCurvature {
    pub x: usize,
    pub y: usize,
    pub distance: f64,
    pub w1: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureReport {
    /// Sorted by `(x, y)` with `x < y`.
    pub pairs: Vec<PairCurvature>,
    pub kappa_inf: f64,
    pub witness: (usize, usize),
    /// Infimum over pairs closer than `near_radius`, when near pairs were requested.
    pub near_kappa_inf: Option<f64>,
    pub near_radius: Option<f64>,
}

impl CurvatureReport {
    fn from_pairs(pairs: Vec<PairCurvature>, near_radius: Option<f64>) -> Self {
        let (mut kappa_inf, mut witness) = (f64::INFINITY, (0, 0));
        for p in &pairs {
            if p.kappa < kappa_inf {
                kappa_inf = p.kappa;
                witness = (p.x, p.y);
            }
        }
        let near_kappa_inf = near_radius.map(|rad| {
            pairs.iter().filter(|p| p.distance < rad).map(|p| p.kappa).fold(f64::INFINITY, f64::min)
        });
        Self { pairs, kappa_inf, witness, near_kappa_inf, near_radius }
    }
}

fn check_sizes(space: &FiniteMetricMeasureSpace, kernel: &RandomWalkKernel) -> Result<()> {
    if space.len() != kernel.len() {
        return Err(Error::ShapeMismatch(format!(
            "kernel has {} rows for a space of {} points",
            kernel.len(),
            space.len()
        )));
    }
    Ok(())
}

fn pair_curvature(space: &FiniteMetricMeasureSpace, kernel: &RandomWalkKernel, x: usize, y: usize) -> Result<PairCurvature> {
    let distance = space.d(x, y);
    let w1 = w1_distance(kernel.row(x), kernel.row(y), space.dist())?;
    Ok(PairCurvature { x, y, distance, w1, kappa: 1.0 - w1 / distance })
}

pub fn kappa(space: &FiniteMetricMeasureSpace, kernel: &RandomWalkKernel, x: usize, y: usize) -> Result<f64> {
    check_sizes(space, kernel)?;
    space.check_index(x)?;
    space.check_index(y)?;
    if x == y {
        return Err(Error::UndefinedPair(x));
    }
    Ok(pair_curvature(space, kernel, x, y)?.kappa)
}

/// Curvature over an explicit list of pairs, computed in parallel and
/// returned in sorted order.
pub fn kappa_pairs(
    space: &FiniteMetricMeasureSpace,
    kernel: &RandomWalkKernel,
    pairs: &[(usize, usize)],
    near_radius: Option<f64>,
) -> Result<CurvatureReport> {
    check_sizes(space, kernel)?;
    let mut list: Vec<(usize, usize)> = Vec::with_capacity(pairs.len());
    for &(a, b) in pairs {
        space.check_index(a)?;
        space.check_index(b)?;
        if a == b {
            return Err(Error::UndefinedPair(a));
        }
        list.push((a.min(b), a.max(b)));
    }
    list.sort_unstable();
    list.dedup();
    let results: Vec<PairCurvature> = list
        .par_iter()
        .map(|&(x, y)| pair_curvature(space, kernel, x, y))
        .collect::<Result<_>>()?;
    Ok(CurvatureReport::from_pairs(results, near_radius))
}

pub fn kappa_all_pairs(space: &FiniteMetricMeasureSpace, kernel: &RandomWalkKernel) -> Result<CurvatureReport> {
    let n = space.len();
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n", reason: "need at least two points".into() });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| ((x + 1)..n).map(move |y| (x, y))).collect();
    kappa_pairs(space, kernel, &pairs, None)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairSampling {
    pub pair_budget: usize,
    pub seed: u64,
    /// Pairs closer than this are always included. `None` uses `2r` when the
    /// kernel is an r-step walk and no near pairs otherwise.
    pub near_radius: Option<f64>,
    /// Caps the near pairs by a seeded subsample.
    pub near_limit: Option<usize>,
}

impl PairSampling {
    pub fn new(pair_budget: usize, seed: u64) -> Self {
        Self { pair_budget, seed, near_radius: None, near_limit: None }
    }

    pub fn with_near_limit(mut self, limit: usize) -> Self {
        self.near_limit = Some(limit);
        self
    }

    pub fn with_near_radius(mut self, radius: f64) -> Self {
        self.near_radius = Some(radius);
        self
    }
}

/// Index `k` of the unordered pair enumeration `(0,1), (0,2), ..., (1,2), ...`.
fn unrank_pair(n: usize, mut k: usize) -> (usize, usize) {
    let mut x = 0;
    loop {
        let row = n - 1 - x;
        if k < row {
            return (x, x + 1 + k);
        }
        k -= row;
        x += 1;
    }
}

/// Seeded pair sample plus every near pair. `kappa_inf` is an upper estimate
/// of the true infimum.
pub fn kappa_sampled(
    space: &FiniteMetricMeasureSpace,
    kernel: &RandomWalkKernel,
    sampling: PairSampling,
) -> Result<CurvatureReport> {
    let n = space.len();
    if sampling.pair_budget == 0 {
        return Err(Error::InvalidParameter { name: "pair_budget", reason: "must be at least 1".into() });
    }
    if n < 2 {
        return Err(Error::InvalidParameter { name: "n", reason: "need at least two points".into() });
    }
    let total = n * (n - 1) / 2;
    let near_radius = sampling.near_radius.or_else(|| kernel.kind().radius().map(|r| 2.0 * r));

    let mut pairs = Vec::new();
    if sampling.pair_budget >= total {
        pairs.extend((0..n).flat_map(|x| ((x + 1)..n).map(move |y| (x, y))));
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(sampling.seed);
        for k in index::sample(&mut rng, total, sampling.pair_budget).into_iter() {
            pairs.push(unrank_pair(n, k));
        }
        if let Some(rad) = near_radius {
            let mut near = Vec::new();
            for x in 0..n {
                for y in (x + 1)..n {
                    if space.d(x, y) < rad {
                        near.push((x, y));
                    }
                }
            }
            match sampling.near_limit {
                Some(limit) if limit < near.len() => {
                    pairs.extend(index::sample(&mut rng, near.len(), limit).into_iter().map(|k| near[k]));
                }
                _ => pairs.extend(near),
            }
        }
    }
    kappa_pairs(space, kernel, &pairs, near_radius)
}
