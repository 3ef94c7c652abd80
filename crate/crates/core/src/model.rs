//! Model-space comparison functions and the checks built on them.
//!
//! `s_{K,N}` is the warping function of the model space of curvature `K` and
//! dimension `N`, `F(r) = ∫_0^r s_{K,N}(t)^{N-1} dt` is its ball-volume
//! profile, and the curvature lower bound for the r-step walk reads
//! `1 - 2r s_{K,N}(r)^{N-1} / F(r)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::space::FiniteMetricMeasureSpace;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelBoundParams {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    pub r: f64,
}

impl ModelBoundParams {
    pub fn new(k: f64, n: f64, r: f64) -> Result<Self> {
        check_dimension(n)?;
        if !(r > 0.0) {
            return Err(Error::InvalidRadius(r));
        }
        let cap = domain_cap(k, n);
        if r >= cap {
            return Err(Error::Domain { value: r, reason: format!("r must be below the cap {cap}") });
        }
        Ok(Self { k, n, r })
    }

    pub fn domain_cap(&self) -> f64 {
        domain_cap(self.k, self.n)
    }

    pub fn theorem_bound(&self) -> Result<f64> {
        theorem1_bound(self.k, self.n, self.r)
    }
}

fn check_dimension(n: f64) -> Result<()> {
    if n > 1.0 && n.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter { name: "N", reason: format!("must exceed 1, got {n}") })
    }
}

/// `π √((N-1)/max{K,0})`, infinite for `K <= 0`.
pub fn domain_cap(k: f64, n: f64) -> f64 {
    if k > 0.0 {
        PI * ((n - 1.0) / k).sqrt()
    } else {
        f64::INFINITY
    }
}

fn check_argument(k: f64, n: f64, t: f64) -> Result<()> {
    check_dimension(n)?;
    if !(t >= 0.0) {
        return Err(Error::Domain { value: t, reason: "argument must be nonnegative".into() });
    }
    let cap = domain_cap(k, n);
    if t > cap {
        return Err(Error::Domain { value: t, reason: format!("exceeds the cap {cap}") });
    }
    Ok(())
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

fn sinhc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 + x * x / 6.0
    } else {
        x.sinh() / x
    }
}

/// Evaluates `s_{K,N}(t)`, written as `t·sinc` so it stays continuous at `K = 0`.
fn s_unchecked(k: f64, n: f64, t: f64) -> f64 {
    if k == 0.0 {
        return t;
    }
    let x = t * (k.abs() / (n - 1.0)).sqrt();
    if k > 0.0 {
        t * sinc(x)
    } else {
        t * sinhc(x)
    }
}

pub fn s_kn(k: f64, n: f64, t: f64) -> Result<f64> {
    check_argument(k, n, t)?;
    Ok(s_unchecked(k, n, t))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive(f: &impl Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Adaptive Simpson with relative target 1e-10 and absolute floor 1e-14.
pub fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    // coarse pass over 8 panels sets the relative scale
    let panels = 8;
    let h = (b - a) / panels as f64;
    let coarse: f64 = (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            simpson(x0, x1, f(x0), f(0.5 * (x0 + x1)), f(x1))
        })
        .sum();
    let tol = (1e-10 * coarse.abs()).max(1e-14);
    (0..panels)
        .map(|i| {
            let (x0, x1) = (a + i as f64 * h, a + (i + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = simpson(x0, x1, f0, fm, f1);
            adaptive(&f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 48)
        })
        .sum()
}

/// `F(r)` by quadrature, bypassing the closed forms.
pub fn f_quadrature(k: f64, n: f64, r: f64) -> Result<f64> {
    check_argument(k, n, r)?;
    Ok(integrate(|t| s_unchecked(k, n, t).max(0.0).powf(n - 1.0), 0.0, r))
}

fn f_unchecked(k: f64, n: f64, r: f64) -> f64 {
    if k == 0.0 {
        return r.powf(n) / n;
    }
    if n == 2.0 {
        let x = r * k.abs().sqrt();
        let half = (0.5 * x).sin();
        return if k > 0.0 {
            2.0 * half * half / k
        } else {
            let half = (0.5 * x).sinh();
            2.0 * half * half / -k
        };
    }
    integrate(|t| s_unchecked(k, n, t).max(0.0).powf(n - 1.0), 0.0, r)
}

/// `F(r) = ∫_0^r s_{K,N}(t)^{N-1} dt`; closed form when `K = 0` or `N = 2`.
#[allow(non_snake_case)]
pub fn F(k: f64, n: f64, r: f64) -> Result<f64> {
    check_argument(k, n, r)?;
    Ok(f_unchecked(k, n, r))
}

/// `1 - 2r s_{K,N}(r)^{N-1} / F(r)`; exactly `1 - 2N` when `K = 0`.
pub fn theorem1_bound(k: f64, n: f64, r: f64) -> Result<f64> {
    check_dimension(n)?;
    if !(r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    let cap = domain_cap(k, n);
    if r >= cap {
        return Err(Error::Domain { value: r, reason: format!("r must be below the cap {cap}") });
    }
    if k == 0.0 {
        return Ok(1.0 - 2.0 * n);
    }
    let s = s_unchecked(k, n, r);
    Ok(1.0 - 2.0 * r * s.powf(n - 1.0) / f_unchecked(k, n, r))
}

/// Heat-flow bound `1 - exp(-K t)`.
pub fn heat_bound(k: f64, t: f64) -> f64 {
    1.0 - (-k * t).exp()
}

/// Per-center sorted distances with prefix masses, for fast ball measures.
struct BallProfile {
    dists: Vec<f64>,
    prefix: Vec<f64>,
}

impl BallProfile {
    fn new(space: &FiniteMetricMeasureSpace, x: usize) -> Self {
        let mut order: Vec<usize> = (0..space.len()).collect();
        order.sort_by(|&a, &b| space.d(x, a).total_cmp(&space.d(x, b)));
        let dists = order.iter().map(|&i| space.d(x, i)).collect();
        let mut prefix = Vec::with_capacity(order.len() + 1);
        prefix.push(0.0);
        let mut acc = 0.0;
        for &i in &order {
            acc += space.measure()[i];
            prefix.push(acc);
        }
        Self { dists, prefix }
    }

    /// Measure of the open ball of radius `r`.
    fn mass(&self, r: f64) -> f64 {
        self.prefix[self.dists.partition_point(|&d| d < r)]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum BgSampling {
    /// Explicit `(center, r, R)` triples.
    Triples(Vec<(usize, f64, f64)>),
    /// Random centers and radius pairs with `0 < r < R <= min(cap, 1.25 diameter)`.
    Budget { centers: usize, radius_pairs: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BgTriple {
    pub center: usize,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `ν(B_R(x)) / ν(B_r(x))`.
    pub ratio: f64,
    /// `F(R) / F(r)`.
    pub model_ratio: f64,
    /// `F(R + slack) / F(r - slack)`, the ratio allowed after the declared slack.
    pub allowed_ratio: f64,
    /// `allowed_ratio - ratio`; negative means violation.
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BgReport {
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "N")]
    pub n: f64,
    /// Absolute radius allowance (length units).
    pub slack: f64,
    pub checked: usize,
    /// Triples with `r <= slack`, which the slack cannot resolve.
    pub unresolved: usize,
    pub centers_covered: usize,
    /// Triples violating the raw inequality without slack.
    pub strict_violations: usize,
    pub violations: Vec<BgTriple>,
    pub worst: Option<BgTriple>,
}

impl BgReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

fn max_nn_spacing(space: &FiniteMetricMeasureSpace, centers: impl Iterator<Item = usize>) -> f64 {
    centers.map(|x| space.nearest_neighbor_distance(x)).fold(0.0, f64::max)
}

fn clamp_to_cap(x: f64, cap: f64) -> f64 {
    x.min(cap)
}

/// Sampled radii run up to this multiple of the diameter.
const SATURATION: f64 = 1.25;

/// Tests `ν(B_R(x))/ν(B_r(x)) <= F(R)/F(r)` at sampled `(x, r, R)`.
///
/// A finite sample cannot satisfy the continuum inequality exactly, so each
/// triple is judged against `F(R + δ)/F(r - δ)`. With `slack = None`, δ is the
/// largest nearest-neighbour distance among the sampled centers; triples with
/// `r <= δ` are counted as unresolved.
pub fn check_bishop_gromov(
    space: &FiniteMetricMeasureSpace,
    k: f64,
    n: f64,
    sampling: &BgSampling,
    slack: Option<f64>,
) -> Result<BgReport> {
    check_dimension(n)?;
    let cap = domain_cap(k, n);
    let npts = space.len();

    let triples: Vec<(usize, f64, f64)> = match sampling {
        BgSampling::Triples(t) => {
            for &(x, r, big_r) in t {
                space.check_index(x)?;
                if !(r > 0.0 && r < big_r && big_r <= cap) {
                    return Err(Error::InvalidParameter {
                        name: "radii",
                        reason: format!("need 0 < r < R <= {cap}, got r = {r}, R = {big_r}"),
                    });
                }
            }
            t.clone()
        }
        BgSampling::Budget { centers, radius_pairs, seed } => {
            if npts < 2 {
                Vec::new()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let chosen: Vec<usize> = if *centers >= npts {
                    (0..npts).collect()
                } else {
                    rand::seq::index::sample(&mut rng, npts, *centers).into_vec()
                };
                let delta = slack.unwrap_or_else(|| max_nn_spacing(space, chosen.iter().copied()));
                // open balls only reach the farthest points once R passes the diameter
                let rmax = clamp_to_cap(SATURATION * space.diameter(), cap);
                let mut out = Vec::new();
                for &x in &chosen {
                    for _ in 0..*radius_pairs {
                        let (a, b): (f64, f64) = (rng.random(), rng.random());
                        let lo = delta.min(rmax);
                        let r = lo + (rmax - lo) * a.min(b);
                        let big_r = lo + (rmax - lo) * a.max(b);
                        if r > 0.0 && r < big_r {
                            out.push((x, r, big_r));
                        }
                    }
                }
                out
            }
        }
    };

    let mut centers: Vec<usize> = triples.iter().map(|t| t.0).collect();
    centers.sort_unstable();
    centers.dedup();
    let delta = match slack {
        Some(s) => s,
        None if npts < 2 => 0.0,
        None => max_nn_spacing(space, centers.iter().copied()),
    };

    let mut report = BgReport {
        k,
        n,
        slack: delta,
        checked: 0,
        unresolved: 0,
        centers_covered: centers.len(),
        strict_violations: 0,
        violations: Vec::new(),
        worst: None,
    };
    let mut profiles: Vec<Option<BallProfile>> = (0..npts).map(|_| None).collect();
    for &(x, r, big_r) in &triples {
        let profile = profiles[x].get_or_insert_with(|| BallProfile::new(space, x));
        let ratio = profile.mass(big_r) / profile.mass(r);
        let model_ratio = f_unchecked(k, n, big_r) / f_unchecked(k, n, r);
        if ratio > model_ratio * (1.0 + 1e-12) {
            report.strict_violations += 1;
        }
        if r <= delta {
            report.unresolved += 1;
            continue;
        }
        report.checked += 1;
        let allowed_ratio = f_unchecked(k, n, clamp_to_cap(big_r + delta, cap)) / f_unchecked(k, n, r - delta);
        let triple = BgTriple { center: x, r, big_r, ratio, model_ratio, allowed_ratio, margin: allowed_ratio - ratio };
        if triple.margin < -1e-12 * allowed_ratio {
            report.violations.push(triple);
        }
        // margin relative to the allowed ratio, so large and small radii compare
        let rel = triple.margin / allowed_ratio;
        if report.worst.is_none_or(|w| rel < w.margin / w.allowed_ratio) {
            report.worst = Some(triple);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Pair {
    pub x: usize,
    pub y: usize,
    pub distance: f64,
    /// `ν(B_r(x) \ B_r(y)) / ν(B_r(x))`.
    pub lhs: f64,
    /// `1 - F(r - d/2) / F(r + d/2)`.
    pub rhs: f64,
    /// Right side after widening the radii by the slack.
    pub rhs_with_slack: f64,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lemma31Report {
    pub r: f64,
    pub slack: f64,
    pub pairs: Vec<Lemma31Pair>,
    /// Pairs with `d >= r` or `r + d/2` beyond the cap.
    pub skipped: usize,
    pub strict_violations: usize,
    pub violations: Vec<Lemma31Pair>,
    pub worst_margin: f64,
}

impl Lemma31Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the ball-difference estimate for each pair with `d(x,y) < r`.
///
/// The slacked right side is `1 - F(r - d/2 - δ)/F(r + d/2 + δ)`, with δ the
/// largest nearest-neighbour distance among the pairs' points when
/// `slack = None`.
pub fn lemma31_check(
    space: &FiniteMetricMeasureSpace,
    k: f64,
    n: f64,
    r: f64,
    pairs: &[(usize, usize)],
    slack: Option<f64>,
) -> Result<Lemma31Report> {
    check_dimension(n)?;
    if !(r > 0.0) {
        return Err(Error::InvalidRadius(r));
    }
    let cap = domain_cap(k, n);
    for &(x, y) in pairs {
        space.check_index(x)?;
        space.check_index(y)?;
    }
    let delta = slack.unwrap_or_else(|| {
        let mut pts: Vec<usize> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
        pts.sort_unstable();
        pts.dedup();
        if space.len() < 2 {
            0.0
        } else {
            max_nn_spacing(space, pts.into_iter())
        }
    });

    let mut balls: Vec<Option<(Vec<usize>, f64)>> = (0..space.len()).map(|_| None).collect();
    let measure = space.measure();
    let mut report = Lemma31Report {
        r,
        slack: delta,
        pairs: Vec::with_capacity(pairs.len()),
        skipped: 0,
        strict_violations: 0,
        violations: Vec::new(),
        worst_margin: f64::INFINITY,
    };
    for &(x, y) in pairs {
        let d = space.d(x, y);
        if d >= r || r + 0.5 * d > cap {
            report.skipped += 1;
            continue;
        }
        let (members, mass) = balls[x].get_or_insert_with(|| {
            let members: Vec<usize> = (0..space.len()).filter(|&i| space.d(x, i) < r).collect();
            let mass = members.iter().map(|&i| measure[i]).sum();
            (members, mass)
        });
        let outside: f64 = members.iter().filter(|&&i| space.d(y, i) >= r).map(|&i| measure[i]).sum();
        let lhs = outside / *mass;
        let rhs = 1.0 - f_unchecked(k, n, r - 0.5 * d) / f_unchecked(k, n, r + 0.5 * d);
        let inner = r - 0.5 * d - delta;
        let rhs_with_slack = if inner <= 0.0 {
            1.0
        } else {
            1.0 - f_unchecked(k, n, inner) / f_unchecked(k, n, clamp_to_cap(r + 0.5 * d + delta, cap))
        };
        let entry = Lemma31Pair { x, y, distance: d, lhs, rhs, rhs_with_slack, margin: rhs_with_slack - lhs };
        if lhs > rhs + 1e-12 {
            report.strict_violations += 1;
        }
        if entry.margin < -1e-12 {
            report.violations.push(entry);
        }
        report.worst_margin = report.worst_margin.min(entry.margin);
        report.pairs.push(entry);
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::default_labels;
    use nalgebra::DMatrix;

    #[test]
    fn s_branches() {
        assert_eq!(s_kn(0.0, 3.0, 1.7).unwrap(), 1.7);
        assert_eq!(s_kn(1.0, 3.0, 0.0).unwrap(), 0.0);
        for k in [1e-8, -1e-8] {
            assert!((s_kn(k, 3.0, 1.0).unwrap() - 1.0).abs() < 1e-8);
        }
        // K = 1, N = 2 is the unit sphere: s = sin t
        assert!((s_kn(1.0, 2.0, 1.2).unwrap() - 1.2f64.sin()).abs() < 1e-15);
        assert!((s_kn(-1.0, 2.0, 1.2).unwrap() - 1.2f64.sinh()).abs() < 1e-15);
        assert!(matches!(s_kn(1.0, 2.0, 4.0), Err(Error::Domain { .. })));
        assert!(s_kn(1.0, 1.0, 0.5).is_err());
    }

    #[test]
    fn f_closed_forms() {
        assert_eq!(F(0.0, 2.0, 3.0).unwrap(), 4.5);
        assert!((F(0.0, 5.0, 1.0).unwrap() - 0.2).abs() < 1e-16);
        assert!((F(1.0, 2.0, PI / 2.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((f_quadrature(1.0, 2.0, PI / 2.0).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadrature_matches_general_closed_forms() {
        // K < 0, N = 2: cosh(r) - 1
        let q = f_quadrature(-1.0, 2.0, 1.5).unwrap();
        assert!((q - (1.5f64.cosh() - 1.0)).abs() < 1e-10);
        // K = 0 with fractional N
        let q = f_quadrature(0.0, 2.5, 2.0).unwrap();
        assert!((q - 2.0f64.powf(2.5) / 2.5).abs() < 1e-9);
        // N = 3, K = 1: ∫ sin^2(t/√2)·2 dt
        let a = std::f64::consts::SQRT_2;
        let exact = |r: f64| r - a * (2.0 * r / a).sin() / 2.0;
        assert!((f_quadrature(1.0, 3.0, 2.0).unwrap() - exact(2.0)).abs() < 1e-10);
    }

    #[test]
    fn theorem_bound_values() {
        assert_eq!(theorem1_bound(0.0, 2.0, 0.7).unwrap(), -3.0);
        assert_eq!(theorem1_bound(0.0, 5.0, 0.7).unwrap(), -9.0);
        // r -> 0 recovers 1 - 2N for K < 0
        let b = theorem1_bound(-1.0, 2.0, 1e-4).unwrap();
        assert!((b + 3.0).abs() < 1e-6);
        assert!(theorem1_bound(1.0, 2.0, PI).is_err());
        assert!(theorem1_bound(0.0, 2.0, 0.0).is_err());
    }

    #[test]
    fn heat_bound_values() {
        assert_eq!(heat_bound(0.0, 3.0), 0.0);
        assert!((heat_bound(1.0, 2f64.ln()) - 0.5).abs() < 1e-15);
        assert!(heat_bound(-1.0, 2.0) < heat_bound(-1.0, 1.0));
    }

    #[test]
    fn bg_counterexample_fails() {
        let s = FiniteMetricMeasureSpace::new(
            default_labels(2),
            DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
            vec![1.0, 100.0],
        )
        .unwrap();
        let r = check_bishop_gromov(&s, 0.0, 2.0, &BgSampling::Triples(vec![(0, 0.5, 1.5)]), Some(0.0)).unwrap();
        assert!(!r.passed());
        assert_eq!(r.violations[0].ratio, 101.0);
        assert_eq!(r.violations[0].model_ratio, 9.0);
    }

    #[test]
    fn bg_single_point_is_vacuous() {
        let s = FiniteMetricMeasureSpace::with_unit_weights(DMatrix::zeros(1, 1)).unwrap();
        let r = check_bishop_gromov(&s, 0.0, 2.0, &BgSampling::Budget { centers: 4, radius_pairs: 4, seed: 1 }, None)
            .unwrap();
        assert!(r.passed());
        assert_eq!(r.checked, 0);
    }

    #[test]
    fn lemma_trivial_cases() {
        let s = FiniteMetricMeasureSpace::from_fn(default_labels(4), vec![1.0; 4], |i, j| (i as f64 - j as f64).abs())
            .unwrap();
        let rep = lemma31_check(&s, 0.0, 2.0, 1.5, &[(1, 1)], Some(0.0)).unwrap();
        assert_eq!(rep.pairs[0].lhs, 0.0);
        assert_eq!(rep.pairs[0].rhs, 0.0);
        let rep = lemma31_check(&s, 0.0, 2.0, 10.0, &[(0, 3)], Some(0.0)).unwrap();
        assert_eq!(rep.pairs[0].lhs, 0.0);
        let rep = lemma31_check(&s, 0.0, 2.0, 1.5, &[(0, 3)], None).unwrap();
        assert_eq!(rep.skipped, 1);
    }
}
