//! The first Heisenberg group with its Carnot–Carathéodory distance.
//!
//! Group law `(x,y,t)·(x',y',t') = (x+x', y+y', t+t' + (xy' - yx')/2)`,
//! horizontal frame `X = ∂x - (y/2)∂t`, `Y = ∂y + (x/2)∂t`. A horizontal
//! curve gains height equal to the signed area swept by its projection, so
//! unit-speed geodesics from the origin project to circle arcs. For an arc
//! turning by `θ ∈ (0, 2π)` with chord `ρ` and swept area `|t|`,
//! `|t| / ρ² = (θ - sin θ) / (8 sin²(θ/2))`, which is increasing in θ.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeisenbergPoint {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl HeisenbergPoint {
    pub const IDENTITY: Self = Self { x: 0.0, y: 0.0, t: 0.0 };

    pub fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn mul(&self, o: &Self) -> Self {
        Self { x: self.x + o.x, y: self.y + o.y, t: self.t + o.t + 0.5 * (self.x * o.y - self.y * o.x) }
    }

    pub fn inverse(&self) -> Self {
        Self { x: -self.x, y: -self.y, t: -self.t }
    }

    /// `self⁻¹ · q`.
    pub fn relative(&self, q: &Self) -> Self {
        Self { x: q.x - self.x, y: q.y - self.y, t: q.t - self.t - 0.5 * (self.x * q.y - self.y * q.x) }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeisenbergMetric {
    /// Sub-Riemannian geodesic distance.
    #[default]
    CarnotCaratheodory,
    /// `((x²+y²)² + 16t²)^{1/4}`. Only bi-Lipschitz to the CC distance.
    Koranyi,
}

/// `θ - sin θ` without cancellation near zero.
fn theta_minus_sin(theta: f64) -> f64 {
    if theta < 1e-2 {
        let t2 = theta * theta;
        theta * t2 / 6.0 * (1.0 - t2 / 20.0 * (1.0 - t2 / 42.0))
    } else {
        theta - theta.sin()
    }
}

fn area_ratio(theta: f64) -> f64 {
    let s = (0.5 * theta).sin();
    theta_minus_sin(theta) / (8.0 * s * s)
}

/// Turning angle θ of the arc with `area_ratio(θ) = q`, by bisection.
fn solve_turning_angle(q: f64) -> Result<f64> {
    let (mut lo, mut hi) = (0.0f64, 2.0 * PI);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            return Ok(mid);
        }
        if area_ratio(mid) < q {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if hi - lo <= 1e-12 {
        Ok(0.5 * (lo + hi))
    } else {
        Err(Error::Numeric(format!("turning-angle bisection did not converge for ratio {q}")))
    }
}

/// Carnot–Carathéodory distance from the identity.
pub fn cc_norm(g: &HeisenbergPoint) -> Result<f64> {
    let rho = g.x.hypot(g.y);
    let area = g.t.abs();
    if area == 0.0 {
        return Ok(rho);
    }
    if rho == 0.0 {
        return Ok((4.0 * PI * area).sqrt());
    }
    let q = area / (rho * rho);
    if !q.is_finite() {
        return Ok((4.0 * PI * area).sqrt());
    }
    let theta = solve_turning_angle(q)?;
    let length = if theta < PI {
        rho * theta / (2.0 * (0.5 * theta).sin())
    } else {
        (2.0 * theta * theta * area / theta_minus_sin(theta)).sqrt()
    };
    if length.is_finite() {
        Ok(length)
    } else {
        Err(Error::Numeric(format!("non-finite CC length at ({}, {}, {})", g.x, g.y, g.t)))
    }
}

pub fn koranyi_norm(g: &HeisenbergPoint) -> f64 {
    let r2 = g.x * g.x + g.y * g.y;
    (r2 * r2 + 16.0 * g.t * g.t).sqrt().sqrt()
}

pub fn distance(p: &HeisenbergPoint, q: &HeisenbergPoint, metric: HeisenbergMetric) -> Result<f64> {
    let g = p.relative(q);
    match metric {
        HeisenbergMetric::CarnotCaratheodory => cc_norm(&g),
        HeisenbergMetric::Koranyi => Ok(koranyi_norm(&g)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn group_law_inverse() {
        let p = HeisenbergPoint::new(0.3, -1.2, 0.7);
        let e = p.mul(&p.inverse());
        assert_eq!(e, HeisenbergPoint::IDENTITY);
        let q = HeisenbergPoint::new(-0.5, 0.4, 2.0);
        let r = p.relative(&q);
        let back = p.mul(&r);
        assert!((back.x - q.x).abs() < 1e-15 && (back.y - q.y).abs() < 1e-15 && (back.t - q.t).abs() < 1e-15);
    }

    #[test]
    fn horizontal_and_vertical_closed_forms() {
        assert_eq!(cc_norm(&HeisenbergPoint::new(0.0, 0.0, 0.0)).unwrap(), 0.0);
        assert_eq!(cc_norm(&HeisenbergPoint::new(-1.5, 0.0, 0.0)).unwrap(), 1.5);
        let v = cc_norm(&HeisenbergPoint::new(0.0, 0.0, 2.0)).unwrap();
        assert!((v - (8.0 * PI).sqrt()).abs() < 1e-14);
    }

    #[test]
    fn continuity_near_the_axes() {
        let vertical = cc_norm(&HeisenbergPoint::new(0.0, 0.0, 1.0)).unwrap();
        let almost = cc_norm(&HeisenbergPoint::new(1e-9, 0.0, 1.0)).unwrap();
        assert!((vertical - almost).abs() < 1e-8);
        let flat = cc_norm(&HeisenbergPoint::new(1.0, 0.0, 1e-12)).unwrap();
        assert!((flat - 1.0).abs() < 1e-10);
    }

    #[test]
    fn dilation_scales_distance() {
        let g = HeisenbergPoint::new(0.4, 0.9, -0.3);
        let l = 2.5;
        let dg = HeisenbergPoint::new(l * g.x, l * g.y, l * l * g.t);
        assert!((cc_norm(&dg).unwrap() - l * cc_norm(&g).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn koranyi_is_bi_lipschitz_on_samples() {
        for &(x, y, t) in &[(1.0, 0.0, 0.0), (0.0, 0.0, 1.0), (0.3, 0.4, 0.5), (2.0, -1.0, 0.1)] {
            let g = HeisenbergPoint::new(x, y, t);
            let ratio = cc_norm(&g).unwrap() / koranyi_norm(&g);
            assert!((0.5..4.0).contains(&ratio), "ratio {ratio}");
        }
    }
}
