//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;

/// Exact W1 for integer masses `mu`, `nu` with equal totals `q`, against
/// unit-mass atoms. With integer marginals the transport polytope has integral
/// vertices, so the optimum is an assignment between the `q` expanded atoms.
/// Solved by DP over subsets of target atoms.
pub fn assignment_w1(mu: &[u32], nu: &[u32], dist: &DMatrix<f64>) -> f64 {
    let sources: Vec<usize> = mu.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize)).collect();
    let targets: Vec<usize> = nu.iter().enumerate().flat_map(|(i, &c)| std::iter::repeat_n(i, c as usize)).collect();
    assert_eq!(sources.len(), targets.len());
    let q = sources.len();
    assert!(q <= 16, "too many atoms for subset DP");
    let full = 1usize << q;
    let mut dp = vec![f64::INFINITY; full];
    dp[0] = 0.0;
    for mask in 0..full {
        if !dp[mask].is_finite() {
            continue;
        }
        let s = mask.count_ones() as usize;
        if s == q {
            continue;
        }
        for (t, &target) in targets.iter().enumerate() {
            if mask & (1 << t) == 0 {
                let next = mask | (1 << t);
                let c = dp[mask] + dist[(sources[s], target)];
                if c < dp[next] {
                    dp[next] = c;
                }
            }
        }
    }
    dp[full - 1] / q as f64
}

/// Endpoint of the unit-speed normal extremal from the origin with initial
/// horizontal direction `phi` and vertical covector `lambda`, after time `len`.
/// RK4 on `x' = hx, y' = hy, t' = (x hy - y hx)/2, hx' = -λ hy, hy' = λ hx`.
pub fn extremal_endpoint(phi: f64, lambda: f64, len: f64, steps: usize) -> [f64; 3] {
    let f = |s: [f64; 5]| -> [f64; 5] {
        let [x, y, _, hx, hy] = s;
        [hx, hy, 0.5 * (x * hy - y * hx), -lambda * hy, lambda * hx]
    };
    let mut s = [0.0, 0.0, 0.0, phi.cos(), phi.sin()];
    let h = len / steps as f64;
    let add = |a: [f64; 5], b: [f64; 5], k: f64| -> [f64; 5] { std::array::from_fn(|i| a[i] + k * b[i]) };
    for _ in 0..steps {
        let k1 = f(s);
        let k2 = f(add(s, k1, 0.5 * h));
        let k3 = f(add(s, k2, 0.5 * h));
        let k4 = f(add(s, k3, h));
        s = std::array::from_fn(|i| s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]));
    }
    [s[0], s[1], s[2]]
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
    let x = m.lu().solve(&nalgebra::Vector3::new(b[0], b[1], b[2]))?;
    Some([x[0], x[1], x[2]])
}

/// CC distance from the origin by shooting normal extremals. Newton on
/// `(phi, mu = λ·len, len)` from a grid of starts; the shortest converged
/// extremal with `|mu| <= 2π` wins. Uses no closed-form geodesic formulas.
pub fn shooting_cc_norm(target: [f64; 3]) -> Option<f64> {
    let steps = 400;
    let rho = (target[0] * target[0] + target[1] * target[1]).sqrt();
    let scale = (rho * rho + 4.0 * std::f64::consts::PI * target[2].abs()).sqrt().max(1e-12);
    let eval = |p: [f64; 3]| -> [f64; 3] {
        let e = extremal_endpoint(p[0], p[1] / p[2], p[2], steps);
        [e[0] - target[0], e[1] - target[1], e[2] - target[2]]
    };
    let tnorm = |r: [f64; 3]| (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    let mut best: Option<f64> = None;
    for i in 0..8 {
        for mu0 in [-5.5, -4.0, -2.5, -1.0, 0.3, 1.0, 2.5, 4.0, 5.5] {
            for l0 in [0.8, 1.0, 1.3] {
                let mut p = [i as f64 * std::f64::consts::FRAC_PI_4, mu0, l0 * scale];
                let mut ok = false;
                for _ in 0..60 {
                    let r = eval(p);
                    if tnorm(r) < 1e-11 * scale.max(1.0) {
                        ok = true;
                        break;
                    }
                    let mut jac = [[0.0; 3]; 3];
                    for j in 0..3 {
                        let dh = 1e-7 * p[j].abs().max(1.0);
                        let mut q = p;
                        q[j] += dh;
                        let rq = eval(q);
                        for k in 0..3 {
                            jac[k][j] = (rq[k] - r[k]) / dh;
                        }
                    }
                    let Some(step) = solve3(jac, [-r[0], -r[1], -r[2]]) else { break };
                    for j in 0..3 {
                        p[j] += step[j];
                    }
                    if p.iter().any(|v| !v.is_finite()) || p[2] <= 0.0 {
                        break;
                    }
                }
                if ok && p[1].abs() <= 2.0 * std::f64::consts::PI + 1e-9 {
                    best = Some(best.map_or(p[2], |b: f64| b.min(p[2])));
                }
            }
        }
    }
    best
}

/// Perimeter of the regular `k`-gon enclosing signed area `tau`: the length of
/// an explicit horizontal loop from the origin to `(0, 0, tau)`.
pub fn polygon_loop_length(tau: f64, k: usize) -> f64 {
    let theta = std::f64::consts::PI / k as f64;
    // area of a regular k-gon with side s is k s^2 / (4 tan(π/k))
    let side = (4.0 * theta.tan() * tau.abs() / k as f64).sqrt();
    k as f64 * side
}

/// Lifts a closed polygon in the plane to a horizontal path and returns its
/// final height `t`, i.e. the enclosed signed area.
pub fn polygon_lift_height(vertices: &[[f64; 2]]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| {
            let (a, b) = (vertices[i], vertices[(i + 1) % n]);
            0.5 * (a[0] * b[1] - a[1] * b[0])
        })
        .sum()
}
