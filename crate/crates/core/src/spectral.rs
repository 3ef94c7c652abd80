//! Laplacian `Δ = I - M` of a random-walk kernel and its spectrum.

use nalgebra::{Complex, DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::space::RandomWalkKernel;

/// Imaginary parts below this count as real.
pub const REAL_TOL: f64 = 1e-9;
/// Default bracket tolerance before scaling by the operator norm.
pub const BRACKET_TOL: f64 = 1e-7;

pub fn laplacian(kernel: &RandomWalkKernel) -> DMatrix<f64> {
    let n = kernel.len();
    DMatrix::identity(n, n) - kernel.matrix()
}

/// Infinity norm (max absolute row sum).
pub fn operator_norm(op: &DMatrix<f64>) -> f64 {
    op.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `BRACKET_TOL` scaled by `max(1, ‖Δ‖∞)`.
pub fn default_tolerance(op: &DMatrix<f64>) -> f64 {
    BRACKET_TOL * operator_norm(op).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eigenvalue {
    pub re: f64,
    pub im: f64,
}

impl Eigenvalue {
    pub fn is_real(&self, tol: f64) -> bool {
        self.im.abs() <= tol
    }

    fn complex(&self) -> Complex<f64> {
        Complex::new(self.re, self.im)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// All `n` eigenvalues with multiplicity, sorted by `(re, im)`.
    pub eigenvalues: Vec<Eigenvalue>,
    /// Sorted real parts of the eigenvalues with `|im| <= REAL_TOL`.
    pub real_eigenvalues: Vec<f64>,
    /// `‖Av - λv‖ / ‖v‖` per eigenvalue, when eigenvectors were requested.
    pub residuals: Option<Vec<f64>>,
    pub norm: f64,
    /// Subdiagonal threshold the Schur iteration converged with.
    pub deflation_eps: f64,
    /// Clusters of split defective eigenvalues replaced by their mean.
    pub refined_clusters: usize,
}

/// Target for `‖Av - λv‖ / ‖v‖` relative to `‖A‖∞`.
pub const RESIDUAL_TOL: f64 = 1e-8;
const CLUSTER_RADIUS: f64 = 1e-4;

const DEFLATION_STEPS: [f64; 6] = [f64::EPSILON, 1e-15, 1e-14, 1e-13, 1e-12, 1e-11];

/// All eigenvalues of a square real operator via real Schur form.
pub fn spectrum(op: &DMatrix<f64>, with_residuals: bool) -> Result<SpectrumReport> {
    let n = op.nrows();
    if op.ncols() != n {
        return Err(Error::ShapeMismatch(format!("operator is {}x{}", n, op.ncols())));
    }
    let norm = operator_norm(op);
    let max_iter = 100 * n.max(10);
    // the deflation test at machine epsilon can stall on nearly rank-deficient
    // stochastic matrices; loosen it stepwise, residuals certify the result
    let (schur, deflation_eps) = DEFLATION_STEPS
        .iter()
        .find_map(|&eps| Schur::try_new(op.clone(), eps, max_iter).map(|s| (s, eps)))
        .ok_or_else(|| {
            Error::Numeric(format!(
                "Schur iteration did not converge within {max_iter} sweeps at any deflation tolerance (n = {n})"
            ))
        })?;
    let mut eigenvalues: Vec<Eigenvalue> =
        schur.complex_eigenvalues().iter().map(|z| Eigenvalue { re: z.re, im: z.im }).collect();
    eigenvalues.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));

    let mut refined_clusters = 0;
    let residuals = if with_residuals {
        let mut res = eigenvalues.iter().map(|e| eigen_residual(op, e.complex(), norm)).collect::<Result<Vec<_>>>()?;
        refined_clusters = refine_clusters(op, norm, &mut eigenvalues, &mut res)?;
        Some(res)
    } else {
        None
    };
    let real_eigenvalues = eigenvalues.iter().filter(|e| e.is_real(REAL_TOL)).map(|e| e.re).collect();
    Ok(SpectrumReport { eigenvalues, real_eigenvalues, residuals, norm, deflation_eps, refined_clusters })
}

/// A defective eigenvalue comes back from the Schur form split into a cluster
/// of width about `eps^(1/k)`, while the cluster mean stays accurate. Failing
/// eigenvalues are merged with their neighbours when the mean certifies.
fn refine_clusters(op: &DMatrix<f64>, norm: f64, eig: &mut Vec<Eigenvalue>, res: &mut [f64]) -> Result<usize> {
    let bound = RESIDUAL_TOL * norm;
    let radius = CLUSTER_RADIUS * norm.max(1.0);
    let n = eig.len();
    let mut done = vec![false; n];
    let mut merged = 0;
    for i in 0..n {
        if done[i] || res[i] <= bound {
            continue;
        }
        let mut members = vec![i];
        let mut k = 0;
        while k < members.len() {
            let c = eig[members[k]].complex();
            for (j, e) in eig.iter().enumerate() {
                if !members.contains(&j) && (e.complex() - c).norm() <= radius {
                    members.push(j);
                }
            }
            k += 1;
        }
        for &m in &members {
            done[m] = true;
        }
        if members.len() < 2 {
            continue;
        }
        let mean = members.iter().map(|&m| eig[m].complex()).sum::<Complex<f64>>() / members.len() as f64;
        let mean = if mean.im.abs() <= radius { Complex::new(mean.re, 0.0) } else { mean };
        let r = eigen_residual(op, mean, norm)?;
        if r <= bound {
            for &m in &members {
                eig[m] = Eigenvalue { re: mean.re, im: mean.im };
                res[m] = r;
            }
            merged += 1;
        }
    }
    if merged > 0 {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig[a].re.total_cmp(&eig[b].re).then(eig[a].im.total_cmp(&eig[b].im)));
        let (e2, r2): (Vec<Eigenvalue>, Vec<f64>) = order.iter().map(|&k| (eig[k], res[k])).unzip();
        *eig = e2;
        res.copy_from_slice(&r2);
    }
    Ok(merged)
}

/// Inverse iteration on `A - (λ + δ)I`; returns the relative residual of the
/// resulting eigenvector.
fn eigen_residual(op: &DMatrix<f64>, lambda: Complex<f64>, norm: f64) -> Result<f64> {
    let n = op.nrows();
    let a: DMatrix<Complex<f64>> = op.map(|v| Complex::new(v, 0.0));
    let shift = lambda + Complex::new(1e-10 * norm.max(1.0), 0.0);
    let shifted = &a - DMatrix::<Complex<f64>>::identity(n, n) * shift;
    let lu = shifted.lu();
    let mut v = DVector::from_fn(n, |i, _| Complex::new(1.0 + (i as f64 * 0.618).fract(), 0.0));
    for _ in 0..4 {
        let next = lu.solve(&v).ok_or_else(|| Error::Numeric("singular inverse-iteration system".into()))?;
        let scale = next.norm();
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::Numeric(format!("inverse iteration diverged at λ = {lambda}")));
        }
        v = next.unscale(scale);
    }
    let r = &a * &v - &v * lambda;
    Ok(r.norm() / v.norm())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BracketVerdict {
    pub kappa_inf: f64,
    /// `(κ, 2 - κ)`.
    pub bracket: (f64, f64),
    pub tol: f64,
    /// The real eigenvalue closest to 0, attributed to the constant eigenfunction.
    pub constant_mode: Option<f64>,
    /// Real eigenvalues tested against the bracket.
    pub checked: Vec<f64>,
    pub violations: Vec<f64>,
    /// Eigenvalues of `M = I - Δ` outside the closed unit disk.
    pub envelope_violations: Vec<Eigenvalue>,
    /// `max |1 - λ| - (1 - κ)` over all eigenvalues except the constant mode.
    /// Informational only.
    pub disk_excess: f64,
}

impl BracketVerdict {
    pub fn passed(&self) -> bool {
        self.violations.is_empty() && self.envelope_violations.is_empty()
    }
}

/// Every real eigenvalue of a nonconstant eigenfunction must satisfy
/// `κ - tol <= λ <= 2 - κ + tol`.
pub fn check_bracket(report: &SpectrumReport, kappa_inf: f64, tol: f64) -> Result<BracketVerdict> {
    if kappa_inf > 1.0 {
        return Err(Error::InvalidBound(kappa_inf));
    }
    let (lo, hi) = (kappa_inf, 2.0 - kappa_inf);

    let mut real = report.real_eigenvalues.clone();
    let constant_idx = real
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i);
    let constant_mode = constant_idx.map(|i| real.remove(i));

    let violations = real.iter().copied().filter(|&l| l < lo - tol || l > hi + tol).collect();
    let envelope_violations = report
        .eigenvalues
        .iter()
        .copied()
        .filter(|e| (Complex::new(1.0, 0.0) - e.complex()).norm() > 1.0 + tol)
        .collect();

    let mut skipped_constant = false;
    let mut disk_excess = f64::NEG_INFINITY;
    for e in &report.eigenvalues {
        if !skipped_constant && e.is_real(REAL_TOL) && Some(e.re) == constant_mode {
            skipped_constant = true;
            continue;
        }
        disk_excess = disk_excess.max((Complex::new(1.0, 0.0) - e.complex()).norm() - (1.0 - kappa_inf));
    }

    Ok(BracketVerdict {
        kappa_inf,
        bracket: (lo, hi),
        tol,
        constant_mode,
        checked: real,
        violations,
        envelope_violations,
        disk_excess,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LiouvilleVerdict {
    pub kappa_inf: f64,
    /// False when `κ <= 0`; the harmonic-functions claim needs positive curvature.
    pub applicable: bool,
    /// `n - rank(Δ)`.
    pub kernel_dimension: usize,
    /// `Some(dim == 1)` when applicable.
    pub holds: Option<bool>,
}

/// Dimension of the null space of `op`, by SVD with a relative cutoff.
pub fn null_space_dimension(op: &DMatrix<f64>) -> usize {
    let n = op.nrows();
    if n == 0 {
        return 0;
    }
    let sv = op.clone().singular_values();
    let smax = sv.iter().cloned().fold(0.0, f64::max);
    let cutoff = 1e-10 * (n as f64) * smax.max(1.0);
    sv.iter().filter(|&&s| s <= cutoff).count()
}

/// With `κ > 0`, harmonic functions are constant: `dim ker Δ = 1`.
pub fn liouville_check(op: &DMatrix<f64>, kappa_inf: f64) -> LiouvilleVerdict {
    let kernel_dimension = null_space_dimension(op);
    let applicable = kappa_inf > 0.0;
    LiouvilleVerdict {
        kappa_inf,
        applicable,
        kernel_dimension,
        holds: applicable.then_some(kernel_dimension == 1),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::space::KernelKind;

    fn kernel(rows: Vec<Vec<f64>>) -> RandomWalkKernel {
        RandomWalkKernel::from_rows(rows, KernelKind::Custom).unwrap()
    }

    fn k3() -> RandomWalkKernel {
        kernel(vec![vec![0.0, 0.5, 0.5], vec![0.5, 0.0, 0.5], vec![0.5, 0.5, 0.0]])
    }

    fn c4() -> RandomWalkKernel {
        kernel(vec![
            vec![0.0, 0.5, 0.0, 0.5],
            vec![0.5, 0.0, 0.5, 0.0],
            vec![0.0, 0.5, 0.0, 0.5],
            vec![0.5, 0.0, 0.5, 0.0],
        ])
    }

    fn assert_close(actual: &[f64], expected: &[f64]) {
        assert_eq!(actual.len(), expected.len());
        for (a, e) in actual.iter().zip(expected) {
            assert!((a - e).abs() < 1e-12, "{actual:?} vs {expected:?}");
        }
    }

    #[test]
    fn constants_are_harmonic() {
        let op = laplacian(&k3());
        let ones = DVector::from_element(3, 1.0);
        assert!((op * ones).amax() < 1e-12);
    }

    #[test]
    fn defective_cluster_is_refined() {
        // lazy one-way chain: eigenvalue 0.3 of the Laplacian with a 3x3 Jordan block
        let a = 0.3;
        let rep = spectrum(
            &laplacian(&kernel(vec![
                vec![1.0, 0.0, 0.0, 0.0],
                vec![a, 1.0 - a, 0.0, 0.0],
                vec![0.0, a, 1.0 - a, 0.0],
                vec![0.0, 0.0, a, 1.0 - a],
            ])),
            true,
        )
        .unwrap();
        for &r in rep.residuals.as_ref().unwrap() {
            assert!(r <= RESIDUAL_TOL * rep.norm, "residual {r}");
        }
        for (l, e) in rep.real_eigenvalues.iter().zip([0.0, a, a, a]) {
            assert!((l - e).abs() < 1e-7);
        }

        // a split cluster of the same block merges back onto its mean
        let op = laplacian(&kernel(vec![
            vec![1.0, 0.0, 0.0, 0.0],
            vec![a, 1.0 - a, 0.0, 0.0],
            vec![0.0, a, 1.0 - a, 0.0],
            vec![0.0, 0.0, a, 1.0 - a],
        ]));
        let h = 2e-6;
        let mut eig = vec![
            Eigenvalue { re: 0.0, im: 0.0 },
            Eigenvalue { re: a - h, im: 0.0 },
            Eigenvalue { re: a + 0.5 * h, im: -h },
            Eigenvalue { re: a + 0.5 * h, im: h },
        ];
        let mut res = vec![0.0, 1.0, 1.0, 1.0];
        assert_eq!(refine_clusters(&op, operator_norm(&op), &mut eig, &mut res).unwrap(), 1);
        for e in &eig[1..] {
            assert!((e.re - a).abs() < 1e-15 && e.im == 0.0);
        }
        assert!(res.iter().all(|&r| r <= RESIDUAL_TOL * operator_norm(&op)));
    }

    #[test]
    fn complete_graph_spectrum() {
        let rep = spectrum(&laplacian(&k3()), true).unwrap();
        assert_close(&rep.real_eigenvalues, &[0.0, 1.5, 1.5]);
        for &r in rep.residuals.as_ref().unwrap() {
            assert!(r <= 1e-8 * rep.norm);
        }
        let v = check_bracket(&rep, 0.5, 1e-7).unwrap();
        assert!(v.passed());
        assert_close(&v.checked, &[1.5, 1.5]);
    }

    #[test]
    fn cycle_four_spectrum() {
        let rep = spectrum(&laplacian(&c4()), false).unwrap();
        assert_close(&rep.real_eigenvalues, &[0.0, 1.0, 1.0, 2.0]);
        assert!(check_bracket(&rep, 0.0, 1e-7).unwrap().passed());
    }

    #[test]
    fn zero_operator() {
        let rep = spectrum(&DMatrix::zeros(4, 4), true).unwrap();
        assert_close(&rep.real_eigenvalues, &[0.0; 4]);
        let v = check_bracket(&rep, 0.0, 1e-7).unwrap();
        assert!(v.passed());
        assert!(matches!(check_bracket(&rep, 1.5, 1e-7), Err(Error::InvalidBound(_))));
    }

    #[test]
    fn bracket_catches_out_of_range_eigenvalues() {
        // claims κ = 0.9 for K_3, whose nonconstant eigenvalue 1.5 exceeds 1.1
        let rep = spectrum(&laplacian(&k3()), false).unwrap();
        let v = check_bracket(&rep, 0.9, 1e-7).unwrap();
        assert_eq!(v.violations.len(), 2);
    }

    #[test]
    fn rotation_has_complex_spectrum() {
        let k = kernel(vec![vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0], vec![1.0, 0.0, 0.0]]);
        let rep = spectrum(&laplacian(&k), true).unwrap();
        assert_eq!(rep.eigenvalues.len(), 3);
        assert_eq!(rep.real_eigenvalues.len(), 1);
        let v = check_bracket(&rep, -1.0, 1e-7).unwrap();
        assert!(v.envelope_violations.is_empty());
    }

    #[test]
    fn liouville_on_connected_and_split_kernels() {
        let v = liouville_check(&laplacian(&k3()), 0.5);
        assert_eq!(v.holds, Some(true));
        let mut rows = vec![vec![0.0; 6]; 6];
        for b in 0..2 {
            for i in 0..3 {
                for j in 0..3 {
                    if i != j {
                        rows[3 * b + i][3 * b + j] = 0.5;
                    }
                }
            }
        }
        let v = liouville_check(&laplacian(&kernel(rows)), -0.2);
        assert!(!v.applicable);
        assert_eq!(v.kernel_dimension, 2);
    }
}
