use std::collections::BTreeMap;

use anyhow::{Context, Result};
use serde_json::{json, Value};

use coarse_ricci::curvature::{kappa_all_pairs, kappa_sampled, PairSampling};
use coarse_ricci::experiments::{Experiment, ExperimentOptions};
use coarse_ricci::io::{read_kernel, read_space, SpaceFile};
use coarse_ricci::model::{self, BgSampling};
use coarse_ricci::space::{delta_walk, gaussian_walk, neighbor_uniform_walk, r_step_walk};
use coarse_ricci::spectral::{self, check_bracket, laplacian, liouville_check, REAL_TOL};
use coarse_ricci::{FiniteMetricMeasureSpace, KernelKind, RandomWalkKernel};

use crate::config::{Command, KernelSpec, RunConfig, UsageError};
use crate::output::{render, Report, SCHEMA};

/// Residuals cost one complex LU per eigenvalue; skipped above this size.
const RESIDUAL_LIMIT: usize = 300;

fn num(x: f64) -> String {
    format!("{x}")
}

fn tolerance(config: &RunConfig, allowed: &[&str], name: &str) -> Result<Option<f64>> {
    if let Some(bad) = config.tol.keys().find(|k| !allowed.contains(&k.as_str())) {
        return Err(UsageError(format!("{:?} has no tolerance `{bad}` (known: {allowed:?})", config.command)).into());
    }
    Ok(config.tol.get(name).copied())
}

fn load_space(config: &RunConfig) -> Result<FiniteMetricMeasureSpace> {
    match (&config.space, &config.generator) {
        (Some(path), None) => read_space(path).with_context(|| format!("reading space {}", path.display())),
        (None, Some(g)) => Ok(g.generate()?),
        _ => Err(UsageError("a space is required: pass --space <file> or --generator <spec>".into()).into()),
    }
}

fn build_kernel(config: &RunConfig, space: &FiniteMetricMeasureSpace) -> Result<RandomWalkKernel> {
    let spec = match (&config.kernel, config.r) {
        (Some(k), _) => k.clone(),
        (None, Some(r)) => KernelSpec::RStep { r },
        (None, None) => return Err(UsageError("a kernel is required: pass --kernel or --r".into()).into()),
    };
    let kernel = match spec {
        KernelSpec::RStep { r } => r_step_walk(space, r)?,
        KernelSpec::Gaussian { t } => gaussian_walk(space, t)?,
        KernelSpec::Delta => delta_walk(space),
        KernelSpec::NeighborUniform => neighbor_uniform_walk(space),
        KernelSpec::File { path } => {
            let k = read_kernel(&path).with_context(|| format!("reading kernel {}", path.display()))?;
            if k.len() != space.len() {
                return Err(UsageError(format!("kernel has {} rows, space has {} points", k.len(), space.len())).into());
            }
            k
        }
    };
    Ok(kernel)
}

/// Runs the command and returns the rendered output and the verdict.
pub fn execute(config: &RunConfig) -> Result<(Vec<u8>, bool)> {
    let report = match config.command {
        Command::Sample => return Ok((sample(config)?, true)),
        Command::Curvature => curvature(config)?,
        Command::Spectrum => spectrum(config)?,
        Command::Bgcheck => bgcheck(config)?,
        Command::Bound => bound(config)?,
        Command::Verify => verify(config)?,
    };
    Ok((render(config, &report)?, report.passed))
}

/// Writes the space file itself, with the schema and config alongside.
fn sample(config: &RunConfig) -> Result<Vec<u8>> {
    tolerance(config, &[], "")?;
    if config.generator.is_none() {
        return Err(UsageError("sample needs --generator".into()).into());
    }
    let space = load_space(config)?;
    let mut doc = serde_json::to_value(SpaceFile::from_space(&space))?;
    doc["schema"] = json!(SCHEMA);
    doc["config"] = serde_json::to_value(config)?;
    let mut out = serde_json::to_vec(&doc)?;
    out.push(b'\n');
    Ok(out)
}

fn curvature(config: &RunConfig) -> Result<Report> {
    let slack = tolerance(config, &["slack"], "slack")?.unwrap_or(0.0);
    let space = load_space(config)?;
    let kernel = build_kernel(config, &space)?;
    let report = match config.pairs {
        Some(budget) => kappa_sampled(&space, &kernel, PairSampling::new(budget, config.seed))?,
        None => kappa_all_pairs(&space, &kernel)?,
    };
    let labels = space.labels();
    let rows = report
        .pairs
        .iter()
        .map(|p| vec![labels[p.x].clone(), labels[p.y].clone(), num(p.distance), num(p.w1), num(p.kappa)])
        .collect();
    let (wx, wy) = report.witness;
    let mut summary = json!({
        "points": space.len(),
        "pairs": report.pairs.len(),
        "sampled": config.pairs.is_some(),
        "kappa_inf": report.kappa_inf,
        "witness": [labels[wx], labels[wy]],
        "near_radius": report.near_radius,
        "near_kappa_inf": report.near_kappa_inf,
    });
    let mut passed = true;
    if config.k.is_some() || config.n.is_some() {
        let (k, n) = (config.require_k()?, config.require_n()?);
        let KernelKind::RStep { r } = kernel.kind() else {
            return Err(UsageError("the curvature bound applies to r-step kernels only".into()).into());
        };
        let bound = model::theorem1_bound(k, n, r)?;
        let margin = report.kappa_inf - (bound - slack);
        passed = margin >= 0.0;
        summary["bound"] = json!({ "K": k, "N": n, "r": r, "bound": bound, "slack": slack, "margin": margin });
    }
    Ok(Report::new(summary, passed).with_table(vec!["x", "y", "distance", "w1", "kappa"], rows))
}

fn spectrum(config: &RunConfig) -> Result<Report> {
    let bracket_tol = tolerance(config, &["bracket"], "bracket")?;
    let space = load_space(config)?;
    let kernel = build_kernel(config, &space)?;
    let kappa_inf = if space.len() >= 2 { kappa_all_pairs(&space, &kernel)?.kappa_inf } else { 1.0 };
    let op = laplacian(&kernel);
    let with_residuals = op.nrows() <= RESIDUAL_LIMIT;
    let spec = spectral::spectrum(&op, with_residuals)?;
    let tol = bracket_tol.unwrap_or_else(|| spectral::default_tolerance(&op));
    let verdict = check_bracket(&spec, kappa_inf.min(1.0), tol)?;
    let liouville = liouville_check(&op, kappa_inf);
    let residual_ok = spec
        .residuals
        .as_deref()
        .is_none_or(|r| r.iter().all(|&v| v <= spectral::RESIDUAL_TOL * spec.norm));

    let (lo, hi) = verdict.bracket;
    let mut constant_pending = verdict.constant_mode;
    let rows = spec
        .eigenvalues
        .iter()
        .map(|e| {
            let real = e.is_real(REAL_TOL);
            let in_bracket = if !real {
                "n/a".to_string()
            } else if constant_pending == Some(e.re) {
                constant_pending = None;
                "constant".to_string()
            } else {
                (e.re >= lo - tol && e.re <= hi + tol).to_string()
            };
            vec![num(e.re), num(e.im), real.to_string(), in_bracket]
        })
        .collect();
    let passed = verdict.passed() && liouville.holds != Some(false) && residual_ok;
    let summary = json!({
        "points": space.len(),
        "kappa_inf": kappa_inf,
        "bracket": verdict,
        "liouville": liouville,
        "norm": spec.norm,
        "residuals_checked": with_residuals,
        "max_residual": spec.residuals.as_deref().map(|r| r.iter().fold(0.0f64, |m, &v| m.max(v))),
        "residuals_ok": residual_ok,
        "refined_clusters": spec.refined_clusters,
    });
    Ok(Report::new(summary, passed).with_table(vec!["re", "im", "is_real", "in_bracket"], rows))
}

fn bgcheck(config: &RunConfig) -> Result<Report> {
    let slack = tolerance(config, &["slack"], "slack")?;
    let (k, n) = (config.require_k()?, config.require_n()?);
    let space = load_space(config)?;
    let sampling = BgSampling::Budget {
        centers: config.centers.unwrap_or(50),
        radius_pairs: config.radius_pairs.unwrap_or(20),
        seed: config.seed,
    };
    let report = model::check_bishop_gromov(&space, k, n, &sampling, slack)?;
    let labels = space.labels();
    let rows = report
        .violations
        .iter()
        .map(|t| {
            vec![
                labels[t.center].clone(),
                num(t.r),
                num(t.big_r),
                num(t.ratio),
                num(t.model_ratio),
                num(t.allowed_ratio),
                num(t.margin),
            ]
        })
        .collect();
    let summary = json!({
        "K": k,
        "N": n,
        "slack": report.slack,
        "checked": report.checked,
        "unresolved": report.unresolved,
        "centers_covered": report.centers_covered,
        "strict_violations": report.strict_violations,
        "violations": report.violations.len(),
        "worst": report.worst,
    });
    Ok(Report::new(summary, report.passed())
        .with_table(vec!["center", "r", "R", "ratio", "model_ratio", "allowed_ratio", "margin"], rows))
}

fn bound(config: &RunConfig) -> Result<Report> {
    tolerance(config, &[], "")?;
    let (k, n) = (config.require_k()?, config.require_n()?);
    let r = match config.r {
        Some(r) => r,
        // the flat bound does not depend on r
        None if k == 0.0 => 1.0,
        None => return Err(UsageError("bound needs --r when K is nonzero".into()).into()),
    };
    let cap = model::domain_cap(k, n);
    let value = model::theorem1_bound(k, n, r)?;
    let summary = json!({ "K": k, "N": n, "r": config.r, "domain_cap": cap, "bound": value });
    let row = vec![num(k), num(n), config.r.map(num).unwrap_or_default(), num(cap), num(value)];
    Ok(Report::new(summary, true).with_table(vec!["K", "N", "r", "domain_cap", "bound"], vec![row]))
}

fn verify(config: &RunConfig) -> Result<Report> {
    let name =
        config.experiment.as_deref().ok_or_else(|| UsageError("verify needs --experiment <name>|all".into()))?;
    let experiments: Vec<Experiment> = if name == "all" {
        Experiment::ALL.to_vec()
    } else {
        vec![name.parse().map_err(|_| {
            let known: Vec<&str> = Experiment::ALL.iter().map(|e| e.name()).collect();
            UsageError(format!("unknown experiment `{name}` (known: all, {})", known.join(", ")))
        })?]
    };
    let options = ExperimentOptions { seed: config.seed, tolerances: config.tol.clone() };
    let mut rows = Vec::new();
    let mut summary = BTreeMap::new();
    let mut passed = true;
    for e in experiments {
        let report = e.run(&options)?;
        passed &= report.passed;
        for c in &report.checks {
            rows.push(vec![
                e.name().to_string(),
                c.name.clone(),
                serde_json::to_value(c.direction)?.as_str().unwrap_or_default().to_string(),
                num(c.bound),
                num(c.computed),
                num(c.slack),
                num(c.margin),
                c.passed.to_string(),
            ]);
        }
        summary.insert(
            e.name(),
            json!({ "passed": report.passed, "tolerances": report.tolerances, "details": report.details }),
        );
    }
    let summary: Value = serde_json::to_value(summary)?;
    Ok(Report::new(summary, passed).with_table(
        vec!["experiment", "check", "direction", "bound", "computed", "slack", "margin", "passed"],
        rows,
    ))
}
