use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use coarse_ricci::samplers::{Generator, GeneratorSpec};

/// Bad flags, config files or specs. Maps to exit status 2.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

macro_rules! usage {
    ($($arg:tt)*) => { UsageError(format!($($arg)*)) };
}

#[derive(Debug, Parser)]
#[command(name = "crl", version, about = "Coarse Ricci curvature on finite metric measure spaces")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    /// Materialize a generator into an explicit space file.
    Sample,
    /// Curvature over all pairs, or a seeded sample with --pairs.
    Curvature,
    /// Laplacian spectrum with the eigenvalue bracket and Liouville verdicts.
    Spectrum,
    /// Bishop-Gromov volume ratio check.
    Bgcheck,
    /// Evaluate the curvature lower bound for (K, N, r).
    Bound,
    /// Run a named verification experiment.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Default, Args)]
pub struct Flags {
    /// TOML config file; flags take precedence over it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Space file (explicit or generator form).
    #[arg(long, global = true)]
    pub space: Option<PathBuf>,
    /// Generator spec, `name:key=value,...`.
    #[arg(long, global = true)]
    pub generator: Option<String>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// `r-step:<r>`, `gaussian:<t>`, `delta`, `neighbor-uniform` or `file:<path>`.
    #[arg(long, global = true)]
    pub kernel: Option<String>,
    #[arg(long = "K", global = true, allow_negative_numbers = true)]
    pub k: Option<f64>,
    #[arg(long = "N", global = true)]
    pub n: Option<f64>,
    #[arg(long, global = true)]
    pub r: Option<f64>,
    /// Output path; stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, env = "CRL_WORKERS")]
    pub workers: Option<usize>,
    /// Tolerance override `name=value`; repeatable.
    #[arg(long = "tol", global = true, value_parser = parse_tol)]
    pub tol: Vec<(String, f64)>,
    #[arg(long, global = true)]
    pub experiment: Option<String>,
    /// Pair budget for sampled curvature.
    #[arg(long, global = true)]
    pub pairs: Option<usize>,
    /// Bishop-Gromov centers to sample.
    #[arg(long, global = true)]
    pub centers: Option<usize>,
    /// Bishop-Gromov radius pairs per center.
    #[arg(long = "radius-pairs", global = true)]
    pub radius_pairs: Option<usize>,
}

fn parse_tol(s: &str) -> Result<(String, f64), String> {
    let (name, value) = s.split_once('=').ok_or_else(|| format!("expected name=value, got `{s}`"))?;
    let value: f64 = value.trim().parse().map_err(|_| format!("`{value}` is not a number"))?;
    Ok((name.trim().to_string(), value))
}

/// Config file contents. Every field is optional.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub space: Option<PathBuf>,
    pub generator: Option<String>,
    pub seed: Option<u64>,
    pub kernel: Option<String>,
    #[serde(rename = "K")]
    pub k: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<f64>,
    pub r: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub tol: BTreeMap<String, f64>,
    pub experiment: Option<String>,
    pub pairs: Option<usize>,
    pub centers: Option<usize>,
    pub radius_pairs: Option<usize>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, UsageError> {
        let text = std::fs::read_to_string(path).map_err(|e| usage!("cannot read config {}: {e}", path.display()))?;
        toml::from_str(&text).map_err(|e| usage!("invalid config {}: {e}", path.display()))
    }
}

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum KernelSpec {
    RStep { r: f64 },
    Gaussian { t: f64 },
    Delta,
    NeighborUniform,
    File { path: PathBuf },
}

impl KernelSpec {
    pub fn parse(s: &str) -> Result<Self, UsageError> {
        let (name, arg) = match s.split_once(':') {
            Some((n, a)) => (n.trim(), Some(a.trim())),
            None => (s.trim(), None),
        };
        let number = |what: &str| -> Result<f64, UsageError> {
            let a = arg.ok_or_else(|| usage!("kernel `{name}` needs a value, e.g. `{name}:{what}`"))?;
            a.parse().map_err(|_| usage!("kernel `{name}`: `{a}` is not a number"))
        };
        match (name, arg) {
            ("r-step", _) => Ok(KernelSpec::RStep { r: number("0.5")? }),
            ("gaussian", _) => Ok(KernelSpec::Gaussian { t: number("0.01")? }),
            ("delta", None) => Ok(KernelSpec::Delta),
            ("neighbor-uniform", None) => Ok(KernelSpec::NeighborUniform),
            ("file", Some(p)) => Ok(KernelSpec::File { path: PathBuf::from(p) }),
            _ => Err(usage!("unknown kernel `{s}`; expected r-step:<r>, gaussian:<t>, delta, neighbor-uniform or file:<path>")),
        }
    }
}

fn scalar(text: &str) -> Value {
    if let Ok(i) = text.parse::<u64>() {
        return Value::from(i);
    }
    if let Ok(x) = text.parse::<f64>() {
        return Value::from(x);
    }
    Value::from(text)
}

/// Parses `name:key=value,...` into a generator.
pub fn parse_generator(s: &str, seed: u64) -> Result<GeneratorSpec, UsageError> {
    let (name, rest) = s.split_once(':').unwrap_or((s, ""));
    let mut params = Map::new();
    for item in rest.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let (k, v) = item.split_once('=').ok_or_else(|| usage!("generator parameter `{item}` is not key=value"))?;
        params.insert(k.trim().to_string(), scalar(v.trim()));
    }
    let value = serde_json::json!({ "name": name.trim(), "params": params });
    let generator: Generator =
        serde_json::from_value(value).map_err(|e| usage!("invalid generator `{s}`: {e}"))?;
    Ok(GeneratorSpec::new(generator, seed))
}

/// Fully resolved run configuration, embedded in every output header.
/// The output path and worker count are left out: neither changes results.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub space: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorSpec>,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelSpec>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(rename = "N", skip_serializing_if = "Option::is_none")]
    pub n: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r: Option<f64>,
    pub format: Format,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    pub tol: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub experiment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub pairs: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub centers: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub radius_pairs: Option<usize>,
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl RunConfig {
    /// Flags override the config file, which overrides defaults.
    pub fn resolve(command: Command, flags: Flags) -> Result<Self, UsageError> {
        let file = match &flags.config {
            Some(path) => FileConfig::load(path)?,
            None => FileConfig::default(),
        };
        let seed = flags.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let space = flags.space.or(file.space);
        let generator_text = flags.generator.or(file.generator);
        if space.is_some() && generator_text.is_some() {
            return Err(usage!("give either a space file or a generator, not both"));
        }
        let generator = generator_text.map(|g| parse_generator(&g, seed)).transpose()?;
        let kernel = flags.kernel.or(file.kernel).map(|k| KernelSpec::parse(&k)).transpose()?;
        let mut tol = file.tol;
        tol.extend(flags.tol);
        let format = match (command, flags.format.or(file.format)) {
            (Command::Sample, Some(Format::Csv)) => return Err(usage!("sample writes a JSON space file; csv is not available")),
            (Command::Sample, _) => Format::Json,
            (_, f) => f.unwrap_or_default(),
        };
        let workers = flags.workers.or(file.workers);
        if workers == Some(0) {
            return Err(usage!("--workers must be at least 1"));
        }
        Ok(Self {
            command,
            space,
            generator,
            seed,
            kernel,
            k: flags.k.or(file.k),
            n: flags.n.or(file.n),
            r: flags.r.or(file.r),
            format,
            tol,
            experiment: flags.experiment.or(file.experiment),
            pairs: flags.pairs.or(file.pairs),
            centers: flags.centers.or(file.centers),
            radius_pairs: flags.radius_pairs.or(file.radius_pairs),
            out: flags.out.or(file.out),
            workers,
        })
    }

    pub fn require_k(&self) -> Result<f64, UsageError> {
        self.k.ok_or_else(|| usage!("{:?} needs --K", self.command))
    }

    pub fn require_n(&self) -> Result<f64, UsageError> {
        self.n.ok_or_else(|| usage!("{:?} needs --N", self.command))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use coarse_ricci::samplers::Generator;

    #[test]
    fn kernel_specs() {
        assert_eq!(KernelSpec::parse("r-step:0.3").unwrap(), KernelSpec::RStep { r: 0.3 });
        assert_eq!(KernelSpec::parse("gaussian:0.01").unwrap(), KernelSpec::Gaussian { t: 0.01 });
        assert_eq!(KernelSpec::parse("delta").unwrap(), KernelSpec::Delta);
        assert_eq!(KernelSpec::parse("neighbor-uniform").unwrap(), KernelSpec::NeighborUniform);
        assert!(KernelSpec::parse("r-step").is_err());
        assert!(KernelSpec::parse("lazy").is_err());
    }

    #[test]
    fn generator_specs() {
        let g = parse_generator("euclidean_grid:side_count=3,spacing=0.5", 9).unwrap();
        assert_eq!(g.generator, Generator::EuclideanGrid { side_count: 3, spacing: 0.5 });
        assert_eq!(g.seed, 9);
        let g = parse_generator("complete_graph:n=4", 1).unwrap();
        assert_eq!(g.generator, Generator::CompleteGraph { n: 4 });
        assert!(parse_generator("nonsense:n=4", 1).is_err());
        assert!(parse_generator("complete_graph:n", 1).is_err());
    }

    #[test]
    fn tol_flag() {
        assert_eq!(parse_tol("slack=0.25").unwrap(), ("slack".to_string(), 0.25));
        assert!(parse_tol("slack").is_err());
    }
}
