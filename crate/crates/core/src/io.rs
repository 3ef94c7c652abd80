//! JSON file formats for spaces and kernels.
//!
//! A space file is either explicit,
//! `{ "labels": [...], "dist": [[...]], "measure": [...] }`, or deferred to
//! a generator, `{ "generator": { "name": ..., "params": {...}, "seed": ... } }`.
//! Kernel files use `{ "labels": [...], "rows": [[...]], "kind": {...} }`.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::samplers::GeneratorSpec;
use crate::space::{FiniteMetricMeasureSpace, KernelKind, RandomWalkKernel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceFile {
    Explicit { labels: Vec<String>, dist: Vec<Vec<f64>>, measure: Vec<f64> },
    Generated { generator: GeneratorSpec },
}

impl SpaceFile {
    pub fn from_space(space: &FiniteMetricMeasureSpace) -> Self {
        let n = space.len();
        SpaceFile::Explicit {
            labels: space.labels().to_vec(),
            dist: (0..n).map(|i| (0..n).map(|j| space.d(i, j)).collect()).collect(),
            measure: space.measure().to_vec(),
        }
    }

    pub fn into_space(self) -> Result<FiniteMetricMeasureSpace> {
        match self {
            SpaceFile::Explicit { labels, dist, measure } => {
                let n = dist.len();
                if let Some(bad) = dist.iter().position(|row| row.len() != n) {
                    return Err(Error::ShapeMismatch(format!("distance row {bad} is not of length {n}")));
                }
                let flat: Vec<f64> = dist.into_iter().flatten().collect();
                FiniteMetricMeasureSpace::new(labels, DMatrix::from_row_slice(n, n, &flat), measure)
            }
            SpaceFile::Generated { generator } => generator.generate(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<KernelKind>,
}

impl KernelFile {
    pub fn from_kernel(kernel: &RandomWalkKernel, labels: Option<&[String]>) -> Self {
        Self { labels: labels.map(<[String]>::to_vec), rows: kernel.to_nested(), kind: Some(kernel.kind()) }
    }

    pub fn into_kernel(self) -> Result<RandomWalkKernel> {
        RandomWalkKernel::from_rows(self.rows, self.kind.unwrap_or(KernelKind::Custom))
    }
}

pub fn parse_space(text: &str) -> Result<FiniteMetricMeasureSpace> {
    serde_json::from_str::<SpaceFile>(text)?.into_space()
}

pub fn read_space(path: impl AsRef<Path>) -> Result<FiniteMetricMeasureSpace> {
    parse_space(&std::fs::read_to_string(path)?)
}

pub fn write_space(path: impl AsRef<Path>, space: &FiniteMetricMeasureSpace) -> Result<()> {
    std::fs::write(path, serde_json::to_string(&SpaceFile::from_space(space))?)?;
    Ok(())
}

pub fn read_kernel(path: impl AsRef<Path>) -> Result<RandomWalkKernel> {
    serde_json::from_str::<KernelFile>(&std::fs::read_to_string(path)?)?.into_kernel()
}

pub fn write_kernel(path: impl AsRef<Path>, kernel: &RandomWalkKernel, labels: Option<&[String]>) -> Result<()> {
    std::fs::write(path, serde_json::to_string(&KernelFile::from_kernel(kernel, labels))?)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::samplers::complete_graph;
    use crate::space::r_step_walk;

    #[test]
    fn explicit_and_generated_forms() {
        let s = parse_space(r#"{"labels":["a","b"],"dist":[[0,1],[1,0]],"measure":[1,2]}"#).unwrap();
        assert_eq!(s.labels(), &["a".to_string(), "b".to_string()]);
        assert_eq!(s.measure(), &[1.0, 2.0]);
        let g = parse_space(r#"{"generator":{"name":"complete_graph","params":{"n":3}}}"#).unwrap();
        assert_eq!(g, complete_graph(3).unwrap());
        assert!(parse_space(r#"{"labels":["a"],"dist":[[0,1]],"measure":[1]}"#).is_err());
    }

    #[test]
    fn space_and_kernel_round_trip() {
        let s = complete_graph(4).unwrap();
        let back = SpaceFile::from_space(&s).into_space().unwrap();
        assert_eq!(back, s);
        let k = r_step_walk(&s, 1.5).unwrap();
        let file = KernelFile::from_kernel(&k, Some(s.labels()));
        let text = serde_json::to_string(&file).unwrap();
        let back: KernelFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.into_kernel().unwrap(), k);
    }
}
