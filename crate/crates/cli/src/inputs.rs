//! Readers for the on-disk inputs: model JSON, sample CSV, scale JSON,
//! process JSON, and transform descriptions.

use std::path::Path;

use heavytail::algebra::TransformSpec;
use heavytail::dist::TailModel;
use heavytail::empirical::{EvalGrid, SampleSet};
use heavytail::scale::ScaleFunction;
use heavytail::simulate::ProcessSpec;
use heavytail::{Error, Result};
use serde::Deserialize;

fn from_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
        line: None,
        msg: format!("{}: {e}", path.display()),
    })?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        line: Some(e.line()),
        msg: format!("{}: {e}", path.display()),
    })
}

pub fn read_model(path: &Path) -> Result<TailModel> {
    let model: TailModel = from_json(path)?;
    model.validate()?;
    Ok(model)
}

pub fn read_sample(path: &Path) -> Result<SampleSet> {
    SampleSet::from_csv_path(path)
}

/// Scale JSON deserializes through the validating constructor, so a file
/// that parses is already a well-formed scale function.
pub fn read_scale(path: &Path) -> Result<ScaleFunction> {
    from_json(path)
}

pub fn read_process(path: &Path) -> Result<ProcessSpec> {
    let spec: ProcessSpec = from_json(path)?;
    spec.validate()?;
    Ok(spec)
}

/// On-disk description of a transform of IID variables. The diagonal is
/// tabulated at build time, so the file only names the shape.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "transform", rename_all = "snake_case")]
pub enum TransformRequest {
    Sum { arity: usize },
    Product { arity: usize },
    Max { arity: usize },
    PowerProduct { exponents: Vec<f64> },
}

impl TransformRequest {
    /// Build the spec with its diagonal tabulated on `grid` (the product
    /// diagonal is sampled there; the others are exact).
    pub fn build(&self, grid: &EvalGrid) -> Result<TransformSpec> {
        let x_max = *grid.points().last().unwrap();
        match self {
            TransformRequest::Sum { arity } => TransformSpec::sum(*arity, x_max),
            TransformRequest::Product { arity } => TransformSpec::product(*arity, grid),
            TransformRequest::Max { arity } => TransformSpec::max(*arity, x_max),
            TransformRequest::PowerProduct { exponents } => {
                TransformSpec::power_product(exponents.clone(), x_max)
            }
        }
    }
}

pub fn read_transform(path: &Path) -> Result<TransformRequest> {
    from_json(path)
}
