//! Versioned JSON document for [`QuadraticMeasurementModel`].

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::measurement::QuadraticMeasurementModel;
use crate::error::{Error, Result};
use crate::numerics::{Covariance, Matrix};

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseDocument {
    Diag(Vec<f64>),
    Full(Vec<Vec<f64>>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub version: u32,
    pub n: usize,
    #[serde(rename = "N")]
    pub n_meas: usize,
    pub a: Vec<f64>,
    pub b: Vec<Vec<f64>>,
    #[serde(rename = "Q")]
    pub q: Vec<Vec<Vec<f64>>>,
    #[serde(rename = "R")]
    pub r: NoiseDocument,
}

impl From<&QuadraticMeasurementModel> for ModelDocument {
    fn from(model: &QuadraticMeasurementModel) -> Self {
        let noise = model.noise();
        let r = match noise.diagonal_variances() {
            Some(d) => NoiseDocument::Diag(d.to_vec()),
            None => NoiseDocument::Full(noise.to_matrix().to_rows()),
        };
        ModelDocument {
            version: MODEL_FORMAT_VERSION,
            n: model.state_dim(),
            n_meas: model.measurement_dim(),
            a: model.a().to_vec(),
            b: model.b().to_rows(),
            q: model.q().iter().map(|q| q.as_matrix().to_rows()).collect(),
            r,
        }
    }
}

impl TryFrom<ModelDocument> for QuadraticMeasurementModel {
    type Error = Error;

    fn try_from(doc: ModelDocument) -> Result<Self> {
        if doc.version != MODEL_FORMAT_VERSION {
            return Err(Error::Config(format!(
                "unsupported model format version {} (expected {MODEL_FORMAT_VERSION})",
                doc.version
            )));
        }
        if doc.a.len() != doc.n_meas {
            return Err(Error::dim("model document a", doc.n_meas, doc.a.len()));
        }
        let b = Matrix::from_rows(&doc.b)?;
        if b.cols() != doc.n {
            return Err(Error::dim("model document b", doc.n, b.cols()));
        }
        let q = doc
            .q
            .iter()
            .map(|rows| Matrix::from_rows(rows))
            .collect::<Result<Vec<_>>>()?;
        let noise = match doc.r {
            NoiseDocument::Diag(d) => Covariance::diagonal(d)?,
            NoiseDocument::Full(rows) => Covariance::full(Matrix::from_rows(&rows)?)?,
        };
        QuadraticMeasurementModel::new(doc.a, b, q, noise)
    }
}

impl QuadraticMeasurementModel {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(&ModelDocument::from(self)).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Parse {
            path: "<model json>".into(),
            message: e.to_string(),
        })?;
        doc.try_into()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json() + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::Parse {
                path: path.to_path_buf(),
                message,
            },
            other => other,
        })
    }
}
