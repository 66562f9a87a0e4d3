//! `.gds` graph dataset document.
//!
//! A single JSON document:
//!
//! ```json
//! {"metadata": {"corr_kind": "plv", "extractor_kind": "stat", "n": 10,
//!               "d": 16, "n_classes": 5, "generator_version": 1},
//!  "samples": [{"x": [...], "a": [...], "y": 3}, ...]}
//! ```
//!
//! `x` (`n × d`) and `a` (`n × n`) are row-major. Reals are written with 17
//! significant digits so a read reproduces every bit.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Adjacency, CorrKind, GraphSample};
use crate::error::{Error, Result};
use crate::fsutil::{read_to_string, write_atomic};
use crate::numerics::Matrix;

pub const GENERATOR_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphMeta {
    pub corr_kind: CorrKind,
    pub extractor_kind: String,
    pub n: usize,
    pub d: usize,
    pub n_classes: usize,
    pub generator_version: u32,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GraphDataset {
    pub meta: GraphMeta,
    pub samples: Vec<GraphSample>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSample {
    x: Vec<f64>,
    a: Vec<f64>,
    y: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    metadata: GraphMeta,
    samples: Vec<RawSample>,
}

fn push_reals(out: &mut String, values: &[f64]) {
    out.push('[');
    for (i, v) in values.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write!(out, "{v:.16e}").unwrap();
    }
    out.push(']');
}

impl GraphDataset {
    pub fn new(meta: GraphMeta, samples: Vec<GraphSample>) -> Result<Self> {
        for (i, s) in samples.iter().enumerate() {
            if s.x.shape() != (meta.n, meta.d) {
                return Err(Error::shape(
                    "GraphDataset::new",
                    format!("{}x{} features", meta.n, meta.d),
                    format!("{:?} in sample {i}", s.x.shape()),
                ));
            }
            if s.y >= meta.n_classes {
                return Err(Error::InvalidLabel(format!(
                    "sample {i} has label {}, expected < {}",
                    s.y, meta.n_classes
                )));
            }
        }
        Ok(GraphDataset { meta, samples })
    }

    pub fn to_json(&self) -> String {
        let meta = serde_json::to_string(&self.meta).expect("metadata serializes");
        let mut out = String::with_capacity(64 + self.samples.len() * 24 * (self.meta.n * (self.meta.n + self.meta.d)));
        write!(out, "{{\"metadata\":{meta},\"samples\":[").unwrap();
        for (i, s) in self.samples.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            out.push_str("\n{\"x\":");
            push_reals(&mut out, s.x.as_slice());
            out.push_str(",\"a\":");
            push_reals(&mut out, s.a.matrix().as_slice());
            write!(out, ",\"y\":{}}}", s.y).unwrap();
        }
        out.push_str("\n]}\n");
        out
    }

    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        let raw: RawDataset = serde_json::from_str(text).map_err(|e| Error::Parse {
            file: origin.to_string(),
            line: e.line(),
            msg: e.to_string(),
        })?;
        let (n, d) = (raw.metadata.n, raw.metadata.d);
        let mut samples: Vec<GraphSample> = Vec::with_capacity(raw.samples.len());
        for (i, s) in raw.samples.into_iter().enumerate() {
            let x = Matrix::from_vec(n, d, s.x).map_err(|e| Error::AtTimestamp {
                index: i,
                source: Box::new(e),
            })?;
            let a_mat = Matrix::from_vec(n, n, s.a).map_err(|e| Error::AtTimestamp {
                index: i,
                source: Box::new(e),
            })?;
            // Consecutive identical adjacencies (shared distance graphs) are
            // read back as one shared instance.
            let a = match samples.last() {
                Some(prev) if *prev.a.matrix() == a_mat => Arc::clone(&prev.a),
                _ => Arc::new(Adjacency::new(a_mat).map_err(|e| Error::AtTimestamp {
                    index: i,
                    source: Box::new(e),
                })?),
            };
            samples.push(GraphSample::new(x, a, s.y)?);
        }
        GraphDataset::new(raw.metadata, samples)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        Self::from_json(&read_to_string(path)?, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), self.to_json().as_bytes())
    }
}
