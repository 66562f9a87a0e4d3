//! Per-epoch node features: every `(epoch, channel)` window of raw samples
//! becomes one `d`-dimensional row, giving a `T × N × d` tensor.

mod conv;
mod stat;

use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fsutil::{write_atomic, ByteReader};
use crate::numerics::Matrix;
use crate::signal::Recording;

pub use conv::{
    conv_forward, conv_forward_traced, ConvLayerWeights, ConvPipelineWeights, StageShape,
    CONV_INPUT_LEN, CONV_OUTPUT_DIM,
};
pub use stat::{stat_features, STAT_PREFIX};

pub const DEFAULT_BANDS: usize = 10;

#[derive(Clone, Debug)]
pub enum FeatureExtractor {
    Stat { n_bands: usize },
    Conv(Box<ConvPipelineWeights>),
}

impl Default for FeatureExtractor {
    fn default() -> Self {
        FeatureExtractor::Stat {
            n_bands: DEFAULT_BANDS,
        }
    }
}

impl FeatureExtractor {
    pub fn output_dim(&self) -> usize {
        match self {
            FeatureExtractor::Stat { n_bands } => STAT_PREFIX + n_bands,
            FeatureExtractor::Conv(_) => CONV_OUTPUT_DIM,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            FeatureExtractor::Stat { .. } => "stat",
            FeatureExtractor::Conv(_) => "conv",
        }
    }

    pub fn extract(&self, epoch: &[f64]) -> Result<Vec<f64>> {
        match self {
            FeatureExtractor::Stat { n_bands } => stat_features(epoch, *n_bands),
            FeatureExtractor::Conv(w) => conv_forward(epoch, w),
        }
    }
}

/// `T × N × d` node features, row-major with the epoch index outermost.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureTensor {
    n_epochs: usize,
    n_nodes: usize,
    dim: usize,
    extractor: String,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(
        n_epochs: usize,
        n_nodes: usize,
        dim: usize,
        extractor: impl Into<String>,
        data: Vec<f64>,
    ) -> Result<Self> {
        if data.len() != n_epochs * n_nodes * dim {
            return Err(Error::shape(
                "FeatureTensor::new",
                format!("{} values", n_epochs * n_nodes * dim),
                data.len(),
            ));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature values must be finite".into()));
        }
        Ok(FeatureTensor {
            n_epochs,
            n_nodes,
            dim,
            extractor: extractor.into(),
            data,
        })
    }

    pub fn n_epochs(&self) -> usize {
        self.n_epochs
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_epochs, self.n_nodes, self.dim)
    }

    pub fn extractor(&self) -> &str {
        &self.extractor
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, epoch: usize, node: usize) -> &[f64] {
        let start = (epoch * self.n_nodes + node) * self.dim;
        &self.data[start..start + self.dim]
    }

    /// Node feature matrix of one epoch.
    pub fn snapshot(&self, epoch: usize) -> Matrix {
        let block = self.n_nodes * self.dim;
        Matrix::from_vec(
            self.n_nodes,
            self.dim,
            self.data[epoch * block..(epoch + 1) * block].to_vec(),
        )
        .expect("feature block is finite and sized")
    }

    /// `.ftr` layout (little-endian): `"FTR1"`, `u8` extractor name length +
    /// name, `u32` T, N, d, then `f64` values `[epoch][node][feature]`.
    pub fn encode(&self) -> Vec<u8> {
        let mut out = b"FTR1".to_vec();
        out.push(self.extractor.len() as u8);
        out.extend_from_slice(self.extractor.as_bytes());
        for v in [self.n_epochs, self.n_nodes, self.dim] {
            out.extend_from_slice(&(v as u32).to_le_bytes());
        }
        for v in &self.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn decode(bytes: &[u8], origin: &str) -> Result<Self> {
        let mut r = ByteReader::new(bytes, origin);
        if r.take(4)? != b"FTR1" {
            return Err(Error::BadMagic {
                path: origin.to_string(),
                expected: "FTR1",
            });
        }
        let name_len = r.u8()? as usize;
        let name = String::from_utf8_lossy(r.take(name_len)?).into_owned();
        let t = r.u32()? as usize;
        let n = r.u32()? as usize;
        let d = r.u32()? as usize;
        let payload = r.rest();
        let count = t * n * d;
        if payload.len() != count * 8 {
            return Err(Error::Truncated {
                what: format!("{origin} feature payload ({t}x{n}x{d})"),
                expected: count * 8,
                found: payload.len(),
            });
        }
        let data = payload
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        FeatureTensor::new(t, n, d, name, data)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::decode(&bytes, &path.display().to_string())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.encode())
    }
}

/// Applies `ex` to every channel of every epoch. Rows are computed in
/// parallel and assembled by position.
pub fn extract_all(rec: &Recording, ex: &FeatureExtractor) -> Result<FeatureTensor> {
    if let FeatureExtractor::Conv(_) = ex {
        if rec.samples_per_epoch() != CONV_INPUT_LEN {
            return Err(Error::shape(
                "extract_all",
                format!("{CONV_INPUT_LEN} samples per epoch for the conv extractor"),
                rec.samples_per_epoch(),
            ));
        }
    }
    let (t, n, d) = (rec.n_epochs(), rec.n_channels(), ex.output_dim());
    let rows: Vec<Vec<f64>> = (0..t * n)
        .into_par_iter()
        .map(|i| ex.extract(&rec.epoch_f64(i % n, i / n)))
        .collect::<Result<_>>()?;
    let mut data = Vec::with_capacity(t * n * d);
    for row in rows {
        debug_assert_eq!(row.len(), d);
        data.extend(row);
    }
    FeatureTensor::new(t, n, d, ex.kind_name(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn recording(d: usize) -> Recording {
        let values: Vec<f32> = (0..2 * 3 * d).map(|i| ((i * 13 % 17) as f32) - 8.0).collect();
        Recording::new(vec!["a".into(), "b".into()], 3, d, 100.0, values).unwrap()
    }

    #[test]
    fn stat_tensor_shape() {
        let f = extract_all(&recording(64), &FeatureExtractor::Stat { n_bands: 10 }).unwrap();
        assert_eq!(f.shape(), (3, 2, 16));
        assert_eq!(
            f.row(2, 1),
            stat_features(&recording(64).epoch_f64(1, 2), 10).unwrap().as_slice()
        );
    }

    #[test]
    fn extraction_repeats_exactly() {
        let rec = recording(40);
        let ex = FeatureExtractor::default();
        assert_eq!(extract_all(&rec, &ex).unwrap(), extract_all(&rec, &ex).unwrap());
    }

    #[test]
    fn conv_requires_3000_samples() {
        let w = ConvPipelineWeights::random(&mut crate::numerics::RngStream::new(0, 0));
        let err = extract_all(&recording(64), &FeatureExtractor::Conv(Box::new(w))).unwrap_err();
        assert!(matches!(err, Error::Shape { .. }));
    }

    #[test]
    fn feature_file_round_trip() {
        let f = extract_all(&recording(32), &FeatureExtractor::Stat { n_bands: 4 }).unwrap();
        let bytes = f.encode();
        assert_eq!(FeatureTensor::decode(&bytes, "mem").unwrap(), f);
        assert!(FeatureTensor::decode(&bytes[..bytes.len() - 1], "mem").is_err());
    }
}
