use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fsutil::{write_atomic, ByteReader};
use crate::numerics::{Matrix, RngStream};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Readout {
    #[default]
    Mean,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub n_layers: usize,
    pub in_dim: usize,
    pub hidden_dim: usize,
    pub n_classes: usize,
    pub dropout_rate: f64,
    pub readout: Readout,
}

impl ModelConfig {
    pub fn new(in_dim: usize) -> Self {
        ModelConfig {
            n_layers: 2,
            in_dim,
            hidden_dim: 64,
            n_classes: 5,
            dropout_rate: 0.3,
            readout: Readout::Mean,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_layers == 0 {
            return Err(Error::Config("the model needs at least one message-passing layer".into()));
        }
        if self.in_dim == 0 || self.hidden_dim == 0 || self.n_classes == 0 {
            return Err(Error::Config(format!(
                "model dimensions must be positive (in {}, hidden {}, classes {})",
                self.in_dim, self.hidden_dim, self.n_classes
            )));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(Error::Config(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }

    /// `(rows, cols)` of every learnable tensor in flatten order.
    pub fn tensor_shapes(&self) -> Vec<(usize, usize)> {
        let mut shapes = Vec::with_capacity(self.n_layers + 1);
        shapes.push((self.hidden_dim, self.in_dim));
        for _ in 1..self.n_layers {
            shapes.push((self.hidden_dim, self.hidden_dim));
        }
        shapes.push((self.n_classes, self.hidden_dim));
        shapes
    }

    pub fn n_params(&self) -> usize {
        self.tensor_shapes().iter().map(|(r, c)| r * c).sum()
    }
}

/// Message-passing transforms `W¹..Wᴸ` followed by the classifier.
/// Flatten order: layers first to last, then the classifier, each row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelWeights {
    pub layers: Vec<Matrix>,
    pub classifier: Matrix,
}

impl ModelWeights {
    /// Glorot-uniform initialization.
    pub fn init(cfg: &ModelConfig, rng: &mut RngStream) -> Result<Self> {
        cfg.validate()?;
        let mut tensors: Vec<Matrix> = cfg
            .tensor_shapes()
            .into_iter()
            .map(|(r, c)| {
                let bound = (6.0 / (r + c) as f64).sqrt();
                let data = (0..r * c).map(|_| rng.uniform_range(-bound, bound)).collect();
                Matrix::from_vec(r, c, data).expect("finite init")
            })
            .collect();
        let classifier = tensors.pop().unwrap();
        Ok(ModelWeights {
            layers: tensors,
            classifier,
        })
    }

    pub fn zeros(cfg: &ModelConfig) -> Self {
        let mut tensors: Vec<Matrix> = cfg
            .tensor_shapes()
            .into_iter()
            .map(|(r, c)| Matrix::zeros(r, c))
            .collect();
        let classifier = tensors.pop().unwrap();
        ModelWeights {
            layers: tensors,
            classifier,
        }
    }

    pub fn zeros_like(&self) -> Self {
        ModelWeights {
            layers: self.layers.iter().map(|m| Matrix::zeros(m.rows(), m.cols())).collect(),
            classifier: Matrix::zeros(self.classifier.rows(), self.classifier.cols()),
        }
    }

    pub fn tensors(&self) -> impl Iterator<Item = &Matrix> {
        self.layers.iter().chain(std::iter::once(&self.classifier))
    }

    pub fn tensors_mut(&mut self) -> impl Iterator<Item = &mut Matrix> {
        self.layers
            .iter_mut()
            .chain(std::iter::once(&mut self.classifier))
    }

    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.tensors().map(Matrix::shape).collect()
    }

    pub fn n_params(&self) -> usize {
        self.tensors().map(|m| m.as_slice().len()).sum()
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_params());
        for t in self.tensors() {
            out.extend_from_slice(t.as_slice());
        }
        out
    }

    /// Overwrites every tensor from a flat vector in flatten order.
    pub fn assign_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.n_params() {
            return Err(Error::shape("ModelWeights::assign_flat", self.n_params(), flat.len()));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("ModelWeights::assign_flat"));
        }
        let mut offset = 0;
        for t in self.tensors_mut() {
            let n = t.as_slice().len();
            t.as_mut_slice().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    pub fn unflatten(cfg: &ModelConfig, flat: &[f64]) -> Result<Self> {
        let mut w = ModelWeights::zeros(cfg);
        w.assign_flat(flat)?;
        Ok(w)
    }

    pub fn matches_config(&self, cfg: &ModelConfig) -> bool {
        self.shapes() == cfg.tensor_shapes()
    }

    /// 64-bit FNV fingerprint of the exact bit patterns.
    pub(crate) fn fingerprint(&self) -> u64 {
        fingerprint(self.tensors().flat_map(|t| t.as_slice().iter()))
    }
}

pub(crate) fn fingerprint<'a>(values: impl Iterator<Item = &'a f64>) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for v in values {
        h ^= v.to_bits();
        h = h.wrapping_mul(0x0000_0100_0000_01B3);
    }
    h
}

const MWT_MAGIC: &[u8; 4] = b"MWT1";

/// `.mwt` checkpoint (little-endian): `"MWT1"`, config block
/// (`u32` n_layers, in_dim, hidden_dim, n_classes, `f64` dropout rate,
/// `u8` readout = 0 for mean), `u64` parameter count, then the flattened
/// weights as `f64`.
pub fn encode_checkpoint(cfg: &ModelConfig, w: &ModelWeights) -> Result<Vec<u8>> {
    if !w.matches_config(cfg) {
        return Err(Error::shape(
            "encode_checkpoint",
            format!("{:?}", cfg.tensor_shapes()),
            format!("{:?}", w.shapes()),
        ));
    }
    let mut out = MWT_MAGIC.to_vec();
    for v in [cfg.n_layers, cfg.in_dim, cfg.hidden_dim, cfg.n_classes] {
        out.extend_from_slice(&(v as u32).to_le_bytes());
    }
    out.extend_from_slice(&cfg.dropout_rate.to_le_bytes());
    out.push(match cfg.readout {
        Readout::Mean => 0,
    });
    out.extend_from_slice(&(w.n_params() as u64).to_le_bytes());
    for v in w.flatten() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_checkpoint(bytes: &[u8], origin: &str) -> Result<(ModelConfig, ModelWeights)> {
    let mut r = ByteReader::new(bytes, origin);
    if r.take(4)? != MWT_MAGIC {
        return Err(Error::BadMagic {
            path: origin.to_string(),
            expected: "MWT1",
        });
    }
    let n_layers = r.u32()? as usize;
    let in_dim = r.u32()? as usize;
    let hidden_dim = r.u32()? as usize;
    let n_classes = r.u32()? as usize;
    let dropout_rate = r.f64()?;
    let readout = match r.u8()? {
        0 => Readout::Mean,
        other => {
            return Err(Error::InvalidInput(format!("{origin}: unknown readout code {other}")))
        }
    };
    let cfg = ModelConfig {
        n_layers,
        in_dim,
        hidden_dim,
        n_classes,
        dropout_rate,
        readout,
    };
    cfg.validate()?;
    let count = u64::from_le_bytes(r.take(8)?.try_into().unwrap()) as usize;
    if count != cfg.n_params() {
        return Err(Error::shape("decode_checkpoint", cfg.n_params(), count));
    }
    let flat = (0..count).map(|_| r.f64()).collect::<Result<Vec<_>>>()?;
    if !r.is_empty() {
        return Err(Error::InvalidInput(format!("{origin}: trailing bytes after checkpoint")));
    }
    let w = ModelWeights::unflatten(&cfg, &flat)?;
    Ok((cfg, w))
}

pub fn save_checkpoint(path: impl AsRef<Path>, cfg: &ModelConfig, w: &ModelWeights) -> Result<()> {
    write_atomic(path.as_ref(), &encode_checkpoint(cfg, w)?)
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<(ModelConfig, ModelWeights)> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_checkpoint(&bytes, &path.display().to_string())
}
