//! Frozen two-branch 1-D CNN feature extractor (inference only).
//!
//! Layer geometry for a 3000-sample epoch:
//!
//! | branch | layer        | kernel | stride | padding | output   |
//! |--------|--------------|--------|--------|---------|----------|
//! | small  | conv+BN+ReLU | 54     | 6      | valid   | 492 × 32 |
//! | small  | max-pool     | 16     | 16     |         | 30 × 32  |
//! | small  | 3× conv      | 8      | 1      | 3 / 4   | 30 × 64  |
//! | small  | max-pool     | 10     | 10     |         | 3 × 64   |
//! | large  | conv+BN+ReLU | 400    | 50     | valid   | 53 × 64  |
//! | large  | max-pool     | 8      | 8      |         | 6 × 64   |
//! | large  | 3× conv      | 8      | 1      | 3 / 4   | 6 × 64   |
//! | large  | max-pool     | 6      | 6      |         | 1 × 64   |
//!
//! Activations are time-major (`[time][channel]`), so flattening a `3 × 64`
//! map emits time step 0's 64 channels first. The branches are concatenated
//! small-then-large into 256 features. Dropout rows are identity at
//! inference.
//!
//! `.cpw` weights file (little-endian): `"CPW1"`, then for each conv layer
//! in the order small.conv1..4, large.conv1..4: `u32` tensor count (6),
//! followed by kernel `[out, in, k]`, bias, BN scale, BN shift, BN running
//! mean, BN running variance, each as `u32` rank, `u32` dims and `f32` data.

use std::path::Path;

use crate::error::{Error, Result};
use crate::fsutil::{write_atomic, ByteReader};
use crate::numerics::RngStream;

pub const CONV_INPUT_LEN: usize = 3000;
pub const CONV_OUTPUT_DIM: usize = 256;
const BN_EPS: f64 = 1e-5;
const MAGIC: &[u8; 4] = b"CPW1";
const TENSORS_PER_LAYER: u32 = 6;

#[derive(Clone, Copy, Debug)]
struct LayerSpec {
    name: &'static str,
    in_ch: usize,
    out_ch: usize,
    kernel: usize,
    stride: usize,
    pad_left: usize,
    pad_right: usize,
}

const fn valid(name: &'static str, in_ch: usize, out_ch: usize, kernel: usize, stride: usize) -> LayerSpec {
    LayerSpec {
        name,
        in_ch,
        out_ch,
        kernel,
        stride,
        pad_left: 0,
        pad_right: 0,
    }
}

const fn same8(name: &'static str, in_ch: usize, out_ch: usize) -> LayerSpec {
    LayerSpec {
        name,
        in_ch,
        out_ch,
        kernel: 8,
        stride: 1,
        pad_left: 3,
        pad_right: 4,
    }
}

struct BranchSpec {
    name: &'static str,
    layers: [LayerSpec; 4],
    first_pool: usize,
    last_pool: usize,
}

const BRANCHES: [BranchSpec; 2] = [
    BranchSpec {
        name: "small",
        layers: [
            valid("small.conv1", 1, 32, 54, 6),
            same8("small.conv2", 32, 64),
            same8("small.conv3", 64, 64),
            same8("small.conv4", 64, 64),
        ],
        first_pool: 16,
        last_pool: 10,
    },
    BranchSpec {
        name: "large",
        layers: [
            valid("large.conv1", 1, 64, 400, 50),
            same8("large.conv2", 64, 64),
            same8("large.conv3", 64, 64),
            same8("large.conv4", 64, 64),
        ],
        first_pool: 8,
        last_pool: 6,
    },
];

/// Parameters of one convolution followed by inference-mode batch norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvLayerWeights {
    pub kernel: Vec<f32>,
    pub bias: Vec<f32>,
    pub bn_scale: Vec<f32>,
    pub bn_shift: Vec<f32>,
    pub running_mean: Vec<f32>,
    pub running_var: Vec<f32>,
}

impl ConvLayerWeights {
    fn tensors(&self, spec: &LayerSpec) -> [(Vec<u32>, &[f32]); 6] {
        let o = spec.out_ch as u32;
        [
            (vec![o, spec.in_ch as u32, spec.kernel as u32], &self.kernel),
            (vec![o], &self.bias),
            (vec![o], &self.bn_scale),
            (vec![o], &self.bn_shift),
            (vec![o], &self.running_mean),
            (vec![o], &self.running_var),
        ]
    }

    fn validate(&self, spec: &LayerSpec) -> Result<()> {
        for (i, (dims, data)) in self.tensors(spec).iter().enumerate() {
            let n: usize = dims.iter().map(|&d| d as usize).product();
            if data.len() != n {
                return Err(Error::shape(
                    "conv weights",
                    format!("{} tensor {i} with {n} values", spec.name),
                    data.len(),
                ));
            }
            if data.iter().any(|v| !v.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "{} tensor {i} has non-finite values",
                    spec.name
                )));
            }
        }
        if self.running_var.iter().any(|&v| v <= 0.0) {
            return Err(Error::InvalidInput(format!(
                "{} running variance must be positive",
                spec.name
            )));
        }
        Ok(())
    }
}

/// All eight conv layers, small branch first.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvPipelineWeights {
    layers: Vec<ConvLayerWeights>,
}

fn layer_specs() -> impl Iterator<Item = &'static LayerSpec> {
    BRANCHES.iter().flat_map(|b| b.layers.iter())
}

impl ConvPipelineWeights {
    pub fn new(layers: Vec<ConvLayerWeights>) -> Result<Self> {
        if layers.len() != 8 {
            return Err(Error::shape("conv weights", "8 layers", layers.len()));
        }
        for (w, spec) in layers.iter().zip(layer_specs()) {
            w.validate(spec)?;
        }
        Ok(ConvPipelineWeights { layers })
    }

    /// He-uniform kernels, small random biases and batch-norm statistics.
    pub fn random(rng: &mut RngStream) -> Self {
        let layers = layer_specs()
            .map(|spec| {
                let fan_in = (spec.in_ch * spec.kernel) as f64;
                let bound = (6.0 / fan_in).sqrt();
                let mut draw = |n: usize, lo: f64, hi: f64| -> Vec<f32> {
                    (0..n).map(|_| rng.uniform_range(lo, hi) as f32).collect()
                };
                let o = spec.out_ch;
                ConvLayerWeights {
                    kernel: draw(o * spec.in_ch * spec.kernel, -bound, bound),
                    bias: draw(o, -0.05, 0.05),
                    bn_scale: draw(o, 0.8, 1.2),
                    bn_shift: draw(o, -0.1, 0.1),
                    running_mean: draw(o, -0.1, 0.1),
                    running_var: draw(o, 0.5, 1.5),
                }
            })
            .collect();
        ConvPipelineWeights { layers }
    }

    /// Kernels drawn at random, zero biases, and batch norm reduced to the
    /// identity (scale 1, shift 0, mean 0, variance `1 - 1e-5`).
    pub fn random_identity_bn(rng: &mut RngStream) -> Self {
        let mut w = ConvPipelineWeights::random(rng);
        for l in &mut w.layers {
            l.bias.iter_mut().for_each(|v| *v = 0.0);
            l.bn_scale.iter_mut().for_each(|v| *v = 1.0);
            l.bn_shift.iter_mut().for_each(|v| *v = 0.0);
            l.running_mean.iter_mut().for_each(|v| *v = 0.0);
            l.running_var.iter_mut().for_each(|v| *v = (1.0 - BN_EPS) as f32);
        }
        w
    }

    pub fn layers(&self) -> &[ConvLayerWeights] {
        &self.layers
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = MAGIC.to_vec();
        for (w, spec) in self.layers.iter().zip(layer_specs()) {
            out.extend_from_slice(&TENSORS_PER_LAYER.to_le_bytes());
            for (dims, data) in w.tensors(spec) {
                out.extend_from_slice(&(dims.len() as u32).to_le_bytes());
                for d in dims {
                    out.extend_from_slice(&d.to_le_bytes());
                }
                for v in data {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    pub fn decode(bytes: &[u8], origin: &str) -> Result<Self> {
        let mut r = ByteReader::new(bytes, origin);
        if r.take(4)? != MAGIC {
            return Err(Error::BadMagic {
                path: origin.to_string(),
                expected: "CPW1",
            });
        }
        let mut layers = Vec::with_capacity(8);
        for spec in layer_specs() {
            let count = r.u32()?;
            if count != TENSORS_PER_LAYER {
                return Err(Error::shape(
                    "conv weights",
                    format!("{} tensors in {}", TENSORS_PER_LAYER, spec.name),
                    count,
                ));
            }
            let mut tensors: Vec<Vec<f32>> = Vec::with_capacity(6);
            for i in 0..TENSORS_PER_LAYER {
                let rank = r.u32()? as usize;
                let expected: Vec<usize> = if i == 0 {
                    vec![spec.out_ch, spec.in_ch, spec.kernel]
                } else {
                    vec![spec.out_ch]
                };
                let dims = (0..rank)
                    .map(|_| r.u32().map(|d| d as usize))
                    .collect::<Result<Vec<_>>>()?;
                if dims != expected {
                    return Err(Error::shape(
                        "conv weights",
                        format!("{} tensor {i} dims {expected:?}", spec.name),
                        format!("{dims:?}"),
                    ));
                }
                let n: usize = dims.iter().product();
                let data = (0..n).map(|_| r.f32()).collect::<Result<Vec<_>>>()?;
                tensors.push(data);
            }
            let mut it = tensors.into_iter();
            let mut next = || it.next().unwrap();
            layers.push(ConvLayerWeights {
                kernel: next(),
                bias: next(),
                bn_scale: next(),
                bn_shift: next(),
                running_mean: next(),
                running_var: next(),
            });
        }
        if !r.is_empty() {
            return Err(Error::InvalidInput(format!("{origin}: trailing bytes after conv weights")));
        }
        ConvPipelineWeights::new(layers)
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

/// Time-major activation map.
struct Activation {
    len: usize,
    channels: usize,
    data: Vec<f64>,
}

impl Activation {
    fn shape(&self) -> Vec<usize> {
        vec![self.len, self.channels]
    }
}

fn conv_bn_relu(x: &Activation, w: &ConvLayerWeights, spec: &LayerSpec) -> Activation {
    let padded = x.len + spec.pad_left + spec.pad_right;
    let len = (padded - spec.kernel) / spec.stride + 1;
    let mut data = vec![0.0; len * spec.out_ch];
    for o in 0..spec.out_ch {
        let inv_std = 1.0 / (f64::from(w.running_var[o]) + BN_EPS).sqrt();
        let scale = f64::from(w.bn_scale[o]);
        let shift = f64::from(w.bn_shift[o]);
        let mean = f64::from(w.running_mean[o]);
        let kernel = &w.kernel[o * spec.in_ch * spec.kernel..(o + 1) * spec.in_ch * spec.kernel];
        for t in 0..len {
            let mut acc = f64::from(w.bias[o]);
            let start = (t * spec.stride) as isize - spec.pad_left as isize;
            for k in 0..spec.kernel {
                let pos = start + k as isize;
                if pos < 0 || pos as usize >= x.len {
                    continue;
                }
                let row = &x.data[pos as usize * x.channels..(pos as usize + 1) * x.channels];
                for (c, &v) in row.iter().enumerate() {
                    acc += f64::from(kernel[c * spec.kernel + k]) * v;
                }
            }
            let y = scale * (acc - mean) * inv_std + shift;
            data[t * spec.out_ch + o] = y.max(0.0);
        }
    }
    Activation {
        len,
        channels: spec.out_ch,
        data,
    }
}

fn max_pool(x: &Activation, size: usize) -> Activation {
    let len = x.len / size;
    let mut data = vec![f64::NEG_INFINITY; len * x.channels];
    for t in 0..len * size {
        let dst = &mut data[(t / size) * x.channels..(t / size + 1) * x.channels];
        for (d, &v) in dst.iter_mut().zip(&x.data[t * x.channels..(t + 1) * x.channels]) {
            *d = d.max(v);
        }
    }
    Activation {
        len,
        channels: x.channels,
        data,
    }
}

/// Named output shape of one pipeline stage.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StageShape {
    pub stage: String,
    pub shape: Vec<usize>,
}

/// Forward pass returning the 256-wide feature vector.
pub fn conv_forward(epoch: &[f64], w: &ConvPipelineWeights) -> Result<Vec<f64>> {
    conv_forward_traced(epoch, w).map(|(out, _)| out)
}

/// Forward pass that also records every intermediate shape in order.
pub fn conv_forward_traced(
    epoch: &[f64],
    w: &ConvPipelineWeights,
) -> Result<(Vec<f64>, Vec<StageShape>)> {
    if epoch.len() != CONV_INPUT_LEN {
        return Err(Error::shape(
            "conv_forward",
            format!("epoch of {CONV_INPUT_LEN} samples"),
            epoch.len(),
        ));
    }
    if epoch.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("epoch contains non-finite samples".into()));
    }
    let mut trace = vec![StageShape {
        stage: "input".into(),
        shape: vec![CONV_INPUT_LEN, 1],
    }];
    let mut out = Vec::with_capacity(CONV_OUTPUT_DIM);
    let record = |trace: &mut Vec<StageShape>, stage: String, shape: Vec<usize>| {
        trace.push(StageShape { stage, shape });
    };
    for (b, branch) in BRANCHES.iter().enumerate() {
        let weights = &w.layers[b * 4..b * 4 + 4];
        let mut x = Activation {
            len: CONV_INPUT_LEN,
            channels: 1,
            data: epoch.to_vec(),
        };
        for (i, (spec, lw)) in branch.layers.iter().zip(weights).enumerate() {
            x = conv_bn_relu(&x, lw, spec);
            record(&mut trace, spec.name.to_string(), x.shape());
            if i == 0 {
                x = max_pool(&x, branch.first_pool);
                record(&mut trace, format!("{}.pool1", branch.name), x.shape());
                record(&mut trace, format!("{}.dropout", branch.name), x.shape());
            }
        }
        x = max_pool(&x, branch.last_pool);
        record(&mut trace, format!("{}.pool2", branch.name), x.shape());
        record(&mut trace, format!("{}.flatten", branch.name), vec![x.data.len()]);
        out.extend_from_slice(&x.data);
    }
    record(&mut trace, "concat".into(), vec![out.len()]);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("conv_forward"));
    }
    Ok((out, trace))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn epoch(seed: u64) -> Vec<f64> {
        let mut rng = RngStream::new(seed, 0);
        (0..CONV_INPUT_LEN).map(|_| rng.normal()).collect()
    }

    #[test]
    fn shape_chain_matches_layer_table() {
        let w = ConvPipelineWeights::random(&mut RngStream::new(1, 0));
        let (out, trace) = conv_forward_traced(&epoch(2), &w).unwrap();
        let got: Vec<(&str, Vec<usize>)> =
            trace.iter().map(|s| (s.stage.as_str(), s.shape.clone())).collect();
        let expected: Vec<(&str, Vec<usize>)> = vec![
            ("input", vec![3000, 1]),
            ("small.conv1", vec![492, 32]),
            ("small.pool1", vec![30, 32]),
            ("small.dropout", vec![30, 32]),
            ("small.conv2", vec![30, 64]),
            ("small.conv3", vec![30, 64]),
            ("small.conv4", vec![30, 64]),
            ("small.pool2", vec![3, 64]),
            ("small.flatten", vec![192]),
            ("large.conv1", vec![53, 64]),
            ("large.pool1", vec![6, 64]),
            ("large.dropout", vec![6, 64]),
            ("large.conv2", vec![6, 64]),
            ("large.conv3", vec![6, 64]),
            ("large.conv4", vec![6, 64]),
            ("large.pool2", vec![1, 64]),
            ("large.flatten", vec![64]),
            ("concat", vec![256]),
        ];
        assert_eq!(got, expected);
        assert_eq!(out.len(), CONV_OUTPUT_DIM);
    }

    #[test]
    fn zero_epoch_zero_bias_identity_bn_gives_zero() {
        let w = ConvPipelineWeights::random_identity_bn(&mut RngStream::new(4, 0));
        let out = conv_forward(&vec![0.0; CONV_INPUT_LEN], &w).unwrap();
        assert!(out.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn deterministic_bitwise() {
        let w = ConvPipelineWeights::random(&mut RngStream::new(7, 0));
        let e = epoch(3);
        let a = conv_forward(&e, &w).unwrap();
        let b = conv_forward(&e, &w).unwrap();
        assert_eq!(
            a.iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
            b.iter().map(|v| v.to_bits()).collect::<Vec<_>>()
        );
    }

    #[test]
    fn wrong_epoch_length() {
        let w = ConvPipelineWeights::random(&mut RngStream::new(1, 0));
        assert!(matches!(
            conv_forward(&[0.0; 256], &w),
            Err(Error::Shape { .. })
        ));
    }

    #[test]
    fn weights_file_round_trip_and_validation() {
        let w = ConvPipelineWeights::random(&mut RngStream::new(5, 0));
        let bytes = w.encode();
        assert_eq!(ConvPipelineWeights::decode(&bytes, "mem").unwrap(), w);

        let mut bad = w.clone();
        bad.layers[3].running_var[0] = 0.0;
        assert!(ConvPipelineWeights::new(bad.layers).is_err());

        let mut short = w.layers.clone();
        short[0].bias.pop();
        assert!(matches!(
            ConvPipelineWeights::new(short),
            Err(Error::Shape { .. })
        ));

        assert!(ConvPipelineWeights::decode(&bytes[..bytes.len() - 2], "mem").is_err());
        assert!(matches!(
            ConvPipelineWeights::decode(b"XXXX", "mem"),
            Err(Error::BadMagic { .. })
        ));
    }
}
