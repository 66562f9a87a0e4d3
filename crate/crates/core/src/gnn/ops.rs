//! Forward and backward passes of the message-passing classifier.
//!
//! Per layer, node `v` averages itself and its neighbours with adjacency
//! weights, `m_v = (h_v + Σ_u a_vu h_u) / (1 + Σ_u a_vu)`, then applies
//! `h'_v = ReLU(W m_v)` and inverted dropout. With a 0/1 adjacency this is
//! the plain mean over `ne[v] ∪ {v}`. The graph embedding is the mean of the
//! last layer's node embeddings and class scores are `sigmoid(W_cls h_G)`,
//! trained one-vs-rest with summed binary cross entropy.

use crate::error::{Error, Result};
use crate::graph::{Adjacency, GraphSample};
use crate::numerics::{adam_step, AdamState, Matrix, RngStream};

use super::model::{fingerprint, ModelConfig, ModelWeights};

pub const PROB_CLAMP: f64 = 1e-7;

/// Per-element dropout multipliers: 0 for dropped units, `1/(1-p)` for kept.
pub type DropoutMask = Matrix;

/// `D⁻¹(I + A) H` with `D = diag(1 + Σ_u a_vu)`.
pub fn aggregate(h: &Matrix, a: &Adjacency) -> Result<Matrix> {
    let n = h.rows();
    if a.n() != n {
        return Err(Error::shape("aggregate", format!("{n}-node adjacency"), a.n()));
    }
    let f = h.cols();
    let mut out = Matrix::zeros(n, f);
    for v in 0..n {
        let mut denom = 1.0;
        let row = out.row_mut(v);
        row.copy_from_slice(h.row(v));
        for u in 0..n {
            let w = a.weight(v, u);
            if w != 0.0 {
                denom += w;
                for (o, &x) in row.iter_mut().zip(h.row(u)) {
                    *o += w * x;
                }
            }
        }
        row.iter_mut().for_each(|o| *o /= denom);
    }
    Ok(out)
}

/// Adjoint of [`aggregate`]: `((D⁻¹(I + A))ᵀ G)`.
fn aggregate_adjoint(g: &Matrix, a: &Adjacency) -> Matrix {
    let n = g.rows();
    let mut out = Matrix::zeros(n, g.cols());
    for v in 0..n {
        let denom = 1.0 + (0..n).map(|u| a.weight(v, u)).sum::<f64>();
        for u in 0..n {
            let w = if u == v { 1.0 } else { a.weight(v, u) };
            if w == 0.0 {
                continue;
            }
            let c = w / denom;
            let src = g.row(v).to_vec();
            for (o, x) in out.row_mut(u).iter_mut().zip(src) {
                *o += c * x;
            }
        }
    }
    out
}

fn draw_mask(rows: usize, cols: usize, rate: f64, training: bool, rng: &mut RngStream) -> DropoutMask {
    let mut mask = Matrix::zeros(rows, cols);
    if !training || rate == 0.0 {
        mask.as_mut_slice().iter_mut().for_each(|m| *m = 1.0);
        return mask;
    }
    let keep = 1.0 / (1.0 - rate);
    for m in mask.as_mut_slice() {
        *m = if rng.uniform() < rate { 0.0 } else { keep };
    }
    mask
}

struct LayerTrace {
    aggregated: Matrix,
    pre: Matrix,
    out: Matrix,
}

fn layer_apply(h: &Matrix, a: &Adjacency, w: &Matrix, mask: &DropoutMask) -> Result<LayerTrace> {
    if w.cols() != h.cols() {
        return Err(Error::shape(
            "layer_forward",
            format!("transform with {} input columns", h.cols()),
            format!("{}x{}", w.rows(), w.cols()),
        ));
    }
    let aggregated = aggregate(h, a)?;
    let pre = aggregated.matmul_transposed(w)?;
    if mask.shape() != pre.shape() {
        return Err(Error::shape(
            "layer_forward",
            format!("{:?} dropout mask", pre.shape()),
            format!("{:?}", mask.shape()),
        ));
    }
    let mut out = pre.clone();
    for (o, &m) in out.as_mut_slice().iter_mut().zip(mask.as_slice()) {
        *o = o.max(0.0) * m;
    }
    Ok(LayerTrace {
        aggregated,
        pre,
        out,
    })
}

/// One message-passing layer. Returns the new embeddings and the dropout
/// mask used (all ones when `training` is false; `rng` is then untouched).
pub fn layer_forward(
    h: &Matrix,
    a: &Adjacency,
    w: &Matrix,
    dropout_rate: f64,
    training: bool,
    rng: &mut RngStream,
) -> Result<(Matrix, DropoutMask)> {
    let mask = draw_mask(h.rows(), w.rows(), dropout_rate, training, rng);
    let t = layer_apply(h, a, w, &mask)?;
    Ok((t.out, mask))
}

/// Column-wise mean over nodes.
pub fn readout(h: &Matrix) -> Result<Vec<f64>> {
    if h.rows() == 0 {
        return Err(Error::InvalidInput("readout of an empty graph".into()));
    }
    let n = h.rows() as f64;
    let mut out = vec![0.0; h.cols()];
    for i in 0..h.rows() {
        for (o, &v) in out.iter_mut().zip(h.row(i)) {
            *o += v;
        }
    }
    out.iter_mut().for_each(|o| *o /= n);
    Ok(out)
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// `sigmoid(W h_G)`, one independent probability per class.
pub fn classify(h_graph: &[f64], w: &Matrix) -> Result<Vec<f64>> {
    Ok(w.matvec(h_graph)?.into_iter().map(sigmoid).collect())
}

fn clamp_prob(z: f64) -> f64 {
    z.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
}

/// Summed binary cross entropy against a one-hot target.
pub fn bce_loss(z: &[f64], y: &[f64]) -> Result<f64> {
    if z.len() != y.len() {
        return Err(Error::shape("bce_loss", z.len(), y.len()));
    }
    let ones = y.iter().filter(|&&v| v == 1.0).count();
    if ones != 1 || y.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::InvalidLabel(format!("target {y:?} is not one-hot")));
    }
    Ok(z
        .iter()
        .zip(y)
        .map(|(&z, &y)| {
            let z = clamp_prob(z);
            -(y * z.ln() + (1.0 - y) * (1.0 - z).ln())
        })
        .sum())
}

pub fn one_hot(label: usize, n_classes: usize) -> Result<Vec<f64>> {
    if label >= n_classes {
        return Err(Error::InvalidLabel(format!(
            "label {label} outside [0, {n_classes})"
        )));
    }
    let mut y = vec![0.0; n_classes];
    y[label] = 1.0;
    Ok(y)
}

/// Intermediate values of a training-mode forward pass.
#[derive(Clone, Debug)]
pub struct ForwardCache {
    pub aggregated: Vec<Matrix>,
    pub pre_activations: Vec<Matrix>,
    pub post_activations: Vec<Matrix>,
    pub masks: Vec<DropoutMask>,
    pub graph_embedding: Vec<f64>,
    pub logits: Vec<f64>,
    pub probabilities: Vec<f64>,
    weights_fingerprint: u64,
    input_fingerprint: u64,
}

#[derive(Clone, Debug)]
pub struct ForwardOutput {
    pub z: Vec<f64>,
    pub loss: f64,
    /// Present only for training-mode passes.
    pub cache: Option<ForwardCache>,
}

fn check_dims(g: &GraphSample, w: &ModelWeights, cfg: &ModelConfig) -> Result<()> {
    if !w.matches_config(cfg) {
        return Err(Error::shape(
            "forward",
            format!("{:?}", cfg.tensor_shapes()),
            format!("{:?}", w.shapes()),
        ));
    }
    if g.feature_dim() != cfg.in_dim {
        return Err(Error::shape("forward", format!("{} node features", cfg.in_dim), g.feature_dim()));
    }
    if g.n_nodes() == 0 {
        return Err(Error::InvalidInput("graph has no nodes".into()));
    }
    Ok(())
}

fn run(g: &GraphSample, w: &ModelWeights, masks: &[DropoutMask]) -> Result<ForwardCache> {
    let mut h = g.x.clone();
    let mut cache = ForwardCache {
        aggregated: Vec::with_capacity(w.layers.len()),
        pre_activations: Vec::with_capacity(w.layers.len()),
        post_activations: Vec::with_capacity(w.layers.len()),
        masks: masks.to_vec(),
        graph_embedding: Vec::new(),
        logits: Vec::new(),
        probabilities: Vec::new(),
        weights_fingerprint: w.fingerprint(),
        input_fingerprint: fingerprint(g.x.as_slice().iter()),
    };
    for (wl, mask) in w.layers.iter().zip(masks) {
        let t = layer_apply(&h, &g.a, wl, mask)?;
        cache.aggregated.push(t.aggregated);
        cache.pre_activations.push(t.pre);
        cache.post_activations.push(t.out.clone());
        h = t.out;
    }
    cache.graph_embedding = readout(&h)?;
    cache.logits = w.classifier.matvec(&cache.graph_embedding)?;
    cache.probabilities = cache.logits.iter().map(|&l| sigmoid(l)).collect();
    Ok(cache)
}

/// Full pass: layers, readout, classifier, loss. Dropout masks are drawn
/// from `rng` only when `training`.
pub fn forward(
    g: &GraphSample,
    w: &ModelWeights,
    cfg: &ModelConfig,
    training: bool,
    rng: &mut RngStream,
) -> Result<ForwardOutput> {
    check_dims(g, w, cfg)?;
    let masks: Vec<DropoutMask> = (0..cfg.n_layers)
        .map(|_| draw_mask(g.n_nodes(), cfg.hidden_dim, cfg.dropout_rate, training, rng))
        .collect();
    let cache = run(g, w, &masks)?;
    let loss = bce_loss(&cache.probabilities, &one_hot(g.y, cfg.n_classes)?)?;
    Ok(ForwardOutput {
        z: cache.probabilities.clone(),
        loss,
        cache: training.then_some(cache),
    })
}

/// Training-mode pass with caller-supplied dropout masks, e.g. to replay a
/// cached pass under perturbed weights.
pub fn forward_with_masks(
    g: &GraphSample,
    w: &ModelWeights,
    cfg: &ModelConfig,
    masks: &[DropoutMask],
) -> Result<ForwardOutput> {
    check_dims(g, w, cfg)?;
    if masks.len() != cfg.n_layers {
        return Err(Error::shape("forward_with_masks", cfg.n_layers, masks.len()));
    }
    let cache = run(g, w, masks)?;
    let loss = bce_loss(&cache.probabilities, &one_hot(g.y, cfg.n_classes)?)?;
    Ok(ForwardOutput {
        z: cache.probabilities.clone(),
        loss,
        cache: Some(cache),
    })
}

/// Exact gradient of the loss with respect to every weight tensor, holding
/// the cached dropout masks fixed.
pub fn backward(cache: &ForwardCache, g: &GraphSample, w: &ModelWeights) -> Result<ModelWeights> {
    if cache.aggregated.len() != w.layers.len()
        || cache.logits.len() != w.classifier.rows()
        || cache.graph_embedding.len() != w.classifier.cols()
    {
        return Err(Error::StaleCache("cache shapes do not match the weights"));
    }
    if cache.weights_fingerprint != w.fingerprint() {
        return Err(Error::StaleCache("weights changed since the forward pass"));
    }
    if cache.input_fingerprint != fingerprint(g.x.as_slice().iter()) {
        return Err(Error::StaleCache("cache was produced for a different graph"));
    }
    let y = one_hot(g.y, w.classifier.rows())?;
    // dL/dlogit = z - y where the probability clamp is inactive, else 0.
    let dlogits: Vec<f64> = cache
        .probabilities
        .iter()
        .zip(&y)
        .map(|(&z, &y)| {
            if (PROB_CLAMP..=1.0 - PROB_CLAMP).contains(&z) {
                z - y
            } else {
                0.0
            }
        })
        .collect();

    let mut grads = w.zeros_like();
    let hg = &cache.graph_embedding;
    for (c, &dl) in dlogits.iter().enumerate() {
        for (gw, &h) in grads.classifier.row_mut(c).iter_mut().zip(hg) {
            *gw = dl * h;
        }
    }
    let dhg: Vec<f64> = (0..hg.len())
        .map(|j| (0..dlogits.len()).map(|c| dlogits[c] * w.classifier[(c, j)]).sum())
        .collect();

    let n = g.n_nodes();
    let mut dh = Matrix::zeros(n, hg.len());
    for v in 0..n {
        for (o, &d) in dh.row_mut(v).iter_mut().zip(&dhg) {
            *o = d / n as f64;
        }
    }

    for l in (0..w.layers.len()).rev() {
        let mut dpre = dh;
        for ((d, &m), &p) in dpre
            .as_mut_slice()
            .iter_mut()
            .zip(cache.masks[l].as_slice())
            .zip(cache.pre_activations[l].as_slice())
        {
            *d = if p > 0.0 { *d * m } else { 0.0 };
        }
        grads.layers[l] = dpre.transposed_matmul(&cache.aggregated[l])?;
        if l > 0 {
            let dm = dpre.matmul(&w.layers[l])?;
            dh = aggregate_adjoint(&dm, &g.a);
        } else {
            break;
        }
    }
    Ok(grads)
}

/// Mean-gradient Adam step over a batch; returns the mean training loss.
/// Per-sample gradients are summed in batch order.
pub fn train_batch(
    w: &mut ModelWeights,
    batch: &[&GraphSample],
    opt: &mut AdamState,
    cfg: &ModelConfig,
    rng: &mut RngStream,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::InvalidInput("training batch is empty".into()));
    }
    let mut sum = vec![0.0; w.n_params()];
    let mut loss = 0.0;
    for g in batch {
        let out = forward(g, w, cfg, true, rng)?;
        let cache = out.cache.expect("training pass keeps its cache");
        let grads = backward(&cache, g, w)?;
        for (s, v) in sum.iter_mut().zip(grads.flatten()) {
            *s += v;
        }
        loss += out.loss;
    }
    let scale = batch.len() as f64;
    sum.iter_mut().for_each(|s| *s /= scale);
    let mut params = w.flatten();
    adam_step(&mut params, &sum, opt)?;
    w.assign_flat(&params)?;
    Ok(loss / scale)
}
