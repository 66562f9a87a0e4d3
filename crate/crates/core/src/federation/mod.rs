//! Federated averaging over simulated clients, plus the centralized
//! baseline.
//!
//! A round hands the global weights to every client, lets each run a fixed
//! number of local batches on its own shard, and averages the uploaded
//! weights with equal client weight. Clients own their optimizer state and
//! random stream; the server is the only writer of the global model.

mod partition;
mod training;

use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gnn::{evaluate, train_batch, Metrics, ModelConfig, ModelWeights};
use crate::graph::GraphSample;
use crate::numerics::{AdamState, Matrix, RngStream};

pub use partition::{partition_noniid, PartitionParams, PartitionPlan};
pub use training::{
    run_training, write_artifacts, FederationConfig, Mode, RoundMetrics, RunMetrics,
    TrainingOutcome,
};

/// One simulated client: its shard, local model, optimizer and stream.
#[derive(Clone, Debug)]
pub struct ClientState {
    pub id: usize,
    samples: Vec<usize>,
    pub weights: ModelWeights,
    pub opt: AdamState,
    pub rng: RngStream,
    order: Vec<usize>,
    cursor: usize,
    steps: usize,
}

impl ClientState {
    /// `samples` index into the shared training data.
    pub fn new(
        id: usize,
        samples: Vec<usize>,
        weights: ModelWeights,
        lr: f64,
        rng: RngStream,
    ) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Config(format!("client {id} has no training samples")));
        }
        let opt = AdamState::new(weights.n_params(), lr);
        Ok(ClientState {
            id,
            order: samples.clone(),
            samples,
            weights,
            opt,
            rng,
            cursor: 0,
            steps: 0,
        })
    }

    pub fn samples(&self) -> &[usize] {
        &self.samples
    }

    pub fn n_batches(&self, batch_size: usize) -> usize {
        self.samples.len().div_ceil(batch_size)
    }

    /// Local batches completed so far.
    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Next batch of sample indices. Each pass over the shard starts by
    /// reshuffling it with the client's stream.
    pub fn next_batch(&mut self, batch_size: usize) -> Vec<usize> {
        if self.cursor == 0 {
            self.order.copy_from_slice(&self.samples);
            self.rng.shuffle(&mut self.order);
        }
        let start = self.cursor * batch_size;
        let end = (start + batch_size).min(self.order.len());
        let batch = self.order[start..end].to_vec();
        self.cursor = (self.cursor + 1) % self.n_batches(batch_size);
        batch
    }

    /// One local `train_batch` on the next batch; returns its mean loss.
    pub fn local_step(
        &mut self,
        data: &[GraphSample],
        cfg: &ModelConfig,
        batch_size: usize,
    ) -> Result<f64> {
        let idx = self.next_batch(batch_size);
        let batch: Vec<&GraphSample> = idx.iter().map(|&i| &data[i]).collect();
        let loss = train_batch(&mut self.weights, &batch, &mut self.opt, cfg, &mut self.rng)?;
        self.steps += 1;
        Ok(loss)
    }
}

/// Element-wise unweighted mean, `(1/n) Σ Wᵢ`, accumulated in client order
/// as `W₀ + Σ (Wᵢ − W₀)/n` so that averaging identical models is exact.
pub fn fedavg(models: &[&ModelWeights]) -> Result<ModelWeights> {
    let first = *models
        .first()
        .ok_or_else(|| Error::InvalidInput("fedavg needs at least one model".into()))?;
    let shapes = first.shapes();
    for (i, m) in models.iter().enumerate() {
        if m.shapes() != shapes {
            return Err(Error::shape(
                "fedavg",
                format!("{shapes:?}"),
                format!("{:?} from client {i}", m.shapes()),
            ));
        }
    }
    let n = models.len() as f64;
    let mut out = first.clone();
    for (k, t) in out.tensors_mut().enumerate() {
        let base = tensor(first, k).as_slice();
        for (j, o) in t.as_mut_slice().iter_mut().enumerate() {
            let mut acc = 0.0;
            for m in models {
                acc += (tensor(m, k).as_slice()[j] - base[j]) / n;
            }
            *o = base[j] + acc;
        }
    }
    Ok(out)
}

fn tensor(w: &ModelWeights, k: usize) -> &Matrix {
    if k < w.layers.len() {
        &w.layers[k]
    } else {
        &w.classifier
    }
}

#[derive(Clone, Debug)]
pub struct RoundConfig {
    pub model: ModelConfig,
    pub batch_size: usize,
    pub local_batches_per_round: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct RoundReport {
    pub round: usize,
    /// Per client, the loss of every local batch in this round.
    pub client_batch_losses: Vec<Vec<f64>>,
    /// Per client mean of the above; `None` when no batch ran.
    pub client_mean_loss: Vec<Option<f64>>,
    pub test_loss: f64,
    pub metrics: Metrics,
    #[serde(skip)]
    pub wall_clock: Duration,
}

/// Distribute, train locally, aggregate, evaluate. Clients run in parallel
/// on the current rayon pool; aggregation is in ascending client order.
pub fn run_round(
    global: &ModelWeights,
    clients: &mut [ClientState],
    train: &[GraphSample],
    test: &[GraphSample],
    cfg: &RoundConfig,
    round: usize,
) -> Result<(ModelWeights, RoundReport)> {
    if clients.is_empty() {
        return Err(Error::Config("a round needs at least one client".into()));
    }
    let started = Instant::now();
    let losses: Vec<Vec<f64>> = clients
        .par_iter_mut()
        .map(|c| {
            c.weights = global.clone();
            (0..cfg.local_batches_per_round)
                .map(|_| c.local_step(train, &cfg.model, cfg.batch_size))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let uploads: Vec<&ModelWeights> = clients.iter().map(|c| &c.weights).collect();
    let next = fedavg(&uploads)?;
    let metrics = evaluate(&next, test, &cfg.model)?;
    let client_mean_loss = losses
        .iter()
        .map(|l| (!l.is_empty()).then(|| l.iter().sum::<f64>() / l.len() as f64))
        .collect();
    Ok((
        next,
        RoundReport {
            round,
            client_batch_losses: losses,
            client_mean_loss,
            test_loss: metrics.mean_loss,
            metrics,
            wall_clock: started.elapsed(),
        },
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Adjacency;
    use std::sync::Arc;

    fn weights(vals: &[f64]) -> ModelWeights {
        ModelWeights {
            layers: vec![Matrix::from_vec(1, vals.len(), vals.to_vec()).unwrap()],
            classifier: Matrix::from_vec(1, 1, vec![vals[0]]).unwrap(),
        }
    }

    #[test]
    fn fedavg_arithmetic_mean() {
        let m = fedavg(&[&weights(&[2.0]), &weights(&[4.0])]).unwrap();
        assert_eq!(m.layers[0].as_slice(), [3.0]);
    }

    #[test]
    fn fedavg_of_equals_is_exact() {
        let w = weights(&[0.1, 1.0 / 3.0, -7.25e-3]);
        let m = fedavg(&[&w, &w, &w, &w, &w]).unwrap();
        assert_eq!(m, w);
        assert_eq!(fedavg(&[&w]).unwrap(), w);
    }

    #[test]
    fn fedavg_shape_mismatch() {
        assert!(fedavg(&[&weights(&[1.0]), &weights(&[1.0, 2.0])]).is_err());
        assert!(fedavg(&[]).is_err());
    }

    fn toy_data(n: usize) -> Vec<GraphSample> {
        (0..n)
            .map(|i| {
                let x = Matrix::from_rows(&[[i as f64 * 0.1, 1.0], [0.5, (i % 3) as f64]]).unwrap();
                let a = Adjacency::new(Matrix::from_rows(&[[0.0, 1.0], [1.0, 0.0]]).unwrap()).unwrap();
                GraphSample::new(x, Arc::new(a), i % 2).unwrap()
            })
            .collect()
    }

    fn round_cfg(local: usize) -> RoundConfig {
        RoundConfig {
            model: ModelConfig {
                hidden_dim: 4,
                n_classes: 2,
                ..ModelConfig::new(2)
            },
            batch_size: 3,
            local_batches_per_round: local,
        }
    }

    #[test]
    fn identical_clients_match_single_client() {
        let data = toy_data(9);
        let cfg = round_cfg(2);
        let global = ModelWeights::init(&cfg.model, &mut RngStream::new(0, 0)).unwrap();
        let make = |id| {
            ClientState::new(id, (0..9).collect(), global.clone(), 0.015, RngStream::new(7, 0)).unwrap()
        };
        let mut many = vec![make(0), make(1), make(2)];
        let mut one = vec![make(0)];
        let (a, _) = run_round(&global, &mut many, &data, &data, &cfg, 0).unwrap();
        let (b, _) = run_round(&global, &mut one, &data, &data, &cfg, 0).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn zero_local_batches_is_no_op() {
        let data = toy_data(6);
        let cfg = round_cfg(0);
        let global = ModelWeights::init(&cfg.model, &mut RngStream::new(1, 0)).unwrap();
        let mut clients: Vec<ClientState> = (0..3)
            .map(|i| {
                ClientState::new(i, vec![i, i + 3], global.clone(), 0.015, RngStream::new(1, i as u64))
                    .unwrap()
            })
            .collect();
        let (next, report) = run_round(&global, &mut clients, &data, &data, &cfg, 4).unwrap();
        assert_eq!(next, global);
        assert_eq!(report.round, 4);
        assert!(report.client_mean_loss.iter().all(Option::is_none));
    }

    #[test]
    fn batches_cycle_through_shard() {
        let w = ModelWeights::zeros(&round_cfg(1).model);
        let mut c = ClientState::new(0, (10..17).collect(), w, 0.01, RngStream::new(0, 0)).unwrap();
        assert_eq!(c.n_batches(3), 3);
        let mut seen: Vec<usize> = (0..3).flat_map(|_| c.next_batch(3)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (10..17).collect::<Vec<_>>());
        assert_eq!(c.next_batch(3).len(), 3);
    }

    #[test]
    fn empty_client_rejected() {
        let w = ModelWeights::zeros(&round_cfg(1).model);
        assert!(matches!(
            ClientState::new(0, vec![], w, 0.01, RngStream::new(0, 0)),
            Err(Error::Config(_))
        ));
    }
}
