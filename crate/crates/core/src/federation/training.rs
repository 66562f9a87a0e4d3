use std::fmt::{self, Write as _};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{partition_noniid, run_round, ClientState, PartitionParams, RoundConfig, RoundReport};
use crate::error::{Error, Result};
use crate::fsutil::write_atomic;
use crate::gnn::{save_checkpoint, Metrics, ModelConfig, ModelWeights};
use crate::graph::{CorrKind, GraphSample};
use crate::numerics::RngStream;
use crate::signal::{split_train_test, DatasetSplit, LabelSet};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Federated,
    Centralized,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Federated => "federated",
            Mode::Centralized => "centralized",
        })
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "federated" => Ok(Mode::Federated),
            "centralized" => Ok(Mode::Centralized),
            _ => Err(Error::Config(format!("unknown training mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FederationConfig {
    pub n_clients: usize,
    pub n_partitions: usize,
    pub partitions_per_client: usize,
    /// Passes over each client's shard.
    pub epochs: usize,
    pub local_batches_per_round: usize,
    /// Overrides the round count derived from `epochs`.
    pub rounds: Option<usize>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub test_ratio: f64,
}

impl Default for FederationConfig {
    fn default() -> Self {
        FederationConfig {
            n_clients: 5,
            n_partitions: 15,
            partitions_per_client: 3,
            epochs: 5,
            local_batches_per_round: 1,
            rounds: None,
            learning_rate: 0.015,
            batch_size: 8,
            test_ratio: 0.25,
        }
    }
}

impl FederationConfig {
    pub fn partition_params(&self) -> PartitionParams {
        PartitionParams {
            n_clients: self.n_clients,
            n_partitions: self.n_partitions,
            partitions_per_client: self.partitions_per_client,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.partition_params().validate()?;
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if !(self.test_ratio > 0.0 && self.test_ratio < 1.0) {
            return Err(Error::Config(format!(
                "test_ratio must lie in (0, 1), got {}",
                self.test_ratio
            )));
        }
        if self.rounds.is_none() && (self.local_batches_per_round == 0 || self.epochs == 0) {
            return Err(Error::Config(
                "epochs and local_batches_per_round must be positive unless rounds is set".into(),
            ));
        }
        Ok(())
    }

    /// `⌈max client batches × epochs / local batches per round⌉` unless
    /// overridden.
    pub fn rounds_for(&self, max_client_batches: usize) -> usize {
        self.rounds.unwrap_or_else(|| {
            (max_client_batches * self.epochs).div_ceil(self.local_batches_per_round)
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RoundMetrics {
    pub round: usize,
    pub train_loss: Vec<Option<f64>>,
    pub test_loss: f64,
    pub accuracy: f64,
    pub macro_f1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FinalMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    pub absent_classes: Vec<usize>,
    pub test_loss: f64,
}

/// Content of `metrics.json`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunMetrics {
    pub mode: Mode,
    pub corr_kind: CorrKind,
    pub rounds: usize,
    pub train_sizes: Vec<usize>,
    pub test_size: usize,
    #[serde(rename = "final")]
    pub final_metrics: FinalMetrics,
    pub per_round: Vec<RoundMetrics>,
}

#[derive(Clone, Debug)]
pub struct TrainingOutcome {
    pub mode: Mode,
    pub corr_kind: CorrKind,
    pub split: DatasetSplit,
    /// Training-set indices held by each client (one entry when centralized).
    pub client_samples: Vec<Vec<usize>>,
    pub reports: Vec<RoundReport>,
    pub final_metrics: Metrics,
    pub model: ModelConfig,
    pub weights: ModelWeights,
    pub local_batches_per_round: usize,
}

impl TrainingOutcome {
    pub fn run_metrics(&self) -> RunMetrics {
        let m = &self.final_metrics;
        RunMetrics {
            mode: self.mode,
            corr_kind: self.corr_kind,
            rounds: self.reports.len(),
            train_sizes: self.client_samples.iter().map(Vec::len).collect(),
            test_size: self.split.test.len(),
            final_metrics: FinalMetrics {
                accuracy: m.accuracy,
                macro_f1: m.macro_f1,
                per_class_f1: m.per_class_f1.clone(),
                absent_classes: m.absent_classes.clone(),
                test_loss: m.mean_loss,
            },
            per_round: self
                .reports
                .iter()
                .map(|r| RoundMetrics {
                    round: r.round,
                    train_loss: r.client_mean_loss.clone(),
                    test_loss: r.test_loss,
                    accuracy: r.metrics.accuracy,
                    macro_f1: r.metrics.macro_f1,
                })
                .collect(),
        }
    }

    pub fn metrics_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.run_metrics()).expect("metrics serialize");
        s.push('\n');
        s
    }

    /// `round,client,batch,split,loss`: one train row per local batch
    /// (`batch` is the client's running batch index), then one test row per
    /// round with `client = -1` and `batch` the per-client batch count so far.
    pub fn losses_csv(&self) -> String {
        let mut out = String::from("round,client,batch,split,loss\n");
        let per_round = self.local_batches_per_round;
        for r in &self.reports {
            for (client, losses) in r.client_batch_losses.iter().enumerate() {
                for (b, loss) in losses.iter().enumerate() {
                    writeln!(out, "{},{},{},train,{}", r.round, client, r.round * per_round + b, loss)
                        .unwrap();
                }
            }
            writeln!(out, "{},-1,{},test,{}", r.round, (r.round + 1) * per_round, r.test_loss)
                .unwrap();
        }
        out
    }
}

/// Split, partition (or sample), train and evaluate. The whole run is a
/// function of `(data, cfg, seed)`; the worker count only changes speed.
#[allow(clippy::too_many_arguments)]
pub fn run_training(
    data: &[GraphSample],
    n_classes: usize,
    corr_kind: CorrKind,
    mode: Mode,
    model: &ModelConfig,
    cfg: &FederationConfig,
    seed: u64,
    workers: usize,
) -> Result<TrainingOutcome> {
    cfg.validate()?;
    model.validate()?;
    if data.is_empty() {
        return Err(Error::InvalidInput("no graphs to train on".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| train_inner(data, n_classes, corr_kind, mode, model, cfg, seed))
}

fn train_inner(
    data: &[GraphSample],
    n_classes: usize,
    corr_kind: CorrKind,
    mode: Mode,
    model: &ModelConfig,
    cfg: &FederationConfig,
    seed: u64,
) -> Result<TrainingOutcome> {
    let labels = LabelSet::new(data.iter().map(|g| g.y).collect(), n_classes)?;
    let split = split_train_test(&labels, cfg.test_ratio, &mut RngStream::derived(seed, "split", 0))?;
    let train: Vec<GraphSample> = split.train.iter().map(|&i| data[i].clone()).collect();
    let test: Vec<GraphSample> = split.test.iter().map(|&i| data[i].clone()).collect();

    // Shards are positions into `train`.
    let shards: Vec<Vec<usize>> = match mode {
        Mode::Federated => {
            let train_labels: Vec<usize> = train.iter().map(|g| g.y).collect();
            let plan = partition_noniid(
                &train_labels,
                cfg.partition_params(),
                &mut RngStream::derived(seed, "partition", 0),
            )?;
            (0..cfg.n_clients).map(|c| plan.client_samples(c)).collect()
        }
        Mode::Centralized => {
            let share = train.len() / cfg.n_clients;
            if share == 0 {
                return Err(Error::Config(format!(
                    "{} training graphs leave no share for each of {} clients",
                    train.len(),
                    cfg.n_clients
                )));
            }
            let mut pool: Vec<usize> = (0..train.len()).collect();
            RngStream::derived(seed, "centralized", 0).shuffle(&mut pool);
            let mut chosen = pool[..share].to_vec();
            chosen.sort_unstable();
            vec![chosen]
        }
    };

    let mut global = ModelWeights::init(model, &mut RngStream::derived(seed, "init", 0))?;
    let mut clients = shards
        .iter()
        .enumerate()
        .map(|(id, s)| {
            ClientState::new(
                id,
                s.clone(),
                global.clone(),
                cfg.learning_rate,
                RngStream::derived(seed, "client", id as u64),
            )
        })
        .collect::<Result<Vec<_>>>()?;

    let max_batches = clients
        .iter()
        .map(|c| c.n_batches(cfg.batch_size))
        .max()
        .unwrap_or(0);
    let rounds = cfg.rounds_for(max_batches);
    let round_cfg = RoundConfig {
        model: model.clone(),
        batch_size: cfg.batch_size,
        local_batches_per_round: cfg.local_batches_per_round,
    };
    let mut reports = Vec::with_capacity(rounds);
    for round in 0..rounds {
        let (next, report) = run_round(&global, &mut clients, &train, &test, &round_cfg, round)?;
        global = next;
        reports.push(report);
    }
    let final_metrics = match reports.last() {
        Some(r) => r.metrics.clone(),
        None => crate::gnn::evaluate(&global, &test, model)?,
    };
    let client_samples = shards
        .iter()
        .map(|s| s.iter().map(|&p| split.train[p]).collect())
        .collect();
    Ok(TrainingOutcome {
        mode,
        corr_kind,
        split,
        client_samples,
        reports,
        final_metrics,
        model: model.clone(),
        weights: global,
        local_batches_per_round: cfg.local_batches_per_round,
    })
}

/// Writes `metrics.json` and `losses.csv` into `dir` and the final global
/// model to `checkpoint`.
pub fn write_artifacts(outcome: &TrainingOutcome, dir: &Path, checkpoint: &Path) -> Result<()> {
    write_atomic(&dir.join("metrics.json"), outcome.metrics_json().as_bytes())?;
    write_atomic(&dir.join("losses.csv"), outcome.losses_csv().as_bytes())?;
    save_checkpoint(checkpoint, &outcome.model, &outcome.weights)
}
