//! Deterministic federated graph classification of multichannel recordings.
//!
//! The pipeline turns a recording of `N` channels into one graph per epoch
//! (nodes are channels, node features come from a per-epoch extractor, edges
//! from a node correlation function), then trains a message-passing graph
//! classifier either centrally or with federated averaging across simulated
//! clients holding label-skewed shards.
//!
//! ```no_run
//! use fedgraph::prelude::*;
//!
//! let data = generate(&SyntheticConfig::default(), 5, 7)?;
//! let features = extract_all(&data.recording, &FeatureExtractor::default())?;
//! let graphs = assemble_dataset(&features, &data.labels, &CorrConfig::default(), None)?;
//! let model = ModelConfig::new(features.dim());
//! let outcome = run_training(
//!     &graphs, 5, CorrKind::Plv, Mode::Federated, &model, &FederationConfig::default(), 7, 4,
//! )?;
//! println!("macro F1 {:.3}", outcome.final_metrics.macro_f1);
//! # Ok::<(), fedgraph::Error>(())
//! ```

pub mod cli;
pub mod config;
pub mod error;
pub mod features;
pub mod federation;
mod fsutil;
pub mod gnn;
pub mod graph;
pub mod numerics;
pub mod signal;
pub mod synthetic;

pub use error::{Error, Result};
pub use fsutil::write_atomic;

pub mod prelude {
    pub use crate::config::ExperimentConfig;
    pub use crate::error::{Error, Result};
    pub use crate::features::{extract_all, FeatureExtractor, FeatureTensor};
    pub use crate::federation::{run_training, FederationConfig, Mode, TrainingOutcome};
    pub use crate::gnn::{evaluate, forward, train_batch, ModelConfig, ModelWeights};
    pub use crate::graph::{assemble_dataset, CorrConfig, CorrKind, GraphDataset, GraphSample};
    pub use crate::numerics::{Matrix, RngStream};
    pub use crate::signal::{LabelSet, Recording};
    pub use crate::synthetic::{generate, SyntheticConfig};
}
