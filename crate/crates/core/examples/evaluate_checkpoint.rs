//! Trains briefly, saves a checkpoint, reloads it and scores the held-out
//! split, printing the confusion matrix.
//!
//! `cargo run --release --example evaluate_checkpoint -- [model.mwt]`

use fedgraph::gnn::{load_checkpoint, save_checkpoint};
use fedgraph::prelude::*;

fn main() -> fedgraph::Result<()> {
    let path = std::env::args().nth(1).unwrap_or_else(|| "model.mwt".into());
    let data = generate(&SyntheticConfig::default(), 5, 9)?;
    let features = extract_all(&data.recording, &FeatureExtractor::default())?;
    let graphs = assemble_dataset(&features, &data.labels, &CorrConfig::default(), None)?;
    let model = ModelConfig::new(features.dim());
    let fed = FederationConfig {
        epochs: 2,
        ..FederationConfig::default()
    };
    let outcome = run_training(&graphs, 5, CorrKind::Plv, Mode::Federated, &model, &fed, 9, 2)?;
    save_checkpoint(&path, &outcome.model, &outcome.weights)?;

    let (cfg, weights) = load_checkpoint(&path)?;
    let test: Vec<GraphSample> = outcome.split.test.iter().map(|&i| graphs[i].clone()).collect();
    let m = evaluate(&weights, &test, &cfg)?;
    println!("accuracy {:.4}, macro F1 {:.4}, loss {:.4}", m.accuracy, m.macro_f1, m.mean_loss);
    println!("confusion (rows = truth):");
    for row in &m.confusion {
        println!("  {row:?}");
    }
    Ok(())
}
