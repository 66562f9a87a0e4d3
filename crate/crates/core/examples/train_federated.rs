//! Synthetic recording → stat features → PLV graphs → federated training.
//!
//! `cargo run --release --example train_federated -- [seed] [workers]`

use std::time::Instant;

use fedgraph::prelude::*;

fn main() -> fedgraph::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed: u64 = args.next().map_or(0, |s| s.parse().expect("seed"));
    let workers: usize = args.next().map_or(4, |s| s.parse().expect("workers"));

    let started = Instant::now();
    let data = generate(&SyntheticConfig::default(), 5, seed)?;
    let features = extract_all(&data.recording, &FeatureExtractor::default())?;
    let graphs = assemble_dataset(&features, &data.labels, &CorrConfig::default(), None)?;
    let model = ModelConfig::new(features.dim());
    let fed = FederationConfig::default();
    let outcome = run_training(&graphs, 5, CorrKind::Plv, Mode::Federated, &model, &fed, seed, workers)?;

    for r in &outcome.reports {
        if r.round % 10 == 0 || r.round + 1 == outcome.reports.len() {
            println!(
                "round {:3}  test loss {:.4}  accuracy {:.3}  macro F1 {:.3}",
                r.round, r.test_loss, r.metrics.accuracy, r.metrics.macro_f1
            );
        }
    }
    let m = &outcome.final_metrics;
    println!("client shard sizes: {:?}", outcome.client_samples.iter().map(Vec::len).collect::<Vec<_>>());
    println!("per-class F1: {:?}", m.per_class_f1);
    println!("final macro F1 {:.4} after {:.1?}", m.macro_f1, started.elapsed());
    Ok(())
}
