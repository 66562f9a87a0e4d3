//! Centralized baseline (one client's share of the data) against federated
//! training, for every correlation kind.
//!
//! `cargo run --release --example centralized_vs_federated -- [seed]`

use fedgraph::prelude::*;

fn main() -> fedgraph::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let cfg = SyntheticConfig {
        noise: 1.0,
        ..SyntheticConfig::default()
    };
    let data = generate(&cfg, 5, seed)?;
    let features = extract_all(&data.recording, &FeatureExtractor::default())?;
    let model = ModelConfig::new(features.dim());
    let fed = FederationConfig::default();
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get());

    println!("{:<5} {:>12} {:>12}", "corr", "centralized", "federated");
    for kind in CorrKind::ALL {
        let corr = CorrConfig {
            kind,
            ..CorrConfig::default()
        };
        let graphs = assemble_dataset(&features, &data.labels, &corr, Some(&data.positions))?;
        let f1 = |mode| -> fedgraph::Result<f64> {
            Ok(run_training(&graphs, 5, kind, mode, &model, &fed, seed, workers)?.final_metrics.macro_f1)
        };
        println!("{:<5} {:>12.4} {:>12.4}", kind.to_string(), f1(Mode::Centralized)?, f1(Mode::Federated)?);
    }
    Ok(())
}
