//! Builds one graph per epoch with each feature-driven correlation and
//! round-trips the PLV dataset through a `.gds` file.
//!
//! `cargo run --release --example build_graphs -- [out.gds]`

use fedgraph::graph::{GraphMeta, GENERATOR_VERSION};
use fedgraph::prelude::*;

fn main() -> fedgraph::Result<()> {
    let cfg = SyntheticConfig {
        n_epochs: 60,
        ..SyntheticConfig::default()
    };
    let data = generate(&cfg, 5, 3)?;
    let features = extract_all(&data.recording, &FeatureExtractor::default())?;

    for kind in [CorrKind::Knn, CorrKind::Pcc, CorrKind::Plv] {
        let corr = CorrConfig {
            kind,
            ..CorrConfig::default()
        };
        let graphs = assemble_dataset(&features, &data.labels, &corr, None)?;
        let n = graphs[0].n_nodes();
        let mean_degree: f64 = graphs
            .iter()
            .map(|g| g.a.matrix().as_slice().iter().sum::<f64>() / n as f64)
            .sum::<f64>()
            / graphs.len() as f64;
        println!("{kind}: {} graphs, mean weighted degree {mean_degree:.3}", graphs.len());
    }
    let db = CorrConfig {
        kind: CorrKind::Db,
        ..CorrConfig::default()
    };
    let graphs = assemble_dataset(&features, &data.labels, &db, Some(&data.positions))?;
    println!("db: one shared adjacency, weight(0,1) = {:.3}", graphs[0].a.weight(0, 1));

    let path = std::env::args().nth(1).unwrap_or_else(|| "graphs.gds".into());
    let samples = assemble_dataset(&features, &data.labels, &CorrConfig::default(), None)?;
    let meta = GraphMeta {
        corr_kind: CorrKind::Plv,
        extractor_kind: features.extractor().into(),
        n: features.n_nodes(),
        d: features.dim(),
        n_classes: 5,
        generator_version: GENERATOR_VERSION,
    };
    let ds = GraphDataset::new(meta, samples)?;
    ds.save(&path)?;
    assert_eq!(GraphDataset::load(&path)?, ds);
    println!("wrote {path} and read it back unchanged");
    Ok(())
}
