//! Statistical node features for one epoch of a synthetic recording.
//!
//! `cargo run --example extract_features`

use fedgraph::features::{stat_features, STAT_PREFIX};
use fedgraph::prelude::*;

fn main() -> fedgraph::Result<()> {
    let data = generate(&SyntheticConfig::default(), 5, 1)?;
    let rec = &data.recording;
    let epoch = 0;
    println!("epoch {epoch}, class {}", data.labels.labels()[epoch]);

    let names = ["mean", "std", "min", "max", "rms", "zcr"];
    let x = stat_features(&rec.epoch_f64(0, epoch), 10)?;
    for (name, v) in names.iter().zip(&x) {
        println!("  {name:>5} {v:9.4}");
    }
    for (b, v) in x[STAT_PREFIX..].iter().enumerate() {
        println!("  band{b:<2} {v:9.4}");
    }

    let features = extract_all(rec, &FeatureExtractor::default())?;
    let (t, n, d) = features.shape();
    println!("full tensor: {t} epochs × {n} nodes × {d} features");
    Ok(())
}
