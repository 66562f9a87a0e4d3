//! Two-branch convolutional extractor: prints every intermediate shape of
//! one 3000-sample epoch and writes the (random) weights file.
//!
//! `cargo run --release --example conv_extractor -- [weights.cpw]`

use fedgraph::features::{conv_forward_traced, ConvPipelineWeights, CONV_INPUT_LEN};
use fedgraph::numerics::RngStream;

fn main() -> fedgraph::Result<()> {
    let weights = ConvPipelineWeights::random(&mut RngStream::new(42, 0));
    let mut rng = RngStream::new(42, 1);
    let epoch: Vec<f64> = (0..CONV_INPUT_LEN)
        .map(|k| (k as f64 * 0.05).sin() + 0.3 * rng.normal())
        .collect();

    let (out, trace) = conv_forward_traced(&epoch, &weights)?;
    for s in &trace {
        let dims: Vec<String> = s.shape.iter().map(usize::to_string).collect();
        println!("{:<14} {}", s.stage, dims.join(" × "));
    }
    println!("feature vector: {} values, first {:?}", out.len(), &out[..4]);

    if let Some(path) = std::env::args().nth(1) {
        weights.save(&path)?;
        assert_eq!(ConvPipelineWeights::load(&path)?, weights);
        println!("wrote {path}");
    }
    Ok(())
}
