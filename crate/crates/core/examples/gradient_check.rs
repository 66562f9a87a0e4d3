//! Compares hand-derived gradients with central finite differences on a
//! random graph, holding the dropout masks fixed.
//!
//! `cargo run --example gradient_check -- [seed]`

use std::sync::Arc;

use fedgraph::gnn::{backward, forward_with_masks};
use fedgraph::graph::Adjacency;
use fedgraph::prelude::*;

fn main() -> fedgraph::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let mut rng = RngStream::new(seed, 0);
    let (n, d) = (5, 6);
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = rng.uniform();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    let x = Matrix::from_vec(n, d, (0..n * d).map(|_| rng.normal()).collect())?;
    let g = GraphSample::new(x, Arc::new(Adjacency::new(a)?), 2)?;
    let cfg = ModelConfig {
        hidden_dim: 8,
        ..ModelConfig::new(d)
    };
    let w = ModelWeights::init(&cfg, &mut rng)?;

    let out = forward(&g, &w, &cfg, true, &mut rng)?;
    let cache = out.cache.expect("training pass keeps its cache");
    let analytic = backward(&cache, &g, &w)?.flatten();

    let eps = 1e-5;
    let base = w.flatten();
    let mut probe = w.clone();
    let mut worst = 0.0f64;
    for p in 0..base.len() {
        let mut flat = base.clone();
        flat[p] += eps;
        probe.assign_flat(&flat)?;
        let up = forward_with_masks(&g, &probe, &cfg, &cache.masks)?.loss;
        flat[p] -= 2.0 * eps;
        probe.assign_flat(&flat)?;
        let down = forward_with_masks(&g, &probe, &cfg, &cache.masks)?.loss;
        let numeric = (up - down) / (2.0 * eps);
        worst = worst.max((numeric - analytic[p]).abs());
    }
    println!("loss {:.6}, {} parameters", out.loss, base.len());
    println!("max |analytic - numeric| = {worst:.3e}");
    Ok(())
}
