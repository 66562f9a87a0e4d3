//! Label-skewed partitioning of a balanced label set across 5 clients.
//!
//! `cargo run --example noniid_partition -- [seed]`

use fedgraph::federation::{partition_noniid, PartitionParams};
use fedgraph::numerics::RngStream;

fn main() -> fedgraph::Result<()> {
    let seed: u64 = std::env::args().nth(1).map_or(0, |s| s.parse().expect("seed"));
    let mut rng = RngStream::new(seed, 0);
    let mut labels: Vec<usize> = (0..375).map(|i| i % 5).collect();
    rng.shuffle(&mut labels);

    let plan = partition_noniid(&labels, PartitionParams::default(), &mut rng)?;
    for (p, part) in plan.partitions.iter().enumerate() {
        println!("partition {p:2}: {} samples of label {}", part.len(), labels[part[0]]);
    }
    for c in 0..5 {
        let mut counts = [0usize; 5];
        for i in plan.client_samples(c) {
            counts[labels[i]] += 1;
        }
        println!("client {c}: partitions {:?}, label counts {counts:?}", plan.assignment[c]);
    }
    Ok(())
}
