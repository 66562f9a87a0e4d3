use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionParams {
    pub n_clients: usize,
    pub n_partitions: usize,
    pub partitions_per_client: usize,
}

impl Default for PartitionParams {
    fn default() -> Self {
        PartitionParams {
            n_clients: 5,
            n_partitions: 15,
            partitions_per_client: 3,
        }
    }
}

impl PartitionParams {
    pub fn validate(&self) -> Result<()> {
        if self.n_clients == 0 || self.partitions_per_client == 0 {
            return Err(Error::Config(
                "n_clients and partitions_per_client must be positive".into(),
            ));
        }
        if self.n_clients * self.partitions_per_client != self.n_partitions {
            return Err(Error::Config(format!(
                "{} clients × {} partitions each does not match {} partitions",
                self.n_clients, self.partitions_per_client, self.n_partitions
            )));
        }
        Ok(())
    }
}

/// Label-sorted shards dealt to clients.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PartitionPlan {
    pub params: PartitionParams,
    /// Sample positions (into the label slice given to the partitioner).
    pub partitions: Vec<Vec<usize>>,
    /// Partition ids held by each client.
    pub assignment: Vec<Vec<usize>>,
}

impl PartitionPlan {
    /// Sample positions held by `client`, partition by partition.
    pub fn client_samples(&self, client: usize) -> Vec<usize> {
        self.assignment[client]
            .iter()
            .flat_map(|&p| self.partitions[p].iter().copied())
            .collect()
    }
}

/// Non-IID partitioning: sort samples by label (stable in original order),
/// cut into `n_partitions` contiguous chunks of `⌊S/n⌋` with the remainder
/// spread one each over the leading chunks, shuffle the partition ids and
/// deal `partitions_per_client` to each client in turn.
pub fn partition_noniid(
    labels: &[usize],
    params: PartitionParams,
    rng: &mut RngStream,
) -> Result<PartitionPlan> {
    params.validate()?;
    let s = labels.len();
    if s < params.n_partitions {
        return Err(Error::Config(format!(
            "{s} samples cannot fill {} partitions",
            params.n_partitions
        )));
    }
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by_key(|&i| labels[i]);

    let base = s / params.n_partitions;
    let extra = s % params.n_partitions;
    let mut partitions = Vec::with_capacity(params.n_partitions);
    let mut start = 0;
    for p in 0..params.n_partitions {
        let len = base + usize::from(p < extra);
        partitions.push(order[start..start + len].to_vec());
        start += len;
    }

    let mut ids: Vec<usize> = (0..params.n_partitions).collect();
    rng.shuffle(&mut ids);
    let assignment = ids
        .chunks(params.partitions_per_client)
        .map(<[usize]>::to_vec)
        .collect();
    Ok(PartitionPlan {
        params,
        partitions,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn thirty_balanced_samples() {
        let labels: Vec<usize> = (0..30).map(|i| (i * 7) % 5).collect();
        let plan = partition_noniid(&labels, PartitionParams::default(), &mut RngStream::new(2, 0)).unwrap();
        assert_eq!(plan.partitions.len(), 15);
        for p in &plan.partitions {
            assert_eq!(p.len(), 2);
            assert_eq!(labels[p[0]], labels[p[1]]);
        }
        for c in 0..5 {
            let distinct: BTreeSet<usize> = plan.client_samples(c).iter().map(|&i| labels[i]).collect();
            assert!(distinct.len() <= 3);
        }
    }

    #[test]
    fn stable_sort_keeps_original_order_within_label() {
        let labels = [1, 0, 1, 0, 1, 0];
        let plan = partition_noniid(
            &labels,
            PartitionParams {
                n_clients: 1,
                n_partitions: 2,
                partitions_per_client: 2,
            },
            &mut RngStream::new(0, 0),
        )
        .unwrap();
        assert_eq!(plan.partitions, vec![vec![1, 3, 5], vec![0, 2, 4]]);
    }

    #[test]
    fn remainder_goes_to_leading_chunks() {
        let labels: Vec<usize> = (0..17).map(|i| i % 5).collect();
        let plan = partition_noniid(&labels, PartitionParams::default(), &mut RngStream::new(1, 0)).unwrap();
        let sizes: Vec<usize> = plan.partitions.iter().map(Vec::len).collect();
        assert_eq!(sizes, [2, 2, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn same_seed_same_plan() {
        let labels: Vec<usize> = (0..60).map(|i| i % 5).collect();
        let a = partition_noniid(&labels, PartitionParams::default(), &mut RngStream::new(5, 0)).unwrap();
        let b = partition_noniid(&labels, PartitionParams::default(), &mut RngStream::new(5, 0)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_client_holds_everything() {
        let labels: Vec<usize> = (0..45).map(|i| i % 5).collect();
        let params = PartitionParams {
            n_clients: 1,
            n_partitions: 15,
            partitions_per_client: 15,
        };
        let plan = partition_noniid(&labels, params, &mut RngStream::new(0, 0)).unwrap();
        let mut all = plan.client_samples(0);
        all.sort_unstable();
        assert_eq!(all, (0..45).collect::<Vec<_>>());
    }

    #[test]
    fn config_errors() {
        let labels = vec![0; 10];
        assert!(partition_noniid(&labels, PartitionParams::default(), &mut RngStream::new(0, 0)).is_err());
        let bad = PartitionParams {
            n_clients: 4,
            n_partitions: 15,
            partitions_per_client: 3,
        };
        assert!(matches!(
            partition_noniid(&[0; 30], bad, &mut RngStream::new(0, 0)),
            Err(Error::Config(_))
        ));
    }
}
