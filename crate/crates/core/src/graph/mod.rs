//! Graph construction: adjacency from node correlation, one labelled graph
//! per epoch.

mod corr;
mod gds;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureTensor;
use crate::numerics::Matrix;
use crate::signal::{ElectrodePositions, LabelSet};

pub use corr::{corr_db, corr_knn, corr_pcc, corr_plv};
pub use gds::{GraphDataset, GraphMeta, GENERATOR_VERSION};

/// Symmetric, zero-diagonal, `[0, 1]`-valued weight matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct Adjacency(Matrix);

impl Adjacency {
    pub fn new(weights: Matrix) -> Result<Self> {
        let (n, m) = weights.shape();
        if n != m {
            return Err(Error::shape("Adjacency::new", "square matrix", format!("{n}x{m}")));
        }
        for i in 0..n {
            if weights[(i, i)] != 0.0 {
                return Err(Error::InvalidInput(format!("adjacency diagonal at {i} is not 0")));
            }
            for j in 0..n {
                let w = weights[(i, j)];
                if !(0.0..=1.0).contains(&w) {
                    return Err(Error::InvalidInput(format!(
                        "adjacency weight ({i},{j}) = {w} outside [0, 1]"
                    )));
                }
                if (w - weights[(j, i)]).abs() > 1e-12 {
                    return Err(Error::InvalidInput(format!(
                        "adjacency not symmetric at ({i},{j})"
                    )));
                }
            }
        }
        Ok(Adjacency(weights))
    }

    /// Graph with no edges.
    pub fn empty(n: usize) -> Self {
        Adjacency(Matrix::zeros(n, n))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Zeroes every weight below `tau`.
    pub fn pruned(&self, tau: f64) -> Adjacency {
        let mut m = self.0.clone();
        for v in m.as_mut_slice() {
            if *v < tau {
                *v = 0.0;
            }
        }
        Adjacency(m)
    }

    /// `P·A·Pᵀ` for the node relabelling `perm`.
    pub fn permuted(&self, perm: &[usize]) -> Adjacency {
        Adjacency(self.0.permute_symmetric(perm))
    }
}

/// One labelled graph. DB graphs share a single adjacency across samples.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphSample {
    pub x: Matrix,
    pub a: Arc<Adjacency>,
    pub y: usize,
}

impl GraphSample {
    pub fn new(x: Matrix, a: Arc<Adjacency>, y: usize) -> Result<Self> {
        if x.rows() != a.n() {
            return Err(Error::shape(
                "GraphSample::new",
                format!("{} feature rows", a.n()),
                x.rows(),
            ));
        }
        Ok(GraphSample { x, a, y })
    }

    pub fn n_nodes(&self) -> usize {
        self.x.rows()
    }

    pub fn feature_dim(&self) -> usize {
        self.x.cols()
    }

    pub fn permuted(&self, perm: &[usize]) -> GraphSample {
        GraphSample {
            x: self.x.permute_rows(perm),
            a: Arc::new(self.a.permuted(perm)),
            y: self.y,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorrKind {
    Db,
    Knn,
    Pcc,
    Plv,
}

impl CorrKind {
    pub const ALL: [CorrKind; 4] = [CorrKind::Db, CorrKind::Knn, CorrKind::Pcc, CorrKind::Plv];

    pub fn as_str(self) -> &'static str {
        match self {
            CorrKind::Db => "db",
            CorrKind::Knn => "knn",
            CorrKind::Pcc => "pcc",
            CorrKind::Plv => "plv",
        }
    }
}

impl fmt::Display for CorrKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CorrKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CorrKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(format!("unknown correlation kind {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CorrConfig {
    pub kind: CorrKind,
    /// Neighbour count for `knn`.
    pub k: usize,
    /// Kernel width for `db`; `None` uses the mean pairwise distance.
    pub sigma: Option<f64>,
    /// Weights below this are dropped after construction.
    pub threshold: f64,
}

impl Default for CorrConfig {
    fn default() -> Self {
        CorrConfig {
            kind: CorrKind::Plv,
            k: 3,
            sigma: None,
            threshold: 0.0,
        }
    }
}

impl CorrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.threshold) {
            return Err(Error::Config(format!(
                "threshold must lie in [0, 1), got {}",
                self.threshold
            )));
        }
        if self.kind == CorrKind::Knn && self.k == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        if let Some(s) = self.sigma {
            if !(s > 0.0 && s.is_finite()) {
                return Err(Error::Config(format!("sigma must be positive, got {s}")));
            }
        }
        Ok(())
    }

    /// Feature-driven adjacency for one snapshot (every kind except `db`).
    pub fn correlate(&self, x: &Matrix) -> Result<Adjacency> {
        match self.kind {
            CorrKind::Knn => corr_knn(x, self),
            CorrKind::Pcc => corr_pcc(x),
            CorrKind::Plv => corr_plv(x),
            CorrKind::Db => Err(Error::Config(
                "distance-based adjacency is computed from electrode positions".into(),
            )),
        }
    }
}

/// One graph per epoch. `db` computes a single adjacency from `positions`
/// and shares it; the other kinds correlate each epoch's feature snapshot.
pub fn assemble_dataset(
    features: &FeatureTensor,
    labels: &LabelSet,
    cfg: &CorrConfig,
    positions: Option<&ElectrodePositions>,
) -> Result<Vec<GraphSample>> {
    cfg.validate()?;
    if labels.len() != features.n_epochs() {
        return Err(Error::InvalidInput(format!(
            "{} labels for {} feature epochs",
            labels.len(),
            features.n_epochs()
        )));
    }
    let shared = match cfg.kind {
        CorrKind::Db => {
            let pos = positions.ok_or_else(|| {
                Error::Config("distance-based correlation requires electrode positions".into())
            })?;
            if pos.len() != features.n_nodes() {
                return Err(Error::InvalidInput(format!(
                    "{} electrode positions for {} nodes",
                    pos.len(),
                    features.n_nodes()
                )));
            }
            Some(Arc::new(corr_db(pos, cfg)?.pruned(cfg.threshold)))
        }
        _ => None,
    };
    let results: Vec<Result<GraphSample>> = (0..features.n_epochs())
        .into_par_iter()
        .map(|t| {
            let x = features.snapshot(t);
            let a = match &shared {
                Some(a) => Arc::clone(a),
                None => Arc::new(cfg.correlate(&x)?.pruned(cfg.threshold)),
            };
            GraphSample::new(x, a, labels.labels()[t])
        })
        .collect();
    results
        .into_iter()
        .enumerate()
        .map(|(index, r)| {
            r.map_err(|e| Error::AtTimestamp {
                index,
                source: Box::new(e),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::RngStream;

    fn features(t: usize, n: usize, d: usize, seed: u64) -> FeatureTensor {
        let mut rng = RngStream::new(seed, 0);
        let data = (0..t * n * d).map(|_| rng.normal()).collect();
        FeatureTensor::new(t, n, d, "stat", data).unwrap()
    }

    #[test]
    fn pcc_dataset_has_one_graph_per_epoch() {
        let f = features(3, 4, 6, 1);
        let labels = LabelSet::new(vec![0, 1, 2], 3).unwrap();
        let cfg = CorrConfig {
            kind: CorrKind::Pcc,
            ..Default::default()
        };
        let ds = assemble_dataset(&f, &labels, &cfg, None).unwrap();
        assert_eq!(ds.len(), 3);
        assert_ne!(ds[0].a, ds[1].a);
        assert_eq!(ds[2].y, 2);
        assert_eq!(ds[1].x, f.snapshot(1));
    }

    #[test]
    fn db_dataset_shares_adjacency() {
        let f = features(3, 3, 4, 2);
        let labels = LabelSet::new(vec![0, 0, 1], 2).unwrap();
        let pos = ElectrodePositions::new(vec![
            ("a".into(), [0.0, 0.0, 0.0]),
            ("b".into(), [1.0, 0.0, 0.0]),
            ("c".into(), [0.0, 2.0, 0.0]),
        ])
        .unwrap();
        let cfg = CorrConfig {
            kind: CorrKind::Db,
            ..Default::default()
        };
        let ds = assemble_dataset(&f, &labels, &cfg, Some(&pos)).unwrap();
        assert!(Arc::ptr_eq(&ds[0].a, &ds[1].a));
        assert!(Arc::ptr_eq(&ds[1].a, &ds[2].a));
        assert!(matches!(
            assemble_dataset(&f, &labels, &cfg, None),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn threshold_prunes_weak_edges() {
        let f = features(4, 6, 8, 3);
        let labels = LabelSet::new(vec![0; 4], 1).unwrap();
        let cfg = CorrConfig {
            kind: CorrKind::Pcc,
            threshold: 0.9,
            ..Default::default()
        };
        for g in assemble_dataset(&f, &labels, &cfg, None).unwrap() {
            assert!(g.a.matrix().as_slice().iter().all(|&w| w == 0.0 || w >= 0.9));
        }
    }

    #[test]
    fn failing_timestamp_is_reported() {
        let mut data: Vec<f64> = (0..2 * 2 * 4).map(|i| (i * 7 % 5) as f64).collect();
        // epoch 1, node 0 flat
        for v in &mut data[8..12] {
            *v = 3.0;
        }
        let f = FeatureTensor::new(2, 2, 4, "stat", data).unwrap();
        let labels = LabelSet::new(vec![0, 1], 2).unwrap();
        let cfg = CorrConfig {
            kind: CorrKind::Pcc,
            ..Default::default()
        };
        match assemble_dataset(&f, &labels, &cfg, None) {
            Err(Error::AtTimestamp { index, .. }) => assert_eq!(index, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn adjacency_rejects_invalid_matrices() {
        let asym = Matrix::from_rows(&[[0.0, 0.5], [0.4, 0.0]]).unwrap();
        assert!(Adjacency::new(asym).is_err());
        let diag = Matrix::from_rows(&[[1.0, 0.5], [0.5, 0.0]]).unwrap();
        assert!(Adjacency::new(diag).is_err());
        let big = Matrix::from_rows(&[[0.0, 1.5], [1.5, 0.0]]).unwrap();
        assert!(Adjacency::new(big).is_err());
    }

    #[test]
    fn corr_kind_parses() {
        assert_eq!("PLV".parse::<CorrKind>().unwrap(), CorrKind::Plv);
        assert!("gat".parse::<CorrKind>().is_err());
    }
}
