use std::sync::Arc;

use proptest::collection::vec;
use proptest::prelude::*;

use fedgraph::federation::{fedavg, run_round, ClientState, RoundConfig};
use fedgraph::gnn::bce_loss;
use fedgraph::graph::{corr_knn, corr_pcc, corr_plv, Adjacency};
use fedgraph::numerics::AdamState;
use fedgraph::prelude::*;
use fedgraph::signal::split_train_test;

fn matrix(rows: usize, cols: usize, seed: u64) -> Matrix {
    let mut rng = RngStream::new(seed, 0);
    Matrix::from_vec(rows, cols, (0..rows * cols).map(|_| rng.normal()).collect()).unwrap()
}

fn permutation(n: usize, seed: u64) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    RngStream::new(seed, 1).shuffle(&mut p);
    p
}

fn max_abs_diff(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn graph(n: usize, d: usize, y: usize, seed: u64) -> GraphSample {
    let mut rng = RngStream::new(seed, 2);
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = if rng.bernoulli(0.5) { rng.uniform() } else { 0.0 };
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    GraphSample::new(matrix(n, d, seed), Arc::new(Adjacency::new(w).unwrap()), y).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pcc_and_plv_commute_with_row_permutation(n in 2usize..9, d in 4usize..40, seed in any::<u64>()) {
        let x = matrix(n, d, seed);
        let p = permutation(n, seed);
        let xp = x.permute_rows(&p);
        for f in [corr_pcc, corr_plv] {
            let direct = f(&xp).unwrap();
            let moved = f(&x).unwrap().permuted(&p);
            prop_assert!(max_abs_diff(direct.matrix(), moved.matrix()) <= 1e-9);
        }
    }

    #[test]
    fn pcc_ignores_positive_affine_row_maps(
        d in 3usize..40,
        seed in any::<u64>(),
        scale in 0.01f64..100.0,
        shift in -50.0f64..50.0,
    ) {
        let x = matrix(2, d, seed);
        let moved: Vec<f64> = x.row(0).iter().map(|v| scale * v + shift).collect();
        let y = Matrix::from_rows(&[moved.as_slice(), x.row(1)]).unwrap();
        let a = corr_pcc(&x).unwrap().weight(0, 1);
        let b = corr_pcc(&y).unwrap().weight(0, 1);
        prop_assert!((a - b).abs() <= 1e-9, "{a} vs {b}");
    }

    #[test]
    fn knn_has_at_least_k_edges_per_row(n in 2usize..12, d in 1usize..6, k in 1usize..11, seed in any::<u64>()) {
        prop_assume!(k < n);
        let cfg = CorrConfig { kind: CorrKind::Knn, k, ..CorrConfig::default() };
        let a = corr_knn(&matrix(n, d, seed), &cfg).unwrap();
        for i in 0..n {
            let ones = (0..n).filter(|&j| a.weight(i, j) == 1.0).count();
            prop_assert!(ones >= k);
        }
    }

    #[test]
    fn eval_forward_is_rng_independent(n in 1usize..8, d in 1usize..6, s1 in any::<u64>(), s2 in any::<u64>()) {
        let cfg = ModelConfig { hidden_dim: 6, ..ModelConfig::new(d) };
        let g = graph(n, d, 1, s1);
        let w = ModelWeights::init(&cfg, &mut RngStream::new(s1, 3)).unwrap();
        let a = forward(&g, &w, &cfg, false, &mut RngStream::new(s1, 0)).unwrap();
        let b = forward(&g, &w, &cfg, false, &mut RngStream::new(s2, 0)).unwrap();
        prop_assert_eq!(a.z, b.z);
        prop_assert_eq!(a.loss.to_bits(), b.loss.to_bits());
    }

    #[test]
    fn bce_is_non_negative(z in vec(0.0f64..=1.0, 1..8), hot in 0usize..8) {
        let mut y = vec![0.0; z.len()];
        y[hot % z.len()] = 1.0;
        prop_assert!(bce_loss(&z, &y).unwrap() >= 0.0);
    }

    #[test]
    fn fedavg_commutes_with_scaling(seed in any::<u64>(), n in 1usize..6, a in -10.0f64..10.0) {
        let cfg = ModelConfig { hidden_dim: 5, ..ModelConfig::new(3) };
        let mut rng = RngStream::new(seed, 0);
        let models: Vec<ModelWeights> = (0..n).map(|_| ModelWeights::init(&cfg, &mut rng).unwrap()).collect();
        let scaled: Vec<ModelWeights> = models
            .iter()
            .map(|m| {
                let flat: Vec<f64> = m.flatten().iter().map(|v| a * v).collect();
                ModelWeights::unflatten(&cfg, &flat).unwrap()
            })
            .collect();
        let lhs = fedavg(&scaled.iter().collect::<Vec<_>>()).unwrap().flatten();
        let rhs = fedavg(&models.iter().collect::<Vec<_>>()).unwrap().flatten();
        for (l, r) in lhs.iter().zip(rhs) {
            prop_assert!((l - a * r).abs() <= 1e-12);
        }
    }

    #[test]
    fn split_is_stratified_and_disjoint(counts in vec(2usize..30, 2..6), ratio in 0.05f64..0.95, seed in any::<u64>()) {
        let mut labels: Vec<usize> = counts.iter().enumerate().flat_map(|(c, &k)| vec![c; k]).collect();
        RngStream::new(seed, 0).shuffle(&mut labels);
        let set = LabelSet::new(labels.clone(), counts.len()).unwrap();
        let split = split_train_test(&set, ratio, &mut RngStream::new(seed, 1)).unwrap();
        let mut all: Vec<usize> = split.train.iter().chain(&split.test).copied().collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..labels.len()).collect::<Vec<_>>());
        for (c, &k) in counts.iter().enumerate() {
            let t = split.test.iter().filter(|&&i| labels[i] == c).count();
            prop_assert!(t >= 1 && t < k);
            prop_assert!((t as f64 - k as f64 * ratio).abs() <= 1.0);
        }
    }
}

#[test]
fn extractors_are_deterministic_and_finite() {
    let cfg = SyntheticConfig {
        n_channels: 3,
        n_epochs: 10,
        samples_per_epoch: fedgraph::features::CONV_INPUT_LEN,
        ..SyntheticConfig::default()
    };
    let data = generate(&cfg, 5, 4).unwrap();
    let conv = fedgraph::features::ConvPipelineWeights::random(&mut RngStream::new(4, 0));
    for ex in [FeatureExtractor::default(), FeatureExtractor::Conv(Box::new(conv))] {
        let a = extract_all(&data.recording, &ex).unwrap();
        let b = extract_all(&data.recording, &ex).unwrap();
        assert_eq!(a.as_slice(), b.as_slice());
        assert!(a.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(a.shape(), (10, 3, ex.output_dim()));
    }
}

/// R rounds of one client with `b` local batches each equal `R·b`
/// consecutive `train_batch` calls.
#[test]
fn one_client_rounds_equal_consecutive_steps() {
    let data: Vec<GraphSample> = (0..13).map(|i| graph(4, 3, i % 3, i as u64)).collect();
    let model = ModelConfig {
        hidden_dim: 6,
        n_classes: 3,
        ..ModelConfig::new(3)
    };
    let cfg = RoundConfig {
        model: model.clone(),
        batch_size: 4,
        local_batches_per_round: 3,
    };
    let init = ModelWeights::init(&model, &mut RngStream::new(8, 0)).unwrap();
    let shard: Vec<usize> = (0..13).collect();
    let mut clients = vec![ClientState::new(0, shard.clone(), init.clone(), 0.015, RngStream::new(9, 0)).unwrap()];
    let mut global = init.clone();
    for r in 0..4 {
        global = run_round(&global, &mut clients, &data, &data, &cfg, r).unwrap().0;
    }

    let mut w = init;
    let mut opt = AdamState::new(w.n_params(), 0.015);
    let mut rng = RngStream::new(9, 0);
    let mut order = shard.clone();
    let mut steps = 0;
    'outer: loop {
        order.copy_from_slice(&shard);
        rng.shuffle(&mut order);
        for chunk in order.chunks(4) {
            if steps == 12 {
                break 'outer;
            }
            let batch: Vec<&GraphSample> = chunk.iter().map(|&i| &data[i]).collect();
            train_batch(&mut w, &batch, &mut opt, &model, &mut rng).unwrap();
            steps += 1;
        }
    }
    assert_eq!(global, w);
}

#[test]
fn serial_and_concurrent_clients_agree() {
    let cfg = SyntheticConfig {
        n_epochs: 150,
        ..SyntheticConfig::default()
    };
    let data = generate(&cfg, 5, 6).unwrap();
    let features = extract_all(&data.recording, &FeatureExtractor::default()).unwrap();
    let graphs = assemble_dataset(&features, &data.labels, &CorrConfig::default(), None).unwrap();
    let model = ModelConfig::new(features.dim());
    let fed = FederationConfig {
        epochs: 2,
        ..FederationConfig::default()
    };
    let run = |workers| run_training(&graphs, 5, CorrKind::Plv, Mode::Federated, &model, &fed, 6, workers).unwrap();
    let (a, b) = (run(1), run(8));
    assert_eq!(a.weights, b.weights);
    assert_eq!(a.metrics_json(), b.metrics_json());
    for (ra, rb) in a.reports.iter().zip(&b.reports) {
        assert_eq!(ra.metrics, rb.metrics);
    }
}
