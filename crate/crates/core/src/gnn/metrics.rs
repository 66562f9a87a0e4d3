use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{ModelConfig, ModelWeights};
use super::ops::forward;
use crate::error::{Error, Result};
use crate::graph::GraphSample;
use crate::numerics::RngStream;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class_f1: Vec<f64>,
    /// Classes that appear in neither truth nor predictions; their F1 is 0.
    pub absent_classes: Vec<usize>,
    pub mean_loss: f64,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<usize>>,
}

/// Index of the largest probability; ties go to the lower class.
pub fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in z.iter().enumerate() {
        if v > z[best] {
            best = i;
        }
    }
    best
}

/// Accuracy and per-class / macro F1 from label pairs. F1 is 0 whenever
/// precision + recall is 0.
pub fn classification_metrics(truth: &[usize], predicted: &[usize], n_classes: usize) -> Metrics {
    assert_eq!(truth.len(), predicted.len());
    let mut confusion = vec![vec![0usize; n_classes]; n_classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        confusion[t][p] += 1;
    }
    let correct: usize = (0..n_classes).map(|c| confusion[c][c]).sum();
    let mut per_class_f1 = Vec::with_capacity(n_classes);
    let mut absent_classes = Vec::new();
    for c in 0..n_classes {
        let tp = confusion[c][c] as f64;
        let actual: usize = confusion[c].iter().sum();
        let predicted_c: usize = confusion.iter().map(|row| row[c]).sum();
        if actual == 0 && predicted_c == 0 {
            absent_classes.push(c);
        }
        let precision = if predicted_c > 0 { tp / predicted_c as f64 } else { 0.0 };
        let recall = if actual > 0 { tp / actual as f64 } else { 0.0 };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        per_class_f1.push(f1);
    }
    Metrics {
        accuracy: if truth.is_empty() { 0.0 } else { correct as f64 / truth.len() as f64 },
        macro_f1: per_class_f1.iter().sum::<f64>() / n_classes as f64,
        per_class_f1,
        absent_classes,
        mean_loss: 0.0,
        confusion,
    }
}

/// Eval-mode predictions and loss over `data`. Samples are scored in
/// parallel; the loss is summed in sample order.
pub fn evaluate(w: &ModelWeights, data: &[GraphSample], cfg: &ModelConfig) -> Result<Metrics> {
    if data.is_empty() {
        return Err(Error::InvalidInput("cannot evaluate on an empty dataset".into()));
    }
    let scored: Vec<(usize, f64)> = data
        .par_iter()
        .map(|g| {
            // Eval mode never draws from the stream.
            let out = forward(g, w, cfg, false, &mut RngStream::new(0, 0))?;
            Ok((argmax(&out.z), out.loss))
        })
        .collect::<Result<_>>()?;
    let truth: Vec<usize> = data.iter().map(|g| g.y).collect();
    let predicted: Vec<usize> = scored.iter().map(|s| s.0).collect();
    let mut m = classification_metrics(&truth, &predicted, cfg.n_classes);
    m.mean_loss = scored.iter().map(|s| s.1).sum::<f64>() / data.len() as f64;
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_counted_confusion() {
        let m = classification_metrics(&[0, 0, 1, 1], &[0, 1, 1, 1], 2);
        assert_eq!(m.accuracy, 0.75);
        assert!((m.per_class_f1[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.per_class_f1[1] - 0.8).abs() < 1e-12);
        assert!((m.macro_f1 - 0.733_333_333_333).abs() < 1e-9);
        assert!(m.absent_classes.is_empty());
    }

    #[test]
    fn perfect_predictions() {
        let t = [0, 1, 2, 2, 1];
        let m = classification_metrics(&t, &t, 3);
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.macro_f1, 1.0);
    }

    #[test]
    fn absent_class_scores_zero_and_is_flagged() {
        let m = classification_metrics(&[0, 1], &[0, 1], 3);
        assert_eq!(m.per_class_f1, [1.0, 1.0, 0.0]);
        assert_eq!(m.absent_classes, [2]);
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.7, 0.7]), 1);
        assert_eq!(argmax(&[0.5]), 0);
    }
}
