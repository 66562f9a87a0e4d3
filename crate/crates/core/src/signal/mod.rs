//! Raw multichannel recordings, their labels and electrode geometry, and the
//! stratified train/test split.

mod csv;
mod sts;

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::numerics::RngStream;

pub use self::csv::{read_labels, read_positions, write_labels, write_positions};
pub use self::sts::{decode_recording, encode_recording, load_recording, write_recording};

/// Default number of samples per epoch (one 30 s window at 100 Hz).
pub const DEFAULT_SAMPLES_PER_EPOCH: usize = 3000;

/// `N` channels × `T` epochs × `D` samples, stored as read from disk.
#[derive(Clone, Debug, PartialEq)]
pub struct Recording {
    n_channels: usize,
    n_epochs: usize,
    samples_per_epoch: usize,
    sample_rate: f64,
    channel_names: Vec<String>,
    values: Vec<f32>,
}

impl Recording {
    /// Validating constructor. `values` are ordered `[channel][epoch][sample]`.
    pub fn new(
        channel_names: Vec<String>,
        n_epochs: usize,
        samples_per_epoch: usize,
        sample_rate: f64,
        values: Vec<f32>,
    ) -> Result<Self> {
        let n_channels = channel_names.len();
        if n_channels < 2 {
            return Err(Error::InvalidInput(format!(
                "a recording needs at least 2 channels, got {n_channels}"
            )));
        }
        if samples_per_epoch < 2 {
            return Err(Error::InvalidInput(format!(
                "an epoch needs at least 2 samples, got {samples_per_epoch}"
            )));
        }
        if !sample_rate.is_finite() || sample_rate <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        let expected = n_channels * n_epochs * samples_per_epoch;
        if values.len() != expected {
            return Err(Error::shape(
                "Recording::new",
                format!("{expected} values"),
                values.len(),
            ));
        }
        let per_channel = n_epochs * samples_per_epoch;
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            let channel = pos / per_channel;
            return Err(Error::NonFiniteSample {
                channel,
                name: channel_names[channel].clone(),
                epoch: (pos % per_channel) / samples_per_epoch,
            });
        }
        Ok(Recording {
            n_channels,
            n_epochs,
            samples_per_epoch,
            sample_rate,
            channel_names,
            values,
        })
    }

    pub fn n_channels(&self) -> usize {
        self.n_channels
    }

    pub fn n_epochs(&self) -> usize {
        self.n_epochs
    }

    pub fn samples_per_epoch(&self) -> usize {
        self.samples_per_epoch
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    /// Samples of one channel during one epoch.
    pub fn epoch(&self, channel: usize, epoch: usize) -> &[f32] {
        let start = (channel * self.n_epochs + epoch) * self.samples_per_epoch;
        &self.values[start..start + self.samples_per_epoch]
    }

    pub fn epoch_f64(&self, channel: usize, epoch: usize) -> Vec<f64> {
        self.epoch(channel, epoch).iter().map(|&v| f64::from(v)).collect()
    }
}

/// One class label per epoch.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelSet {
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabelSet {
    pub const DEFAULT_CLASSES: usize = 5;

    pub fn new(labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::InvalidInput("n_classes must be at least 1".into()));
        }
        if let Some((i, &y)) = labels.iter().enumerate().find(|(_, &y)| y >= n_classes) {
            return Err(Error::InvalidLabel(format!(
                "epoch {i} has label {y}, expected < {n_classes}"
            )));
        }
        Ok(LabelSet { labels, n_classes })
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn check_matches(&self, rec: &Recording) -> Result<()> {
        if self.len() != rec.n_epochs() {
            return Err(Error::InvalidInput(format!(
                "{} labels for {} epochs",
                self.len(),
                rec.n_epochs()
            )));
        }
        Ok(())
    }
}

/// Electrode coordinates, one per channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ElectrodePositions {
    entries: Vec<(String, [f64; 3])>,
}

impl ElectrodePositions {
    pub fn new(entries: Vec<(String, [f64; 3])>) -> Result<Self> {
        if entries.iter().any(|(_, p)| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidInput("electrode coordinates must be finite".into()));
        }
        Ok(ElectrodePositions { entries })
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(n, _)| n.as_str())
    }

    pub fn coords(&self) -> impl Iterator<Item = &[f64; 3]> {
        self.entries.iter().map(|(_, p)| p)
    }

    pub fn entries(&self) -> &[(String, [f64; 3])] {
        &self.entries
    }

    /// Reorders entries to follow `channel_names`; every channel must be
    /// present exactly once.
    pub fn aligned_to(&self, channel_names: &[String]) -> Result<Self> {
        if self.entries.len() != channel_names.len() {
            return Err(Error::InvalidInput(format!(
                "{} electrode positions for {} channels",
                self.entries.len(),
                channel_names.len()
            )));
        }
        let by_name: BTreeMap<&str, &[f64; 3]> =
            self.entries.iter().map(|(n, p)| (n.as_str(), p)).collect();
        let entries = channel_names
            .iter()
            .map(|name| {
                by_name
                    .get(name.as_str())
                    .map(|p| (name.clone(), **p))
                    .ok_or_else(|| {
                        Error::InvalidInput(format!("no electrode position for channel {name:?}"))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ElectrodePositions { entries })
    }
}

/// Disjoint train and test epoch indices, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplit {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified random split: within each class `round(count·ratio)` epochs go
/// to the test side, clamped so that both sides keep at least one.
pub fn split_train_test(labels: &LabelSet, ratio: f64, rng: &mut RngStream) -> Result<DatasetSplit> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!(
            "test ratio must lie in (0, 1), got {ratio}"
        )));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, &y) in labels.labels().iter().enumerate() {
        by_class.entry(y).or_default().push(i);
    }
    let mut split = DatasetSplit {
        train: Vec::new(),
        test: Vec::new(),
    };
    for (class, mut members) in by_class {
        let count = members.len();
        if count < 2 {
            return Err(Error::ClassTooSmall { class, count });
        }
        let n_test = ((count as f64 * ratio).round() as usize).clamp(1, count - 1);
        rng.shuffle(&mut members);
        split.test.extend_from_slice(&members[..n_test]);
        split.train.extend_from_slice(&members[n_test..]);
    }
    split.train.sort_unstable();
    split.test.sort_unstable();
    Ok(split)
}
