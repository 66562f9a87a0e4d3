//! Seeded synthetic recordings with class-dependent oscillations.
//!
//! Every channel of an epoch labelled `c` carries a sinusoid at the class
//! frequency bin `f_c` (spread evenly over the spectrum so classes land in
//! different bands), with a per-channel phase offset fixed by the class and
//! a random phase shared by all channels of the epoch. Channels are
//! therefore phase-locked within an epoch, with offsets that identify the
//! class, and Gaussian noise of standard deviation `noise` is added on top.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::RngStream;
use crate::signal::{ElectrodePositions, LabelSet, Recording};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyntheticConfig {
    pub n_channels: usize,
    pub n_epochs: usize,
    pub samples_per_epoch: usize,
    pub sample_rate: f64,
    pub amplitude: f64,
    pub noise: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            n_channels: 10,
            n_epochs: 500,
            samples_per_epoch: 256,
            sample_rate: 100.0,
            amplitude: 0.25,
            noise: 0.5,
        }
    }
}

pub struct SyntheticData {
    pub recording: Recording,
    pub labels: LabelSet,
    pub positions: ElectrodePositions,
}

impl SyntheticConfig {
    pub fn validate(&self, n_classes: usize) -> Result<()> {
        if n_classes == 0 {
            return Err(Error::Config("n_classes must be positive".into()));
        }
        if self.n_channels < 2 {
            return Err(Error::Config("synthetic data needs at least 2 channels".into()));
        }
        if self.samples_per_epoch < 4 * n_classes {
            return Err(Error::Config(format!(
                "samples_per_epoch must be at least {} to separate {n_classes} class frequencies",
                4 * n_classes
            )));
        }
        if self.n_epochs < 2 * n_classes {
            return Err(Error::Config(format!(
                "n_epochs must be at least {} for a stratified split",
                2 * n_classes
            )));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite())
            || !(self.amplitude > 0.0 && self.amplitude.is_finite())
            || !(self.sample_rate > 0.0 && self.sample_rate.is_finite())
        {
            return Err(Error::Config(
                "noise must be non-negative; amplitude and sample_rate positive".into(),
            ));
        }
        Ok(())
    }

    /// DFT bin of class `c`: the centre of the `c`-th of `n_classes` equal
    /// slices of bins `1..=D/2`.
    pub fn class_bin(&self, class: usize, n_classes: usize) -> usize {
        let half = self.samples_per_epoch / 2;
        (((2 * class + 1) * half) as f64 / (2 * n_classes) as f64).round().max(1.0) as usize
    }

    /// Phase offset of `channel` under `class`.
    pub fn phase_offset(&self, class: usize, channel: usize) -> f64 {
        2.0 * PI * ((class + 1) * channel) as f64 / (self.n_channels as f64 + 1.0)
    }
}

pub fn generate(cfg: &SyntheticConfig, n_classes: usize, seed: u64) -> Result<SyntheticData> {
    cfg.validate(n_classes)?;
    let (n, t, d) = (cfg.n_channels, cfg.n_epochs, cfg.samples_per_epoch);

    let mut label_rng = RngStream::derived(seed, "synthetic-labels", 0);
    let mut labels: Vec<usize> = (0..t).map(|i| i % n_classes).collect();
    label_rng.shuffle(&mut labels);

    let mut phase_rng = RngStream::derived(seed, "synthetic-phase", 0);
    let epoch_phase: Vec<f64> = (0..t).map(|_| phase_rng.uniform_range(0.0, 2.0 * PI)).collect();
    let gains: Vec<f64> = (0..n).map(|_| phase_rng.uniform_range(0.8, 1.2)).collect();

    let mut values = Vec::with_capacity(n * t * d);
    for (ch, &gain) in gains.iter().enumerate() {
        let mut noise_rng = RngStream::derived(seed, "synthetic-noise", ch as u64);
        for (ep, &y) in labels.iter().enumerate() {
            let f = cfg.class_bin(y, n_classes) as f64;
            let phase = epoch_phase[ep] + cfg.phase_offset(y, ch);
            for k in 0..d {
                let s = cfg.amplitude * gain * (2.0 * PI * f * k as f64 / d as f64 + phase).cos();
                let v = if cfg.noise > 0.0 {
                    s + cfg.noise * noise_rng.normal()
                } else {
                    s
                };
                values.push(v as f32);
            }
        }
    }

    let names: Vec<String> = (0..n).map(|i| format!("ch{i}")).collect();
    let positions = ElectrodePositions::new(
        names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let a = 2.0 * PI * i as f64 / n as f64;
                (name.clone(), [a.cos(), a.sin(), 0.5 * (i % 2) as f64])
            })
            .collect(),
    )?;
    Ok(SyntheticData {
        recording: Recording::new(names, t, d, cfg.sample_rate, values)?,
        labels: LabelSet::new(labels, n_classes)?,
        positions,
    })
}
