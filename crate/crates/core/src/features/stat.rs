use crate::error::{Error, Result};
use crate::numerics::real_dft;

/// Number of time-domain statistics preceding the band energies.
pub const STAT_PREFIX: usize = 6;

/// `[mean, std, min, max, rms, zero-crossing rate, band energies…]`.
///
/// Band energies split DFT bins `1..=⌊D/2⌋` into `n_bands` contiguous
/// groups and sum `|X_k|²/D` within each. The standard deviation is the
/// population one; a zero crossing is a sign change between consecutive
/// samples, with zero counted as non-negative.
pub fn stat_features(epoch: &[f64], n_bands: usize) -> Result<Vec<f64>> {
    let d = epoch.len();
    if d < 2 {
        return Err(Error::InvalidInput(format!("epoch needs at least 2 samples, got {d}")));
    }
    if n_bands == 0 || n_bands > d / 2 {
        return Err(Error::InvalidInput(format!(
            "band count must lie in [1, {}], got {n_bands}",
            d / 2
        )));
    }
    if epoch.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("epoch contains non-finite samples".into()));
    }

    let n = d as f64;
    let mean = epoch.iter().sum::<f64>() / n;
    let var = epoch.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    let min = epoch.iter().copied().fold(f64::INFINITY, f64::min);
    let max = epoch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let rms = (epoch.iter().map(|x| x * x).sum::<f64>() / n).sqrt();
    let crossings = epoch
        .windows(2)
        .filter(|w| (w[0] >= 0.0) != (w[1] >= 0.0))
        .count();

    let mut out = Vec::with_capacity(STAT_PREFIX + n_bands);
    out.extend_from_slice(&[mean, var.sqrt(), min, max, rms, crossings as f64 / (n - 1.0)]);
    out.extend(band_energies(epoch, n_bands)?);
    Ok(out)
}

fn band_energies(epoch: &[f64], n_bands: usize) -> Result<Vec<f64>> {
    let d = epoch.len();
    let spectrum = real_dft(epoch)?;
    let half = d / 2;
    let edges: Vec<usize> = (0..=n_bands).map(|b| 1 + b * half / n_bands).collect();
    Ok(edges
        .windows(2)
        .map(|e| (e[0]..e[1]).map(|k| spectrum[k].norm_sqr() / d as f64).sum())
        .collect())
}
