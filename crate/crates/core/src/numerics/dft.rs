//! Direct discrete Fourier transform and the analytic signal built on it.
//!
//! Transforms are the plain O(d²) sums. Twiddle factors are tabulated once
//! per call and indexed by `(j·k) mod d`, which keeps the phase argument
//! small and the result accurate to a few ulps for the lengths used here.

use std::f64::consts::PI;
use std::ops::Deref;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Non-empty sequence of complex values.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(values: Vec<Complex64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("complex vector must be non-empty".into()));
        }
        Ok(ComplexVector(values))
    }

    pub fn from_real(x: &[f64]) -> Result<Self> {
        ComplexVector::new(x.iter().map(|&v| Complex64::new(v, 0.0)).collect())
    }

    pub fn re(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.re).collect()
    }

    pub fn im(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.im).collect()
    }

    /// Instantaneous phase `atan2(im, re)` in `(-π, π]`.
    pub fn phase(&self) -> Vec<f64> {
        self.0.iter().map(|c| c.arg()).collect()
    }

    pub fn into_inner(self) -> Vec<Complex64> {
        self.0
    }
}

impl Deref for ComplexVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.0
    }
}

fn transform(x: &[Complex64], sign: f64) -> Vec<Complex64> {
    let d = x.len();
    let twiddle: Vec<Complex64> = (0..d)
        .map(|k| Complex64::from_polar(1.0, sign * 2.0 * PI * k as f64 / d as f64))
        .collect();
    (0..d)
        .map(|k| {
            x.iter()
                .enumerate()
                .map(|(j, &v)| v * twiddle[(j * k) % d])
                .sum()
        })
        .collect()
}

/// Forward DFT: `X_k = Σ_j x_j e^{-2πi jk/d}`.
pub fn dft(x: &ComplexVector) -> ComplexVector {
    ComplexVector(transform(x, -1.0))
}

/// Inverse DFT, including the `1/d` factor.
pub fn idft(x: &ComplexVector) -> ComplexVector {
    let d = x.len() as f64;
    ComplexVector(transform(x, 1.0).into_iter().map(|c| c / d).collect())
}

/// DFT of a real sequence.
pub fn real_dft(x: &[f64]) -> Result<ComplexVector> {
    Ok(dft(&ComplexVector::from_real(x)?))
}

/// Analytic signal of a real sequence via the DFT: negative-frequency bins
/// are zeroed, strictly positive bins doubled, DC (and Nyquist for even
/// lengths) kept as-is.
pub fn analytic_signal(x: &[f64]) -> Result<ComplexVector> {
    let d = x.len();
    if d < 2 {
        return Err(Error::InvalidInput(format!(
            "analytic signal needs at least 2 samples, got {d}"
        )));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("analytic signal input must be finite".into()));
    }
    let mut spectrum = real_dft(x)?.into_inner();
    let positive_end = d.div_ceil(2);
    for (k, bin) in spectrum.iter_mut().enumerate() {
        if k == 0 || (d.is_multiple_of(2) && k == d / 2) {
            continue;
        }
        *bin *= if k < positive_end { 2.0 } else { 0.0 };
    }
    Ok(idft(&ComplexVector(spectrum)))
}
