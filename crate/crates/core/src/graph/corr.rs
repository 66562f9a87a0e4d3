//! Node correlation functions: feature matrix (or electrode geometry) in,
//! symmetric `[0, 1]` adjacency out.

use num_complex::Complex64;

use super::{Adjacency, CorrConfig};
use crate::error::{Error, Result};
use crate::numerics::{analytic_signal, Matrix};
use crate::signal::ElectrodePositions;

fn symmetric_from(n: usize, mut pair: impl FnMut(usize, usize) -> f64) -> Result<Adjacency> {
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let v = pair(i, j).clamp(0.0, 1.0);
            w[(i, j)] = v;
            w[(j, i)] = v;
        }
    }
    Adjacency::new(w)
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Gaussian kernel of electrode distance, `exp(-‖pᵢ-pⱼ‖² / 2σ²)`, with σ
/// the mean pairwise distance unless `cfg.sigma` is set.
pub fn corr_db(pos: &ElectrodePositions, cfg: &CorrConfig) -> Result<Adjacency> {
    let coords: Vec<&[f64; 3]> = pos.coords().collect();
    let n = coords.len();
    if n < 2 {
        return Err(Error::InvalidInput(format!(
            "distance adjacency needs at least 2 electrodes, got {n}"
        )));
    }
    let sigma = match cfg.sigma {
        Some(s) if s > 0.0 && s.is_finite() => s,
        Some(s) => return Err(Error::Config(format!("sigma must be positive, got {s}"))),
        None => {
            let mut total = 0.0;
            for i in 0..n {
                for j in i + 1..n {
                    total += euclidean(coords[i], coords[j]);
                }
            }
            let mean = total / (n * (n - 1) / 2) as f64;
            if mean <= 0.0 {
                return Err(Error::DegenerateGeometry(
                    "all electrodes coincide, mean pairwise distance is 0".into(),
                ));
            }
            mean
        }
    };
    let denom = 2.0 * sigma * sigma;
    symmetric_from(n, |i, j| {
        let d = euclidean(coords[i], coords[j]);
        (-(d * d) / denom).exp()
    })
}

/// Binary k-nearest-neighbour graph over feature rows, OR-symmetrized.
/// Distance ties go to the lower node index.
pub fn corr_knn(x: &Matrix, cfg: &CorrConfig) -> Result<Adjacency> {
    let n = x.rows();
    let k = cfg.k;
    if k == 0 || k >= n {
        return Err(Error::Config(format!("k must lie in [1, {}), got {k}", n)));
    }
    let mut w = Matrix::zeros(n, n);
    for i in 0..n {
        let mut others: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| (euclidean(x.row(i), x.row(j)), j))
            .collect();
        others.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, j) in &others[..k] {
            w[(i, j)] = 1.0;
            w[(j, i)] = 1.0;
        }
    }
    Adjacency::new(w)
}

/// Deviations from the mean and their norm, or an error for a flat row.
fn centered(row: &[f64], node: usize) -> Result<(Vec<f64>, f64)> {
    let mean = row.iter().sum::<f64>() / row.len() as f64;
    let dev: Vec<f64> = row.iter().map(|v| v - mean).collect();
    let ss: f64 = dev.iter().map(|v| v * v).sum();
    let scale: f64 = row.iter().map(|v| v * v).sum();
    if ss <= f64::EPSILON * f64::EPSILON * scale || ss == 0.0 {
        return Err(Error::DegenerateRow {
            node,
            reason: "zero variance",
        });
    }
    Ok((dev, ss.sqrt()))
}

/// Absolute Pearson correlation between feature rows.
pub fn corr_pcc(x: &Matrix) -> Result<Adjacency> {
    if x.cols() < 2 {
        return Err(Error::InvalidInput(format!(
            "Pearson correlation needs at least 2 features, got {}",
            x.cols()
        )));
    }
    let rows = (0..x.rows())
        .map(|i| centered(x.row(i), i))
        .collect::<Result<Vec<_>>>()?;
    symmetric_from(x.rows(), |i, j| {
        let (a, na) = &rows[i];
        let (b, nb) = &rows[j];
        let r: f64 = a.iter().zip(b).map(|(p, q)| p * q).sum::<f64>() / (na * nb);
        r.abs()
    })
}

/// Unit phasors `e^{iφ(k)}` of a row's analytic signal.
pub(crate) fn phasors(row: &[f64], node: usize) -> Result<Vec<Complex64>> {
    centered(row, node).map_err(|_| Error::DegenerateRow {
        node,
        reason: "constant row has no defined phase",
    })?;
    let z = analytic_signal(row)?;
    Ok(z.phase().into_iter().map(|p| Complex64::from_polar(1.0, p)).collect())
}

/// Phase-locking value between feature rows,
/// `|(1/d) Σ_k e^{i(φᵢ(k) − φⱼ(k))}|`.
pub fn corr_plv(x: &Matrix) -> Result<Adjacency> {
    if x.cols() < 4 {
        return Err(Error::InvalidInput(format!(
            "phase locking needs at least 4 features, got {}",
            x.cols()
        )));
    }
    let d = x.cols() as f64;
    let ph = (0..x.rows())
        .map(|i| phasors(x.row(i), i))
        .collect::<Result<Vec<_>>>()?;
    symmetric_from(x.rows(), |i, j| {
        let s: Complex64 = ph[i].iter().zip(&ph[j]).map(|(a, b)| a * b.conj()).sum();
        s.norm() / d
    })
}
