// SPDX-License-Identifier: MIT OR Apache-2.0

//! Gaussian kernel density estimates.

use std::f64::consts::PI;

use super::{check_finite, sample_var, StatsError};

/// `1.06 * sigma * n^(-1/5)` with the sample standard deviation.
pub fn silverman_bandwidth(samples: &[f64]) -> f64 {
    1.06 * sample_var(samples).sqrt() * (samples.len() as f64).powf(-0.2)
}

pub fn kde_curve(samples: &[f64], grid: &[f64], bandwidth: Option<f64>) -> Result<Vec<f64>, StatsError> {
    if samples.len() < 2 {
        return Err(StatsError::TooFew {
            what: "KDE samples",
            need: 2,
            got: samples.len(),
        });
    }
    if grid.is_empty() {
        return Err(StatsError::Argument("empty evaluation grid".into()));
    }
    check_finite(samples)?;
    let h = bandwidth.unwrap_or_else(|| silverman_bandwidth(samples));
    if !(h.is_finite() && h > 0.0) {
        return Err(StatsError::Argument(format!("bandwidth {h} must be positive")));
    }
    let norm = 1.0 / (samples.len() as f64 * h * (2.0 * PI).sqrt());
    Ok(grid
        .iter()
        .map(|&g| {
            norm * samples
                .iter()
                .map(|&s| (-0.5 * ((g - s) / h).powi(2)).exp())
                .sum::<f64>()
        })
        .collect())
}

/// `n` evenly spaced points from `lo` to `hi` inclusive.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}
