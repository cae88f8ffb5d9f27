// SPDX-License-Identifier: MIT OR Apache-2.0

//! Linear SVM trained with the Pegasos stochastic subgradient method.
//! The bias rides along as an extra constant feature.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub epochs: usize,
    pub lambda: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            epochs: 200,
            lambda: 1e-3,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub train_accuracy: f64,
}

impl LinearSvm {
    pub fn decision(&self, row: &[f64]) -> f64 {
        self.bias + row.iter().zip(&self.weights).map(|(a, b)| a * b).sum::<f64>()
    }

    /// +1 or -1; a point exactly on the hyperplane goes to +1.
    pub fn predict(&self, row: &[f64]) -> i8 {
        if self.decision(row) >= 0.0 {
            1
        } else {
            -1
        }
    }
}

pub fn linear_svm_boundary(points: &[Vec<f64>], labels: &[i8], cfg: &SvmConfig) -> Result<LinearSvm, StatsError> {
    if points.len() != labels.len() {
        return Err(StatsError::Length(points.len(), labels.len()));
    }
    let Some(p) = points.first().map(Vec::len) else {
        return Err(StatsError::TooFew {
            what: "svm training set",
            need: 2,
            got: 0,
        });
    };
    if points.iter().any(|r| r.len() != p) {
        return Err(StatsError::Argument("ragged point matrix".into()));
    }
    if labels.iter().any(|&l| l != 1 && l != -1) {
        return Err(StatsError::Argument("labels must be +1 or -1".into()));
    }
    if !(labels.contains(&1) && labels.contains(&-1)) {
        return Err(StatsError::SingleClass);
    }
    if !(cfg.lambda > 0.0) {
        return Err(StatsError::Argument(format!(
            "lambda must be positive, got {}",
            cfg.lambda
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..points.len()).collect();
    // w[p] is the bias weight on a constant feature of 1.
    let mut w = vec![0.0; p + 1];
    let mut t = 0u64;
    let radius = 1.0 / cfg.lambda.sqrt();
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (cfg.lambda * t as f64);
            let y = f64::from(labels[i]);
            let x = &points[i];
            let margin = y * (w[p] + x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>());
            let shrink = 1.0 - eta * cfg.lambda;
            for wi in w.iter_mut() {
                *wi *= shrink;
            }
            if margin < 1.0 {
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi += eta * y * xi;
                }
                w[p] += eta * y;
            }
            let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > radius {
                let s = radius / norm;
                for wi in w.iter_mut() {
                    *wi *= s;
                }
            }
        }
    }
    let bias = w.pop().unwrap_or(0.0);
    let mut svm = LinearSvm {
        weights: w,
        bias,
        train_accuracy: 0.0,
    };
    let correct = points.iter().zip(labels).filter(|(x, &y)| svm.predict(x) == y).count();
    svm.train_accuracy = correct as f64 / points.len() as f64;
    Ok(svm)
}
