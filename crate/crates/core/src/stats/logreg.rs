// SPDX-License-Identifier: MIT OR Apache-2.0

//! Binary logistic regression on standardized features, trained with
//! full-batch gradient descent on L2-regularized cross-entropy.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogRegConfig {
    pub standardize: bool,
    pub epochs: usize,
    pub learning_rate: f64,
    pub l2: f64,
    pub seed: u64,
}

impl Default for LogRegConfig {
    fn default() -> Self {
        Self {
            standardize: true,
            epochs: 500,
            learning_rate: 0.1,
            l2: 1e-4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    /// Weights in standardized feature space.
    pub weights: Vec<f64>,
    pub intercept: f64,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl LogisticModel {
    fn standardized<'a>(&'a self, row: &'a [f64]) -> impl Iterator<Item = f64> + 'a {
        row.iter()
            .zip(self.mean.iter().zip(&self.scale))
            .map(|(x, (m, s))| (x - m) / s)
    }

    pub fn decision(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .standardized(row)
                .zip(&self.weights)
                .map(|(x, w)| x * w)
                .sum::<f64>()
    }

    pub fn probability(&self, row: &[f64]) -> f64 {
        sigmoid(self.decision(row))
    }

    pub fn predict(&self, row: &[f64]) -> u8 {
        u8::from(self.decision(row) >= 0.0)
    }

    pub fn evaluate(&self, x: &[Vec<f64>], y: &[u8]) -> Result<(f64, Confusion), StatsError> {
        if x.len() != y.len() {
            return Err(StatsError::Length(x.len(), y.len()));
        }
        if x.is_empty() {
            return Err(StatsError::TooFew {
                what: "evaluation set",
                need: 1,
                got: 0,
            });
        }
        let mut c = Confusion::default();
        for (row, &label) in x.iter().zip(y) {
            c.add(label, self.predict(row));
        }
        Ok((c.accuracy(), c))
    }
}

/// Rows are actual class (0 = faithful, 1 = hall), columns predicted.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion(pub [[usize; 2]; 2]);

impl Confusion {
    pub fn add(&mut self, actual: u8, predicted: u8) {
        self.0[usize::from(actual)][usize::from(predicted)] += 1;
    }

    pub fn total(&self) -> usize {
        self.0.iter().flatten().sum()
    }

    pub fn accuracy(&self) -> f64 {
        (self.0[0][0] + self.0[1][1]) as f64 / self.total() as f64
    }
}

pub fn fit_logreg(x: &[Vec<f64>], y: &[u8], cfg: &LogRegConfig) -> Result<LogisticModel, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::Length(x.len(), y.len()));
    }
    let Some(p) = x.first().map(Vec::len) else {
        return Err(StatsError::TooFew {
            what: "training set",
            need: 2,
            got: 0,
        });
    };
    if x.iter().any(|r| r.len() != p) {
        return Err(StatsError::Argument("ragged feature matrix".into()));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(StatsError::Argument("labels must be 0 or 1".into()));
    }
    if !(y.contains(&0) && y.contains(&1)) {
        return Err(StatsError::SingleClass);
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let n = x.len() as f64;
    let (mean, scale) = if cfg.standardize {
        let mean: Vec<f64> = (0..p).map(|c| x.iter().map(|r| r[c]).sum::<f64>() / n).collect();
        let scale = (0..p)
            .map(|c| {
                let var = x.iter().map(|r| (r[c] - mean[c]).powi(2)).sum::<f64>() / n;
                if var > 0.0 {
                    var.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        (mean, scale)
    } else {
        (vec![0.0; p], vec![1.0; p])
    };
    let z: Vec<Vec<f64>> = x
        .iter()
        .map(|r| {
            r.iter()
                .zip(mean.iter().zip(&scale))
                .map(|(v, (m, s))| (v - m) / s)
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut w: Vec<f64> = (0..p).map(|_| rng.random_range(-0.01..0.01)).collect();
    let mut b = 0.0;
    let mut grad = vec![0.0; p];
    for _ in 0..cfg.epochs {
        grad.fill(0.0);
        let mut gb = 0.0;
        for (row, &label) in z.iter().zip(y) {
            let logit = b + row.iter().zip(&w).map(|(a, c)| a * c).sum::<f64>();
            let err = sigmoid(logit) - f64::from(label);
            for (g, v) in grad.iter_mut().zip(row) {
                *g += err * v;
            }
            gb += err;
        }
        for (wi, g) in w.iter_mut().zip(&grad) {
            *wi -= cfg.learning_rate * (g / n + cfg.l2 * *wi);
        }
        b -= cfg.learning_rate * gb / n;
    }
    Ok(LogisticModel {
        weights: w,
        intercept: b,
        mean,
        scale,
    })
}

/// Which latents feed the classifier.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    HallOnly,
    FaithfulOnly,
    Both,
    Random1,
    Random2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierReport {
    pub feature_set: FeatureSet,
    /// Latent indices used as features.
    pub latents: Vec<usize>,
    pub accuracy: f64,
    pub confusion: Confusion,
    pub weights: Vec<f64>,
    pub intercept: f64,
}

/// Fits on the training split and reports accuracy on the test split.
pub fn train_logreg(
    feature_set: FeatureSet,
    latents: Vec<usize>,
    train: (&[Vec<f64>], &[u8]),
    test: (&[Vec<f64>], &[u8]),
    cfg: &LogRegConfig,
) -> Result<ClassifierReport, StatsError> {
    let model = fit_logreg(train.0, train.1, cfg)?;
    let (accuracy, confusion) = model.evaluate(test.0, test.1)?;
    Ok(ClassifierReport {
        feature_set,
        latents,
        accuracy,
        confusion,
        weights: model.weights,
        intercept: model.intercept,
    })
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}
