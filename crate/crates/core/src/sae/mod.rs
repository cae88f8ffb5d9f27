// SPDX-License-Identifier: MIT OR Apache-2.0

//! TopK sparse autoencoder.
//!
//! `encode` is `ReLU(W_enc x + b_enc)`, `topk_sparsify` keeps the `k` largest
//! entries, and `decode` is `W_dec^T z + b_dec`. Both weight matrices are
//! stored row-major as `d_sae x d`, so row `j` of `W_dec` is the direction of
//! latent `j`.

mod train;
mod weights;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::container::FormatError;

pub use train::{normalized_mse, train_sae, train_sae_from, EpochStats, SaeTrainConfig, TrainOutcome};
pub use weights::{load_weights, save_weights, WEIGHTS_MAGIC};

#[derive(Debug, Error)]
pub enum SaeError {
    #[error("{what}: expected length {expected}, got {actual}")]
    Shape {
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("training diverged at step {step}: loss {loss}")]
    Divergence { step: usize, loss: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SaeModel {
    pub d: usize,
    pub d_sae: usize,
    pub k: usize,
    pub w_enc: Vec<f32>,
    pub b_enc: Vec<f32>,
    pub w_dec: Vec<f32>,
    pub b_dec: Vec<f32>,
}

impl SaeModel {
    /// Decoder rows drawn uniformly from the unit sphere, encoder tied to the
    /// decoder, zero biases.
    pub fn init(d: usize, d_sae: usize, k: usize, seed: u64) -> Result<Self, SaeError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        // a separate stream, so a synthetic dictionary drawn from the same
        // seed is not reproduced as the starting point
        rng.set_stream(1);
        let w_dec = unit_rows(&mut rng, d_sae, d);
        Self::from_decoder(d, d_sae, k, w_dec)
    }

    /// Model with `W_enc = W_dec = dict` and zero biases.
    pub fn from_decoder(d: usize, d_sae: usize, k: usize, dict: Vec<f32>) -> Result<Self, SaeError> {
        let model = Self {
            d,
            d_sae,
            k,
            w_enc: dict.clone(),
            b_enc: vec![0.0; d_sae],
            w_dec: dict,
            b_dec: vec![0.0; d],
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<(), SaeError> {
        if self.d == 0 || self.d_sae == 0 {
            return Err(SaeError::Argument(format!(
                "dimensions must be positive (d={}, d_sae={})",
                self.d, self.d_sae
            )));
        }
        if self.k == 0 || self.k > self.d_sae {
            return Err(SaeError::Argument(format!(
                "k={} must lie in 1..={}",
                self.k, self.d_sae
            )));
        }
        let m = self.d_sae * self.d;
        for (what, v, n) in [
            ("W_enc", &self.w_enc, m),
            ("b_enc", &self.b_enc, self.d_sae),
            ("W_dec", &self.w_dec, m),
            ("b_dec", &self.b_dec, self.d),
        ] {
            if v.len() != n {
                return Err(SaeError::Shape {
                    what,
                    expected: n,
                    actual: v.len(),
                });
            }
            if let Some(index) = v.iter().position(|x| !x.is_finite()) {
                return Err(FormatError::NonFinite { what, index }.into());
            }
        }
        Ok(())
    }

    pub fn decoder_row(&self, j: usize) -> &[f32] {
        &self.w_dec[j * self.d..(j + 1) * self.d]
    }

    pub fn encoder_row(&self, j: usize) -> &[f32] {
        &self.w_enc[j * self.d..(j + 1) * self.d]
    }

    /// `ReLU(W_enc x + b_enc)`.
    pub fn encode(&self, x: &[f32]) -> Result<Vec<f32>, SaeError> {
        Ok(self
            .pre_activations(x)?
            .into_iter()
            .map(|p| p.max(0.0) as f32)
            .collect())
    }

    /// `W_enc x + b_enc` before the ReLU, in f64.
    pub fn pre_activations(&self, x: &[f32]) -> Result<Vec<f64>, SaeError> {
        check_len("input", self.d, x.len())?;
        Ok((0..self.d_sae)
            .map(|j| dot(self.encoder_row(j), x) + f64::from(self.b_enc[j]))
            .collect())
    }

    /// `W_dec^T z + b_dec`.
    pub fn decode(&self, z: &[f32]) -> Result<Vec<f32>, SaeError> {
        check_len("latent code", self.d_sae, z.len())?;
        let mut out: Vec<f64> = self.b_dec.iter().map(|&b| f64::from(b)).collect();
        for (j, &c) in z.iter().enumerate() {
            if c != 0.0 {
                let c = f64::from(c);
                for (o, &w) in out.iter_mut().zip(self.decoder_row(j)) {
                    *o += c * f64::from(w);
                }
            }
        }
        Ok(out.into_iter().map(|v| v as f32).collect())
    }

    /// Encode followed by TopK with the model's own `k`.
    pub fn sparse_code(&self, x: &[f32]) -> Result<Vec<f32>, SaeError> {
        topk_sparsify(&self.encode(x)?, self.k)
    }

    /// Full `decode(topk(encode(x)))` round trip.
    pub fn reconstruct(&self, x: &[f32]) -> Result<Vec<f32>, SaeError> {
        self.decode(&self.sparse_code(x)?)
    }
}

/// Keeps the `k` largest entries of `z`; ties go to the lower index.
pub fn topk_sparsify(z: &[f32], k: usize) -> Result<Vec<f32>, SaeError> {
    if k > z.len() {
        return Err(SaeError::Argument(format!("k={k} exceeds code length {}", z.len())));
    }
    let mut out = vec![0.0; z.len()];
    for j in topk_indices(z.iter().map(|&v| f64::from(v)), k) {
        out[j] = z[j];
    }
    Ok(out)
}

/// Indices of the `k` largest values, ordered by value then index.
pub(crate) fn topk_indices(values: impl IntoIterator<Item = f64>, k: usize) -> Vec<usize> {
    let mut idx: Vec<(usize, f64)> = values.into_iter().enumerate().collect();
    let k = k.min(idx.len());
    if k == 0 {
        return Vec::new();
    }
    let cmp = |a: &(usize, f64), b: &(usize, f64)| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0));
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx.into_iter().map(|(j, _)| j).collect()
}

pub(crate) fn unit_rows(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Vec<f32> {
    let mut out = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        loop {
            let row: Vec<f64> = (0..cols).map(|_| StandardNormal.sample(rng)).collect();
            let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm > 1e-12 {
                out.extend(row.iter().map(|v| (v / norm) as f32));
                break;
            }
        }
    }
    out
}

pub(crate) fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| f64::from(x) * f64::from(y)).sum()
}

fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<(), SaeError> {
    if expected == actual {
        Ok(())
    } else {
        Err(SaeError::Shape { what, expected, actual })
    }
}
