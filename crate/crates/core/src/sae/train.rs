// SPDX-License-Identifier: MIT OR Apache-2.0

//! Minibatch SGD for the TopK autoencoder.
//!
//! Loss per sample is `||x - x_hat||^2 + aux_coefficient * ||e - e_hat||^2`
//! where `e = x - x_hat` is held constant and `e_hat` reconstructs it from the
//! `k_aux` largest pre-activations (not rectified) among dead latents. A latent is
//! dead once it has not fired for `dead_threshold_steps` consecutive steps.
//! The TopK support is fixed within a step. Decoder rows are renormalized to
//! unit length after every update.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{topk_indices, SaeError, SaeModel};
use crate::store::ResidualDataset;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SaeTrainConfig {
    pub d_sae: usize,
    pub k: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub aux_coefficient: f64,
    /// Defaults to `min(2k, d_sae)` when unset.
    pub k_aux: Option<usize>,
    pub dead_threshold_steps: usize,
    pub seed: u64,
}

impl Default for SaeTrainConfig {
    fn default() -> Self {
        Self {
            d_sae: 256,
            k: 8,
            epochs: 30,
            batch_size: 32,
            learning_rate: 0.01,
            aux_coefficient: 1.0 / 32.0,
            k_aux: None,
            dead_threshold_steps: 1000,
            seed: 0,
        }
    }
}

impl SaeTrainConfig {
    pub fn resolved_k_aux(&self) -> usize {
        self.k_aux.unwrap_or((2 * self.k).min(self.d_sae))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochStats {
    pub epoch: usize,
    pub recon_loss: f64,
    pub aux_loss: f64,
    /// Fraction of latents that never fired during this epoch.
    pub dead_fraction: f64,
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: SaeModel,
    pub history: Vec<EpochStats>,
}

impl TrainOutcome {
    pub fn final_dead_fraction(&self) -> f64 {
        self.history.last().map_or(0.0, |e| e.dead_fraction)
    }
}

/// Trains from the seeded default initialization.
pub fn train_sae(data: &ResidualDataset, cfg: &SaeTrainConfig) -> Result<TrainOutcome, SaeError> {
    let init = SaeModel::init(data.d, cfg.d_sae, cfg.k, cfg.seed)?;
    train_sae_from(init, data, cfg)
}

pub fn train_sae_from(
    mut model: SaeModel,
    data: &ResidualDataset,
    cfg: &SaeTrainConfig,
) -> Result<TrainOutcome, SaeError> {
    model.validate()?;
    if data.d != model.d {
        return Err(SaeError::Shape {
            what: "dataset dimension",
            expected: model.d,
            actual: data.d,
        });
    }
    let k_aux = cfg.resolved_k_aux();
    if cfg.batch_size == 0 || k_aux == 0 || k_aux > model.d_sae {
        return Err(SaeError::Argument(format!(
            "batch_size={} k_aux={k_aux} d_sae={}",
            cfg.batch_size, model.d_sae
        )));
    }
    if cfg.epochs > 0 && data.len() < cfg.batch_size {
        return Err(SaeError::Argument(format!(
            "{} samples is fewer than one batch of {}",
            data.len(),
            cfg.batch_size
        )));
    }
    if !(cfg.learning_rate.is_finite() && cfg.learning_rate > 0.0 && cfg.aux_coefficient >= 0.0) {
        return Err(SaeError::Argument("learning rate and aux coefficient".into()));
    }

    let (d, d_sae) = (model.d, model.d_sae);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5AE7_5AE7);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut since_fired = vec![0usize; d_sae];
    let mut grads = Grads::new(d, d_sae);
    let mut history = Vec::with_capacity(cfg.epochs);
    let mut step = 0;

    // f64 scratch
    let mut x = vec![0.0f64; d];
    let mut resid = vec![0.0f64; d];
    let mut aux_resid = vec![0.0f64; d];

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut fired_epoch = vec![false; d_sae];
        let (mut recon_sum, mut aux_sum) = (0.0, 0.0);

        for batch in order.chunks(cfg.batch_size) {
            grads.clear();
            let mut fired_batch = vec![false; d_sae];
            let dead: Vec<bool> = since_fired.iter().map(|&s| s >= cfg.dead_threshold_steps).collect();
            let any_dead = cfg.aux_coefficient > 0.0 && dead.iter().any(|&b| b);
            let (mut batch_recon, mut batch_aux) = (0.0, 0.0);

            for &n in batch {
                for (xi, &v) in x.iter_mut().zip(&data.samples[n].vector) {
                    *xi = f64::from(v);
                }
                let pre: Vec<f64> = (0..d_sae)
                    .map(|j| dot64(model.encoder_row(j), &x) + f64::from(model.b_enc[j]))
                    .collect();
                let active: Vec<usize> = topk_indices(pre.iter().map(|&p| p.max(0.0)), model.k)
                    .into_iter()
                    .filter(|&j| pre[j] > 0.0)
                    .collect();

                // resid = x_hat - x
                for i in 0..d {
                    resid[i] = f64::from(model.b_dec[i]) - x[i];
                }
                for &j in &active {
                    axpy(pre[j], model.decoder_row(j), &mut resid);
                    fired_batch[j] = true;
                }
                batch_recon += resid.iter().map(|r| r * r).sum::<f64>();

                for i in 0..d {
                    grads.b_dec[i] += 2.0 * resid[i];
                }
                for &j in &active {
                    let g = 2.0 * dot64(model.decoder_row(j), &resid);
                    grads.add_latent(j, pre[j] * 2.0, &resid, g, &x);
                }

                if any_dead {
                    // raw pre-activations: a dead latent is usually negative
                    // everywhere, and a ReLU here would block its gradient
                    let candidates: Vec<(usize, f64)> = (0..d_sae).filter(|&j| dead[j]).map(|j| (j, pre[j])).collect();
                    if !candidates.is_empty() {
                        let chosen: Vec<usize> = topk_indices(candidates.iter().map(|c| c.1), k_aux)
                            .into_iter()
                            .map(|i| candidates[i].0)
                            .collect();
                        // aux_resid = e_hat - e, with e = -resid
                        aux_resid.copy_from_slice(&resid);
                        for &j in &chosen {
                            axpy(pre[j], model.decoder_row(j), &mut aux_resid);
                        }
                        let c = cfg.aux_coefficient;
                        batch_aux += aux_resid.iter().map(|r| r * r).sum::<f64>();
                        for &j in &chosen {
                            let g = 2.0 * c * dot64(model.decoder_row(j), &aux_resid);
                            grads.add_latent(j, 2.0 * c * pre[j], &aux_resid, g, &x);
                        }
                    }
                }
            }

            let loss = (batch_recon + cfg.aux_coefficient * batch_aux) / batch.len() as f64;
            if !loss.is_finite() {
                return Err(SaeError::Divergence { step, loss });
            }
            recon_sum += batch_recon;
            aux_sum += batch_aux;

            grads.apply(&mut model, cfg.learning_rate / batch.len() as f64);
            normalize_decoder(&mut model);
            for (j, fired) in fired_batch.iter().enumerate() {
                if *fired {
                    since_fired[j] = 0;
                    fired_epoch[j] = true;
                } else {
                    since_fired[j] += 1;
                }
            }
            step += 1;
        }

        let n = data.len() as f64;
        history.push(EpochStats {
            epoch,
            recon_loss: recon_sum / n,
            aux_loss: aux_sum / n,
            dead_fraction: fired_epoch.iter().filter(|f| !**f).count() as f64 / d_sae as f64,
        });
    }
    model.validate()?;
    Ok(TrainOutcome { model, history })
}

/// Mean of `||x - SAE(x)||^2` divided by mean `||x||^2`.
pub fn normalized_mse(model: &SaeModel, data: &ResidualDataset) -> Result<f64, SaeError> {
    let (mut err, mut energy) = (0.0, 0.0);
    for s in &data.samples {
        let rec = model.reconstruct(&s.vector)?;
        err += s
            .vector
            .iter()
            .zip(&rec)
            .map(|(&a, &b)| (f64::from(a) - f64::from(b)).powi(2))
            .sum::<f64>();
        energy += s.vector.iter().map(|&a| f64::from(a).powi(2)).sum::<f64>();
    }
    if energy == 0.0 {
        return Err(SaeError::Argument("dataset has zero energy".into()));
    }
    Ok(err / energy)
}

struct Grads {
    d: usize,
    w_enc: Vec<f64>,
    b_enc: Vec<f64>,
    w_dec: Vec<f64>,
    b_dec: Vec<f64>,
    touched: Vec<bool>,
}

impl Grads {
    fn new(d: usize, d_sae: usize) -> Self {
        Self {
            d,
            w_enc: vec![0.0; d_sae * d],
            b_enc: vec![0.0; d_sae],
            w_dec: vec![0.0; d_sae * d],
            b_dec: vec![0.0; d],
            touched: vec![false; d_sae],
        }
    }

    fn clear(&mut self) {
        let d = self.d;
        for j in 0..self.touched.len() {
            if self.touched[j] {
                self.w_enc[j * d..(j + 1) * d].fill(0.0);
                self.w_dec[j * d..(j + 1) * d].fill(0.0);
                self.b_enc[j] = 0.0;
                self.touched[j] = false;
            }
        }
        self.b_dec.fill(0.0);
    }

    /// Decoder row `j` gets `dec_scale * err`, encoder row `j` gets
    /// `enc_grad * x`.
    fn add_latent(&mut self, j: usize, dec_scale: f64, err: &[f64], enc_grad: f64, x: &[f64]) {
        let d = self.d;
        self.touched[j] = true;
        for (g, e) in self.w_dec[j * d..(j + 1) * d].iter_mut().zip(err) {
            *g += dec_scale * e;
        }
        for (g, xi) in self.w_enc[j * d..(j + 1) * d].iter_mut().zip(x) {
            *g += enc_grad * xi;
        }
        self.b_enc[j] += enc_grad;
    }

    fn apply(&self, model: &mut SaeModel, lr: f64) {
        let d = self.d;
        for (j, &t) in self.touched.iter().enumerate() {
            if !t {
                continue;
            }
            for i in j * d..(j + 1) * d {
                model.w_enc[i] = (f64::from(model.w_enc[i]) - lr * self.w_enc[i]) as f32;
                model.w_dec[i] = (f64::from(model.w_dec[i]) - lr * self.w_dec[i]) as f32;
            }
            model.b_enc[j] = (f64::from(model.b_enc[j]) - lr * self.b_enc[j]) as f32;
        }
        for (b, g) in model.b_dec.iter_mut().zip(&self.b_dec) {
            *b = (f64::from(*b) - lr * g) as f32;
        }
    }
}

fn normalize_decoder(model: &mut SaeModel) {
    let d = model.d;
    for row in model.w_dec.chunks_exact_mut(d) {
        let norm = row.iter().map(|&v| f64::from(v).powi(2)).sum::<f64>().sqrt();
        if norm > 1e-12 {
            for v in row {
                *v = (f64::from(*v) / norm) as f32;
            }
        }
    }
}

fn dot64(w: &[f32], x: &[f64]) -> f64 {
    w.iter().zip(x).map(|(&a, &b)| f64::from(a) * b).sum()
}

fn axpy(a: f64, row: &[f32], out: &mut [f64]) {
    for (o, &w) in out.iter_mut().zip(row) {
        *o += a * f64::from(w);
    }
}
