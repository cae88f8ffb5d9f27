// SPDX-License-Identifier: MIT OR Apache-2.0

//! Synthetic residual data with known hallucination/faithful latents.
//!
//! A random unit-norm dictionary plays the role of the SAE decoder. Every
//! sample is a positive combination of `k` dictionary rows plus Gaussian
//! noise. The planted hall latent fires with `fire_rate_on` on hall samples
//! and `fire_rate_off` on faithful ones; the planted faithful latent does the
//! reverse. The remaining rows are drawn uniformly from the other latents
//! until `k` rows are active.

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::{Label, ResidualDataset, ResidualSample, StoreError};
use crate::sae::{unit_rows, SaeModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthConfig {
    pub n_per_class: usize,
    pub d: usize,
    pub d_sae: usize,
    /// Active dictionary rows per sample (also the emitted model's TopK).
    pub k: usize,
    pub planted_hall_latent: usize,
    pub planted_faithful_latent: usize,
    pub fire_rate_on: f64,
    pub fire_rate_off: f64,
    pub noise_scale: f64,
    /// Coefficients are drawn uniformly from this range.
    pub coef_min: f64,
    pub coef_max: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            n_per_class: 1000,
            d: 64,
            d_sae: 256,
            k: 8,
            planted_hall_latent: 17,
            planted_faithful_latent: 42,
            fire_rate_on: 0.9,
            fire_rate_off: 0.1,
            noise_scale: 0.05,
            coef_min: 1.0,
            coef_max: 2.0,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<(), StoreError> {
        let fail = |m: String| Err(StoreError::Config(m));
        if self.n_per_class == 0 || self.d == 0 {
            return fail("n_per_class and d must be positive".into());
        }
        if self.k < 2 {
            return fail(format!("k={} leaves no room for both planted latents", self.k));
        }
        if self.d_sae < self.k {
            return fail(format!("d_sae={} < k={}", self.d_sae, self.k));
        }
        if self.planted_hall_latent >= self.d_sae || self.planted_faithful_latent >= self.d_sae {
            return fail("planted latent index out of range".into());
        }
        if self.planted_hall_latent == self.planted_faithful_latent {
            return fail("planted latents must differ".into());
        }
        let unit = 0.0..=1.0;
        if !unit.contains(&self.fire_rate_on)
            || !unit.contains(&self.fire_rate_off)
            || self.fire_rate_on <= self.fire_rate_off
        {
            return fail(format!(
                "need 0 <= off ({}) < on ({}) <= 1",
                self.fire_rate_off, self.fire_rate_on
            ));
        }
        if !(self.noise_scale >= 0.0 && self.noise_scale.is_finite()) {
            return fail("noise_scale must be finite and non-negative".into());
        }
        if !(self.coef_min > 0.0 && self.coef_max >= self.coef_min && self.coef_max.is_finite()) {
            return fail("coefficient range must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub dataset: ResidualDataset,
    /// Ground-truth dictionary as a tied SAE with the configured `k`.
    pub model: SaeModel,
    /// Active `(latent, coefficient)` pairs for each sample.
    pub codes: Vec<Vec<(usize, f32)>>,
}

pub fn synth_generate(cfg: &SynthConfig) -> Result<SynthOutput, StoreError> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let dict = unit_rows(&mut rng, cfg.d_sae, cfg.d);
    let model = SaeModel::from_decoder(cfg.d, cfg.d_sae, cfg.k, dict).map_err(|e| StoreError::Config(e.to_string()))?;
    let noise = Normal::new(0.0, cfg.noise_scale).map_err(|e| StoreError::Config(e.to_string()))?;

    let (hall, faithful) = (cfg.planted_hall_latent, cfg.planted_faithful_latent);
    let others: Vec<usize> = (0..cfg.d_sae).filter(|&j| j != hall && j != faithful).collect();

    let mut dataset = ResidualDataset::new(cfg.d, 0, "synthetic");
    let mut codes = Vec::with_capacity(2 * cfg.n_per_class);
    for label in [Label::Hall, Label::Faithful] {
        let (own, opposite) = match label {
            Label::Hall => (hall, faithful),
            Label::Faithful => (faithful, hall),
        };
        for i in 0..cfg.n_per_class {
            let mut active = Vec::with_capacity(cfg.k);
            if rng.random_bool(cfg.fire_rate_on) {
                active.push(own);
            }
            if rng.random_bool(cfg.fire_rate_off) {
                active.push(opposite);
            }
            let fill = cfg.k - active.len();
            active.extend(index::sample(&mut rng, others.len(), fill).iter().map(|i| others[i]));

            let mut x = vec![0.0f64; cfg.d];
            let mut code = Vec::with_capacity(active.len());
            for &j in &active {
                let c = rng.random_range(cfg.coef_min..=cfg.coef_max);
                for (xi, &w) in x.iter_mut().zip(model.decoder_row(j)) {
                    *xi += c * f64::from(w);
                }
                code.push((j, c as f32));
            }
            if cfg.noise_scale > 0.0 {
                for xi in &mut x {
                    *xi += noise.sample(&mut rng);
                }
            }
            dataset.samples.push(ResidualSample {
                vector: x.into_iter().map(|v| v as f32).collect(),
                label,
                image_id: format!("synth-{i:06}"),
                token_text: format!("obj{own}"),
                token_position: i as u32,
                subword_count: 1,
            });
            codes.push(code);
        }
    }
    Ok(SynthOutput { dataset, model, codes })
}
