// SPDX-License-Identifier: MIT OR Apache-2.0

//! Activation-frequency statistics and direction selection.
//!
//! For latent `j`, `f_hall[j]` is the fraction of hallucinated samples on
//! which `j` fires and `f_faithful[j]` the same over faithful samples.
//! `s_hall = f_hall - f_faithful` and `s_faithful = -s_hall`. The hall
//! direction is the decoder row of `argmax s_hall`, the faithful direction
//! that of `argmax s_faithful`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sae::{SaeError, SaeModel};
use crate::store::{Label, ResidualDataset};

#[derive(Debug, Error)]
pub enum MineError {
    #[error(transparent)]
    Sae(#[from] SaeError),
    #[error("dataset has d={data}, model expects d={model}")]
    Dimension { data: usize, model: usize },
    #[error("no {0:?} samples")]
    EmptyClass(Label),
    #[error("need two eligible latents, found {0}")]
    NotEnoughLatents(usize),
    #[error("stats cover {stats} latents, model has {model}")]
    Mismatch { stats: usize, model: usize },
}

/// When a latent counts as firing on a sample.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum FireRule {
    /// Positive after TopK sparsification.
    #[default]
    PostTopK,
    /// Positive after the ReLU, before TopK.
    PreTopK,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentStats {
    pub f_hall: Vec<f64>,
    pub f_faithful: Vec<f64>,
    pub s_hall: Vec<f64>,
    pub s_faithful: Vec<f64>,
    pub n_hall: usize,
    pub n_faithful: usize,
}

impl LatentStats {
    /// Builds the statistics from raw firing counts.
    pub fn from_counts(hall: &[usize], faithful: &[usize], n_hall: usize, n_faithful: usize) -> Self {
        let f_hall: Vec<f64> = hall.iter().map(|&c| c as f64 / n_hall as f64).collect();
        let f_faithful: Vec<f64> = faithful.iter().map(|&c| c as f64 / n_faithful as f64).collect();
        let s_hall: Vec<f64> = f_hall.iter().zip(&f_faithful).map(|(h, f)| h - f).collect();
        let s_faithful = s_hall.iter().map(|s| -s).collect();
        Self {
            f_hall,
            f_faithful,
            s_hall,
            s_faithful,
            n_hall,
            n_faithful,
        }
    }

    pub fn d_sae(&self) -> usize {
        self.s_hall.len()
    }

    pub fn is_dead(&self, j: usize) -> bool {
        self.f_hall[j] == 0.0 && self.f_faithful[j] == 0.0
    }

    /// CSV with columns `latent_index,f_hall,f_faithful,s_hall`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("latent_index,f_hall,f_faithful,s_hall\n");
        for j in 0..self.d_sae() {
            out.push_str(&format!(
                "{j},{},{},{}\n",
                self.f_hall[j], self.f_faithful[j], self.s_hall[j]
            ));
        }
        out
    }
}

pub fn activation_frequencies(
    data: &ResidualDataset,
    model: &SaeModel,
    rule: FireRule,
) -> Result<LatentStats, MineError> {
    if data.d != model.d {
        return Err(MineError::Dimension {
            data: data.d,
            model: model.d,
        });
    }
    let mut hall = vec![0usize; model.d_sae];
    let mut faithful = vec![0usize; model.d_sae];
    let (mut n_hall, mut n_faithful) = (0, 0);
    for s in &data.samples {
        let code = match rule {
            FireRule::PostTopK => model.sparse_code(&s.vector)?,
            FireRule::PreTopK => model.encode(&s.vector)?,
        };
        let counts = match s.label {
            Label::Hall => {
                n_hall += 1;
                &mut hall
            }
            Label::Faithful => {
                n_faithful += 1;
                &mut faithful
            }
        };
        for (c, &z) in counts.iter_mut().zip(&code) {
            if z > 0.0 {
                *c += 1;
            }
        }
    }
    if n_hall == 0 {
        return Err(MineError::EmptyClass(Label::Hall));
    }
    if n_faithful == 0 {
        return Err(MineError::EmptyClass(Label::Faithful));
    }
    Ok(LatentStats::from_counts(&hall, &faithful, n_hall, n_faithful))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSelection {
    pub hall_latent: usize,
    pub faithful_latent: usize,
    pub d_hall: Vec<f32>,
    pub d_faithful: Vec<f32>,
    /// Set when both argmaxes landed on one latent and the faithful pick
    /// was demoted to the runner-up.
    pub collision: bool,
}

pub fn select_directions(
    stats: &LatentStats,
    model: &SaeModel,
    exclude_dead: bool,
) -> Result<DirectionSelection, MineError> {
    if stats.d_sae() != model.d_sae {
        return Err(MineError::Mismatch {
            stats: stats.d_sae(),
            model: model.d_sae,
        });
    }
    let eligible: Vec<usize> = (0..stats.d_sae())
        .filter(|&j| !(exclude_dead && stats.is_dead(j)))
        .collect();
    if eligible.len() < 2 {
        return Err(MineError::NotEnoughLatents(eligible.len()));
    }
    let hall_latent = argmax(&eligible, &stats.s_hall, None);
    let first_faithful = argmax(&eligible, &stats.s_faithful, None);
    let collision = first_faithful == hall_latent;
    let faithful_latent = if collision {
        argmax(&eligible, &stats.s_faithful, Some(hall_latent))
    } else {
        first_faithful
    };
    Ok(DirectionSelection {
        hall_latent,
        faithful_latent,
        d_hall: model.decoder_row(hall_latent).to_vec(),
        d_faithful: model.decoder_row(faithful_latent).to_vec(),
        collision,
    })
}

/// First index of the maximum; strict comparison keeps the lower index on ties.
fn argmax(candidates: &[usize], score: &[f64], skip: Option<usize>) -> usize {
    let mut best: Option<usize> = None;
    for &j in candidates {
        if Some(j) == skip {
            continue;
        }
        if best.is_none_or(|b| score[j] > score[b]) {
            best = Some(j);
        }
    }
    best.expect("at least two candidates")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LatentClass {
    Hall,
    Faithful,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedLatent {
    pub latent: usize,
    pub abs_s_hall: f64,
    pub class: LatentClass,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopMReport {
    pub entries: Vec<RankedLatent>,
    pub requested: usize,
    /// True when fewer than `requested` latents were eligible.
    pub clipped: bool,
}

pub const DEFAULT_TOP_M: usize = 128;

/// The `m` live latents with the largest `|s_hall|`, labeled by sign.
pub fn top_m_report(stats: &LatentStats, m: usize) -> TopMReport {
    let mut ranked: Vec<RankedLatent> = (0..stats.d_sae())
        .filter(|&j| !stats.is_dead(j) && stats.s_hall[j] != 0.0)
        .map(|j| RankedLatent {
            latent: j,
            abs_s_hall: stats.s_hall[j].abs(),
            class: if stats.s_hall[j] > 0.0 {
                LatentClass::Hall
            } else {
                LatentClass::Faithful
            },
        })
        .collect();
    ranked.sort_by(|a, b| b.abs_s_hall.total_cmp(&a.abs_s_hall).then(a.latent.cmp(&b.latent)));
    let clipped = ranked.len() < m;
    ranked.truncate(m);
    TopMReport {
        entries: ranked,
        requested: m,
        clipped,
    }
}
