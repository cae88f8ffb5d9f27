// SPDX-License-Identifier: MIT OR Apache-2.0

//! Per-image class balancing and the stratified train/test split.

use std::collections::BTreeMap;

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Label, ResidualDataset, ResidualSample, Split, StoreError};

pub const DEFAULT_SPLIT_RATIO: f64 = 0.9;

#[derive(Debug, Clone, PartialEq)]
pub struct BalancedSplit {
    pub train: ResidualDataset,
    pub test: ResidualDataset,
    /// Records discarded because the object word spanned several tokens.
    pub dropped_multi_token: usize,
    /// Records discarded by per-image downsampling.
    pub dropped_imbalance: usize,
}

/// Builds a class-balanced dataset and splits it into train and test.
///
/// Multi-token object words are dropped first. Each image then keeps
/// `min(#hall, #faithful)` samples of each class, drawn without replacement.
/// The pooled set is split per label so both halves stay balanced.
pub fn build_balanced_dataset(
    template: &ResidualDataset,
    seed: u64,
    split_ratio: f64,
) -> Result<BalancedSplit, StoreError> {
    if !(split_ratio > 0.0 && split_ratio < 1.0) {
        return Err(StoreError::SplitRatio(split_ratio));
    }
    template.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut by_image: BTreeMap<&str, [Vec<&ResidualSample>; 2]> = BTreeMap::new();
    let mut dropped_multi_token = 0;
    for s in &template.samples {
        if s.subword_count > 1 {
            dropped_multi_token += 1;
            continue;
        }
        let slot = by_image.entry(s.image_id.as_str()).or_default();
        slot[class_slot(s.label)].push(s);
    }
    let images = by_image.len();

    let mut hall = Vec::new();
    let mut faithful = Vec::new();
    let mut kept = 0;
    for [h, f] in by_image.values() {
        let m = h.len().min(f.len());
        kept += 2 * m;
        hall.extend(pick(&mut rng, h, m));
        faithful.extend(pick(&mut rng, f, m));
    }
    let dropped_imbalance = template.len() - dropped_multi_token - kept;
    if hall.is_empty() {
        return Err(StoreError::EmptyAfterBalancing {
            dropped_multi_token,
            images,
        });
    }

    hall.shuffle(&mut rng);
    faithful.shuffle(&mut rng);
    let per_class = hall.len();
    let n_train = ((per_class as f64) * split_ratio).round() as usize;
    let n_train = n_train.min(per_class);

    let mut train_samples: Vec<ResidualSample> = hall[..n_train]
        .iter()
        .chain(&faithful[..n_train])
        .map(|s| (*s).clone())
        .collect();
    let mut test_samples: Vec<ResidualSample> = hall[n_train..]
        .iter()
        .chain(&faithful[n_train..])
        .map(|s| (*s).clone())
        .collect();
    train_samples.shuffle(&mut rng);
    test_samples.shuffle(&mut rng);

    let make = |samples, split| ResidualDataset {
        d: template.d,
        layer: template.layer,
        model_id: template.model_id.clone(),
        samples,
        split,
    };
    Ok(BalancedSplit {
        train: make(train_samples, Split::Train),
        test: make(test_samples, Split::Test),
        dropped_multi_token,
        dropped_imbalance,
    })
}

fn class_slot(label: Label) -> usize {
    match label {
        Label::Hall => 0,
        Label::Faithful => 1,
    }
}

/// Uniform draw of `m` items without replacement, kept in input order.
fn pick<'a>(rng: &mut ChaCha8Rng, items: &[&'a ResidualSample], m: usize) -> Vec<&'a ResidualSample> {
    let mut idx = index::sample(rng, items.len(), m).into_vec();
    idx.sort_unstable();
    idx.into_iter().map(|i| items[i]).collect()
}
