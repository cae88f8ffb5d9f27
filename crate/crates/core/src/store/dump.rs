// SPDX-License-Identifier: MIT OR Apache-2.0

//! `RSDUMP01`: residual dumps exchanged with the model-side capture scripts.

use serde::{Deserialize, Serialize};

use super::{Label, ResidualDataset, ResidualSample, Split, StoreError};
use crate::container::{self, FormatError};

pub const DUMP_MAGIC: &[u8; 8] = b"RSDUMP01";

#[derive(Serialize, Deserialize)]
struct DumpHeader {
    version: u32,
    d: usize,
    n: usize,
    layer: u32,
    model_id: String,
    labels: Vec<u8>,
    image_ids: Vec<String>,
    token_texts: Vec<String>,
    token_positions: Vec<u32>,
    subword_counts: Vec<u32>,
}

/// Serializes a dataset. The split tag is not part of the format.
pub fn write_dump(dataset: &ResidualDataset) -> Result<Vec<u8>, StoreError> {
    if dataset.is_empty() {
        return Err(StoreError::Empty);
    }
    dataset.validate()?;
    for (index, s) in dataset.samples.iter().enumerate() {
        if s.vector.iter().any(|v| !v.is_finite()) {
            return Err(FormatError::NonFinite { what: "sample", index }.into());
        }
    }
    let samples = &dataset.samples;
    let header = DumpHeader {
        version: 1,
        d: dataset.d,
        n: samples.len(),
        layer: dataset.layer,
        model_id: dataset.model_id.clone(),
        labels: samples.iter().map(|s| s.label.bit()).collect(),
        image_ids: samples.iter().map(|s| s.image_id.clone()).collect(),
        token_texts: samples.iter().map(|s| s.token_text.clone()).collect(),
        token_positions: samples.iter().map(|s| s.token_position).collect(),
        subword_counts: samples.iter().map(|s| s.subword_count).collect(),
    };
    let payload = samples.iter().flat_map(|s| s.vector.iter().copied());
    Ok(container::encode(DUMP_MAGIC, &header, payload)?)
}

pub fn read_dump(bytes: &[u8]) -> Result<ResidualDataset, StoreError> {
    let (h, payload): (DumpHeader, _) = container::decode(DUMP_MAGIC, bytes)?;
    if h.version != 1 {
        return Err(FormatError::Version(h.version).into());
    }
    let n = h.n;
    for (field, len) in [
        ("labels", h.labels.len()),
        ("image_ids", h.image_ids.len()),
        ("token_texts", h.token_texts.len()),
        ("token_positions", h.token_positions.len()),
        ("subword_counts", h.subword_counts.len()),
    ] {
        if len != n {
            return Err(
                FormatError::Consistency(format!("header declares n={n} but {field} has {len} entries")).into(),
            );
        }
    }
    let count = n
        .checked_mul(h.d)
        .ok_or_else(|| FormatError::Validation("n*d overflows".into()))?;
    let values = container::read_f32s(payload, count)?;

    let mut samples = Vec::with_capacity(n);
    let rows: Box<dyn Iterator<Item = &[f32]>> = if h.d == 0 {
        Box::new(std::iter::repeat_n(&[][..], n))
    } else {
        Box::new(values.chunks_exact(h.d))
    };
    for (i, row) in rows.enumerate() {
        let label = Label::from_bit(h.labels[i])
            .ok_or_else(|| FormatError::Validation(format!("label {} at index {i} is not 0 or 1", h.labels[i])))?;
        samples.push(ResidualSample {
            vector: row.to_vec(),
            label,
            image_id: h.image_ids[i].clone(),
            token_text: h.token_texts[i].clone(),
            token_position: h.token_positions[i],
            subword_count: h.subword_counts[i],
        });
    }
    Ok(ResidualDataset {
        d: h.d,
        layer: h.layer,
        model_id: h.model_id,
        samples,
        split: Split::Unsplit,
    })
}
