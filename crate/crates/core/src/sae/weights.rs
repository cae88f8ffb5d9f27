// SPDX-License-Identifier: MIT OR Apache-2.0

//! `SAEW0001` weight container.

use serde::{Deserialize, Serialize};

use super::{SaeError, SaeModel};
use crate::container::{self, FormatError};

pub const WEIGHTS_MAGIC: &[u8; 8] = b"SAEW0001";

#[derive(Serialize, Deserialize)]
struct WeightsHeader {
    version: u32,
    d: usize,
    d_sae: usize,
    k: usize,
}

pub fn save_weights(model: &SaeModel) -> Result<Vec<u8>, SaeError> {
    model.validate()?;
    let header = WeightsHeader {
        version: 1,
        d: model.d,
        d_sae: model.d_sae,
        k: model.k,
    };
    let payload = model
        .w_enc
        .iter()
        .chain(&model.b_enc)
        .chain(&model.w_dec)
        .chain(&model.b_dec)
        .copied();
    Ok(container::encode(WEIGHTS_MAGIC, &header, payload)?)
}

pub fn load_weights(bytes: &[u8]) -> Result<SaeModel, SaeError> {
    let (h, payload): (WeightsHeader, _) = container::decode(WEIGHTS_MAGIC, bytes)?;
    if h.version != 1 {
        return Err(FormatError::Version(h.version).into());
    }
    if h.d == 0 || h.d_sae == 0 || h.k == 0 || h.k > h.d_sae {
        return Err(FormatError::Validation(format!("bad shape d={} d_sae={} k={}", h.d, h.d_sae, h.k)).into());
    }
    let m = h.d_sae * h.d;
    let mut values = container::read_f32s(payload, 2 * m + h.d_sae + h.d)?;
    container::check_finite("weights", &values)?;
    let b_dec = values.split_off(2 * m + h.d_sae);
    let w_dec = values.split_off(m + h.d_sae);
    let b_enc = values.split_off(m);
    let model = SaeModel {
        d: h.d,
        d_sae: h.d_sae,
        k: h.k,
        w_enc: values,
        b_enc,
        w_dec,
        b_dec,
    };
    model.validate()?;
    Ok(model)
}
