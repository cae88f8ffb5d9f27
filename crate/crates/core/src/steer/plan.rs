// SPDX-License-Identifier: MIT OR Apache-2.0

//! Steering plans, model presets and the `STEER001` container.

use serde::{Deserialize, Serialize};

use super::{l2_norm, SteerError};
use crate::container::{self, FormatError};
use crate::miner::DirectionSelection;

pub const STEER_MAGIC: &[u8; 8] = b"STEER001";
pub const DEFAULT_EPS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum SteeringMode {
    #[default]
    #[serde(rename = "SSL")]
    Ssl,
    #[serde(rename = "ReverseSSL")]
    ReverseSsl,
    /// Forward signs with a constant strength instead of the adaptive one.
    FixedAlpha,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteeringPlan {
    pub d_hall: Vec<f32>,
    pub d_faithful: Vec<f32>,
    pub gamma: f64,
    pub layer: u32,
    pub eps: f64,
    pub mode: SteeringMode,
    pub fixed_alpha: f64,
    pub hall_latent: Option<usize>,
    pub faithful_latent: Option<usize>,
}

impl SteeringPlan {
    /// Adaptive forward plan with the default eps.
    pub fn new(d_hall: Vec<f32>, d_faithful: Vec<f32>, gamma: f64, layer: u32) -> Result<Self, SteerError> {
        let plan = Self {
            d_hall,
            d_faithful,
            gamma,
            layer,
            eps: DEFAULT_EPS,
            mode: SteeringMode::Ssl,
            fixed_alpha: 0.0,
            hall_latent: None,
            faithful_latent: None,
        };
        plan.validate()?;
        Ok(plan)
    }

    pub fn from_selection(sel: &DirectionSelection, gamma: f64, layer: u32) -> Result<Self, SteerError> {
        let mut plan = Self::new(sel.d_hall.clone(), sel.d_faithful.clone(), gamma, layer)?;
        plan.hall_latent = Some(sel.hall_latent);
        plan.faithful_latent = Some(sel.faithful_latent);
        Ok(plan)
    }

    pub fn d(&self) -> usize {
        self.d_hall.len()
    }

    pub fn with_mode(mut self, mode: SteeringMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn validate(&self) -> Result<(), SteerError> {
        if self.d_faithful.len() != self.d_hall.len() {
            return Err(SteerError::Shape {
                what: "d_faithful",
                expected: self.d_hall.len(),
                actual: self.d_faithful.len(),
            });
        }
        if self.d_hall.is_empty() {
            return Err(SteerError::Plan("directions are empty".into()));
        }
        if self.d_hall.iter().chain(&self.d_faithful).any(|v| !v.is_finite()) {
            return Err(SteerError::NonFinite("direction"));
        }
        if !self.gamma.is_finite() || !self.fixed_alpha.is_finite() {
            return Err(SteerError::NonFinite("steering parameters"));
        }
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(SteerError::Plan(format!("eps must be positive, got {}", self.eps)));
        }
        for (name, v) in [("d_hall", &self.d_hall), ("d_faithful", &self.d_faithful)] {
            if l2_norm(v) == 0.0 {
                return Err(SteerError::Plan(format!("{name} has zero norm")));
            }
        }
        Ok(())
    }
}

/// Published per-model settings. Configuration only.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Preset {
    pub name: &'static str,
    pub gamma: f64,
    pub layer: u32,
    /// Best layer from the layer sweep when it differs from `layer`; the
    /// two may reflect different indexing conventions.
    pub sweep_best_layer: Option<u32>,
}

pub const PRESETS: [Preset; 4] = [
    Preset {
        name: "llava-next",
        gamma: 0.6,
        layer: 16,
        sweep_best_layer: Some(15),
    },
    Preset {
        name: "llava-1.5",
        gamma: 0.8,
        layer: 31,
        sweep_best_layer: None,
    },
    Preset {
        name: "instructblip",
        gamma: 0.1,
        layer: 8,
        sweep_best_layer: None,
    },
    Preset {
        name: "llama-3.2-11b",
        gamma: 0.4,
        layer: 32,
        sweep_best_layer: None,
    },
];

pub fn preset(name: &str) -> Option<Preset> {
    PRESETS.iter().copied().find(|p| p.name.eq_ignore_ascii_case(name))
}

#[derive(Serialize, Deserialize)]
struct PlanHeader {
    version: u32,
    d: usize,
    gamma: f64,
    layer: u32,
    eps: f64,
    mode: SteeringMode,
    fixed_alpha: f64,
    hall_latent: Option<usize>,
    faithful_latent: Option<usize>,
}

pub fn export_plan(plan: &SteeringPlan) -> Result<Vec<u8>, SteerError> {
    plan.validate()?;
    let header = PlanHeader {
        version: 1,
        d: plan.d(),
        gamma: plan.gamma,
        layer: plan.layer,
        eps: plan.eps,
        mode: plan.mode,
        fixed_alpha: plan.fixed_alpha,
        hall_latent: plan.hall_latent,
        faithful_latent: plan.faithful_latent,
    };
    let payload = plan.d_hall.iter().chain(&plan.d_faithful).copied();
    Ok(container::encode(STEER_MAGIC, &header, payload)?)
}

pub fn import_plan(bytes: &[u8]) -> Result<SteeringPlan, SteerError> {
    let (h, payload): (PlanHeader, _) = container::decode(STEER_MAGIC, bytes)?;
    if h.version != 1 {
        return Err(FormatError::Version(h.version).into());
    }
    if h.d == 0 {
        return Err(FormatError::Validation("d must be positive".into()).into());
    }
    if payload.len() != 2 * h.d * 4 {
        return Err(FormatError::Consistency(format!(
            "header declares d={} (two blocks of {} bytes) but payload has {} bytes",
            h.d,
            h.d * 4,
            payload.len()
        ))
        .into());
    }
    let flat = container::read_f32s(payload, 2 * h.d)?;
    let (hall, faithful) = flat.split_at(h.d);
    let plan = SteeringPlan {
        d_hall: hall.to_vec(),
        d_faithful: faithful.to_vec(),
        gamma: h.gamma,
        layer: h.layer,
        eps: h.eps,
        mode: h.mode,
        fixed_alpha: h.fixed_alpha,
        hall_latent: h.hall_latent,
        faithful_latent: h.faithful_latent,
    };
    plan.validate()?;
    Ok(plan)
}
