// SPDX-License-Identifier: MIT OR Apache-2.0

//! # saesteer
//!
//! Toolkit for finding hallucination-related directions among the latents of
//! a TopK sparse autoencoder, checking that they separate hallucinated from
//! grounded object tokens, and steering residual streams along them.
//!
//! The pipeline, bottom to top:
//!
//! - [`store`]: labeled residual-stream samples, the `RSDUMP01` dump format,
//!   per-image class balancing and a synthetic generator with planted latents.
//! - [`sae`]: TopK sparse autoencoder (encode, sparsify, decode), a small SGD
//!   trainer with the dead-latent auxiliary loss, and `SAEW0001` weights.
//! - [`miner`]: activation frequencies per class and direction selection.
//! - [`stats`]: Welch t-test, Cohen's d, Spearman, KDE, logistic regression,
//!   linear SVM and PCA.
//! - [`steer`]: adaptive steering strength, segment-wise steering of token
//!   streams (forward and reverse), plan/stream containers and a toy
//!   generation simulator.
//! - [`validation`]: the statistical battery run on a selected latent pair.
//! - [`eval`]: CHAIR caption metrics and POPE yes/no scoring.

pub mod container;
pub mod eval;
pub mod miner;
pub mod sae;
pub mod stats;
pub mod steer;
pub mod store;
pub mod validation;

pub use container::FormatError;
pub use miner::{DirectionSelection, LatentStats};
pub use sae::SaeModel;
pub use steer::{SteeringPlan, TokenStream};
pub use store::{Label, ResidualDataset, ResidualSample};
