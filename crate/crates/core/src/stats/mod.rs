// SPDX-License-Identifier: MIT OR Apache-2.0

//! Statistical checks on mined latents: two-sample tests, effect sizes, rank
//! correlation, density curves, and the classifiers used to probe how well a
//! latent separates hallucinated from faithful samples.

mod kde;
mod logreg;
mod pca;
mod spearman;
pub mod special;
mod svm;
mod ttest;

use thiserror::Error;

pub use kde::{kde_curve, linspace, silverman_bandwidth};
pub use logreg::{fit_logreg, train_logreg, ClassifierReport, Confusion, FeatureSet, LogRegConfig, LogisticModel};
pub use pca::{pca_project, PcaResult};
pub use spearman::{average_ranks, spearman_rho, SpearmanResult};
pub use svm::{linear_svm_boundary, LinearSvm, SvmConfig};
pub use ttest::{cohens_d, two_sample, welch_t_test, Degeneracy, TwoSampleResult, WelchResult};

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} observations in {what}, got {got}")]
    TooFew {
        what: &'static str,
        need: usize,
        got: usize,
    },
    #[error("pooled standard deviation is zero")]
    ZeroSpread,
    #[error("correlation undefined: {0} is constant")]
    Constant(&'static str),
    #[error("length mismatch: {0} vs {1}")]
    Length(usize, usize),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error("only one class present in labels")]
    SingleClass,
    #[error("data has zero variance")]
    Degenerate,
    #[error("non-finite input")]
    NonFinite,
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample variance with the `n - 1` denominator.
pub(crate) fn sample_var(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub(crate) fn check_finite(xs: &[f64]) -> Result<(), StatsError> {
    if xs.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(StatsError::NonFinite)
    }
}
