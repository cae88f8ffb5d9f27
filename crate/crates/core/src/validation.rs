// SPDX-License-Identifier: MIT OR Apache-2.0

//! Runs the statistical battery on a pair of selected latents: per-class
//! activation tests, density curves, linear probes over five feature sets,
//! and a separating boundary between the top-ranked latent directions.

use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::miner::{top_m_report, FireRule, LatentClass, LatentStats, DEFAULT_TOP_M};
use crate::sae::{SaeError, SaeModel};
use crate::stats::{
    kde_curve, linear_svm_boundary, linspace, pca_project, spearman_rho, train_logreg, two_sample, ClassifierReport,
    FeatureSet, LogRegConfig, SpearmanResult, StatsError, SvmConfig, TwoSampleResult,
};
use crate::store::{Label, ResidualDataset};

#[derive(Debug, Error)]
pub enum ValidationError {
    #[error(transparent)]
    Sae(#[from] SaeError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("dataset has d={data}, model expects d={model}")]
    Dimension { data: usize, model: usize },
    #[error("latent {0} out of range")]
    Latent(usize),
    #[error("{0} split is empty")]
    Empty(&'static str),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ValidationConfig {
    pub fire_rule: FireRule,
    pub logreg: LogRegConfig,
    pub svm: SvmConfig,
    pub top_m: usize,
    pub kde_points: usize,
    /// Significance level for the per-latent t-tests.
    pub alpha: f64,
    /// Seed for picking the random-latent baselines.
    pub seed: u64,
}

impl Default for ValidationConfig {
    fn default() -> Self {
        Self {
            fire_rule: FireRule::PostTopK,
            logreg: LogRegConfig::default(),
            svm: SvmConfig::default(),
            top_m: DEFAULT_TOP_M,
            kde_points: 200,
            alpha: 0.05,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeCurves {
    pub grid: Vec<f64>,
    pub hall: Option<Vec<f64>>,
    pub faithful: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentTest {
    pub latent: usize,
    pub role: LatentClass,
    /// Hall-sample activations as group a, faithful as group b.
    pub t_test: TwoSampleResult,
    /// Activation against the hall indicator; `None` if either is constant.
    pub spearman: Option<SpearmanResult>,
    pub kde: KdeCurves,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryReport {
    pub latents: Vec<usize>,
    pub labels: Vec<LatentClass>,
    pub clipped: bool,
    pub svm_train_accuracy: f64,
    pub pca_coords: Vec<Vec<f64>>,
    pub pca_explained_variance: Vec<f64>,
    /// SVM refit in the 2-D projection, for drawing.
    pub projected_weights: Vec<f64>,
    pub projected_bias: f64,
    pub projected_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// Informational checks are reported but do not affect `passed`.
    pub gating: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub hall_latent: usize,
    pub faithful_latent: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub latent_tests: Vec<LatentTest>,
    pub classifiers: Vec<ClassifierReport>,
    /// `None` when fewer than two classes of directions are available.
    pub boundary: Option<BoundaryReport>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl ValidationReport {
    pub fn classifier(&self, set: FeatureSet) -> Option<&ClassifierReport> {
        self.classifiers.iter().find(|c| c.feature_set == set)
    }
}

/// Latent activations per sample under the chosen fire rule.
pub fn latent_codes(
    data: &ResidualDataset,
    model: &SaeModel,
    rule: FireRule,
) -> Result<Vec<Vec<f32>>, ValidationError> {
    if data.d != model.d {
        return Err(ValidationError::Dimension {
            data: data.d,
            model: model.d,
        });
    }
    data.samples
        .iter()
        .map(|s| {
            Ok(match rule {
                FireRule::PostTopK => model.sparse_code(&s.vector)?,
                FireRule::PreTopK => model.encode(&s.vector)?,
            })
        })
        .collect()
}

fn features(codes: &[Vec<f32>], latents: &[usize]) -> Vec<Vec<f64>> {
    codes
        .iter()
        .map(|c| latents.iter().map(|&j| f64::from(c[j])).collect())
        .collect()
}

fn labels(data: &ResidualDataset) -> Vec<u8> {
    data.samples.iter().map(|s| s.label.bit()).collect()
}

fn latent_test(
    codes: &[Vec<f32>],
    data: &ResidualDataset,
    latent: usize,
    role: LatentClass,
    kde_points: usize,
) -> Result<LatentTest, ValidationError> {
    let values: Vec<f64> = codes.iter().map(|c| f64::from(c[latent])).collect();
    let by = |label: Label| -> Vec<f64> {
        values
            .iter()
            .zip(&data.samples)
            .filter(|(_, s)| s.label == label)
            .map(|(v, _)| *v)
            .collect()
    };
    let (hall, faithful) = (by(Label::Hall), by(Label::Faithful));
    let t_test = two_sample(&hall, &faithful)?;
    let indicator: Vec<f64> = data.samples.iter().map(|s| f64::from(s.label.bit())).collect();
    let spearman = match spearman_rho(&values, &indicator) {
        Ok(r) => Some(r),
        Err(StatsError::Constant(_)) => None,
        Err(e) => return Err(e.into()),
    };
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let pad = ((hi - lo) * 0.1).max(1e-3);
    let grid = linspace(lo - pad, hi + pad, kde_points.max(2));
    // a class whose activations never vary has no Silverman bandwidth
    let curve = |xs: &[f64]| kde_curve(xs, &grid, None).ok();
    Ok(LatentTest {
        latent,
        role,
        t_test,
        spearman,
        kde: KdeCurves {
            hall: curve(&hall),
            faithful: curve(&faithful),
            grid,
        },
    })
}

fn boundary(
    stats: &LatentStats,
    model: &SaeModel,
    cfg: &ValidationConfig,
) -> Result<Option<BoundaryReport>, ValidationError> {
    let top = top_m_report(stats, cfg.top_m);
    let has = |c: LatentClass| top.entries.iter().any(|e| e.class == c);
    if top.entries.len() < 3 || !has(LatentClass::Hall) || !has(LatentClass::Faithful) {
        return Ok(None);
    }
    let latents: Vec<usize> = top.entries.iter().map(|e| e.latent).collect();
    let labels: Vec<LatentClass> = top.entries.iter().map(|e| e.class).collect();
    let signs: Vec<i8> = labels
        .iter()
        .map(|c| if *c == LatentClass::Hall { 1 } else { -1 })
        .collect();
    let points: Vec<Vec<f64>> = latents
        .iter()
        .map(|&j| model.decoder_row(j).iter().map(|&v| f64::from(v)).collect())
        .collect();
    let svm = linear_svm_boundary(&points, &signs, &cfg.svm)?;
    let pca = match pca_project(&points, 2) {
        Ok(p) => p,
        Err(StatsError::Degenerate | StatsError::Argument(_)) => return Ok(None),
        Err(e) => return Err(e.into()),
    };
    let flat = linear_svm_boundary(&pca.coords, &signs, &cfg.svm)?;
    Ok(Some(BoundaryReport {
        latents,
        labels,
        clipped: top.clipped,
        svm_train_accuracy: svm.train_accuracy,
        pca_coords: pca.coords,
        pca_explained_variance: pca.explained_variance,
        projected_weights: flat.weights,
        projected_bias: flat.bias,
        projected_accuracy: flat.train_accuracy,
    }))
}

/// Statistics and probes are computed on `test`; probes are fit on `train`;
/// `stats` (from the training split) drives the boundary analysis.
pub fn validate_directions(
    train: &ResidualDataset,
    test: &ResidualDataset,
    model: &SaeModel,
    stats: &LatentStats,
    hall_latent: usize,
    faithful_latent: usize,
    cfg: &ValidationConfig,
) -> Result<ValidationReport, ValidationError> {
    for j in [hall_latent, faithful_latent] {
        if j >= model.d_sae {
            return Err(ValidationError::Latent(j));
        }
    }
    if train.is_empty() {
        return Err(ValidationError::Empty("train"));
    }
    if test.is_empty() {
        return Err(ValidationError::Empty("test"));
    }
    let train_codes = latent_codes(train, model, cfg.fire_rule)?;
    let test_codes = latent_codes(test, model, cfg.fire_rule)?;
    let (ytr, yte) = (labels(train), labels(test));

    let latent_tests = vec![
        latent_test(&test_codes, test, hall_latent, LatentClass::Hall, cfg.kde_points)?,
        latent_test(
            &test_codes,
            test,
            faithful_latent,
            LatentClass::Faithful,
            cfg.kde_points,
        )?,
    ];

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let r1 = vec![index::sample(&mut rng, model.d_sae, 1).index(0)];
    let r2 = index::sample(&mut rng, model.d_sae, 2.min(model.d_sae)).into_vec();
    let sets = [
        (FeatureSet::HallOnly, vec![hall_latent]),
        (FeatureSet::FaithfulOnly, vec![faithful_latent]),
        (FeatureSet::Both, vec![hall_latent, faithful_latent]),
        (FeatureSet::Random1, r1),
        (FeatureSet::Random2, r2),
    ];
    let classifiers = sets
        .into_iter()
        .map(|(set, latents)| {
            let xtr = features(&train_codes, &latents);
            let xte = features(&test_codes, &latents);
            train_logreg(set, latents, (&xtr, &ytr), (&xte, &yte), &cfg.logreg)
        })
        .collect::<Result<Vec<_>, _>>()?;

    let boundary = boundary(stats, model, cfg)?;

    let mut checks = Vec::new();
    for t in &latent_tests {
        let r = &t.t_test;
        let want_sign = if t.role == LatentClass::Hall { 1.0 } else { -1.0 };
        let passed = r.p_value < cfg.alpha && (r.mean_a - r.mean_b) * want_sign > 0.0;
        checks.push(Check {
            name: format!("{:?} latent {} separates classes", t.role, t.latent).to_lowercase(),
            passed,
            gating: true,
            detail: format!(
                "t={:.4} p={:.3e} d={} mean_hall={:.4} mean_faithful={:.4}",
                r.t_statistic,
                r.p_value,
                r.cohens_d.map_or("n/a".into(), |d| format!("{d:.4}")),
                r.mean_a,
                r.mean_b
            ),
        });
    }
    let acc = |s: FeatureSet| {
        classifiers
            .iter()
            .find(|c| c.feature_set == s)
            .map_or(0.0, |c| c.accuracy)
    };
    let (both, h, f) = (
        acc(FeatureSet::Both),
        acc(FeatureSet::HallOnly),
        acc(FeatureSet::FaithfulOnly),
    );
    let chance = acc(FeatureSet::Random1).max(acc(FeatureSet::Random2));
    checks.push(Check {
        name: "single-latent probes beat random latents".into(),
        passed: h > chance && f > chance,
        gating: true,
        detail: format!("hall={h:.4} faithful={f:.4} best_random={chance:.4}"),
    });
    // Binary firing with mirrored rates makes both-on and both-off equally
    // likely in each class, so the pair can tie the better single latent.
    checks.push(Check {
        name: "combined probe at least as accurate as either latent".into(),
        passed: both >= h && both >= f,
        gating: false,
        detail: format!("both={both:.4} hall={h:.4} faithful={f:.4}"),
    });
    let passed = checks.iter().filter(|c| c.gating).all(|c| c.passed);
    Ok(ValidationReport {
        hall_latent,
        faithful_latent,
        n_train: train.len(),
        n_test: test.len(),
        latent_tests,
        classifiers,
        boundary,
        checks,
        passed,
    })
}
