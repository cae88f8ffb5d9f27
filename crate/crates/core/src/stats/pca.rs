// SPDX-License-Identifier: MIT OR Apache-2.0

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::StatsError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaResult {
    /// One row per input point, one column per component.
    pub coords: Vec<Vec<f64>>,
    /// Covariance eigenvalues (n - 1 normalization), descending.
    pub explained_variance: Vec<f64>,
    /// Unit loading vectors, one per component.
    pub components: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
}

/// Projects mean-centered points onto the top `dims` covariance eigenvectors.
/// Each component is signed so its largest-magnitude loading is positive.
pub fn pca_project(points: &[Vec<f64>], dims: usize) -> Result<PcaResult, StatsError> {
    let n = points.len();
    if n < 3 {
        return Err(StatsError::TooFew {
            what: "pca points",
            need: 3,
            got: n,
        });
    }
    let p = points[0].len();
    if points.iter().any(|r| r.len() != p) {
        return Err(StatsError::Argument("ragged point matrix".into()));
    }
    if p < 2 || dims == 0 || dims > p {
        return Err(StatsError::Argument(format!(
            "need 1 <= dims <= p and p >= 2, got dims={dims}, p={p}"
        )));
    }
    if points.iter().flatten().any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }

    let mean: Vec<f64> = (0..p)
        .map(|c| points.iter().map(|r| r[c]).sum::<f64>() / n as f64)
        .collect();
    let centered = DMatrix::from_fn(n, p, |i, j| points[i][j] - mean[j]);
    let cov = (centered.transpose() * &centered) / (n as f64 - 1.0);
    let trace = cov.trace();
    if !(trace > 0.0) {
        return Err(StatsError::Degenerate);
    }

    let eig = SymmetricEigen::new(cov);
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(dims);
    let mut explained_variance = Vec::with_capacity(dims);
    for &idx in order.iter().take(dims) {
        let mut v: Vec<f64> = eig.eigenvectors.column(idx).iter().copied().collect();
        let lead = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()).then(b.0.cmp(&a.0)))
            .map_or(0.0, |(_, x)| *x);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        // tiny negative eigenvalues are rounding noise on rank-deficient data
        explained_variance.push(eig.eigenvalues[idx].max(0.0));
    }

    let coords = (0..n)
        .map(|i| {
            components
                .iter()
                .map(|c| (0..p).map(|j| centered[(i, j)] * c[j]).sum())
                .collect()
        })
        .collect();
    Ok(PcaResult {
        coords,
        explained_variance,
        components,
        mean,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal, StandardNormal};

    fn var(xs: impl Iterator<Item = f64> + Clone) -> f64 {
        let v: Vec<f64> = xs.collect();
        let m = v.iter().sum::<f64>() / v.len() as f64;
        v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)
    }

    #[test]
    fn line_in_3d_has_no_second_component() {
        let dir = [1.0, 2.0, -0.5];
        let pts: Vec<Vec<f64>> = (0..20)
            .map(|i| dir.iter().map(|d| d * (i as f64 - 7.3)).collect())
            .collect();
        let r = pca_project(&pts, 2).unwrap();
        assert!(r.explained_variance[1] <= 1e-9 * r.explained_variance[0]);
    }

    #[test]
    fn projected_variance_matches_eigenvalues() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = Normal::new(0.0, 1.0).unwrap();
        let pts: Vec<Vec<f64>> = (0..300)
            .map(|_| {
                let a: f64 = g.sample(&mut rng);
                let b: f64 = g.sample(&mut rng);
                vec![3.0 * a, a + 0.5 * b, g.sample(&mut rng) * 0.2, b]
            })
            .collect();
        let r = pca_project(&pts, 2).unwrap();
        for c in 0..2 {
            let v = var(r.coords.iter().map(|row| row[c]));
            let ev = r.explained_variance[c];
            assert!((v - ev).abs() <= 1e-9 * ev, "{v} vs {ev}");
        }
        assert!(r.explained_variance[0] >= r.explained_variance[1]);
    }

    #[test]
    fn sign_rule_makes_largest_loading_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let pts: Vec<Vec<f64>> = (0..50)
            .map(|_| {
                let t: f64 = rng.sample(StandardNormal);
                let s: f64 = rng.sample(StandardNormal);
                vec![-4.0 * t, 0.1 * s, s]
            })
            .collect();
        let r = pca_project(&pts, 2).unwrap();
        for c in &r.components {
            let lead = c
                .iter()
                .copied()
                .fold(0.0f64, |m, x| if x.abs() > m.abs() { x } else { m });
            assert!(lead > 0.0);
        }
    }

    #[test]
    fn isotropic_cloud_has_similar_variances() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let pts: Vec<Vec<f64>> = (0..5000)
            .map(|_| (0..3).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let r = pca_project(&pts, 2).unwrap();
        let (a, b) = (r.explained_variance[0], r.explained_variance[1]);
        assert!((a - b).abs() / a <= 0.1, "{a} {b}");
    }

    #[test]
    fn constant_points_are_degenerate() {
        let pts = vec![vec![1.0, 2.0]; 5];
        assert_eq!(pca_project(&pts, 2), Err(StatsError::Degenerate));
    }
}
