// SPDX-License-Identifier: MIT OR Apache-2.0

use super::SteerError;

/// Euclidean norm accumulated in f64.
pub fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Per-token steering strength `gamma * |x| / (|direction| + eps)`.
pub fn adaptive_alpha(x: &[f32], direction: &[f32], gamma: f64, eps: f64) -> Result<f64, SteerError> {
    if x.len() != direction.len() {
        return Err(SteerError::Shape {
            what: "direction",
            expected: x.len(),
            actual: direction.len(),
        });
    }
    if !(eps > 0.0) {
        return Err(SteerError::Plan(format!("eps must be positive, got {eps}")));
    }
    if !gamma.is_finite() || !eps.is_finite() {
        return Err(SteerError::NonFinite("steering parameters"));
    }
    let nx = l2_norm(x);
    let nd = l2_norm(direction);
    if !nx.is_finite() {
        return Err(SteerError::NonFinite("token"));
    }
    if !nd.is_finite() {
        return Err(SteerError::NonFinite("direction"));
    }
    Ok(gamma * nx / (nd + eps))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn norm_ten_over_two_at_gamma_point_six() {
        let x = [6.0, 8.0];
        let u = [0.0, 2.0];
        let a = adaptive_alpha(&x, &u, 0.6, 1e-6).unwrap();
        assert!((a - 3.0).abs() / 3.0 <= 5e-6, "{a}");
    }

    #[test]
    fn zero_token_or_zero_gain_gives_zero() {
        assert_eq!(adaptive_alpha(&[0.0; 3], &[1.0, 2.0, 3.0], 0.8, 1e-6).unwrap(), 0.0);
        assert_eq!(adaptive_alpha(&[4.0, -1.0], &[1.0, 2.0], 0.0, 1e-6).unwrap(), 0.0);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(
            adaptive_alpha(&[1.0], &[1.0], 1.0, 0.0),
            Err(SteerError::Plan(_))
        ));
        assert!(matches!(
            adaptive_alpha(&[f32::NAN], &[1.0], 1.0, 1e-6),
            Err(SteerError::NonFinite("token"))
        ));
        assert!(matches!(
            adaptive_alpha(&[1.0], &[1.0, 0.0], 1.0, 1e-6),
            Err(SteerError::Shape { .. })
        ));
    }
}
