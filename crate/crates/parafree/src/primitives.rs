//! Scalar clipping and the weighted pair norms used by the epigraph game.

use crate::error::{Error, Result};

/// Projects `g` onto the interval `[-h, h]`.
///
/// Returns `g` unchanged when `|g| <= h`, otherwise `sign(g) * h`.
pub fn clip(g: f64, h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidHint(format!("clip requires h > 0, got {h}")));
    }
    Ok(if g.abs() <= h { g } else { g.signum() * h })
}

/// Dual norm of a feedback pair: `sqrt(g^2/h^2 + a^2/gamma^2)`.
pub fn dual_norm_pair(g: f64, a: f64, h: f64, gamma: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidHint(format!("dual_norm_pair requires h > 0, got {h}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("dual_norm_pair requires gamma > 0, got {gamma}")));
    }
    Ok(((g / h).powi(2) + (a / gamma).powi(2)).sqrt())
}

/// Primal weighted norm of an iterate pair: `sqrt(h^2 x^2 + gamma^2 y^2)`.
pub fn weighted_norm(x: f64, y: f64, h: f64, gamma: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidHint(format!("weighted_norm requires h > 0, got {h}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("weighted_norm requires gamma > 0, got {gamma}")));
    }
    Ok(((h * x).powi(2) + (gamma * y).powi(2)).sqrt())
}

/// Euclidean norm of a slice.
pub fn euclid_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Euclidean inner product; errors on dimension mismatch.
pub fn dot(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Shape { expected: a.len(), got: b.len() });
    }
    Ok(a.iter().zip(b).map(|(x, y)| x * y).sum())
}
