//! The power regularizer family `psi(x) = |x|^{1+q}` (unscaled) and
//! `psi(x) = |x|^{1+q} / (1+q)` (scaled), with closed-form Fenchel
//! conjugates and conjugate gradients.

use crate::error::{Error, Result};

/// A symmetric convex power regularizer.
///
/// * unscaled: `psi(x) = |x|^{1+q}`, conjugate
///   `psi*(t) = q (1+q)^{-(1+1/q)} |t|^{1+1/q}`
/// * scaled: `psi(x) = |x|^{1+q} / (1+q)`, conjugate
///   `psi*(t) = |t|^{1+1/q} / (1+1/q)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerRegularizer {
    q: f64,
    scaled: bool,
}

impl PowerRegularizer {
    pub fn new(q: f64, scaled: bool) -> Result<Self> {
        if !(q > 0.0) || !q.is_finite() {
            return Err(Error::UnsupportedRegularizer(format!(
                "power family requires a finite exponent q > 0, got {q}"
            )));
        }
        Ok(Self { q, scaled })
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn is_scaled(&self) -> bool {
        self.scaled
    }

    /// True for the unscaled quadratic `psi(x) = x^2`, which admits a
    /// closed-form epigraph projection.
    pub fn is_quadratic(&self) -> bool {
        !self.scaled && self.q == 1.0
    }

    /// `psi(x)`.
    pub fn value(&self, x: f64) -> f64 {
        let v = x.abs().powf(1.0 + self.q);
        if self.scaled {
            v / (1.0 + self.q)
        } else {
            v
        }
    }

    /// A (sub)gradient of `psi` at `x` (0 at the origin).
    pub fn grad(&self, x: f64) -> f64 {
        if x == 0.0 {
            return 0.0;
        }
        let g = x.signum() * x.abs().powf(self.q);
        if self.scaled {
            g
        } else {
            (1.0 + self.q) * g
        }
    }

    /// Fenchel conjugate `psi*(theta) = sup_x theta*x - psi(x)`.
    pub fn conjugate(&self, theta: f64) -> f64 {
        let a = theta.abs();
        let r = 1.0 + 1.0 / self.q;
        if self.scaled {
            a.powf(r) / r
        } else {
            self.q * (1.0 + self.q).powf(-r) * a.powf(r)
        }
    }

    /// Gradient of the conjugate, `∇psi*(theta)` (the maximizing x).
    pub fn conjugate_grad(&self, theta: f64) -> f64 {
        if theta == 0.0 {
            return 0.0;
        }
        let a = theta.abs();
        let m = if self.scaled {
            a.powf(1.0 / self.q)
        } else {
            (a / (1.0 + self.q)).powf(1.0 / self.q)
        };
        theta.signum() * m
    }

    /// `psi*_gamma(theta) = gamma * psi*(theta / gamma)`, the conjugate of
    /// `gamma * psi`.
    pub fn conjugate_gamma(&self, theta: f64, gamma: f64) -> f64 {
        gamma * self.conjugate(theta / gamma)
    }

    /// `∇psi*_gamma(theta) = ∇psi*(theta / gamma)`.
    pub fn conjugate_gamma_grad(&self, theta: f64, gamma: f64) -> f64 {
        self.conjugate_grad(theta / gamma)
    }
}
