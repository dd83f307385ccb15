//! Fully unconstrained learning: gradient clipping against self-grown
//! magnitude hints, the doubly-logarithmic regularization-coefficient
//! schedule, a unit-ball direction learner, and the magnitude/direction
//! composition for d dimensions.

use crate::epigraph::{EpigraphConfig, EpigraphLearner};
use crate::error::{Error, Result};
use crate::primitives::{clip, dot, euclid_norm};

/// Tracks the self-grown hint sequence `h_{t+1} = max(h_t, |g_t|)` and the
/// cumulative growth-ratio sum `sum (h_{i+1} - h_i) / h_{i+1}`.
#[derive(Debug, Clone, Copy)]
pub struct HintTracker {
    h1: f64,
    h_current: f64,
    ratio_sum: f64,
}

/// Result of one clipping/growth step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipOutcome {
    /// The hint after the step, `max(h_t, |g|)`.
    pub h_next: f64,
    /// The gradient clipped to the pre-step hint.
    pub g_clipped: f64,
    /// `(h_next - h_t) / h_next`; positive exactly when clipping occurred.
    pub ratio_increment: f64,
}

impl HintTracker {
    pub fn new(h1: f64) -> Result<Self> {
        if !(h1 > 0.0) || !h1.is_finite() {
            return Err(Error::InvalidHint(format!("h1 must be a positive finite real, got {h1}")));
        }
        Ok(Self { h1, h_current: h1, ratio_sum: 0.0 })
    }

    pub fn h1(&self) -> f64 {
        self.h1
    }

    pub fn h_current(&self) -> f64 {
        self.h_current
    }

    pub fn ratio_sum(&self) -> f64 {
        self.ratio_sum
    }

    /// Clips `g` against the current hint, grows the hint, and adds the
    /// growth ratio to the cumulative sum.
    pub fn observe(&mut self, g: f64) -> Result<ClipOutcome> {
        if !g.is_finite() {
            return Err(Error::ContractViolation(format!("non-finite gradient {g}")));
        }
        let g_clipped = clip(g, self.h_current)?;
        let h_next = self.h_current.max(g.abs());
        let ratio_increment = (h_next - self.h_current) / h_next;
        self.h_current = h_next;
        self.ratio_sum += ratio_increment;
        Ok(ClipOutcome { h_next, g_clipped, ratio_increment })
    }
}

/// The regularization coefficient for a round whose growth ratio was
/// `increment`, with `ratio_sum` already including that increment:
/// `a_t = gamma * increment / (1 + ratio_sum)`.
pub fn reg_coefficient(gamma: f64, increment: f64, ratio_sum: f64) -> f64 {
    gamma * increment / (1.0 + ratio_sum)
}

/// Per-round outcome of the 1-D magnitude pipeline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MagnitudeStep {
    pub h_used: f64,
    pub h_next: f64,
    pub g_clipped: f64,
    pub a: f64,
    pub ratio_increment: f64,
}

/// The fully unconstrained 1-D learner: clip raw gradients against grown
/// hints, schedule regularization coefficients, and drive the epigraph
/// learner with coupled feedback.
#[derive(Debug, Clone)]
pub struct MagnitudeLearner {
    tracker: HintTracker,
    reg: EpigraphLearner,
}

impl MagnitudeLearner {
    pub fn new(h1: f64, config: EpigraphConfig) -> Result<Self> {
        Ok(Self { tracker: HintTracker::new(h1)?, reg: EpigraphLearner::new(config)? })
    }

    pub fn tracker(&self) -> &HintTracker {
        &self.tracker
    }

    pub fn reg(&self) -> &EpigraphLearner {
        &self.reg
    }

    /// Emits the round's play using the current hint.
    pub fn predict(&mut self) -> Result<f64> {
        self.reg.predict(self.tracker.h_current())
    }

    /// Feeds the raw (unclipped) gradient: clips, grows the hint, computes
    /// the coefficient, and forwards the coupled pair to the epigraph
    /// learner.
    pub fn update(&mut self, g: f64) -> Result<MagnitudeStep> {
        let h_used = self.tracker.h_current();
        let outcome = self.tracker.observe(g)?;
        let a = reg_coefficient(self.reg.gamma(), outcome.ratio_increment, self.tracker.ratio_sum());
        self.reg.update(outcome.g_clipped, a)?;
        Ok(MagnitudeStep {
            h_used,
            h_next: outcome.h_next,
            g_clipped: outcome.g_clipped,
            a,
            ratio_increment: outcome.ratio_increment,
        })
    }
}

/// Projected online gradient descent on the unit ball with the adaptive
/// step `1 / sqrt(2 * sum ||g_i||^2)`.
#[derive(Debug, Clone)]
pub struct DirectionLearner {
    w: Vec<f64>,
    grad_sq_total: f64,
}

impl DirectionLearner {
    pub fn new(d: usize) -> Self {
        Self { w: vec![0.0; d], grad_sq_total: 0.0 }
    }

    pub fn direction(&self) -> &[f64] {
        &self.w
    }

    pub fn grad_sq_total(&self) -> f64 {
        self.grad_sq_total
    }

    /// One descent step; zero gradients are skipped (the adaptive step is
    /// undefined until the first nonzero gradient).
    pub fn update(&mut self, g: &[f64]) -> Result<()> {
        if g.len() != self.w.len() {
            return Err(Error::Shape { expected: self.w.len(), got: g.len() });
        }
        let sq = g.iter().map(|x| x * x).sum::<f64>();
        self.grad_sq_total += sq;
        if self.grad_sq_total == 0.0 {
            return Ok(());
        }
        let step = 1.0 / (2.0 * self.grad_sq_total).sqrt();
        for (w, gi) in self.w.iter_mut().zip(g) {
            *w -= step * gi;
        }
        let norm = euclid_norm(&self.w);
        if norm > 1.0 {
            for w in &mut self.w {
                *w /= norm;
            }
        }
        Ok(())
    }
}

/// Per-round outcome of the d-dimensional composition.
#[derive(Debug, Clone)]
pub struct FullStep {
    pub magnitude: MagnitudeStep,
    /// The scalarized gradient fed to the magnitude pipeline.
    pub g_1d: f64,
}

/// The d-dimensional fully unconstrained learner: `w_t = magnitude *
/// direction`, with the magnitude driven by the scalarized gradient
/// `<g_t, direction_t>`.
#[derive(Debug, Clone)]
pub struct UnconstrainedLearner {
    magnitude: MagnitudeLearner,
    direction: DirectionLearner,
}

impl UnconstrainedLearner {
    pub fn new(d: usize, h1: f64, config: EpigraphConfig) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("dimension must be at least 1".into()));
        }
        Ok(Self { magnitude: MagnitudeLearner::new(h1, config)?, direction: DirectionLearner::new(d) })
    }

    pub fn magnitude(&self) -> &MagnitudeLearner {
        &self.magnitude
    }

    pub fn direction(&self) -> &DirectionLearner {
        &self.direction
    }

    /// Emits the round's play `w_t = w_mag * w_dir`.
    pub fn predict(&mut self) -> Result<Vec<f64>> {
        let mag = self.magnitude.predict()?;
        Ok(self.direction.direction().iter().map(|d| mag * d).collect())
    }

    /// Feeds the raw gradient vector: scalarizes against the pre-update
    /// direction, runs the magnitude pipeline, then steps the direction
    /// learner.
    pub fn update(&mut self, g: &[f64]) -> Result<FullStep> {
        let g_1d = dot(g, self.direction.direction())?;
        let magnitude = self.magnitude.update(g_1d)?;
        self.direction.update(g)?;
        Ok(FullStep { magnitude, g_1d })
    }
}

/// The pathwise bound on the clipping penalty
/// `sum_t [(h_{t+1} - h_t) |w_t| - a_t psi(w_t)]` for the scaled power
/// regularizer `psi(x) = |x|^{1+q} / (1+q)`:
/// `h_F^{1 + 1/q} (1 + ln(h_F / h1))^{1/q} / ((1 + 1/q) gamma^{1/q})`.
pub fn penalty_sum_bound(h_final: f64, h1: f64, gamma: f64, q: f64) -> f64 {
    let r = 1.0 + 1.0 / q;
    h_final.powf(r) * (1.0 + (h_final / h1).ln()).powf(1.0 / q) / (r * gamma.powf(1.0 / q))
}
