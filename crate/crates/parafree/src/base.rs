//! The 1-D magnitude-hinted FTRL learner with exponential-potential
//! outputs, in both step-size families (`p = 1/2` and `p < 1/2`), plus an
//! evaluator for the fully explicit regret bound it satisfies.

use crate::error::{Error, Result};

const K: f64 = 3.0;

/// Configuration of the 1-D hinted learner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaseConfig {
    /// Wealth-like scale epsilon > 0.
    pub eps: f64,
    /// Step-size exponent, in [0, 1/2].
    pub p: f64,
}

impl BaseConfig {
    pub fn new(eps: f64, p: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::Config(format!("eps must be a positive finite real, got {eps}")));
        }
        if !(0.0..=0.5).contains(&p) {
            return Err(Error::Config(format!("p must lie in [0, 1/2], got {p}")));
        }
        Ok(Self { eps, p })
    }

    /// The additive constant in the step-size denominator: 3 when p = 1/2,
    /// otherwise 1.
    pub fn c(&self) -> f64 {
        if self.p == 0.5 {
            3.0
        } else {
            1.0
        }
    }
}

/// Running state of the 1-D hinted learner.
#[derive(Debug, Clone)]
pub struct BaseLearner {
    config: BaseConfig,
    /// Sum of past gradients.
    grad_sum: f64,
    /// Sum of past squared gradients.
    grad_sq_sum: f64,
    /// Sum of past g_i^2 / h_i^2.
    ratio_sum: f64,
    /// Hint currently in force (set by `predict`, consumed by `update`).
    hint: Option<f64>,
    /// Rounds completed.
    t: u64,
    /// Step size and potential denominator from the latest `predict`,
    /// used to accumulate `alpha_weighted_sum` on `update`.
    last_alpha_v: Option<(f64, f64)>,
    /// Accumulated sum of alpha_t g_t^2 / sqrt(V_t).
    alpha_weighted_sum: f64,
}

impl BaseLearner {
    pub fn new(config: BaseConfig) -> Self {
        Self {
            config,
            grad_sum: 0.0,
            grad_sq_sum: 0.0,
            ratio_sum: 0.0,
            hint: None,
            t: 0,
            last_alpha_v: None,
            alpha_weighted_sum: 0.0,
        }
    }

    pub fn config(&self) -> &BaseConfig {
        &self.config
    }

    pub fn rounds(&self) -> u64 {
        self.t
    }

    pub fn grad_sum(&self) -> f64 {
        self.grad_sum
    }

    pub fn grad_sq_sum(&self) -> f64 {
        self.grad_sq_sum
    }

    pub fn ratio_sum(&self) -> f64 {
        self.ratio_sum
    }

    pub fn current_hint(&self) -> Option<f64> {
        self.hint
    }

    /// Accumulated sum of `alpha_t g_t^2 / sqrt(V_t)` over completed rounds.
    pub fn alpha_weighted_sum(&self) -> f64 {
        self.alpha_weighted_sum
    }

    /// The step size alpha for a given cumulative ratio sum.
    fn alpha(config: &BaseConfig, ratio_sum: f64) -> f64 {
        let c = config.c();
        if config.p == 0.5 {
            let base = c + ratio_sum;
            config.eps / (base.sqrt() * base.ln().powi(2))
        } else {
            config.eps / (c + ratio_sum).powf(config.p)
        }
    }

    /// Accepts the round-`t` hint and returns the learner output `w_t`.
    ///
    /// The hint must be positive and non-decreasing across rounds.
    pub fn predict(&mut self, h: f64) -> Result<f64> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidHint(format!("hint must be a positive finite real, got {h}")));
        }
        if let Some(prev) = self.hint {
            if h < prev {
                return Err(Error::InvalidHint(format!(
                    "hint decreased from {prev} to {h} at round {}",
                    self.t + 1
                )));
            }
        }
        self.hint = Some(h);

        let v = h * h + self.grad_sq_sum;
        let alpha = Self::alpha(&self.config, self.ratio_sum);
        let s = self.grad_sum.abs();
        // Ties take the quadratic branch.
        let theta = if s <= 2.0 * K * v / h {
            s * s / (4.0 * K * K * v)
        } else {
            s / (K * h) - v / (h * h)
        };
        self.last_alpha_v = Some((alpha, v));
        let w = -self.grad_sum.signum() * alpha * theta.exp_m1();
        if !w.is_finite() {
            return Err(Error::Numeric(format!(
                "non-finite output at round {} (theta = {theta}, alpha = {alpha})",
                self.t + 1
            )));
        }
        Ok(w)
    }

    /// Feeds the round's gradient. The caller must have clipped it: the
    /// contract `|g| <= h_t` is enforced, never silently repaired.
    pub fn update(&mut self, g: f64) -> Result<()> {
        let h = self.hint.ok_or_else(|| {
            Error::ContractViolation("update called before any predict".into())
        })?;
        if !g.is_finite() {
            return Err(Error::ContractViolation(format!("non-finite gradient {g}")));
        }
        if g.abs() > h {
            return Err(Error::ContractViolation(format!(
                "|g| = {} exceeds hint {h} at round {}",
                g.abs(),
                self.t + 1
            )));
        }
        if let Some((alpha, v)) = self.last_alpha_v.take() {
            self.alpha_weighted_sum += alpha * g * g / v.sqrt();
        }
        self.grad_sum += g;
        self.grad_sq_sum += g * g;
        self.ratio_sum += (g / h).powi(2);
        self.t += 1;
        Ok(())
    }
}

/// Summary statistics of a completed hinted run, as consumed by
/// [`theorem_bound`].
#[derive(Debug, Clone, Copy)]
pub struct HintedRunSummary {
    /// Final hint h_T.
    pub h_last: f64,
    /// Sum of squared gradients.
    pub sum_g_sq: f64,
    /// Sum of g_t^2 / h_t^2.
    pub sum_ratio: f64,
}

impl HintedRunSummary {
    /// Reads the summary off a finished learner.
    pub fn from_learner(learner: &BaseLearner) -> Result<Self> {
        let h_last = learner
            .current_hint()
            .ok_or_else(|| Error::Domain("learner has not seen any hint".into()))?;
        Ok(Self { h_last, sum_g_sq: learner.grad_sq_sum(), sum_ratio: learner.ratio_sum() })
    }
}

/// Evaluates the explicit regret bound of the hinted learner for comparator
/// `u`.
///
/// For `p = 1/2`:
/// `8 h_T eps + 6|u| sqrt((h_T^2 + sum g^2) ln(L)) + 6 |u| h_T ln(L)` with
/// `L = |u| sqrt(3 + r) ln^2(3 + r) / eps + 1` and `r = sum g^2/h^2`.
///
/// For `p < 1/2`:
/// `4 h_T^{2p} eps (sum g^2)^{1/2 - p} / (1 - 2p) + 6|u| sqrt((h_T^2 + sum
/// g^2) ln(L)) + 6 |u| h_T ln(L)` with `L = |u| (1 + r)^p / eps + 1`.
pub fn theorem_bound(summary: &HintedRunSummary, u: f64, config: &BaseConfig) -> Result<f64> {
    if !(summary.h_last > 0.0) {
        return Err(Error::InvalidHint(format!(
            "summary requires a positive final hint, got {}",
            summary.h_last
        )));
    }
    let eps = config.eps;
    let p = config.p;
    let h = summary.h_last;
    let v = h * h + summary.sum_g_sq;
    let r = summary.sum_ratio;
    let ua = u.abs();
    let (first, log_arg) = if p == 0.5 {
        let first = 8.0 * h * eps;
        let log_arg = ua * (3.0 + r).sqrt() * (3.0 + r).ln().powi(2) / eps + 1.0;
        (first, log_arg)
    } else {
        let first = 4.0 * h.powf(2.0 * p) * eps * summary.sum_g_sq.powf(0.5 - p) / (1.0 - 2.0 * p);
        let log_arg = ua * (1.0 + r).powf(p) / eps + 1.0;
        (first, log_arg)
    };
    let l = log_arg.ln();
    Ok(first + 6.0 * ua * (v * l).sqrt() + 6.0 * ua * h * l)
}

/// The bound on `sum_t alpha_t g_t^2 / sqrt(V_t)` implied by the step-size
/// family: `4 eps h_T` for `p = 1/2`, else
/// `2 eps h_T^{2p} (sum g^2)^{1/2-p} / (1 - 2p)`.
pub fn alpha_sum_bound(summary: &HintedRunSummary, config: &BaseConfig) -> f64 {
    if config.p == 0.5 {
        4.0 * config.eps * summary.h_last
    } else {
        2.0 * config.eps * summary.h_last.powf(2.0 * config.p) * summary.sum_g_sq.powf(0.5 - config.p)
            / (1.0 - 2.0 * config.p)
    }
}
