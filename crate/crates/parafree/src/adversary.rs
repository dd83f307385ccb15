//! The constructive lower-bound adversary, its certificate formulas, and
//! the deterministic synthetic gradient generators used by the harness.

use crate::error::{Error, Result};
use crate::regularizer::PowerRegularizer;

/// A 64-bit split-and-mix pseudo-random generator.
///
/// The state advances by the additive constant `0x9E3779B97F4A7C15`; each
/// output mixes the state with xor-shifts and the multipliers
/// `0xBF58476D1CE4E5B9` and `0x94D049BB133111EB`. The generator is fully
/// specified here so sequences reproduce bit-exactly on any platform.
#[derive(Debug, Clone, Copy)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E3779B97F4A7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^ (z >> 31)
    }

    /// Uniform in `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Uniform in `(0, 1]` (safe as a logarithm argument).
    pub fn next_f64_open(&mut self) -> f64 {
        1.0 - self.next_f64()
    }

    /// Standard normal via Box-Muller.
    pub fn next_gaussian(&mut self) -> f64 {
        let u1 = self.next_f64_open();
        let u2 = self.next_f64();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}

/// The stateful lower-bound opponent: it feeds `+h1` every round until the
/// learner's output drops below the moving threshold
/// `-2 eps - grad psi*_gamma(2 h1 (t-1))`, punishes once with
/// `-2 (t-1) h1`, and then feeds zeros forever.
#[derive(Debug, Clone)]
pub struct Adversary {
    h1: f64,
    gamma: f64,
    eps: f64,
    psi: PowerRegularizer,
    triggered: bool,
    /// tau: the number of constant rounds before the punishment round.
    trigger_round: Option<u64>,
    t: u64,
}

/// The comparator and claimed regret-scale value reported after a run.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub w_star: f64,
    pub grad_bound: f64,
    pub claimed_bound: f64,
    pub triggered: bool,
    pub trigger_round: Option<u64>,
    /// The guarantee is asymptotic: it holds only for sufficiently large
    /// T, and the threshold is not constructive.
    pub note: &'static str,
}

impl Adversary {
    pub fn new(h1: f64, gamma: f64, eps: f64, psi: PowerRegularizer) -> Result<Self> {
        for (name, v) in [("h1", h1), ("gamma", gamma), ("eps", eps)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a positive finite real, got {v}")));
            }
        }
        Ok(Self { h1, gamma, eps, psi, triggered: false, trigger_round: None, t: 0 })
    }

    pub fn triggered(&self) -> bool {
        self.triggered
    }

    pub fn trigger_round(&self) -> Option<u64> {
        self.trigger_round
    }

    /// The round-t trigger threshold (t counted from 1).
    pub fn threshold(&self, t: u64) -> f64 {
        -2.0 * self.eps
            - self.psi.conjugate_gamma_grad(2.0 * self.h1 * (t - 1) as f64, self.gamma)
    }

    /// Observes the learner's play and returns the round's gradient.
    pub fn next(&mut self, w: f64) -> f64 {
        self.t += 1;
        if self.triggered {
            return 0.0;
        }
        if w < self.threshold(self.t) {
            self.triggered = true;
            self.trigger_round = Some(self.t - 1);
            return -2.0 * (self.t - 1) as f64 * self.h1;
        }
        self.h1
    }

    /// The certificate for a completed run of `t_total` rounds.
    pub fn certificate(&self, t_total: u64) -> Certificate {
        let (w_star, grad_bound) = if self.triggered {
            let tau = self.trigger_round.unwrap_or(0);
            (0.0, 2.0 * tau as f64 * self.h1)
        } else {
            (
                -2.0 * self.psi.conjugate_gamma_grad(2.0 * t_total as f64 * self.h1, self.gamma),
                self.h1,
            )
        };
        let g = grad_bound;
        let log_arg =
            1.0 + g * w_star.abs() * (t_total as f64).sqrt() / (self.h1 * self.eps);
        let claimed_bound = self.eps * g
            + self.gamma / 8.0 * self.psi.conjugate(g / self.gamma)
            + self.gamma / 4.0 * self.psi.value(w_star)
            + g * w_star.abs() / 4.0 * ((t_total as f64) * log_arg.ln()).sqrt();
        Certificate {
            w_star,
            grad_bound,
            claimed_bound,
            triggered: self.triggered,
            trigger_round: self.trigger_round,
            note: "guaranteed only for sufficiently large T (threshold not constructive)",
        }
    }

    /// The lower bound on pre-trigger partial sums: while no trigger has
    /// fired through round tau, `sum_{t<=tau} w_t g_t >= -2 eps tau h1 -
    /// psi*_gamma(2 tau h1) / 2`.
    pub fn partial_sum_floor(&self, tau: u64) -> f64 {
        -2.0 * self.eps * tau as f64 * self.h1
            - 0.5 * self.psi.conjugate_gamma(2.0 * tau as f64 * self.h1, self.gamma)
    }
}

/// Synthetic gradient-sequence families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SequenceKind {
    /// Every coordinate equals the scale.
    Constant,
    /// Coordinates uniform on {-scale, +scale}.
    Rademacher,
    /// Coordinates scale * standard normal.
    Gaussian,
    /// Signed Pareto tails: magnitude scale * u^{-1/alpha}, random sign.
    Pareto { alpha: f64 },
    /// Rademacher at the scale for the first half of the horizon, then at
    /// scale * factor (exercises clipping and hint growth).
    ScaleJump { factor: f64 },
}

/// A deterministic sequence specification.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceSpec {
    pub kind: SequenceKind,
    pub scale: f64,
    pub seed: u64,
}

/// Generates `t_rounds` gradient vectors of dimension `d`; identical specs
/// produce identical sequences.
pub fn gen_sequence(spec: &SequenceSpec, t_rounds: u64, d: usize) -> Result<Vec<Vec<f64>>> {
    if !(spec.scale > 0.0) || !spec.scale.is_finite() {
        return Err(Error::Config(format!(
            "sequence scale must be a positive finite real, got {}",
            spec.scale
        )));
    }
    if d == 0 {
        return Err(Error::Config("sequence dimension must be at least 1".into()));
    }
    match spec.kind {
        SequenceKind::Pareto { alpha } => {
            if !(alpha > 0.0) {
                return Err(Error::Config(format!("pareto tail index must be positive, got {alpha}")));
            }
        }
        SequenceKind::ScaleJump { factor } => {
            if !(factor > 0.0) {
                return Err(Error::Config(format!("scale-jump factor must be positive, got {factor}")));
            }
        }
        _ => {}
    }
    let mut rng = SplitMix64::new(spec.seed);
    let g = spec.scale;
    let mut out = Vec::with_capacity(t_rounds as usize);
    for t in 1..=t_rounds {
        let mut row = Vec::with_capacity(d);
        for _ in 0..d {
            let v = match spec.kind {
                SequenceKind::Constant => g,
                SequenceKind::Rademacher => {
                    if rng.next_u64() & 1 == 0 {
                        g
                    } else {
                        -g
                    }
                }
                SequenceKind::Gaussian => g * rng.next_gaussian(),
                SequenceKind::Pareto { alpha } => {
                    let mag = g * rng.next_f64_open().powf(-1.0 / alpha);
                    if rng.next_u64() & 1 == 0 {
                        mag
                    } else {
                        -mag
                    }
                }
                SequenceKind::ScaleJump { factor } => {
                    let scale = if t <= t_rounds / 2 { g } else { g * factor };
                    if rng.next_u64() & 1 == 0 {
                        scale
                    } else {
                        -scale
                    }
                }
            };
            row.push(v);
        }
        out.push(row);
    }
    Ok(out)
}
