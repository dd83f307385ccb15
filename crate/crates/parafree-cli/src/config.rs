//! JSON configuration schemas for the harness. Unknown keys are rejected
//! everywhere so typos fail loudly instead of silently running defaults.

use parafree::adversary::{SequenceKind, SequenceSpec};
use parafree::regularizer::PowerRegularizer;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, HarnessResult};

fn one() -> f64 {
    1.0
}

fn half() -> f64 {
    0.5
}

fn default_true() -> bool {
    true
}

fn default_dimension() -> usize {
    1
}

/// The learner selected for an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    Base,
    Epigraph,
    Unconstrained1d,
    UnconstrainedNd,
    FullMatrix,
}

impl Algorithm {
    pub fn parse(name: &str) -> HarnessResult<Self> {
        match name {
            "base" => Ok(Self::Base),
            "epigraph" => Ok(Self::Epigraph),
            "unconstrained1d" => Ok(Self::Unconstrained1d),
            "unconstrained_nd" => Ok(Self::UnconstrainedNd),
            "full_matrix" => Ok(Self::FullMatrix),
            other => Err(HarnessError::Config(format!(
                "unknown algorithm {other:?}; expected one of base, epigraph, unconstrained1d, unconstrained_nd, full_matrix"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Base => "base",
            Self::Epigraph => "epigraph",
            Self::Unconstrained1d => "unconstrained1d",
            Self::UnconstrainedNd => "unconstrained_nd",
            Self::FullMatrix => "full_matrix",
        }
    }
}

/// A synthetic gradient-sequence description.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    /// One of constant, rademacher, gaussian, pareto, scale_jump.
    pub kind: String,
    #[serde(default = "one")]
    pub scale: f64,
    #[serde(default)]
    pub seed: u64,
    /// Pareto tail index; required for kind = pareto, rejected otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    /// Second-half scale multiplier; required for kind = scale_jump,
    /// rejected otherwise.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub factor: Option<f64>,
}

impl SequenceConfig {
    pub fn to_spec(&self) -> HarnessResult<SequenceSpec> {
        let kind = match self.kind.as_str() {
            "constant" => SequenceKind::Constant,
            "rademacher" => SequenceKind::Rademacher,
            "gaussian" => SequenceKind::Gaussian,
            "pareto" => SequenceKind::Pareto {
                alpha: self.alpha.ok_or_else(|| {
                    HarnessError::Config("sequence kind \"pareto\" requires \"alpha\"".into())
                })?,
            },
            "scale_jump" => SequenceKind::ScaleJump {
                factor: self.factor.ok_or_else(|| {
                    HarnessError::Config("sequence kind \"scale_jump\" requires \"factor\"".into())
                })?,
            },
            other => {
                return Err(HarnessError::Config(format!(
                    "unknown sequence kind {other:?}; expected one of constant, rademacher, gaussian, pareto, scale_jump"
                )))
            }
        };
        if self.alpha.is_some() && self.kind != "pareto" {
            return Err(HarnessError::Config(format!(
                "\"alpha\" is only valid for kind = pareto, not {:?}",
                self.kind
            )));
        }
        if self.factor.is_some() && self.kind != "scale_jump" {
            return Err(HarnessError::Config(format!(
                "\"factor\" is only valid for kind = scale_jump, not {:?}",
                self.kind
            )));
        }
        Ok(SequenceSpec { kind, scale: self.scale, seed: self.seed })
    }
}

/// Configuration of a `run` experiment.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    #[serde(default = "default_dimension")]
    pub dimension: usize,
    pub rounds: u64,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "one")]
    pub h1: f64,
    /// Covariance floor (full_matrix only).
    #[serde(default = "one")]
    pub sigma: f64,
    /// Ball radius (full_matrix only).
    #[serde(default = "one")]
    pub radius: f64,
    /// Barrier weight (full_matrix only).
    #[serde(default = "one")]
    pub mu: f64,
    /// Scaled power regularizer `|x|^{1+q}/(1+q)` when true, else
    /// `|x|^{1+q}`.
    #[serde(default = "default_true")]
    pub psi_scaled: bool,
    pub sequence: SequenceConfig,
    /// Comparator grid; defaults to {0, ±0.1, ±1, ±10, ±100} * h1 along
    /// the first axis.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub comparators: Option<Vec<Vec<f64>>>,
    /// Emit the per-round epigraph internals (raw pair, projected pair,
    /// delta) alongside the trace. Off by default: the detail solve adds
    /// per-round cost.
    #[serde(default)]
    pub epigraph_detail: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> HarnessResult<()> {
        for (name, v) in [
            ("eps", self.eps),
            ("gamma", self.gamma),
            ("q", self.q),
            ("h1", self.h1),
            ("sigma", self.sigma),
            ("radius", self.radius),
            ("mu", self.mu),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(HarnessError::Config(format!(
                    "{name} must be a positive finite real, got {v}"
                )));
            }
        }
        if !(0.0..=0.5).contains(&self.p) {
            return Err(HarnessError::Config(format!("p must lie in [0, 1/2], got {}", self.p)));
        }
        if self.dimension == 0 {
            return Err(HarnessError::Config("dimension must be at least 1".into()));
        }
        match self.algorithm {
            Algorithm::FullMatrix => {
                if !(self.gamma > 1.0) {
                    return Err(HarnessError::Config(format!(
                        "full_matrix requires gamma > 1, got {}",
                        self.gamma
                    )));
                }
                if self.dimension > 4 {
                    return Err(HarnessError::Config(format!(
                        "full_matrix is reference-scale only (dimension <= 4), got {}",
                        self.dimension
                    )));
                }
            }
            Algorithm::Base | Algorithm::Epigraph | Algorithm::Unconstrained1d => {
                if self.dimension != 1 {
                    return Err(HarnessError::Config(format!(
                        "{} is one-dimensional, got dimension {}",
                        self.algorithm.name(),
                        self.dimension
                    )));
                }
            }
            Algorithm::UnconstrainedNd => {}
        }
        if let Some(grid) = &self.comparators {
            for u in grid {
                if u.len() != self.dimension {
                    return Err(HarnessError::Config(format!(
                        "comparator {u:?} has dimension {}, expected {}",
                        u.len(),
                        self.dimension
                    )));
                }
            }
        }
        self.sequence.to_spec().map(|_| ())
    }

    pub fn psi(&self) -> HarnessResult<PowerRegularizer> {
        PowerRegularizer::new(self.q, self.psi_scaled).map_err(HarnessError::from)
    }

    /// The comparator grid: configured, or the default 9-point grid on the
    /// first axis.
    pub fn comparator_grid(&self) -> Vec<Vec<f64>> {
        match &self.comparators {
            Some(grid) => grid.clone(),
            None => parafree::trace::comparator_grid(self.h1)
                .into_iter()
                .map(|u| {
                    let mut v = vec![0.0; self.dimension];
                    v[0] = u;
                    v
                })
                .collect(),
        }
    }
}

/// Configuration of an `adversary` run: the lower-bound opponent driving
/// the 1-D fully unconstrained learner.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct AdversaryConfig {
    pub rounds: u64,
    #[serde(default = "one")]
    pub h1: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "default_true")]
    pub psi_scaled: bool,
}

impl AdversaryConfig {
    pub fn validate(&self) -> HarnessResult<()> {
        for (name, v) in [("h1", self.h1), ("gamma", self.gamma), ("eps", self.eps), ("q", self.q)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(HarnessError::Config(format!(
                    "{name} must be a positive finite real, got {v}"
                )));
            }
        }
        if !(0.0..=0.5).contains(&self.p) {
            return Err(HarnessError::Config(format!("p must lie in [0, 1/2], got {}", self.p)));
        }
        Ok(())
    }

    pub fn psi(&self) -> HarnessResult<PowerRegularizer> {
        PowerRegularizer::new(self.q, self.psi_scaled).map_err(HarnessError::from)
    }
}

/// Configuration of an online-to-batch conversion run on the quadratic
/// objective `F(w) = 1/2 ||w - w_star||^2` with bounded sign noise.
#[derive(Debug, Clone, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct BatchConfig {
    pub rounds: u64,
    pub w_star: Vec<f64>,
    /// Per-coordinate noise amplitude (each stochastic gradient adds a
    /// +/- noise term per coordinate).
    #[serde(default)]
    pub noise: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "one")]
    pub eps: f64,
    #[serde(default = "one")]
    pub gamma: f64,
    #[serde(default = "one")]
    pub q: f64,
    #[serde(default = "half")]
    pub p: f64,
    #[serde(default = "one")]
    pub h1: f64,
    #[serde(default = "default_true")]
    pub psi_scaled: bool,
}

impl BatchConfig {
    pub fn validate(&self) -> HarnessResult<()> {
        if self.w_star.is_empty() {
            return Err(HarnessError::Config("w_star must be non-empty".into()));
        }
        if self.rounds == 0 {
            return Err(HarnessError::Config("batch mode requires rounds >= 1".into()));
        }
        if self.noise < 0.0 || !self.noise.is_finite() {
            return Err(HarnessError::Config(format!(
                "noise must be a finite nonnegative real, got {}",
                self.noise
            )));
        }
        for (name, v) in
            [("eps", self.eps), ("gamma", self.gamma), ("q", self.q), ("h1", self.h1)]
        {
            if !(v > 0.0) || !v.is_finite() {
                return Err(HarnessError::Config(format!(
                    "{name} must be a positive finite real, got {v}"
                )));
            }
        }
        if !(0.0..=0.5).contains(&self.p) {
            return Err(HarnessError::Config(format!("p must lie in [0, 1/2], got {}", self.p)));
        }
        Ok(())
    }

    pub fn psi(&self) -> HarnessResult<PowerRegularizer> {
        PowerRegularizer::new(self.q, self.psi_scaled).map_err(HarnessError::from)
    }
}

/// Command-line overrides applied after parsing a config file.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rounds: Option<u64>,
    pub algo: Option<Algorithm>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub gamma: Option<f64>,
    pub eps: Option<f64>,
    pub h1: Option<f64>,
}

impl Overrides {
    pub fn apply_experiment(&self, config: &mut ExperimentConfig) {
        if let Some(seed) = self.seed {
            config.sequence.seed = seed;
        }
        if let Some(rounds) = self.rounds {
            config.rounds = rounds;
        }
        if let Some(algo) = self.algo {
            config.algorithm = algo;
        }
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(q) = self.q {
            config.q = q;
        }
        if let Some(gamma) = self.gamma {
            config.gamma = gamma;
        }
        if let Some(eps) = self.eps {
            config.eps = eps;
        }
        if let Some(h1) = self.h1 {
            config.h1 = h1;
        }
    }

    pub fn apply_adversary(&self, config: &mut AdversaryConfig) {
        if let Some(rounds) = self.rounds {
            config.rounds = rounds;
        }
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(q) = self.q {
            config.q = q;
        }
        if let Some(gamma) = self.gamma {
            config.gamma = gamma;
        }
        if let Some(eps) = self.eps {
            config.eps = eps;
        }
        if let Some(h1) = self.h1 {
            config.h1 = h1;
        }
    }

    pub fn apply_batch(&self, config: &mut BatchConfig) {
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        if let Some(rounds) = self.rounds {
            config.rounds = rounds;
        }
        if let Some(p) = self.p {
            config.p = p;
        }
        if let Some(q) = self.q {
            config.q = q;
        }
        if let Some(gamma) = self.gamma {
            config.gamma = gamma;
        }
        if let Some(eps) = self.eps {
            config.eps = eps;
        }
        if let Some(h1) = self.h1 {
            config.h1 = h1;
        }
    }
}
