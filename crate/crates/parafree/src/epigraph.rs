//! The regularized composite learner: two child 1-D hinted learners drive
//! a pair (x, y) constrained to the epigraph {y >= psi(x)} under the
//! weighted norm `h^2 x^2 + gamma^2 y^2`, with distance-function
//! subgradient corrections. Includes the closed-form projection for
//! `psi(x) = x^2` and a bracketed numeric projection for the general
//! power family.

use crate::base::{BaseConfig, BaseLearner};
use crate::error::{Error, Result};
use crate::primitives::{dual_norm_pair, weighted_norm};
use crate::regularizer::PowerRegularizer;

/// Which code path produced a quadratic projection result.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjectionPath {
    ClosedForm,
    Fallback,
}

fn boundary_objective(x: f64, xh: f64, yh: f64, h: f64, gamma: f64, psi: &PowerRegularizer) -> f64 {
    let dx = x - xh;
    let dy = psi.value(x) - yh;
    h * h * dx * dx + gamma * gamma * dy * dy
}

fn boundary_derivative(
    x: f64,
    xh: f64,
    yh: f64,
    h: f64,
    gamma: f64,
    psi: &PowerRegularizer,
) -> f64 {
    2.0 * h * h * (x - xh) + 2.0 * gamma * gamma * (psi.value(x) - yh) * psi.grad(x)
}

/// Projects `(xh, yh)` onto the epigraph `{y >= psi(x)}` under the norm
/// `sqrt(h^2 x^2 + gamma^2 y^2)`.
///
/// Feasible inputs are returned unchanged. Infeasible inputs land on the
/// boundary `y = psi(x)`; the boundary coordinate minimizes
/// `f(x) = h^2 (x - xh)^2 + gamma^2 (psi(x) - yh)^2` over the bracket
/// `|x - xh| <= sqrt(h^2 xh^2 + gamma^2 yh^2)/h` (the distance to the
/// feasible origin bounds the projection distance), located by a coarse
/// scan plus golden-section refinement and a derivative-bisection polish.
pub fn project_epigraph(
    xh: f64,
    yh: f64,
    h: f64,
    gamma: f64,
    psi: &PowerRegularizer,
) -> Result<(f64, f64)> {
    if !(h > 0.0) {
        return Err(Error::InvalidHint(format!("projection requires h > 0, got {h}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("projection requires gamma > 0, got {gamma}")));
    }
    if yh >= psi.value(xh) {
        return Ok((xh, yh));
    }
    let radius = weighted_norm(xh, yh, h, gamma)? / h;
    let lo = xh - radius;
    let hi = xh + radius;
    let f = |x: f64| boundary_objective(x, xh, yh, h, gamma, psi);
    let fp = |x: f64| boundary_derivative(x, xh, yh, h, gamma, psi);

    // Coarse scan, then refine every local minimum of the scanned values
    // (the objective can have two near-tied basins when psi is symmetric
    // and the input lies deep inside the complement).
    const SCAN: usize = 512;
    let step = (hi - lo) / SCAN as f64;
    let values: Vec<f64> = (0..=SCAN).map(|i| f(lo + step * i as f64)).collect();
    let mut x = lo;
    let mut fx = f64::INFINITY;
    for i in 0..=SCAN {
        let is_local_min = (i == 0 || values[i] <= values[i - 1])
            && (i == SCAN || values[i] <= values[i + 1]);
        if !is_local_min {
            continue;
        }
        let cand = refine_minimum(
            lo + step * i.saturating_sub(1) as f64,
            (lo + step * (i + 1) as f64).min(hi),
            &f,
            &fp,
        );
        let fc = f(cand);
        if fc < fx {
            fx = fc;
            x = cand;
        }
    }
    Ok((x, psi.value(x)))
}

/// Golden-section descent on `[a, b]` followed by a derivative-bisection
/// polish; returns the refined minimizer.
fn refine_minimum(
    mut a: f64,
    mut b: f64,
    f: &dyn Fn(f64) -> f64,
    fp: &dyn Fn(f64) -> f64,
) -> f64 {
    let (lo, hi) = (a, b);
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..120 {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        if b - a <= 1e-16 * (1.0 + a.abs().max(b.abs())) {
            break;
        }
    }
    let mut x = 0.5 * (a + b);

    // Derivative polish: bisection on f' if a sign change brackets the
    // stationary point.
    let mut pa = lo;
    let mut pb = hi;
    let (mut da, db) = (fp(pa), fp(pb));
    if da == 0.0 {
        x = pa;
    } else if db == 0.0 {
        x = pb;
    } else if da.signum() != db.signum() {
        for _ in 0..200 {
            let m = 0.5 * (pa + pb);
            let dm = fp(m);
            if dm == 0.0 {
                break;
            }
            if dm.signum() == da.signum() {
                pa = m;
                da = dm;
            } else {
                pb = m;
            }
            if pb - pa <= f64::EPSILON * (1.0 + pa.abs().max(pb.abs())) {
                break;
            }
        }
        let m = 0.5 * (pa + pb);
        if f(m) <= f(x) || fp(m).abs() <= fp(x).abs() {
            x = m;
        }
    }
    x
}

fn cbrt(x: f64) -> f64 {
    x.cbrt()
}

/// Closed-form epigraph projection for `psi(x) = x^2`.
///
/// The boundary coordinate is the real root of the depressed cubic
/// `x^3 + P x + Q = 0` with `P = (h^2 - 2 gamma^2 yh) / (2 gamma^2)` and
/// `Q = -h^2 xh / (2 gamma^2)` (stationarity of the weighted distance on
/// `y = x^2`). When the cubic discriminant is negative (three real roots)
/// or the residual check fails, the numeric projection is used instead and
/// the returned path says so.
pub fn project_quadratic_closed_form(
    xh: f64,
    yh: f64,
    h: f64,
    gamma: f64,
) -> Result<((f64, f64), ProjectionPath)> {
    if !(h > 0.0) {
        return Err(Error::InvalidHint(format!("projection requires h > 0, got {h}")));
    }
    if !(gamma > 0.0) {
        return Err(Error::Domain(format!("projection requires gamma > 0, got {gamma}")));
    }
    if yh >= xh * xh {
        return Err(Error::Domain(format!(
            "closed-form projection requires a strictly infeasible input, got ({xh}, {yh})"
        )));
    }
    let psi = PowerRegularizer::new(1.0, false).expect("valid exponent");
    let g2 = gamma * gamma;
    let p = (h * h - 2.0 * g2 * yh) / (2.0 * g2);
    let q = -h * h * xh / (2.0 * g2);
    let disc = (q / 2.0) * (q / 2.0) + (p / 3.0) * (p / 3.0) * (p / 3.0);
    if disc < 0.0 {
        // Three-real-root regime: fall back to the numeric projection.
        let point = project_epigraph(xh, yh, h, gamma, &psi)?;
        return Ok((point, ProjectionPath::Fallback));
    }
    // Cancellation-free Cardano: take the larger-magnitude cube-root term
    // first, then recover the partner from the product identity
    // A * B = -P/3.
    let sq = disc.sqrt();
    let x = if q == 0.0 {
        // xh = 0 (excluded by infeasibility unless yh < 0, which makes
        // x = 0 the symmetric optimum).
        0.0
    } else {
        let t1 = -q / 2.0 - q.signum() * sq;
        let a = cbrt(t1);
        if a == 0.0 {
            cbrt(-q)
        } else {
            a - p / (3.0 * a)
        }
    };
    let residual = x * x * x + p * x + q;
    let scale = 1.0 + x.abs().powi(3) + (p * x).abs() + q.abs();
    if !x.is_finite() || residual.abs() > 1e-8 * scale {
        let point = project_epigraph(xh, yh, h, gamma, &psi)?;
        return Ok((point, ProjectionPath::Fallback));
    }
    Ok(((x, x * x), ProjectionPath::ClosedForm))
}

/// Subgradient of the weighted distance-to-epigraph function at
/// `(xh, yh)`, given its projection `(x, y)`.
///
/// Returns `(0, 0)` at feasible points (zero distance); otherwise
/// `(h^2 (xh - x), gamma^2 (yh - y)) / sqrt(h^2 (x-xh)^2 + gamma^2
/// (y-yh)^2)`, which has dual norm exactly 1.
pub fn distance_subgradient(xh: f64, yh: f64, x: f64, y: f64, h: f64, gamma: f64) -> (f64, f64) {
    let s = ((h * (x - xh)).powi(2) + (gamma * (y - yh)).powi(2)).sqrt();
    if s == 0.0 {
        return (0.0, 0.0);
    }
    (h * h * (xh - x) / s, gamma * gamma * (yh - y) / s)
}

/// Configuration of the composite epigraph learner.
#[derive(Debug, Clone, Copy)]
pub struct EpigraphConfig {
    /// Wealth scale of the x-coordinate child.
    pub eps_x: f64,
    /// Wealth scale of the y-coordinate child; defaults to `psi(eps_x)`.
    pub eps_psi: Option<f64>,
    /// Regularization-coefficient cap gamma > 0.
    pub gamma: f64,
    /// Step-size exponent of both children.
    pub p: f64,
    /// The regularizer defining the epigraph.
    pub psi: PowerRegularizer,
}

/// Per-round internals exposed for diagnostics and extended traces.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpigraphRound {
    pub raw: (f64, f64),
    pub projected: (f64, f64),
    pub delta: (f64, f64),
}

/// The composite learner: child x and child y, projection, and coupled
/// feedback with distance-subgradient corrections.
#[derive(Debug, Clone)]
pub struct EpigraphLearner {
    child_x: BaseLearner,
    child_y: BaseLearner,
    gamma: f64,
    psi: PowerRegularizer,
    last_hint: Option<f64>,
    last_raw: Option<(f64, f64)>,
    last_proj: Option<(f64, f64)>,
    last_delta: Option<(f64, f64)>,
}

impl EpigraphLearner {
    pub fn new(config: EpigraphConfig) -> Result<Self> {
        if !(config.gamma > 0.0) || !config.gamma.is_finite() {
            return Err(Error::Config(format!(
                "gamma must be a positive finite real, got {}",
                config.gamma
            )));
        }
        let eps_psi = config.eps_psi.unwrap_or_else(|| config.psi.value(config.eps_x));
        Ok(Self {
            child_x: BaseLearner::new(BaseConfig::new(config.eps_x, config.p)?),
            child_y: BaseLearner::new(BaseConfig::new(eps_psi, config.p)?),
            gamma: config.gamma,
            psi: config.psi,
            last_hint: None,
            last_raw: None,
            last_proj: None,
            last_delta: None,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn psi(&self) -> &PowerRegularizer {
        &self.psi
    }

    pub fn child_x(&self) -> &BaseLearner {
        &self.child_x
    }

    pub fn child_y(&self) -> &BaseLearner {
        &self.child_y
    }

    /// Raw pair, projected pair, and the latest delta correction.
    pub fn last_round(&self) -> Option<EpigraphRound> {
        Some(EpigraphRound {
            raw: self.last_raw?,
            projected: self.last_proj?,
            delta: self.last_delta.unwrap_or((0.0, 0.0)),
        })
    }

    /// Accepts the round hint, queries both children (with hints `3h` and
    /// `3 gamma`), projects their joint output onto the epigraph, and
    /// returns the x-coordinate as the round's play.
    pub fn predict(&mut self, h: f64) -> Result<f64> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidHint(format!("hint must be a positive finite real, got {h}")));
        }
        let xh = self.child_x.predict(3.0 * h)?;
        let yh = self.child_y.predict(3.0 * self.gamma)?;
        let (x, y) = if yh >= self.psi.value(xh) {
            (xh, yh)
        } else if self.psi.is_quadratic() {
            project_quadratic_closed_form(xh, yh, h, self.gamma)?.0
        } else {
            project_epigraph(xh, yh, h, self.gamma, &self.psi)?
        };
        self.last_hint = Some(h);
        self.last_raw = Some((xh, yh));
        self.last_proj = Some((x, y));
        self.last_delta = None;
        Ok(x)
    }

    /// The y-coordinate of the latest projected pair.
    pub fn last_y(&self) -> Option<f64> {
        self.last_proj.map(|(_, y)| y)
    }

    /// Feeds the coupled feedback pair `(g, a)` and returns the delta
    /// correction that was added before forwarding to the children.
    ///
    /// Contract: `|g| <= h`, `a` in `[0, gamma]`, and `a > 0` only when
    /// the gradient saturates the hint (`|g| = h`).
    pub fn update(&mut self, g: f64, a: f64) -> Result<(f64, f64)> {
        let h = self
            .last_hint
            .ok_or_else(|| Error::ContractViolation("update called before predict".into()))?;
        let (xh, yh) = self.last_raw.expect("raw pair recorded with hint");
        let (x, y) = self.last_proj.expect("projection recorded with hint");
        if !g.is_finite() || !a.is_finite() {
            return Err(Error::ContractViolation(format!("non-finite feedback ({g}, {a})")));
        }
        if g.abs() > h {
            return Err(Error::ContractViolation(format!("|g| = {} exceeds hint {h}", g.abs())));
        }
        if !(0.0..=self.gamma).contains(&a) {
            return Err(Error::ContractViolation(format!(
                "a = {a} outside [0, {}]",
                self.gamma
            )));
        }
        if a > 0.0 && g.abs() != h {
            return Err(Error::ContractViolation(format!(
                "a = {a} > 0 requires a saturated gradient, got |g| = {} with hint {h}",
                g.abs()
            )));
        }
        let scale = dual_norm_pair(g, a, h, self.gamma)?;
        let (ux, uy) = distance_subgradient(xh, yh, x, y, h, self.gamma);
        let (dx, dy) = (scale * ux, scale * uy);
        self.child_x.update(g + dx)?;
        self.child_y.update(a + dy)?;
        self.last_delta = Some((dx, dy));
        self.last_hint = Some(h);
        Ok((dx, dy))
    }
}

/// Evaluates the explicit composite regret bound for the coupled game,
/// instantiated with the hinted child guarantee's constants `A = 6`,
/// `B = 6`, `C = 8`, and `D = ln^2(3 + T)`.
///
/// `v_g = h_T^2 + sum g_t^2` and `s_a = gamma^2 + gamma * sum a_t` are the
/// fed-feedback statistics; `h1`/`h_last` are the first and final hints.
#[allow(clippy::too_many_arguments)]
pub fn composite_bound(
    p: f64,
    eps_x: f64,
    eps_psi: f64,
    gamma: f64,
    h1: f64,
    h_last: f64,
    v_g: f64,
    s_a: f64,
    x_star: f64,
    psi: &PowerRegularizer,
    t_rounds: u64,
) -> f64 {
    let a = 6.0_f64;
    let b = 6.0_f64;
    let c = 8.0_f64;
    let d = (3.0 + t_rounds as f64).ln().powi(2);

    let ax = 3.0 * a;
    let bx = 3.0 * b;
    let cx = 3.0 * c;
    let dx = d;
    let apsi = 0.5 + 144.0 * a * a;
    let bpsi = 144.0 * a * a + 24.0 * b;
    let inner = 1152.0 * a * a * p + 48.0 * p * b;
    let cpsi = 3.0
        * c
        * (bpsi * (std::f64::consts::E + 12.0 * c * d * inner.powf(p)).ln()
            + 0.5
            + (2.0 * p + 1.0) * (2.0 - 4.0 * p).powf((1.0 - 2.0 * p) / (1.0 + 2.0 * p)) / 2.0);
    let dpsi = 4.0 * d * inner.powf(p);

    let xs = x_star.abs();
    let psis = psi.value(x_star);
    let lx = (std::f64::consts::E + dx * xs * v_g.powf(p) / (eps_x * h1.powf(2.0 * p))).ln();
    let lpsi =
        (std::f64::consts::E + dpsi * psis * s_a.powf(p) / (eps_psi * gamma.powf(2.0 * p))).ln();

    cx * eps_x * h_last.powf(2.0 * p) * v_g.powf(0.5 - p)
        + ax * xs * (v_g * lx).sqrt()
        + bx * h_last * xs * lx
        + cpsi * eps_psi * gamma.powf(2.0 * p) * s_a.powf(0.5 - p)
        + apsi * psis * (s_a * lpsi).sqrt()
        + bpsi * gamma * psis * lpsi
}
