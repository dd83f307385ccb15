//! Reference full-matrix FTRL learner on a ball domain with a log
//! barrier: Lambert W, the potential shape X(theta), the rho constant, the
//! matrix regularizer Phi and its dual composition Psi*, the per-round
//! convex subproblem, and the explicit regret-bound evaluator. Reference
//! scale only (d <= 4); every inner solve is a documented iterative
//! routine with caps and tolerances, not a performance-tuned kernel.

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{Error, Result};

/// Iteration cap shared by the inner solvers.
const MAX_ITERS: usize = 10_000;
/// Gradient-norm tolerance for the inner solvers.
const GRAD_TOL: f64 = 1e-8;

/// Principal branch of the Lambert W function for `x >= 0`: the solution
/// of `w * e^w = x`.
///
/// A log-based initial guess is polished by Halley iteration until
/// `|w e^w - x| <= 1e-12 * max(1, x)`.
pub fn lambert_w(x: f64) -> Result<f64> {
    if x < 0.0 || !x.is_finite() {
        return Err(Error::Domain(format!("lambert_w requires x >= 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let mut w = if x > std::f64::consts::E {
        let l = x.ln();
        l - l.ln()
    } else {
        // Below e the principal branch lies in [0, 1]; ln(1+x) is a
        // serviceable starting point.
        x.ln_1p() * 0.7
    };
    let tol = 1e-13 * x.max(1.0);
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        if f.abs() <= tol {
            return Ok(w);
        }
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        w -= f / denom;
    }
    let f = (w * w.exp() - x).abs();
    if f <= 1e-12 * x.max(1.0) {
        Ok(w)
    } else {
        Err(Error::Numeric(format!("lambert_w failed to converge at x = {x} (residual {f})")))
    }
}

/// The potential shape `X(theta) = W(theta)^{1/2} - W(theta)^{-1/2}`.
///
/// `theta = 0` yields negative infinity; callers multiply by a vanishing
/// norm factor there.
pub fn x_fn(theta: f64) -> Result<f64> {
    if theta < 0.0 {
        return Err(Error::Domain(format!("x_fn requires theta >= 0, got {theta}")));
    }
    if theta == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let w = lambert_w(theta)?;
    if w == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(w.sqrt() - 1.0 / w.sqrt())
}

/// `rho(gamma) = sqrt(2) * (1 - e^{1/(2 gamma) - 1/2})` for `gamma > 1`.
pub fn rho(gamma: f64) -> Result<f64> {
    if !(gamma > 1.0) {
        return Err(Error::Domain(format!("rho requires gamma > 1, got {gamma}")));
    }
    Ok(std::f64::consts::SQRT_2 * (1.0 - (0.5 / gamma - 0.5).exp()))
}

/// Configuration of the full-matrix learner.
#[derive(Debug, Clone, Copy)]
pub struct FullMatrixConfig {
    /// Initial covariance floor sigma > 0.
    pub sigma: f64,
    /// Wealth scale epsilon > 0.
    pub eps: f64,
    /// Covariance inflation gamma > 1.
    pub gamma: f64,
    /// Ball-domain radius R > 0.
    pub radius: f64,
    /// Barrier weight mu > 0 (default 1).
    pub mu: f64,
}

impl FullMatrixConfig {
    pub fn new(sigma: f64, eps: f64, gamma: f64, radius: f64, mu: f64) -> Result<Self> {
        for (name, v) in [("sigma", sigma), ("eps", eps), ("radius", radius), ("mu", mu)] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::Config(format!("{name} must be a positive finite real, got {v}")));
            }
        }
        if !(gamma > 1.0) {
            return Err(Error::Config(format!("gamma must exceed 1, got {gamma}")));
        }
        Ok(Self { sigma, eps, gamma, radius, mu })
    }
}

impl Default for FullMatrixConfig {
    fn default() -> Self {
        Self { sigma: 1.0, eps: 1.0, gamma: 2.0, radius: 1.0, mu: 1.0 }
    }
}

/// The ball barrier `-mu * ln(1 - ||w||^2 / R^2)`; infinite outside the
/// open ball.
pub fn barrier(w: &DVector<f64>, radius: f64, mu: f64) -> f64 {
    let s = w.norm_squared() / (radius * radius);
    if s >= 1.0 {
        f64::INFINITY
    } else {
        -mu * (1.0 - s).ln()
    }
}

/// Fenchel conjugate of the ball barrier. Closed form via the radial
/// maximizer `r/R = (-mu + sqrt(mu^2 + ||theta||^2 R^2)) / (||theta|| R)`.
pub fn barrier_conj(theta: &DVector<f64>, radius: f64, mu: f64) -> f64 {
    let n = theta.norm();
    if n == 0.0 {
        return 0.0;
    }
    let s = (-mu + (mu * mu + (n * radius).powi(2)).sqrt()) / (n * radius);
    n * radius * s + mu * (1.0 - s * s).ln()
}

/// Gradient of the barrier conjugate (the radial maximizer itself).
pub fn barrier_conj_grad(theta: &DVector<f64>, radius: f64, mu: f64) -> DVector<f64> {
    let n = theta.norm();
    if n == 0.0 {
        return DVector::zeros(theta.len());
    }
    let s = (-mu + (mu * mu + (n * radius).powi(2)).sqrt()) / (n * radius);
    theta * (radius * s / n)
}

/// Evaluates the matrix regularizer
/// `Phi(w; Sigma, Z, sigma, eps) = sup_{lambda >= 0} sqrt(w' (Sigma +
/// lambda I) w) * X(w' (Sigma + lambda I) w * e^{-lambda Z} *
/// det(sigma^{-2} Sigma) / eps^2)`.
///
/// The sup is located by doubling an upper bracket from `lambda = 1` until
/// the objective decreases twice in a row, then golden-section refinement
/// to 1e-10 relative. `Phi(0; ...) = 0` by the vanishing norm factor.
pub fn phi_value(
    w: &DVector<f64>,
    sigma_mat: &DMatrix<f64>,
    z: f64,
    sigma: f64,
    eps: f64,
) -> Result<f64> {
    let wnorm2 = w.norm_squared();
    if wnorm2 == 0.0 {
        return Ok(0.0);
    }
    let d = w.len();
    let det_fac = sigma_mat.determinant() / sigma.powi(2 * d as i32);
    if !(det_fac > 0.0) {
        return Err(Error::Domain(format!(
            "phi_value requires det(sigma^-2 Sigma) > 0, got {det_fac}"
        )));
    }
    let w_sig_w = (sigma_mat * w).dot(w);
    let objective = |lambda: f64| -> Result<f64> {
        let n = w_sig_w + lambda * wnorm2;
        let arg = n * (-lambda * z).exp() * det_fac / (eps * eps);
        Ok(n.sqrt() * x_fn(arg)?)
    };
    let mut lo = 0.0;
    let mut hi = 1.0;
    let mut best = objective(0.0)?;
    let mut prev = objective(hi)?;
    if prev > best {
        best = prev;
    }
    let mut decreases = 0;
    for _ in 0..200 {
        hi *= 2.0;
        let v = objective(hi)?;
        if v > best {
            best = v;
        }
        if v <= prev || v == f64::NEG_INFINITY {
            decreases += 1;
            if decreases >= 2 {
                break;
            }
        } else {
            decreases = 0;
        }
        prev = v;
    }
    // Golden-section refinement of the bracket [0, hi].
    let inv_phi = 0.618_033_988_749_894_9_f64;
    let mut a = lo;
    let mut b = hi;
    let mut c = b - inv_phi * (b - a);
    let mut d2 = a + inv_phi * (b - a);
    let mut fc = objective(c)?;
    let mut fd = objective(d2)?;
    for _ in 0..200 {
        if fc >= fd {
            b = d2;
            d2 = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = objective(c)?;
        } else {
            a = c;
            c = d2;
            fc = fd;
            d2 = a + inv_phi * (b - a);
            fd = objective(d2)?;
        }
        if b - a <= 1e-10 * (1.0 + b.abs()) {
            break;
        }
    }
    lo = a;
    let refined = objective(0.5 * (lo + b))?;
    Ok(best.max(refined))
}

fn shifted_cholesky(m: &DMatrix<f64>, lambda: f64) -> Result<Cholesky<f64, nalgebra::Dyn>> {
    let d = m.nrows();
    let shifted = m + DMatrix::identity(d, d) * lambda;
    Cholesky::new(shifted)
        .ok_or_else(|| Error::Numeric(format!("Cholesky failed at lambda = {lambda}")))
}

/// Evaluates the dual potential
/// `Psi*(G; V, h, sigma, eps) = inf_{lambda >= 0, u} eps * exp(1/2 (G-u)'
/// (sigma^2 I + gamma V + lambda I)^{-1} (G-u) + lambda rho^2 / (2 h^2)) /
/// sqrt(det(I + sigma^{-2} gamma V)) + Phi_bar*(-u)`.
///
/// Solved by alternating an exact 1-D lambda step (bisection on the
/// stationarity condition) with damped gradient steps in `u`.
pub fn psi_star_value(
    g_sum: &DVector<f64>,
    v_mat: &DMatrix<f64>,
    h: f64,
    config: &FullMatrixConfig,
) -> Result<f64> {
    if !(h > 0.0) {
        return Err(Error::InvalidHint(format!("psi_star_value requires h > 0, got {h}")));
    }
    let d = g_sum.len();
    let z = (rho(config.gamma)?/ h).powi(2);
    let m = DMatrix::identity(d, d) * (config.sigma * config.sigma) + v_mat * config.gamma;
    let det_fac = (DMatrix::identity(d, d) + v_mat * (config.gamma / (config.sigma * config.sigma)))
        .determinant();
    if !(det_fac > 0.0) {
        return Err(Error::Domain(format!("psi_star_value requires a positive determinant, got {det_fac}")));
    }
    let sqrt_det = det_fac.sqrt();

    // Exact lambda step: the exponent's lambda-derivative is
    // (z - ||(M + lambda I)^{-1} r||^2) / 2, increasing in lambda.
    let lambda_for = |r: &DVector<f64>| -> Result<f64> {
        let at_zero = shifted_cholesky(&m, 0.0)?.solve(r).norm_squared();
        if at_zero <= z {
            return Ok(0.0);
        }
        let mut lo = 0.0;
        let mut hi = (r.norm() / z.sqrt()).max(1.0);
        while shifted_cholesky(&m, hi)?.solve(r).norm_squared() > z {
            hi *= 2.0;
            if hi > 1e300 {
                return Err(Error::Numeric("lambda bracket expansion diverged".into()));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if shifted_cholesky(&m, mid)?.solve(r).norm_squared() > z {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-14 * (1.0 + hi) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    };

    let value = |lambda: f64, u: &DVector<f64>| -> Result<f64> {
        let r = g_sum - u;
        let q = shifted_cholesky(&m, lambda)?.solve(&r).dot(&r);
        Ok(config.eps * (0.5 * q + 0.5 * lambda * z).exp() / sqrt_det
            + barrier_conj(&(-u), config.radius, config.mu))
    };

    let mut u = DVector::zeros(d);
    let mut lambda = lambda_for(&(g_sum - &u))?;
    let mut f_cur = value(lambda, &u)?;
    let mut iters = 0usize;
    loop {
        // Gradient in u at the current lambda.
        let r = g_sum - &u;
        let chol = shifted_cholesky(&m, lambda)?;
        let sol = chol.solve(&r);
        let q = sol.dot(&r);
        let e_term = config.eps * (0.5 * q + 0.5 * lambda * z).exp() / sqrt_det;
        let grad = -&sol * e_term - barrier_conj_grad(&(-u.clone()), config.radius, config.mu);
        let gnorm = grad.norm();
        if gnorm <= GRAD_TOL * (1.0 + f_cur.abs()) {
            return Ok(f_cur);
        }
        // Backtracking line search along -grad.
        let mut step = 1.0 / (1.0 + e_term);
        let mut advanced = false;
        for _ in 0..60 {
            let cand = &u - &grad * step;
            let cand_lambda = lambda_for(&(g_sum - &cand))?;
            let cand_f = value(cand_lambda, &cand)?;
            if cand_f <= f_cur - 1e-4 * step * gnorm * gnorm {
                u = cand;
                lambda = cand_lambda;
                f_cur = cand_f;
                advanced = true;
                break;
            }
            step *= 0.5;
        }
        if !advanced {
            // No descent direction left at line-search resolution.
            return Ok(f_cur);
        }
        iters += 1;
        if iters >= MAX_ITERS {
            return Err(Error::Numeric(format!(
                "psi_star_value failed to converge (gradient norm {gnorm} after {MAX_ITERS} iterations)"
            )));
        }
    }
}

/// Running state of the full-matrix learner.
#[derive(Debug, Clone)]
pub struct FullMatrixLearner {
    config: FullMatrixConfig,
    g_sum: DVector<f64>,
    v_mat: DMatrix<f64>,
    hint: Option<f64>,
    t: u64,
}

impl FullMatrixLearner {
    pub fn new(d: usize, config: FullMatrixConfig) -> Result<Self> {
        if d == 0 || d > 4 {
            return Err(Error::Config(format!(
                "full-matrix learner is reference-scale only (1 <= d <= 4), got d = {d}"
            )));
        }
        Ok(Self {
            config,
            g_sum: DVector::zeros(d),
            v_mat: DMatrix::zeros(d, d),
            hint: None,
            t: 0,
        })
    }

    pub fn config(&self) -> &FullMatrixConfig {
        &self.config
    }

    pub fn g_sum(&self) -> &DVector<f64> {
        &self.g_sum
    }

    pub fn v_mat(&self) -> &DMatrix<f64> {
        &self.v_mat
    }

    pub fn current_hint(&self) -> Option<f64> {
        self.hint
    }

    /// Accepts the round hint and solves the FTRL subproblem
    /// `argmin_w <G, w> + Phi(-w; sigma^2 I + gamma V, rho^2/h^2, sigma,
    /// eps) + Phi_bar(w)` by damped descent with central finite-difference
    /// gradients.
    pub fn predict(&mut self, h: f64) -> Result<DVector<f64>> {
        if !(h > 0.0) || !h.is_finite() {
            return Err(Error::InvalidHint(format!("hint must be a positive finite real, got {h}")));
        }
        if let Some(prev) = self.hint {
            if h < prev {
                return Err(Error::InvalidHint(format!("hint decreased from {prev} to {h}")));
            }
        }
        self.hint = Some(h);
        let d = self.g_sum.len();
        if self.g_sum.norm() == 0.0 {
            return Ok(DVector::zeros(d));
        }
        let z = (rho(self.config.gamma)? / h).powi(2);
        let sigma_mat = DMatrix::identity(d, d) * (self.config.sigma * self.config.sigma)
            + &self.v_mat * self.config.gamma;
        let objective = |w: &DVector<f64>| -> Result<f64> {
            if w.norm() >= self.config.radius {
                return Ok(f64::INFINITY);
            }
            Ok(self.g_sum.dot(w)
                + phi_value(&(-w), &sigma_mat, z, self.config.sigma, self.config.eps)?
                + barrier(w, self.config.radius, self.config.mu))
        };
        let fd_grad = |w: &DVector<f64>| -> Result<DVector<f64>> {
            let mut grad = DVector::zeros(d);
            for i in 0..d {
                let hstep = 1e-6 * (1.0 + w[i].abs());
                let mut wp = w.clone();
                let mut wm = w.clone();
                wp[i] += hstep;
                wm[i] -= hstep;
                grad[i] = (objective(&wp)? - objective(&wm)?) / (2.0 * hstep);
            }
            Ok(grad)
        };

        let mut w = -&self.g_sum * (1e-3 * self.config.radius / self.g_sum.norm());
        let mut f_cur = objective(&w)?;
        let mut grad = fd_grad(&w)?;
        let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
        for _ in 0..MAX_ITERS {
            let gnorm = grad.norm();
            if gnorm <= GRAD_TOL * (1.0 + f_cur.abs()) {
                return Ok(w);
            }
            // Barzilai-Borwein step when history is available, damped by
            // Armijo backtracking.
            let mut step = match &prev {
                Some((pw, pg)) => {
                    let s = &w - pw;
                    let y = &grad - pg;
                    let sy = s.dot(&y);
                    if sy > 0.0 {
                        (s.norm_squared() / sy).clamp(1e-12, 1e3)
                    } else {
                        0.1 * self.config.radius / gnorm
                    }
                }
                None => 0.1 * self.config.radius / gnorm,
            };
            let mut advanced = false;
            for _ in 0..60 {
                let cand = &w - &grad * step;
                let cand_f = objective(&cand)?;
                if cand_f <= f_cur - 1e-4 * step * gnorm * gnorm {
                    let improvement = f_cur - cand_f;
                    prev = Some((w.clone(), grad.clone()));
                    w = cand;
                    f_cur = cand_f;
                    grad = fd_grad(&w)?;
                    advanced = improvement > 1e-13 * (1.0 + f_cur.abs());
                    break;
                }
                step *= 0.5;
            }
            if !advanced {
                // Finite-difference resolution reached: progress per step
                // has fallen below the gradient noise floor.
                return Ok(w);
            }
        }
        // Iteration cap hit; accept the iterate only if the remaining
        // gradient is within the finite-difference noise floor.
        let gnorm = grad.norm();
        if gnorm <= 1e3 * GRAD_TOL * (1.0 + f_cur.abs()) {
            return Ok(w);
        }
        Err(Error::Numeric(format!(
            "fm_predict failed to converge within {MAX_ITERS} iterations (gradient norm {gnorm})"
        )))
    }

    /// Feeds the round gradient; the hint contract `||g|| <= h_t` is
    /// enforced.
    pub fn update(&mut self, g: &DVector<f64>) -> Result<()> {
        let h = self
            .hint
            .ok_or_else(|| Error::ContractViolation("update called before predict".into()))?;
        if g.len() != self.g_sum.len() {
            return Err(Error::Shape { expected: self.g_sum.len(), got: g.len() });
        }
        if g.norm() > h {
            return Err(Error::ContractViolation(format!(
                "||g|| = {} exceeds hint {h} at round {}",
                g.norm(),
                self.t + 1
            )));
        }
        self.g_sum += g;
        self.v_mat += g * g.transpose();
        self.t += 1;
        Ok(())
    }
}

/// Evaluates the explicit regret bound for a completed run against
/// comparator `w` inside the open ball:
/// `eps + Phi_bar*(0) + Phi_bar(w) + sqrt(Q ln_+(det(sigma^{-2} Sigma_T) *
/// Q))` with `Sigma_T = sigma^2 I + gamma V_T` and `Q` the displayed
/// maximum.
pub fn fm_regret_bound(
    w: &DVector<f64>,
    v_final: &DMatrix<f64>,
    h_final: f64,
    config: &FullMatrixConfig,
) -> Result<f64> {
    if w.norm() >= config.radius {
        return Err(Error::Domain(format!(
            "comparator norm {} must be inside the open ball of radius {}",
            w.norm(),
            config.radius
        )));
    }
    let d = w.len();
    let sigma_t = DMatrix::identity(d, d) * (config.sigma * config.sigma) + v_final * config.gamma;
    let det_fac = sigma_t.determinant() / config.sigma.powi(2 * d as i32);
    let w_sig_w = (&sigma_t * w).dot(w);
    let rho2 = rho(config.gamma)?.powi(2);
    let wn2 = w.norm_squared();
    let q = if wn2 == 0.0 {
        0.0
    } else {
        let scale = h_final * h_final * wn2 / rho2;
        let inner = scale * (det_fac * h_final * h_final * wn2 / (config.eps * config.eps * rho2)).ln();
        w_sig_w.max(0.5 * (inner + w_sig_w))
    };
    let log_term = (det_fac * q).ln().max(0.0);
    let zero = DVector::zeros(d);
    Ok(config.eps
        + barrier_conj(&zero, config.radius, config.mu)
        + barrier(w, config.radius, config.mu)
        + (q * log_term).sqrt())
}
