//! The invariant verification suite: every module's documented invariants
//! executed with measured margins, plus a fault-injection check that
//! confirms the verifier actually detects violations.

use nalgebra::DVector;
use parafree::adversary::{gen_sequence, Adversary, SequenceKind, SequenceSpec, SplitMix64};
use parafree::base::{alpha_sum_bound, theorem_bound, BaseConfig, BaseLearner, HintedRunSummary};
use parafree::epigraph::{
    project_epigraph, project_quadratic_closed_form, EpigraphConfig, ProjectionPath,
};
use parafree::full_matrix::{
    fm_regret_bound, lambert_w, psi_star_value, x_fn, FullMatrixConfig, FullMatrixLearner,
};
use parafree::primitives::dual_norm_pair;
use parafree::regularizer::PowerRegularizer;
use parafree::trace::comparator_grid;
use parafree::unconstrained::{
    penalty_sum_bound, reg_coefficient, DirectionLearner, HintTracker, MagnitudeLearner,
};

use crate::config::{Algorithm, ExperimentConfig, SequenceConfig};
use crate::error::HarnessResult;
use crate::experiment::run_experiment;

/// One line of the verification ledger.
#[derive(Debug, Clone)]
pub struct CheckLine {
    pub module: &'static str,
    pub name: &'static str,
    pub pass: bool,
    /// Human-readable measured margin or counter.
    pub detail: String,
}

impl CheckLine {
    pub fn render(&self) -> String {
        let status = if self.pass { "PASS" } else { "FAIL" };
        format!("{status} {}::{} {}", self.module, self.name, self.detail)
    }
}

const MODULES: [&str; 6] =
    ["base", "epigraph", "unconstrained", "full_matrix", "adversary", "trace"];

/// Runs the verification suite, optionally restricted to one module.
/// Unknown module names yield an empty ledger (vacuous success).
pub fn verify_invariants(module: Option<&str>) -> HarnessResult<Vec<CheckLine>> {
    let mut lines = Vec::new();
    let want = |m: &str| module.map_or(true, |sel| sel == m);
    if want("base") {
        check_base(&mut lines)?;
    }
    if want("epigraph") {
        check_epigraph(&mut lines)?;
    }
    if want("unconstrained") {
        check_unconstrained(&mut lines)?;
    }
    if want("full_matrix") {
        check_full_matrix(&mut lines)?;
    }
    if want("adversary") {
        check_adversary(&mut lines)?;
    }
    if want("trace") {
        check_trace(&mut lines)?;
    }
    if let Some(sel) = module {
        if !MODULES.contains(&sel) {
            // Empty scope: nothing to verify, nothing failed.
            return Ok(Vec::new());
        }
    }
    Ok(lines)
}

struct HintedRun {
    gs: Vec<f64>,
    ws: Vec<f64>,
    summary: HintedRunSummary,
    alpha_sum: f64,
}

fn run_hinted(config: BaseConfig, h1: f64, raw: &[f64]) -> HarnessResult<HintedRun> {
    let mut learner = BaseLearner::new(config);
    let mut tracker = HintTracker::new(h1)?;
    let mut gs = Vec::new();
    let mut ws = Vec::new();
    for &g_raw in raw {
        let w = learner.predict(tracker.h_current())?;
        let out = tracker.observe(g_raw)?;
        learner.update(out.g_clipped)?;
        ws.push(w);
        gs.push(out.g_clipped);
    }
    Ok(HintedRun {
        gs,
        ws,
        summary: HintedRunSummary::from_learner(&learner)?,
        alpha_sum: learner.alpha_weighted_sum(),
    })
}

fn base_sequences(t: u64, seeds: u64) -> Vec<Vec<f64>> {
    let kinds = [
        SequenceKind::Rademacher,
        SequenceKind::Gaussian,
        SequenceKind::ScaleJump { factor: 50.0 },
    ];
    let mut out = Vec::new();
    for (i, kind) in kinds.iter().enumerate() {
        for seed in 0..seeds {
            let spec = SequenceSpec { kind: *kind, scale: 1.0, seed: 1000 * i as u64 + seed };
            out.push(
                gen_sequence(&spec, t, 1).unwrap().into_iter().map(|v| v[0]).collect(),
            );
        }
    }
    out
}

fn check_base(lines: &mut Vec<CheckLine>) -> HarnessResult<()> {
    let mut bound_margin = f64::INFINITY;
    let mut alpha_margin = f64::INFINITY;
    let mut fault_detected = false;
    for p in [0.5, 0.0] {
        let config = BaseConfig::new(1.0, p)?;
        for raw in base_sequences(2000, 3) {
            let run = run_hinted(config, 1.0, &raw)?;
            for u in comparator_grid(1.0) {
                let regret: f64 =
                    run.gs.iter().zip(&run.ws).map(|(g, w)| g * (w - u)).sum();
                let bound = theorem_bound(&run.summary, u, &config)?;
                bound_margin = bound_margin.min(bound - regret);
            }
            let cap = alpha_sum_bound(&run.summary, &config);
            alpha_margin = alpha_margin.min(cap - run.alpha_sum);
            // Fault injection: a doubled step-size sum must trip the
            // invariant on realistic runs, proving the check has teeth.
            if 2.0 * run.alpha_sum > cap {
                fault_detected = true;
            }
        }
    }
    lines.push(CheckLine {
        module: "base",
        name: "regret-within-explicit-bound",
        pass: bound_margin >= 0.0,
        detail: format!("min margin {bound_margin:.3e}"),
    });
    lines.push(CheckLine {
        module: "base",
        name: "alpha-weighted-sum-cap",
        pass: alpha_margin >= 0.0,
        detail: format!("min margin {alpha_margin:.3e}"),
    });
    lines.push(CheckLine {
        module: "base",
        name: "alpha-fault-injection-detected",
        pass: fault_detected,
        detail: "doubled step-size sum violates the cap".to_string(),
    });

    // Sign symmetry: negating the sequence flips outputs exactly.
    let spec = SequenceSpec { kind: SequenceKind::Gaussian, scale: 1.0, seed: 9 };
    let raw: Vec<f64> = gen_sequence(&spec, 500, 1)?.into_iter().map(|v| v[0]).collect();
    let neg: Vec<f64> = raw.iter().map(|g| -g).collect();
    let config = BaseConfig::new(1.0, 0.5)?;
    let a = run_hinted(config, 1.0, &raw)?;
    let b = run_hinted(config, 1.0, &neg)?;
    let odd = a.ws.iter().zip(&b.ws).all(|(x, y)| *x == -y);
    lines.push(CheckLine {
        module: "base",
        name: "outputs-odd-under-sign-flip",
        pass: odd,
        detail: "exact".to_string(),
    });
    Ok(())
}

fn check_epigraph(lines: &mut Vec<CheckLine>) -> HarnessResult<()> {
    // Coupled runs: feasibility, dual-norm preservation, delta-y sign.
    let mut feas = f64::INFINITY;
    let mut norm_dev: f64 = 0.0;
    let mut dy_max = f64::NEG_INFINITY;
    let psi = PowerRegularizer::new(1.0, false)?;
    for seed in 0..4u64 {
        let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma: 1.0, p: 0.5, psi };
        let mut learner = MagnitudeLearner::new(1.0, config)?;
        let spec =
            SequenceSpec { kind: SequenceKind::ScaleJump { factor: 30.0 }, scale: 1.0, seed };
        for g in gen_sequence(&spec, 800, 1)? {
            let h = learner.tracker().h_current();
            let x = learner.predict()?;
            let round = learner.reg().last_round().expect("round recorded");
            feas = feas.min(round.projected.1 - psi.value(x));
            let step = learner.update(g[0])?;
            let round = learner.reg().last_round().expect("delta recorded");
            let (dx, dy) = round.delta;
            dy_max = dy_max.max(dy);
            let fed = dual_norm_pair(step.g_clipped, step.a, h, 1.0)?;
            let out = dual_norm_pair(dx, dy, h, 1.0)?;
            if out > 0.0 {
                norm_dev = norm_dev.max((out - fed).abs() / fed.max(1.0));
            }
        }
    }
    lines.push(CheckLine {
        module: "epigraph",
        name: "iterates-feasible",
        pass: feas >= -1e-9,
        detail: format!("min y - psi(x) = {feas:.3e}"),
    });
    lines.push(CheckLine {
        module: "epigraph",
        name: "delta-preserves-dual-norm",
        pass: norm_dev <= 1e-12,
        detail: format!("max relative deviation {norm_dev:.3e}"),
    });
    lines.push(CheckLine {
        module: "epigraph",
        name: "delta-y-nonpositive",
        pass: dy_max <= 0.0,
        detail: format!("max delta-y {dy_max:.3e}"),
    });

    // Closed form vs numeric, and fallback-condition exactness.
    let mut rng = SplitMix64::new(2718);
    let mut max_dev: f64 = 0.0;
    let mut branch_ok = true;
    for _ in 0..2000 {
        let h = 0.2 + 3.0 * rng.next_f64();
        let gamma = 0.2 + 3.0 * rng.next_f64();
        let xh = 6.0 * (rng.next_f64() - 0.5);
        let yh = xh * xh - 1e-3 - 6.0 * rng.next_f64();
        let ((x, _), path) = project_quadratic_closed_form(xh, yh, h, gamma)?;
        let (xn, _) = project_epigraph(xh, yh, h, gamma, &psi)?;
        max_dev = max_dev.max((x - xn).abs() / (1.0 + x.abs()));
        let g2 = gamma * gamma;
        let pc = (h * h - 2.0 * g2 * yh) / (2.0 * g2);
        let qc = -h * h * xh / (2.0 * g2);
        let disc = (qc / 2.0) * (qc / 2.0) + (pc / 3.0).powi(3);
        if (path == ProjectionPath::Fallback) != (disc < 0.0) {
            branch_ok = false;
        }
    }
    lines.push(CheckLine {
        module: "epigraph",
        name: "closed-form-matches-numeric",
        pass: max_dev <= 1e-8,
        detail: format!("max relative deviation {max_dev:.3e} over 2000 instances"),
    });
    lines.push(CheckLine {
        module: "epigraph",
        name: "fallback-iff-negative-discriminant",
        pass: branch_ok,
        detail: "exact branch agreement".to_string(),
    });

    // Composite bound via the harness loop.
    let mut margin = f64::INFINITY;
    for seed in 0..3u64 {
        let config = ExperimentConfig {
            algorithm: Algorithm::Epigraph,
            dimension: 1,
            rounds: 1000,
            eps: 1.0,
            gamma: 1.0,
            q: 1.0,
            p: 0.5,
            h1: 1.0,
            sigma: 1.0,
            radius: 1.0,
            mu: 1.0,
            psi_scaled: false,
            sequence: SequenceConfig {
                kind: "scale_jump".to_string(),
                scale: 1.0,
                seed,
                alpha: None,
                factor: Some(20.0),
            },
            comparators: None,
            epigraph_detail: false,
        };
        let out = run_experiment(&config)?;
        for v in &out.report.verdicts {
            let b = v.bound.expect("epigraph verdicts carry bounds");
            margin = margin.min(b - v.regret);
        }
    }
    lines.push(CheckLine {
        module: "epigraph",
        name: "composite-regret-within-bound",
        pass: margin >= 0.0,
        detail: format!("min margin {margin:.3e}"),
    });
    Ok(())
}

fn check_unconstrained(lines: &mut Vec<CheckLine>) -> HarnessResult<()> {
    // Coefficient schedule: cap and zero-off-clipping.
    let mut cap_margin = f64::INFINITY;
    let mut zero_ok = true;
    let mut penalty_margin = f64::INFINITY;
    for seed in 0..5u64 {
        let gamma = 2.0;
        let q = 1.0;
        let psi = PowerRegularizer::new(q, true)?;
        let mut tracker = HintTracker::new(1.0)?;
        let mut sum_a = 0.0;
        let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma, p: 0.5, psi };
        let mut learner = MagnitudeLearner::new(1.0, config)?;
        let mut penalty = 0.0;
        let spec = SequenceSpec { kind: SequenceKind::Pareto { alpha: 1.5 }, scale: 1.0, seed };
        for g in gen_sequence(&spec, 1500, 1)? {
            let out = tracker.observe(g[0])?;
            let a = reg_coefficient(gamma, out.ratio_increment, tracker.ratio_sum());
            sum_a += a;
            if out.ratio_increment == 0.0 && a != 0.0 {
                zero_ok = false;
            }
            let w = learner.predict()?;
            let step = learner.update(g[0])?;
            penalty += (step.h_next - step.h_used) * w.abs() - step.a * psi.value(w);
        }
        let cap = gamma * (1.0 + (tracker.h_current() / tracker.h1()).ln()).ln();
        cap_margin = cap_margin.min(cap - sum_a);
        let pcap = penalty_sum_bound(learner.tracker().h_current(), 1.0, gamma, q);
        penalty_margin = penalty_margin.min(pcap - penalty);
    }
    lines.push(CheckLine {
        module: "unconstrained",
        name: "coefficient-sum-doubly-log-cap",
        pass: cap_margin >= 0.0,
        detail: format!("min margin {cap_margin:.3e}"),
    });
    lines.push(CheckLine {
        module: "unconstrained",
        name: "coefficient-zero-without-clipping",
        pass: zero_ok,
        detail: "exact".to_string(),
    });
    lines.push(CheckLine {
        module: "unconstrained",
        name: "clipping-penalty-within-bound",
        pass: penalty_margin >= 0.0,
        detail: format!("min margin {penalty_margin:.3e}"),
    });

    // Direction learner: combined inequality.
    let mut dir_margin = f64::INFINITY;
    for d in [2usize, 5] {
        for seed in 0..3u64 {
            let mut dir = DirectionLearner::new(d);
            let spec = SequenceSpec { kind: SequenceKind::Gaussian, scale: 1.0, seed };
            let gs = gen_sequence(&spec, 1000, d)?;
            let mut inner = 0.0;
            let mut g_total = vec![0.0; d];
            for g in &gs {
                inner += g.iter().zip(dir.direction()).map(|(a, b)| a * b).sum::<f64>();
                dir.update(g)?;
                for (acc, gi) in g_total.iter_mut().zip(g) {
                    *acc += gi;
                }
            }
            let cap = 2.0 * (2.0 * dir.grad_sq_total()).sqrt();
            let lhs = inner + g_total.iter().map(|x| x * x).sum::<f64>().sqrt();
            dir_margin = dir_margin.min(cap - lhs);
        }
    }
    lines.push(CheckLine {
        module: "unconstrained",
        name: "direction-regret-inequality",
        pass: dir_margin >= 0.0,
        detail: format!("min margin {dir_margin:.3e}"),
    });
    Ok(())
}

fn check_full_matrix(lines: &mut Vec<CheckLine>) -> HarnessResult<()> {
    // Lambert identity and potential-shape domination on log grids.
    let mut lam_dev: f64 = 0.0;
    for i in 0..60 {
        let w = 1e-3 * 10.0_f64.powf(4.0 * i as f64 / 59.0);
        let x = w * w.exp();
        lam_dev = lam_dev.max((lambert_w(x)? - w).abs() / w.max(1.0));
    }
    lines.push(CheckLine {
        module: "full_matrix",
        name: "lambert-inverse-identity",
        pass: lam_dev <= 1e-12,
        detail: format!("max relative deviation {lam_dev:.3e}"),
    });
    let mut shape_margin = f64::INFINITY;
    for i in 0..100 {
        let theta = std::f64::consts::E * 10.0_f64.powf(6.0 * i as f64 / 99.0);
        shape_margin = shape_margin.min(theta.ln().sqrt() - x_fn(theta)?);
    }
    lines.push(CheckLine {
        module: "full_matrix",
        name: "potential-shape-below-sqrt-log",
        pass: shape_margin >= -1e-12,
        detail: format!("min margin {shape_margin:.3e}"),
    });

    // Per-step potential monotonicity:
    // <g_t, w_t> <= Psi*(G_{t-1}; V_{t-1}, h_t) - Psi*(G_t; V_t, h_t).
    let config = FullMatrixConfig::default();
    let mut learner = FullMatrixLearner::new(2, config)?;
    let mut rng = SplitMix64::new(314);
    let mut mono_margin = f64::INFINITY;
    let h = 1.0;
    for _ in 0..40 {
        let g_prev = learner.g_sum().clone();
        let v_prev = learner.v_mat().clone();
        let w = learner.predict(h)?;
        let raw = DVector::from_fn(2, |_, _| rng.next_gaussian());
        let g = if raw.norm() > h { &raw * (h / raw.norm()) } else { raw };
        learner.update(&g)?;
        let before = psi_star_value(&g_prev, &v_prev, h, &config)?;
        let after = psi_star_value(learner.g_sum(), learner.v_mat(), h, &config)?;
        mono_margin = mono_margin.min((before - after) - g.dot(&w));
    }
    lines.push(CheckLine {
        module: "full_matrix",
        name: "per-step-potential-monotone",
        pass: mono_margin >= -1e-5,
        detail: format!("min margin {mono_margin:.3e}"),
    });

    // Short-run regret against the explicit bound.
    let mut learner = FullMatrixLearner::new(2, config)?;
    let mut rng = SplitMix64::new(999);
    let mut gs = Vec::new();
    let mut ws = Vec::new();
    for _ in 0..50 {
        let w = learner.predict(1.0)?;
        let raw = DVector::from_fn(2, |_, _| rng.next_gaussian());
        let g = if raw.norm() > 1.0 { &raw / raw.norm() } else { raw };
        learner.update(&g)?;
        gs.push(g);
        ws.push(w);
    }
    let mut fm_margin = f64::INFINITY;
    for u in [
        DVector::zeros(2),
        DVector::from_vec(vec![0.5, 0.0]),
        DVector::from_vec(vec![-0.4, 0.4]),
    ] {
        let regret: f64 = gs.iter().zip(&ws).map(|(g, w)| g.dot(&(w - &u))).sum();
        let bound = fm_regret_bound(&u, learner.v_mat(), 1.0, &config)?;
        fm_margin = fm_margin.min(bound - regret);
    }
    lines.push(CheckLine {
        module: "full_matrix",
        name: "regret-within-matrix-bound",
        pass: fm_margin >= 0.0,
        detail: format!("min margin {fm_margin:.3e}"),
    });
    Ok(())
}

fn check_adversary(lines: &mut Vec<CheckLine>) -> HarnessResult<()> {
    // Replay determinism against the magnitude learner.
    let run = || -> HarnessResult<(Vec<f64>, Vec<f64>)> {
        let psi = PowerRegularizer::new(1.0, true)?;
        let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma: 2.0, p: 0.5, psi };
        let mut learner = MagnitudeLearner::new(1.0, config)?;
        let mut adv = Adversary::new(1.0, 2.0, 1.0, psi)?;
        let mut ws = Vec::new();
        let mut gs = Vec::new();
        for _ in 0..200 {
            let w = learner.predict()?;
            let g = adv.next(w);
            learner.update(g)?;
            ws.push(w);
            gs.push(g);
        }
        Ok((ws, gs))
    };
    let a = run()?;
    let b = run()?;
    lines.push(CheckLine {
        module: "adversary",
        name: "replay-bit-exact",
        pass: a == b,
        detail: "exact".to_string(),
    });

    // Pre-trigger partial-sum floor (threshold Riemann sum dominates it).
    let mut floor_margin = f64::INFINITY;
    for psi in [PowerRegularizer::new(1.0, false)?, PowerRegularizer::new(2.0, true)?] {
        let adv = Adversary::new(1.0, 1.5, 0.5, psi)?;
        for tau in [1u64, 10, 100] {
            let worst: f64 = (1..=tau).map(|t| adv.threshold(t)).sum();
            floor_margin = floor_margin.min(worst - adv.partial_sum_floor(tau));
        }
    }
    lines.push(CheckLine {
        module: "adversary",
        name: "pre-trigger-partial-sum-floor",
        pass: floor_margin >= -1e-9,
        detail: format!("min margin {floor_margin:.3e}"),
    });

    // Certificate hand values for the unscaled quadratic.
    let mut adv = Adversary::new(1.0, 1.0, 1.0, PowerRegularizer::new(1.0, false)?)?;
    for _ in 0..10 {
        adv.next(0.0);
    }
    let cert = adv.certificate(10);
    let cert_ok = !cert.triggered && cert.w_star == -20.0 && cert.grad_bound == 1.0;
    lines.push(CheckLine {
        module: "adversary",
        name: "certificate-hand-values",
        pass: cert_ok,
        detail: format!("untriggered T = 10: w_star = {}, G = {}", cert.w_star, cert.grad_bound),
    });
    Ok(())
}

fn check_trace(lines: &mut Vec<CheckLine>) -> HarnessResult<()> {
    // Byte-identical CSV for identical config + seed, and report/trace
    // regret consistency.
    let config = ExperimentConfig {
        algorithm: Algorithm::Unconstrained1d,
        dimension: 1,
        rounds: 500,
        eps: 1.0,
        gamma: 1.0,
        q: 1.0,
        p: 0.5,
        h1: 1.0,
        sigma: 1.0,
        radius: 1.0,
        mu: 1.0,
        psi_scaled: true,
        sequence: SequenceConfig {
            kind: "gaussian".to_string(),
            scale: 1.0,
            seed: 4,
            alpha: None,
            factor: None,
        },
        comparators: None,
        epigraph_detail: false,
    };
    let to_bytes = |rows: &[parafree::trace::TraceRow]| -> HarnessResult<Vec<u8>> {
        let mut wtr = csv::Writer::from_writer(Vec::new());
        parafree::trace::write_trace_to(rows, &mut wtr)?;
        wtr.into_inner().map_err(|e| crate::error::HarnessError::Runtime(e.to_string()))
    };
    let out1 = run_experiment(&config)?;
    let out2 = run_experiment(&config)?;
    let identical = to_bytes(&out1.rows)? == to_bytes(&out2.rows)?;
    lines.push(CheckLine {
        module: "trace",
        name: "determinism-byte-identical",
        pass: identical,
        detail: "same config + seed".to_string(),
    });

    parafree::trace::validate_trace(&out1.rows)?;
    let mut consistent = true;
    for v in &out1.report.verdicts {
        let direct = parafree::trace::regret_against(&out1.rows, &v.comparator)?;
        if (direct - v.regret).abs() > 1e-12 * (1.0 + direct.abs()) {
            consistent = false;
        }
    }
    lines.push(CheckLine {
        module: "trace",
        name: "report-matches-recomputed-regret",
        pass: consistent,
        detail: "regret recomputed from trace".to_string(),
    });
    Ok(())
}
