//! Acceptance suite: one test per release criterion, each printing a
//! single PASS line on success (run with `-- --nocapture` to see them).

use nalgebra::DVector;
use parafree::adversary::{gen_sequence, Adversary, SequenceKind, SequenceSpec, SplitMix64};
use parafree::base::{alpha_sum_bound, theorem_bound, BaseConfig, BaseLearner, HintedRunSummary};
use parafree::epigraph::{
    project_epigraph, project_quadratic_closed_form, EpigraphConfig, ProjectionPath,
};
use parafree::full_matrix::{
    fm_regret_bound, lambert_w, psi_star_value, FullMatrixConfig, FullMatrixLearner,
};
use parafree::full_matrix::x_fn;
use parafree::primitives::dual_norm_pair;
use parafree::regularizer::PowerRegularizer;
use parafree::trace::comparator_grid;
use parafree::unconstrained::{
    penalty_sum_bound, DirectionLearner, HintTracker, MagnitudeLearner, UnconstrainedLearner,
};
use parafree_cli::config::{Algorithm, BatchConfig, ExperimentConfig, SequenceConfig};
use parafree_cli::experiment::{online_to_batch, run_experiment};

fn quad_unscaled() -> PowerRegularizer {
    PowerRegularizer::new(1.0, false).unwrap()
}

fn quad_scaled() -> PowerRegularizer {
    PowerRegularizer::new(1.0, true).unwrap()
}

struct HintedRun {
    gs: Vec<f64>,
    ws: Vec<f64>,
    summary: HintedRunSummary,
    alpha_sum: f64,
}

fn run_hinted(config: BaseConfig, h1: f64, raw: &[f64]) -> HintedRun {
    let mut learner = BaseLearner::new(config);
    let mut tracker = HintTracker::new(h1).unwrap();
    let mut gs = Vec::new();
    let mut ws = Vec::new();
    for &g_raw in raw {
        let w = learner.predict(tracker.h_current()).unwrap();
        let out = tracker.observe(g_raw).unwrap();
        learner.update(out.g_clipped).unwrap();
        ws.push(w);
        gs.push(out.g_clipped);
    }
    HintedRun {
        gs,
        ws,
        summary: HintedRunSummary::from_learner(&learner).unwrap(),
        alpha_sum: learner.alpha_weighted_sum(),
    }
}

/// 50 seeded sequences split across the three families, T = 10^4.
fn criterion_sequences() -> Vec<Vec<f64>> {
    let t = 10_000;
    let mut out = Vec::new();
    for seed in 0..17u64 {
        let spec = SequenceSpec { kind: SequenceKind::Rademacher, scale: 1.0, seed };
        out.push(gen_sequence(&spec, t, 1).unwrap().into_iter().map(|v| v[0]).collect());
    }
    for seed in 0..17u64 {
        let spec = SequenceSpec { kind: SequenceKind::Gaussian, scale: 1.0, seed: 100 + seed };
        out.push(gen_sequence(&spec, t, 1).unwrap().into_iter().map(|v| v[0]).collect());
    }
    for seed in 0..16u64 {
        let spec = SequenceSpec {
            kind: SequenceKind::ScaleJump { factor: 50.0 },
            scale: 1.0,
            seed: 200 + seed,
        };
        out.push(gen_sequence(&spec, t, 1).unwrap().into_iter().map(|v| v[0]).collect());
    }
    out
}

#[test]
fn criterion_01_hinted_regret_bound_with_explicit_constants() {
    let sequences = criterion_sequences();
    assert_eq!(sequences.len(), 50);
    let mut min_margin = f64::INFINITY;
    for p in [0.5, 0.0] {
        let config = BaseConfig::new(1.0, p).unwrap();
        for raw in &sequences {
            let run = run_hinted(config, 1.0, raw);
            for u in comparator_grid(1.0) {
                let regret: f64 =
                    run.gs.iter().zip(&run.ws).map(|(g, w)| g * (w - u)).sum();
                let bound = theorem_bound(&run.summary, u, &config).unwrap();
                assert!(
                    regret <= bound + 1e-9 * bound.abs(),
                    "regret {regret} exceeds bound {bound} (p = {p}, u = {u})"
                );
                min_margin = min_margin.min(bound - regret);
            }
        }
    }
    println!("ACCEPTANCE 01 hinted-regret-explicit-constants: PASS (min margin {min_margin:.3e})");
}

#[test]
fn criterion_02_alpha_weighted_sum_caps() {
    let sequences = criterion_sequences();
    let mut min_margin = f64::INFINITY;
    for p in [0.5, 0.0] {
        let config = BaseConfig::new(1.0, p).unwrap();
        for raw in &sequences {
            let run = run_hinted(config, 1.0, raw);
            let cap = alpha_sum_bound(&run.summary, &config);
            assert!(
                run.alpha_sum <= cap,
                "alpha-weighted sum {} exceeds cap {cap} (p = {p})",
                run.alpha_sum
            );
            min_margin = min_margin.min(cap - run.alpha_sum);
        }
    }
    println!("ACCEPTANCE 02 alpha-weighted-sum-caps: PASS (min margin {min_margin:.3e})");
}

#[test]
fn criterion_03_epigraph_machinery() {
    // Coupled runs: feasibility, dual-norm preservation, delta-y sign.
    let psi = quad_unscaled();
    let mut feas = f64::INFINITY;
    let mut norm_dev: f64 = 0.0;
    let mut dy_max = f64::NEG_INFINITY;
    for seed in 0..10u64 {
        let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma: 1.0, p: 0.5, psi };
        let mut learner = MagnitudeLearner::new(1.0, config).unwrap();
        let spec =
            SequenceSpec { kind: SequenceKind::ScaleJump { factor: 30.0 }, scale: 1.0, seed };
        for g in gen_sequence(&spec, 1000, 1).unwrap() {
            let h = learner.tracker().h_current();
            let x = learner.predict().unwrap();
            let y = learner.reg().last_y().unwrap();
            feas = feas.min(y - psi.value(x));
            let step = learner.update(g[0]).unwrap();
            let (dx, dy) = learner.reg().last_round().unwrap().delta;
            dy_max = dy_max.max(dy);
            let fed = dual_norm_pair(step.g_clipped, step.a, h, 1.0).unwrap();
            let out = dual_norm_pair(dx, dy, h, 1.0).unwrap();
            if out > 0.0 {
                norm_dev = norm_dev.max((out - fed).abs() / fed.max(1.0));
            }
        }
    }
    assert!(feas >= -1e-9, "feasibility violated: min y - psi(x) = {feas}");
    assert!(norm_dev <= 1e-12, "dual norm not preserved: {norm_dev}");
    assert!(dy_max <= 0.0, "positive delta-y observed: {dy_max}");

    // Closed-form projection vs the numeric oracle over 10^4 instances,
    // with the fallback firing exactly on negative discriminants.
    let mut rng = SplitMix64::new(31337);
    let mut max_dev: f64 = 0.0;
    for _ in 0..10_000 {
        let h = 0.2 + 3.0 * rng.next_f64();
        let gamma = 0.2 + 3.0 * rng.next_f64();
        let xh = 6.0 * (rng.next_f64() - 0.5);
        let yh = xh * xh - 1e-3 - 6.0 * rng.next_f64();
        let ((x, _), path) = project_quadratic_closed_form(xh, yh, h, gamma).unwrap();
        let (xn, _) = project_epigraph(xh, yh, h, gamma, &psi).unwrap();
        max_dev = max_dev.max((x - xn).abs() / (1.0 + x.abs()));
        assert!(
            (x - xn).abs() <= 1e-8 * (1.0 + x.abs()),
            "closed form {x} vs numeric {xn} at ({xh}, {yh}, {h}, {gamma})"
        );
        let g2 = gamma * gamma;
        let pc = (h * h - 2.0 * g2 * yh) / (2.0 * g2);
        let qc = -h * h * xh / (2.0 * g2);
        let disc = (qc / 2.0) * (qc / 2.0) + (pc / 3.0).powi(3);
        assert_eq!(
            path == ProjectionPath::Fallback,
            disc < 0.0,
            "fallback/discriminant mismatch at ({xh}, {yh}, {h}, {gamma})"
        );
    }
    println!(
        "ACCEPTANCE 03 epigraph-machinery: PASS (feas {feas:.1e}, norm dev {norm_dev:.1e}, proj dev {max_dev:.1e})"
    );
}

#[test]
fn criterion_04_coefficient_schedule_and_penalty_bound() {
    let mut cap_margin = f64::INFINITY;
    let mut penalty_margin = f64::INFINITY;
    let kinds = [
        SequenceKind::ScaleJump { factor: 100.0 },
        SequenceKind::Pareto { alpha: 1.2 },
        SequenceKind::Gaussian,
    ];
    for (i, kind) in kinds.iter().enumerate() {
        for seed in 0..5u64 {
            let gamma = 2.0;
            let q = 1.0;
            let psi = quad_scaled();
            let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma, p: 0.5, psi };
            let mut learner = MagnitudeLearner::new(1.0, config).unwrap();
            let spec = SequenceSpec { kind: *kind, scale: 1.0, seed: 10 * i as u64 + seed };
            let mut sum_a = 0.0;
            let mut penalty = 0.0;
            for g in gen_sequence(&spec, 5000, 1).unwrap() {
                let w = learner.predict().unwrap();
                let step = learner.update(g[0]).unwrap();
                sum_a += step.a;
                assert!(
                    step.ratio_increment > 0.0 || step.a == 0.0,
                    "nonzero coefficient on a round without clipping"
                );
                penalty += (step.h_next - step.h_used) * w.abs() - step.a * psi.value(w);
            }
            let tracker = learner.tracker();
            let cap = gamma * (1.0 + (tracker.h_current() / tracker.h1()).ln()).ln();
            assert!(sum_a <= cap + 1e-12, "coefficient sum {sum_a} exceeds {cap}");
            cap_margin = cap_margin.min(cap - sum_a);
            let pcap = penalty_sum_bound(tracker.h_current(), 1.0, gamma, q);
            assert!(penalty <= pcap + 1e-12, "penalty {penalty} exceeds {pcap}");
            penalty_margin = penalty_margin.min(pcap - penalty);
        }
    }
    println!(
        "ACCEPTANCE 04 coefficient-schedule-and-penalty: PASS (cap margin {cap_margin:.3e}, penalty margin {penalty_margin:.3e})"
    );
}

#[test]
fn criterion_05_direction_learner_inequality() {
    let mut min_margin = f64::INFINITY;
    for d in [2usize, 5, 20] {
        for (i, kind) in
            [SequenceKind::Gaussian, SequenceKind::Rademacher].iter().enumerate()
        {
            for seed in 0..5u64 {
                let mut dir = DirectionLearner::new(d);
                let spec =
                    SequenceSpec { kind: *kind, scale: 1.0, seed: 50 * i as u64 + seed };
                let gs = gen_sequence(&spec, 10_000, d).unwrap();
                let mut inner = 0.0;
                let mut g_total = vec![0.0; d];
                for g in &gs {
                    inner +=
                        g.iter().zip(dir.direction()).map(|(a, b)| a * b).sum::<f64>();
                    dir.update(g).unwrap();
                    for (acc, gi) in g_total.iter_mut().zip(g) {
                        *acc += gi;
                    }
                }
                let lhs = inner + g_total.iter().map(|x| x * x).sum::<f64>().sqrt();
                let cap = 2.0 * (2.0 * dir.grad_sq_total()).sqrt();
                assert!(
                    lhs <= cap + 1e-9,
                    "direction inequality violated at d = {d}: {lhs} > {cap}"
                );
                min_margin = min_margin.min(cap - lhs);
            }
        }
    }
    println!("ACCEPTANCE 05 direction-learner-inequality: PASS (min margin {min_margin:.3e})");
}

#[test]
fn criterion_06_sublinearity_ratio() {
    let t = 10_000u64;
    let w_star = 5.0;
    let mut ratios = Vec::new();
    for seed in 0..20u64 {
        let spec = SequenceSpec { kind: SequenceKind::Rademacher, scale: 1.0, seed };
        let raw: Vec<f64> =
            gen_sequence(&spec, 2 * t, 1).unwrap().into_iter().map(|v| v[0]).collect();
        let config =
            EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma: 1.0, p: 0.5, psi: quad_scaled() };
        let mut learner = MagnitudeLearner::new(1.0, config).unwrap();
        let mut regret_t = 0.0;
        let mut regret_2t = 0.0;
        for (i, &g) in raw.iter().enumerate() {
            let w = learner.predict().unwrap();
            learner.update(g).unwrap();
            let r = g * (w - w_star);
            regret_2t += r;
            if (i as u64) < t {
                regret_t += r;
            }
        }
        ratios.push(regret_2t / regret_t);
    }
    let mean: f64 = ratios.iter().sum::<f64>() / ratios.len() as f64;
    assert!(mean <= 1.7, "mean doubling ratio {mean} exceeds 1.7");
    println!("ACCEPTANCE 06 sublinearity-ratio: PASS (mean ratio {mean:.4})");
}

#[test]
fn criterion_07_full_matrix_module() {
    // Lambert inverse identity to 1e-12 and the sqrt-log envelope.
    for i in 0..60 {
        let w = 1e-3 * 10.0_f64.powf(4.0 * i as f64 / 59.0);
        let x = w * w.exp();
        assert!(
            (lambert_w(x).unwrap() - w).abs() <= 1e-12 * w.max(1.0),
            "Lambert identity failed at {x}"
        );
    }
    for i in 0..100 {
        let theta = std::f64::consts::E * 10.0_f64.powf(6.0 * i as f64 / 99.0);
        assert!(x_fn(theta).unwrap() <= theta.ln().sqrt() + 1e-12);
    }

    // Per-step potential monotonicity within 1e-5 on a d = 2 run of 100
    // steps, and the explicit regret bound for interior comparators.
    let config = FullMatrixConfig::default();
    let mut learner = FullMatrixLearner::new(2, config).unwrap();
    let mut rng = SplitMix64::new(1618);
    let h = 1.0;
    let mut mono_margin = f64::INFINITY;
    let mut gs = Vec::new();
    let mut ws = Vec::new();
    for _ in 0..100 {
        let g_prev = learner.g_sum().clone();
        let v_prev = learner.v_mat().clone();
        let w = learner.predict(h).unwrap();
        let raw = DVector::from_fn(2, |_, _| rng.next_gaussian());
        let mut g = if raw.norm() > h { &raw * (h / raw.norm()) } else { raw };
        while g.norm() > h {
            g *= 1.0 - f64::EPSILON;
        }
        learner.update(&g).unwrap();
        let before = psi_star_value(&g_prev, &v_prev, h, &config).unwrap();
        let after = psi_star_value(learner.g_sum(), learner.v_mat(), h, &config).unwrap();
        let margin = (before - after) - g.dot(&w);
        assert!(margin >= -1e-5, "potential monotonicity violated: margin {margin}");
        mono_margin = mono_margin.min(margin);
        gs.push(g);
        ws.push(w);
    }
    let mut bound_margin = f64::INFINITY;
    for u in [
        DVector::zeros(2),
        DVector::from_vec(vec![0.5, 0.0]),
        DVector::from_vec(vec![-0.3, 0.6]),
        DVector::from_vec(vec![0.9, 0.0]),
        DVector::from_vec(vec![0.0, -0.9]),
    ] {
        let regret: f64 = gs.iter().zip(&ws).map(|(g, w)| g.dot(&(w - &u))).sum();
        let bound = fm_regret_bound(&u, learner.v_mat(), h, &config).unwrap();
        assert!(regret <= bound + 1e-9, "regret {regret} exceeds matrix bound {bound}");
        bound_margin = bound_margin.min(bound - regret);
    }
    println!(
        "ACCEPTANCE 07 full-matrix-module: PASS (mono margin {mono_margin:.3e}, bound margin {bound_margin:.3e})"
    );
}

#[test]
fn criterion_08_adversary_conformance() {
    // Replay determinism.
    let replay = || -> (Vec<f64>, Vec<f64>) {
        let psi = quad_scaled();
        let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma: 2.0, p: 0.5, psi };
        let mut learner = MagnitudeLearner::new(1.0, config).unwrap();
        let mut adv = Adversary::new(1.0, 2.0, 1.0, psi).unwrap();
        let mut ws = Vec::new();
        let mut gs = Vec::new();
        for _ in 0..300 {
            let w = learner.predict().unwrap();
            let g = adv.next(w);
            learner.update(g).unwrap();
            ws.push(w);
            gs.push(g);
        }
        (ws, gs)
    };
    assert_eq!(replay(), replay(), "adversary replay must be bit-exact");

    // Pre-trigger partial sums respect the floor on every shipped
    // learner.
    let t_rounds = 200u64;
    let psi = quad_scaled();
    let run_floor = |name: &str, mut play: Box<dyn FnMut(f64) -> f64>| {
        let mut adv = Adversary::new(1.0, 1.0, 1.0, psi).unwrap();
        let mut partial = 0.0;
        let mut margin = f64::INFINITY;
        for t in 1..=t_rounds {
            let w_pending = play(f64::NAN); // request the play for this round
            let g = adv.next(w_pending);
            play(g); // deliver the gradient
            if adv.trigger_round().map_or(true, |tau| t <= tau) {
                partial += w_pending * g;
                margin = margin.min(partial - adv.partial_sum_floor(t));
            }
        }
        assert!(margin >= -1e-9, "{name}: partial sum fell below the floor by {margin}");
        margin
    };

    // Base learner with self-grown hints.
    {
        let mut learner = BaseLearner::new(BaseConfig::new(1.0, 0.5).unwrap());
        let mut tracker = HintTracker::new(1.0).unwrap();
        let mut pending = None;
        run_floor(
            "base",
            Box::new(move |input| {
                if input.is_nan() {
                    let w = learner.predict(tracker.h_current()).unwrap();
                    pending = Some(w);
                    w
                } else {
                    let out = tracker.observe(input).unwrap();
                    learner.update(out.g_clipped).unwrap();
                    pending.take().unwrap_or(0.0)
                }
            }),
        );
    }
    // 1-D fully unconstrained learner.
    {
        let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma: 1.0, p: 0.5, psi };
        let mut learner = MagnitudeLearner::new(1.0, config).unwrap();
        run_floor(
            "unconstrained1d",
            Box::new(move |input| {
                if input.is_nan() {
                    learner.predict().unwrap()
                } else {
                    learner.update(input).unwrap();
                    0.0
                }
            }),
        );
    }
    // d = 1 composed learner.
    {
        let config = EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma: 1.0, p: 0.5, psi };
        let mut learner = UnconstrainedLearner::new(1, 1.0, config).unwrap();
        run_floor(
            "unconstrained_nd",
            Box::new(move |input| {
                if input.is_nan() {
                    learner.predict().unwrap()[0]
                } else {
                    learner.update(&[input]).unwrap();
                    0.0
                }
            }),
        );
    }
    // d = 1 full-matrix reference learner (hint grown by the harness).
    {
        let config = FullMatrixConfig::default();
        let mut learner = FullMatrixLearner::new(1, config).unwrap();
        let mut h = 1.0;
        run_floor(
            "full_matrix",
            Box::new(move |input| {
                if input.is_nan() {
                    learner.predict(h).unwrap()[0]
                } else {
                    let g = input.clamp(-h, h);
                    learner.update(&DVector::from_element(1, g)).unwrap();
                    h = h.max(input.abs());
                    0.0
                }
            }),
        );
    }

    // Certificate hand values for psi(x) = x^2 (unscaled), h1 = gamma =
    // eps = 1: untriggered T = 10 gives w* = -2 * (20 / 2) = -20, G = 1.
    let mut adv = Adversary::new(1.0, 1.0, 1.0, quad_unscaled()).unwrap();
    for _ in 0..10 {
        adv.next(0.0);
    }
    let cert = adv.certificate(10);
    assert!(!cert.triggered);
    assert_eq!(cert.w_star, -20.0);
    assert_eq!(cert.grad_bound, 1.0);
    let tail = 20.0 / 4.0 * (10.0 * (1.0 + 20.0 * 10.0_f64.sqrt()).ln()).sqrt();
    let hand = 1.0 + 0.25 / 8.0 + 400.0 / 4.0 + tail;
    assert!((cert.claimed_bound - hand).abs() <= 1e-12 * hand);
    println!("ACCEPTANCE 08 adversary-conformance: PASS");
}

#[test]
fn criterion_09_online_to_batch() {
    // Averaged over 10 seeds: suboptimality at T = 10^5 at least 5x below
    // T = 10^3.
    let mut sum3 = 0.0;
    let mut sum5 = 0.0;
    for seed in 0..10u64 {
        let config = BatchConfig {
            rounds: 100_000,
            w_star: vec![3.0],
            noise: 0.5,
            seed,
            eps: 1.0,
            gamma: 1.0,
            q: 1.0,
            p: 0.5,
            h1: 1.0,
            psi_scaled: true,
        };
        let result = online_to_batch(&config).unwrap();
        let at = |t: u64| {
            result
                .checkpoints
                .iter()
                .find(|c| c.t == t)
                .unwrap_or_else(|| panic!("missing checkpoint {t}"))
                .suboptimality
        };
        sum3 += at(1_000);
        sum5 += at(100_000);
        // Checkpoints strictly increasing in T.
        for pair in result.checkpoints.windows(2) {
            assert!(pair[1].t > pair[0].t);
        }
    }
    let mean3 = sum3 / 10.0;
    let mean5 = sum5 / 10.0;
    assert!(
        mean5 * 5.0 <= mean3,
        "decay too slow: mean at 10^5 is {mean5}, at 10^3 is {mean3}"
    );

    // Zero noise with w_star = 0: the gradient is identically zero and
    // the suboptimality is exactly 0 at every checkpoint.
    let config = BatchConfig {
        rounds: 1_000,
        w_star: vec![0.0, 0.0],
        noise: 0.0,
        seed: 0,
        eps: 1.0,
        gamma: 1.0,
        q: 1.0,
        p: 0.5,
        h1: 1.0,
        psi_scaled: true,
    };
    let result = online_to_batch(&config).unwrap();
    for cp in &result.checkpoints {
        assert_eq!(cp.suboptimality, 0.0, "nonzero suboptimality at T = {}", cp.t);
    }
    println!(
        "ACCEPTANCE 09 online-to-batch: PASS (mean 10^3 = {mean3:.3e}, mean 10^5 = {mean5:.3e})"
    );
}

#[test]
fn criterion_10_byte_identical_traces() {
    for algorithm in [Algorithm::Base, Algorithm::Epigraph, Algorithm::Unconstrained1d] {
        let config = ExperimentConfig {
            algorithm,
            dimension: 1,
            rounds: 2000,
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
                seed: 99,
                alpha: None,
                factor: None,
            },
            comparators: None,
            epigraph_detail: false,
        };
        let dir = tempfile::tempdir().unwrap();
        let path_a = dir.path().join("a.csv");
        let path_b = dir.path().join("b.csv");
        let out_a = run_experiment(&config).unwrap();
        let out_b = run_experiment(&config).unwrap();
        parafree::trace::write_trace(&out_a.rows, &path_a).unwrap();
        parafree::trace::write_trace(&out_b.rows, &path_b).unwrap();
        let bytes_a = std::fs::read(&path_a).unwrap();
        let bytes_b = std::fs::read(&path_b).unwrap();
        assert_eq!(bytes_a, bytes_b, "trace bytes differ for {:?}", algorithm);
        assert!(!bytes_a.is_empty());
    }
    println!("ACCEPTANCE 10 byte-identical-traces: PASS");
}
