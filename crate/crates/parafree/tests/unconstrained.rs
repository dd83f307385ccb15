use parafree::adversary::{gen_sequence, SequenceKind, SequenceSpec, SplitMix64};
use parafree::epigraph::{EpigraphConfig, EpigraphLearner};
use parafree::primitives::euclid_norm;
use parafree::regularizer::PowerRegularizer;
use parafree::unconstrained::{
    penalty_sum_bound, reg_coefficient, DirectionLearner, HintTracker, MagnitudeLearner,
    UnconstrainedLearner,
};

fn scaled_quad() -> PowerRegularizer {
    PowerRegularizer::new(1.0, true).unwrap()
}

fn config(gamma: f64) -> EpigraphConfig {
    EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma, p: 0.5, psi: scaled_quad() }
}

#[test]
fn tracker_clip_and_growth_example() {
    // h1 = 1, g = 2: clip to 1, grow to 2, increment (2 - 1)/2 = 1/2, and
    // with gamma = 3 the coefficient is 3 * (1/2) / (1 + 1/2) = 1.
    let mut tracker = HintTracker::new(1.0).unwrap();
    let out = tracker.observe(2.0).unwrap();
    assert_eq!(out.g_clipped, 1.0);
    assert_eq!(out.h_next, 2.0);
    assert_eq!(out.ratio_increment, 0.5);
    assert_eq!(tracker.ratio_sum(), 0.5);
    assert_eq!(reg_coefficient(3.0, out.ratio_increment, tracker.ratio_sum()), 1.0);
}

#[test]
fn tracker_leaves_small_gradients_alone() {
    let mut tracker = HintTracker::new(1.0).unwrap();
    let out = tracker.observe(-0.3).unwrap();
    assert_eq!(out.g_clipped, -0.3);
    assert_eq!(out.h_next, 1.0);
    assert_eq!(out.ratio_increment, 0.0);
    assert_eq!(reg_coefficient(3.0, 0.0, 0.0), 0.0);
}

#[test]
fn tracker_rejects_bad_h1() {
    assert!(HintTracker::new(0.0).is_err());
    assert!(HintTracker::new(f64::INFINITY).is_err());
}

#[test]
fn coefficient_sum_respects_doubly_logarithmic_cap() {
    // sum a_t <= gamma * ln(1 + ln(h_F / h1)) for any raw sequence.
    for seed in 0..10u64 {
        let spec = SequenceSpec { kind: SequenceKind::Pareto { alpha: 1.5 }, scale: 1.0, seed };
        let raw: Vec<f64> =
            gen_sequence(&spec, 3000, 1).unwrap().into_iter().map(|v| v[0]).collect();
        let gamma = 2.0;
        let mut tracker = HintTracker::new(1.0).unwrap();
        let mut sum_a = 0.0;
        for &g in &raw {
            let out = tracker.observe(g).unwrap();
            sum_a += reg_coefficient(gamma, out.ratio_increment, tracker.ratio_sum());
        }
        let cap = gamma * (1.0 + (tracker.h_current() / tracker.h1()).ln()).ln();
        assert!(
            sum_a <= cap + 1e-12,
            "coefficient sum {sum_a} exceeds cap {cap} (seed {seed})"
        );
    }
}

#[test]
fn magnitude_learner_matches_plain_epigraph_when_nothing_clips() {
    // If no gradient ever exceeds h1 the hint never grows, every a_t is 0,
    // and the pipeline must reproduce the epigraph learner verbatim.
    let spec = SequenceSpec { kind: SequenceKind::Gaussian, scale: 0.2, seed: 5 };
    let raw: Vec<f64> = gen_sequence(&spec, 300, 1)
        .unwrap()
        .into_iter()
        .map(|v| v[0].clamp(-0.9, 0.9))
        .collect();
    let mut pipeline = MagnitudeLearner::new(1.0, config(2.0)).unwrap();
    let mut plain = EpigraphLearner::new(config(2.0)).unwrap();
    for &g in &raw {
        let wp = pipeline.predict().unwrap();
        let we = plain.predict(1.0).unwrap();
        assert_eq!(wp, we);
        let step = pipeline.update(g).unwrap();
        assert_eq!(step.a, 0.0);
        assert_eq!(step.g_clipped, g);
        plain.update(g, 0.0).unwrap();
    }
}

#[test]
fn penalty_sum_stays_below_bound() {
    // The clipping penalty sum_t [(h_{t+1} - h_t)|w_t| - a_t psi(w_t)] is
    // controlled by the closed-form cap for the scaled power regularizer.
    for q in [1.0, 2.0] {
        for seed in 0..10u64 {
            let gamma = 2.0;
            let psi = PowerRegularizer::new(q, true).unwrap();
            let cfg =
                EpigraphConfig { eps_x: 1.0, eps_psi: None, gamma, p: 0.5, psi };
            let mut learner = MagnitudeLearner::new(1.0, cfg).unwrap();
            let spec =
                SequenceSpec { kind: SequenceKind::Pareto { alpha: 2.0 }, scale: 1.0, seed };
            let raw: Vec<f64> =
                gen_sequence(&spec, 2000, 1).unwrap().into_iter().map(|v| v[0]).collect();
            let mut penalty = 0.0;
            for &g in &raw {
                let w = learner.predict().unwrap();
                let step = learner.update(g).unwrap();
                penalty += (step.h_next - step.h_used) * w.abs() - step.a * psi.value(w);
            }
            let cap = penalty_sum_bound(learner.tracker().h_current(), 1.0, gamma, q);
            assert!(
                penalty <= cap + 1e-12,
                "penalty {penalty} exceeds cap {cap} (q = {q}, seed {seed})"
            );
        }
    }
}

#[test]
fn penalty_bound_example_value() {
    // h_F = e, h1 = 1, gamma = 1, q = 1: e^2 * (1 + 1)^1 / 2 = 2 e^2 / 2.
    let e = std::f64::consts::E;
    let b = penalty_sum_bound(e, 1.0, 1.0, 1.0);
    assert!((b - e * e).abs() < 1e-12);
}

#[test]
fn direction_learner_first_step_is_negative_unit_gradient() {
    // First gradient e1: step 1/sqrt(2), w = -e1/sqrt(2).
    let mut dir = DirectionLearner::new(2);
    dir.update(&[1.0, 0.0]).unwrap();
    let w = dir.direction();
    assert!((w[0] + 1.0 / 2.0_f64.sqrt()).abs() < 1e-15);
    assert_eq!(w[1], 0.0);
}

#[test]
fn direction_learner_skips_zero_gradients() {
    let mut dir = DirectionLearner::new(3);
    dir.update(&[0.0, 0.0, 0.0]).unwrap();
    assert_eq!(dir.direction(), &[0.0, 0.0, 0.0]);
    assert_eq!(dir.grad_sq_total(), 0.0);
    dir.update(&[0.0, 2.0, 0.0]).unwrap();
    assert!(dir.direction()[1] < 0.0);
}

#[test]
fn direction_learner_rejects_dimension_mismatch() {
    let mut dir = DirectionLearner::new(2);
    assert!(dir.update(&[1.0]).is_err());
}

#[test]
fn direction_iterates_stay_in_unit_ball() {
    let mut dir = DirectionLearner::new(4);
    let mut rng = SplitMix64::new(12);
    for _ in 0..500 {
        let g: Vec<f64> = (0..4).map(|_| 10.0 * (rng.next_f64() - 0.5)).collect();
        dir.update(&g).unwrap();
        assert!(euclid_norm(dir.direction()) <= 1.0 + 1e-12);
    }
}

#[test]
fn direction_regret_respects_adaptive_bound() {
    // Projected descent on the unit ball with step 1/sqrt(2 sum ||g||^2)
    // guarantees regret at most sqrt(2 sum ||g||^2) against any unit u.
    for seed in 0..5u64 {
        let d = 3;
        let mut dir = DirectionLearner::new(d);
        let spec = SequenceSpec { kind: SequenceKind::Gaussian, scale: 1.0, seed };
        let gs = gen_sequence(&spec, 1000, d).unwrap();
        let mut played = Vec::new();
        for g in &gs {
            played.push(dir.direction().to_vec());
            dir.update(g).unwrap();
        }
        let cap = (2.0 * dir.grad_sq_total()).sqrt();
        for u in [
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.577, 0.577, -0.577],
        ] {
            let regret: f64 = gs
                .iter()
                .zip(&played)
                .map(|(g, w)| g.iter().zip(w).zip(&u).map(|((gi, wi), ui)| gi * (wi - ui)).sum::<f64>())
                .sum();
            assert!(regret <= cap + 1e-9, "direction regret {regret} exceeds {cap}");
        }
    }
}

#[test]
fn composed_learner_starts_at_zero_and_supports_any_axis() {
    let mut learner = UnconstrainedLearner::new(3, 1.0, config(2.0)).unwrap();
    assert_eq!(learner.predict().unwrap(), vec![0.0, 0.0, 0.0]);
    // Constant gradients along -e2 drive the play toward +e2.
    for _ in 0..200 {
        learner.predict().unwrap();
        learner.update(&[0.0, -0.5, 0.0]).unwrap();
    }
    let w = learner.predict().unwrap();
    assert!(w[1] > 0.1, "play should move against the gradient, got {w:?}");
    assert!(w[0].abs() < 1e-12 && w[2].abs() < 1e-12);
}

#[test]
fn scalarized_gradient_uses_pre_update_direction_and_is_bounded() {
    let mut learner = UnconstrainedLearner::new(3, 1.0, config(2.0)).unwrap();
    let spec = SequenceSpec { kind: SequenceKind::Gaussian, scale: 1.0, seed: 77 };
    for g in gen_sequence(&spec, 300, 3).unwrap() {
        let pre_dir = learner.direction().direction().to_vec();
        learner.predict().unwrap();
        let step = learner.update(&g).unwrap();
        let expected: f64 = g.iter().zip(&pre_dir).map(|(a, b)| a * b).sum();
        assert_eq!(step.g_1d, expected);
        assert!(step.g_1d.abs() <= euclid_norm(&g) + 1e-12);
    }
}

#[test]
fn composed_regret_is_sublinear_against_a_far_comparator() {
    // Linear losses <g_t, w> with g_t = sign noise pushing away from
    // u = (5, 0): the composed learner's regret at T must be well below
    // the linear-growth benchmark ||u|| * h1 * T.
    let d = 2;
    let t_rounds = 4000u64;
    let u = [5.0, 0.0];
    let mut total_ratio: f64 = 0.0;
    for seed in 0..5u64 {
        let mut learner = UnconstrainedLearner::new(d, 1.0, config(2.0)).unwrap();
        let mut rng = SplitMix64::new(900 + seed);
        let mut regret = 0.0;
        for _ in 0..t_rounds {
            let w = learner.predict().unwrap();
            // Gradient of |<w - u, e1>|-like pull plus noise.
            let g = vec![
                if w[0] < u[0] { -1.0 } else { 1.0 } + 0.1 * rng.next_gaussian(),
                0.3 * rng.next_gaussian(),
            ];
            regret += g.iter().zip(&w).zip(&u).map(|((gi, wi), ui)| gi * (wi - ui)).sum::<f64>();
            learner.update(&g).unwrap();
        }
        total_ratio = total_ratio.max(regret / t_rounds as f64);
    }
    // Per-round regret must collapse far below the worst-case rate of
    // about ||u|| per round.
    assert!(
        total_ratio < 0.5,
        "per-round regret {total_ratio} did not collapse"
    );
}
