use std::collections::BTreeSet;

use openworld::ir::{ground, DistanceSpec, FluentId, GroundedModel, Plan, Trajectory};
use openworld::monitors::{
    auc, determine, discounted_mean, first_detection, fit_estimator, inconsistency_score, reward_divergence,
    scored_simulation, unknown_entity_check, Combination, DeterminationRule, EstimatorConfig, InconsistencyConfig,
    MonitorError, MonitorRule, MonitorSignal, RewardSample, SignalHistory, INCONSISTENCY, UNKNOWN_ENTITY,
};
use openworld::pddl::{parse_domain, parse_problem};
use openworld::sim::SimConfig;
use proptest::prelude::*;

/// A model whose parameter `rate` is 0. Simulation keeps the model's
/// parameters, so an observed `rate` of r is a distance of |r| at that step.
fn still_model() -> GroundedModel {
    let d = parse_domain(
        "(define (domain still) (:requirements :fluents :time) (:functions (x) (rate)) \
         (:process drift :parameters () :precondition () :effect (increase (x) (* #t (rate)))))",
    )
    .unwrap();
    let p = parse_problem("(define (problem p) (:domain still) (:init (= (x) 0) (= (rate) 0)) (:goal (>= (x) 0)))", &d).unwrap();
    ground(&d, &p).unwrap()
}

/// Observations whose distance from the prediction is `|xs[i]|` at step i.
fn observed(model: &GroundedModel, xs: &[f64]) -> Trajectory {
    let slot = model.numeric_slot(&FluentId::nullary("rate")).unwrap();
    let mut tau = Trajectory::default();
    for (i, x) in xs.iter().enumerate() {
        let mut s = model.initial_state().clone();
        s.time = i as f64 * 0.02;
        s.nums[slot] = *x;
        if i == 0 {
            tau.states.push(s);
        } else {
            tau.push(None, s);
        }
    }
    tau
}

fn cfg(gamma: f64) -> InconsistencyConfig {
    let mut c = InconsistencyConfig::new(DistanceSpec::unweighted(&["x", "rate"]), 0.0, SimConfig::default());
    c.gamma = gamma;
    c
}

fn score(xs: &[f64], gamma: f64) -> f64 {
    let m = still_model();
    inconsistency_score(&Plan::default(), &m, &observed(&m, xs), &cfg(gamma)).unwrap()
}

#[test]
fn aligned_trajectories_score_zero() {
    assert_eq!(score(&[0.0, 0.0, 0.0, 0.0], 0.9), 0.0);
}

#[test]
fn hand_evaluated_example() {
    let c = score(&[1.0, 1.0, 1.0], 0.5);
    assert!((c - 0.583_333_333_333_333_3).abs() < 1e-15, "{c}");
}

#[test]
fn every_compared_state_is_covered() {
    let m = still_model();
    let s = scored_simulation(&Plan::default(), &m, &observed(&m, &[0.0, 1.0, 2.0]), &cfg(0.9)).unwrap();
    assert_eq!(s.compared, 3);
    assert!(s.error.is_none());
}

#[test]
fn shortfall_keeps_the_full_normalizer() {
    assert_eq!(discounted_mean(&[1.0, 1.0], 4, 0.5), 1.5 / 4.0);
    assert_eq!(discounted_mean(&[], 3, 0.5), 0.0);
}

#[test]
fn rejects_bad_inputs() {
    let m = still_model();
    let tau = observed(&m, &[0.0]);
    assert_eq!(
        inconsistency_score(&Plan::default(), &m, &Trajectory::default(), &cfg(0.9)),
        Err(MonitorError::EmptyTrajectory)
    );
    assert_eq!(inconsistency_score(&Plan::default(), &m, &tau, &cfg(1.0)), Err(MonitorError::BadDiscount(1.0)));
    let mut neg = cfg(0.9);
    neg.c_th = -1.0;
    assert_eq!(inconsistency_score(&Plan::default(), &m, &tau, &neg), Err(MonitorError::BadThreshold(-1.0)));
}

proptest! {
    #[test]
    fn score_is_nonnegative_and_zero_only_when_aligned(
        xs in prop::collection::vec(-5.0f64..5.0, 1..12),
        gamma in 0.05f64..0.99,
    ) {
        let c = score(&xs, gamma);
        prop_assert!(c >= 0.0);
        prop_assert_eq!(c == 0.0, xs.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn score_grows_with_any_single_distance(
        xs in prop::collection::vec(0.0f64..5.0, 1..12),
        pick in any::<prop::sample::Index>(),
        bump in 0.0f64..3.0,
        gamma in 0.05f64..0.99,
    ) {
        let mut ys = xs.clone();
        let i = pick.index(xs.len());
        ys[i] += bump;
        prop_assert!(score(&ys, gamma) >= score(&xs, gamma));
    }

    #[test]
    fn score_is_linear_in_the_distances(
        xs in prop::collection::vec(-5.0f64..5.0, 1..12),
        c in 0.01f64..100.0,
        gamma in 0.05f64..0.99,
    ) {
        let scaled: Vec<f64> = xs.iter().map(|x| c * x).collect();
        let (a, b) = (score(&xs, gamma), score(&scaled, gamma));
        prop_assert!((b - c * a).abs() <= 1e-12 * (1.0 + b.abs()), "{} vs {}", b, c * a);
    }
}

#[test]
fn unknown_entities() {
    let known: BTreeSet<String> = ["tree", "crafting_table"].iter().map(|s| s.to_string()).collect();
    let seen = |items: &[(&str, f64)]| -> Vec<(String, f64)> { items.iter().map(|(l, c)| (l.to_string(), *c)).collect() };
    let quiet = unknown_entity_check(0, &seen(&[("tree", 1.0), ("crafting_table", 1.0)]), &known, 0.65);
    assert!(!quiet.fired);
    assert_eq!(quiet.score, 0.0);
    let novel = unknown_entity_check(1, &seen(&[("tree", 1.0), ("sapling_v2", 1.0)]), &known, 0.65);
    assert!(novel.fired);
    assert_eq!(novel.score, 1.0);
    assert_eq!(novel.monitor, UNKNOWN_ENTITY);
    assert!(unknown_entity_check(2, &seen(&[("tree", 0.60)]), &known, 0.65).fired);
    assert!(!unknown_entity_check(3, &seen(&[("tree", 0.65)]), &known, 0.65).fired);
}

fn series(monitor: &str, scores: &[f64], threshold: f64) -> Vec<MonitorSignal> {
    scores
        .iter()
        .enumerate()
        .map(|(episode, &score)| MonitorSignal {
            monitor: monitor.into(),
            episode,
            score,
            fired: score >= threshold,
        })
        .collect()
}

fn history(entries: &[(&str, Vec<MonitorSignal>)]) -> SignalHistory {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

#[test]
fn three_consecutive_episodes_fire_at_the_third() {
    let mut scores = vec![0.001; 8];
    scores.extend([0.02, 0.03, 0.02, 0.05]);
    let h = history(&[(INCONSISTENCY, series(INCONSISTENCY, &scores, 0.009))]);
    let rule = DeterminationRule::single(INCONSISTENCY, 0.009, 3);
    assert_eq!(first_detection(&h, &rule), Some(10));
    let upto9 = history(&[(INCONSISTENCY, series(INCONSISTENCY, &scores[..10], 0.009))]);
    assert!(!determine(&upto9, &rule).fired);
}

#[test]
fn interrupted_run_never_fires() {
    let scores = [0.0, 0.02, 0.02, 0.0, 0.02, 0.02, 0.0];
    let h = history(&[(INCONSISTENCY, series(INCONSISTENCY, &scores, 0.009))]);
    assert_eq!(first_detection(&h, &DeterminationRule::single(INCONSISTENCY, 0.009, 3)), None);
}

#[test]
fn unknown_entity_short_circuits() {
    let h = history(&[
        (INCONSISTENCY, series(INCONSISTENCY, &[0.0, 0.0, 0.0], 0.009)),
        (UNKNOWN_ENTITY, series(UNKNOWN_ENTITY, &[0.0, 0.0, 1.0], 1.0)),
    ]);
    let mut rule = DeterminationRule::single(INCONSISTENCY, 0.009, 3);
    assert_eq!(first_detection(&h, &rule), Some(2));
    assert_eq!(determine(&h, &rule).reasons, vec![UNKNOWN_ENTITY.to_string()]);
    rule.short_circuit = false;
    assert_eq!(first_detection(&h, &rule), None);
}

#[test]
fn all_of_needs_every_monitor() {
    let h = history(&[
        ("a", series("a", &[1.0, 1.0], 0.5)),
        ("b", series("b", &[0.0, 1.0], 0.5)),
    ]);
    let rule = |combination| DeterminationRule {
        monitors: ["a", "b"]
            .iter()
            .map(|m| MonitorRule {
                monitor: m.to_string(),
                threshold: 0.5,
                window: 2,
            })
            .collect(),
        combination,
        short_circuit: true,
    };
    assert!(determine(&h, &rule(Combination::AnyOf)).fired);
    assert!(!determine(&h, &rule(Combination::AllOf)).fired);
    assert_eq!(determine(&h, &rule(Combination::AllOf)), determine(&h, &rule(Combination::AllOf)));
}

fn samples(rows: &[(&[f64], f64)]) -> Vec<RewardSample> {
    rows.iter()
        .map(|(f, r)| RewardSample {
            features: f.to_vec(),
            reward: *r,
        })
        .collect()
}

#[test]
fn constant_rewards_are_predicted_exactly() {
    let data = samples(&[(&[1.0, 0.0], 0.4), (&[2.0, 1.0], 0.4), (&[0.0, 3.0], 0.4)]);
    let est = fit_estimator(&data, &EstimatorConfig::default()).unwrap();
    assert!(est.train_rmse < 1e-15);
    assert!((est.predict(&[7.0, -2.0]) - 0.4).abs() < 1e-15);
}

#[test]
fn linear_rewards_fit_closely() {
    let rows: Vec<(Vec<f64>, f64)> = (0..40)
        .map(|i| {
            let (a, b) = (i as f64 * 0.1, ((i * 7) % 11) as f64);
            (vec![a, b, 1.0], 0.3 * a - 0.05 * b + 0.2)
        })
        .collect();
    let data: Vec<RewardSample> = rows
        .iter()
        .map(|(f, r)| RewardSample {
            features: f.clone(),
            reward: *r,
        })
        .collect();
    let est = fit_estimator(&data, &EstimatorConfig { ridge: 0.0, ..Default::default() }).unwrap();
    assert!(est.train_rmse < 1e-8, "{}", est.train_rmse);
    assert_eq!(est.predict(&data[5].features), est.predict(&data[5].features));
}

#[test]
fn estimator_rejects_bad_data() {
    assert_eq!(fit_estimator(&[], &EstimatorConfig::default()), Err(MonitorError::NoData));
    let ragged = samples(&[(&[1.0], 0.0), (&[1.0, 2.0], 1.0)]);
    assert_eq!(fit_estimator(&ragged, &EstimatorConfig::default()), Err(MonitorError::Ragged));
    let flat = samples(&[(&[1.0], 0.0), (&[1.0], 1.0)]);
    assert_eq!(fit_estimator(&flat, &EstimatorConfig::default()), Err(MonitorError::Degenerate));
}

fn constant(r: f64) -> openworld::monitors::RewardEstimator {
    fit_estimator(&samples(&[(&[0.0], r), (&[1.0], r)]), &EstimatorConfig::default()).unwrap()
}

#[test]
fn divergence_is_absolute_error() {
    assert_eq!(reward_divergence(&constant(0.25), &[0.0], 0.25), 0.0);
    assert!((reward_divergence(&constant(0.2), &[0.0], 0.9) - 0.7).abs() < 1e-15);
}

proptest! {
    #[test]
    fn divergence_is_symmetric_and_obeys_the_triangle_inequality(
        a in -2.0f64..2.0,
        b in -2.0f64..2.0,
        c in -2.0f64..2.0,
    ) {
        let ab = reward_divergence(&constant(a), &[0.0], b);
        prop_assert_eq!(ab, reward_divergence(&constant(b), &[0.0], a));
        let ac = reward_divergence(&constant(a), &[0.0], c);
        let cb = reward_divergence(&constant(c), &[0.0], b);
        prop_assert!(ab <= ac + cb + 1e-15);
    }
}

#[test]
fn auc_counts_ordered_pairs() {
    assert_eq!(auc(&[0.1, 0.2], &[0.5, 0.9]), 1.0);
    assert_eq!(auc(&[0.5, 0.9], &[0.1, 0.2]), 0.0);
    assert_eq!(auc(&[0.5], &[0.5]), 0.5);
    assert_eq!(auc(&[0.1, 0.6], &[0.5]), 0.5);
    assert!(auc(&[], &[1.0]).is_nan());
}
