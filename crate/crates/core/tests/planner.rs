use openworld::ir::{holds, Condition, FluentId, Literal};
use openworld::planner::{plan, plan_with, FailureReason, PlanQuery, PlannerConfig, PlanningError};
use openworld::presets::{cartpole_model, craft_model};
use openworld::sim::{simulate_plan, validate};
use proptest::prelude::*;

fn break_count(model: &openworld::ir::GroundedModel, p: &openworld::ir::Plan) -> usize {
    p.steps
        .iter()
        .filter(|s| model.happening(s.action).schema == "break_tree")
        .count()
}

#[test]
fn craft_plan_uses_three_breaks_and_validates() {
    let m = craft_model();
    let cfg = PlannerConfig::craft();
    let out = plan(&m, m.initial_state(), m.goal(), &cfg).unwrap();
    assert_eq!(break_count(&m, &out.plan), 3);
    let v = validate(&m, m.initial_state(), &out.plan, m.goal(), &cfg.sim).unwrap();
    assert!(v.reaches_goal);
    assert_eq!(out.expected.len(), out.plan.len() + 1);
}

#[test]
fn craft_plan_shrinks_with_more_logs_per_break() {
    let m = craft_model();
    let slot = m.numeric_slot(&FluentId::nullary("break_log")).unwrap();
    let mut s0 = m.initial_state().clone();
    s0.nums[slot] = 10.0;
    let out = plan(&m, &s0, m.goal(), &PlannerConfig::craft()).unwrap();
    assert_eq!(break_count(&m, &out.plan), 1);
    let only_north = m.restrict_actions(&["move_north".into()]);
    let err = plan(&only_north, &s0, m.goal(), &PlannerConfig::craft()).unwrap_err();
    assert!(matches!(err, PlanningError::Failed(ref f) if f.reason == FailureReason::Exhausted));
}

#[test]
fn node_budget_is_reported() {
    let m = craft_model();
    let cfg = PlannerConfig {
        node_budget: 10,
        ..PlannerConfig::craft()
    };
    match plan(&m, m.initial_state(), m.goal(), &cfg) {
        Err(PlanningError::Failed(f)) => {
            assert_eq!(f.reason, FailureReason::NodeBudget);
            assert_eq!(f.nodes_expanded, 10);
        }
        other => panic!("expected budget failure, got {other:?}"),
    }
}

#[test]
fn bad_decision_interval_rejected() {
    let m = cartpole_model();
    let cfg = PlannerConfig {
        plan_delta_t: 0.03,
        ..PlannerConfig::cartpole()
    };
    assert!(matches!(
        plan(&m, m.initial_state(), m.goal(), &cfg),
        Err(PlanningError::Config(_))
    ));
}

fn balance_query(m: &openworld::ir::GroundedModel) -> PlanQuery {
    let fail = m.bool_slot(&FluentId::nullary("total_failure")).unwrap();
    PlanQuery {
        goal: m.goal().clone(),
        invariant: Condition::new(vec![Literal::Atom {
            fluent: fail,
            positive: false,
        }]),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn lookahead_plans_keep_the_pole_up(tx in -0.05f64..0.05, ty in -0.05f64..0.05, wx in -0.1f64..0.1) {
        let m = cartpole_model();
        let mut s0 = m.initial_state().clone();
        s0.nums[m.numeric_slot(&FluentId::nullary("theta_x")).unwrap()] = tx;
        s0.nums[m.numeric_slot(&FluentId::nullary("theta_y")).unwrap()] = ty;
        s0.nums[m.numeric_slot(&FluentId::nullary("theta_x_dot")).unwrap()] = wx;
        let q = balance_query(&m);
        let cfg = PlannerConfig::cartpole();
        let out = plan_with(&m, &s0, &q, &cfg).unwrap();
        let horizon = cfg.plan_delta_t * cfg.lookahead.unwrap() as f64;
        let traj = simulate_plan(&m, &s0, &out.plan, &cfg.sim.with_horizon(horizon)).unwrap();
        for s in &traj.states {
            prop_assert!(holds(s, &q.invariant).unwrap());
        }
        let again = plan_with(&m, &s0, &q, &cfg).unwrap();
        prop_assert_eq!(&again.plan, &out.plan);
        prop_assert_eq!(again.nodes_expanded, out.nodes_expanded);
    }

    #[test]
    fn larger_budget_never_loses_a_solution(budget in 1usize..400) {
        let m = craft_model();
        let small = PlannerConfig { node_budget: budget, ..PlannerConfig::craft() };
        let large = PlannerConfig { node_budget: budget * 2, ..PlannerConfig::craft() };
        if let Ok(a) = plan(&m, m.initial_state(), m.goal(), &small) {
            let b = plan(&m, m.initial_state(), m.goal(), &large).unwrap();
            prop_assert_eq!(a.plan, b.plan);
        }
    }
}
