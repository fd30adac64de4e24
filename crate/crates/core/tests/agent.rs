use openworld::agent::{
    craft_tasks, infer_state, relevant_tasks, select_task, strip_unknown, BackgroundFacts, EpisodeOutcome, InferError,
    TaskDef, TaskOutcome, TaskRules,
};
use openworld::env::Observation;
use openworld::harness::{build, AgentVariant, ExperimentConfig};
use openworld::ir::{FluentId, State};
use openworld::presets::{cartpole_model, craft_model};

#[test]
fn observation_then_background_then_model() {
    let m = cartpole_model();
    let g = FluentId::nullary("gravity");
    let mut obs = Observation::default();
    obs.set_num("theta_x", 0.1);
    let bg = BackgroundFacts::default().with_num("gravity", 9.8).with_num("theta_x", 0.0);
    let s = infer_state(&obs, &bg, &m).unwrap();
    assert_eq!(s.nums[m.numeric_slot(&g).unwrap()], 9.8);
    assert_eq!(s.nums[m.numeric_slot(&FluentId::nullary("theta_x")).unwrap()], 0.1);
    assert_eq!(s.nums[m.numeric_slot(&FluentId::nullary("mass_cart")).unwrap()], 1.0);
}

#[test]
fn unknown_fluent_rejected() {
    let m = cartpole_model();
    let mut obs = Observation::default();
    obs.set_num("wind", 3.0);
    assert!(matches!(infer_state(&obs, &BackgroundFacts::default(), &m), Err(InferError::UnknownFluents(_))));
    assert_eq!(strip_unknown(&mut obs, &m).len(), 1);
    assert!(infer_state(&obs, &BackgroundFacts::default(), &m).is_ok());
}

fn names(tasks: &[&TaskDef]) -> Vec<String> {
    tasks.iter().map(|t| t.name.clone()).collect()
}

fn detected(s: &State) -> State {
    let m = craft_model();
    let mut s = s.clone();
    s.bools[m.bool_slot(&FluentId::nullary("novelty_detected")).unwrap()] = true;
    s
}

#[test]
fn novelty_tasks_need_a_detection() {
    let m = craft_model();
    let tasks = craft_tasks(&m);
    let s0 = m.initial_state();
    assert_eq!(names(&relevant_tasks(&tasks, s0)), ["craft-pogo", "interact-traders"]);
    let s1 = detected(s0);
    assert_eq!(
        names(&relevant_tasks(&tasks, &s1)),
        ["craft-pogo", "interact-traders", "explore", "open-safe", "mine-novel"]
    );
}

#[test]
fn finished_tasks_are_not_relevant() {
    let m = craft_model();
    let tasks = craft_tasks(&m);
    let mut s = m.initial_state().clone();
    s.nums[m.numeric_slot(&FluentId::nullary("pogosticks")).unwrap()] = 1.0;
    assert_eq!(names(&relevant_tasks(&tasks, &s)), ["interact-traders"]);
}

#[test]
fn failures_move_down_the_rule_list() {
    let m = craft_model();
    let tasks = craft_tasks(&m);
    let rules = TaskRules::craft();
    let failed = |task: &str| TaskOutcome {
        task: task.into(),
        success: false,
    };
    let s = detected(m.initial_state());
    let rel = relevant_tasks(&tasks, &s);
    let pick = |last: Option<&TaskOutcome>| select_task(&rel, &rules, last).map(|t| t.name.clone());
    assert_eq!(pick(None).as_deref(), Some("craft-pogo"));
    assert_eq!(pick(Some(&failed("craft-pogo"))).as_deref(), Some("explore"));
    assert_eq!(pick(Some(&failed("interact-traders"))).as_deref(), Some("explore"));
    assert_eq!(pick(Some(&failed("explore"))).as_deref(), Some("open-safe"));
    assert_eq!(pick(Some(&failed("open-safe"))).as_deref(), Some("mine-novel"));
    let ok = TaskOutcome {
        task: "craft-pogo".into(),
        success: true,
    };
    assert_eq!(pick(Some(&ok)).as_deref(), Some("craft-pogo"));
    let before = relevant_tasks(&tasks, m.initial_state());
    assert_eq!(
        select_task(&before, &rules, Some(&failed("craft-pogo"))).map(|t| t.name.as_str()),
        Some("craft-pogo")
    );
    assert!(select_task(&[], &rules, None).is_none());
}

#[test]
fn nominal_cartpole_episode_balances() {
    let cfg = ExperimentConfig::cartpole_mass(1, 2, AgentVariant::PlanningAdaptive);
    let (mut agent, mut env) = build(&cfg).unwrap();
    let rec = agent.run_episode(env.as_mut(), 0, 7).unwrap();
    assert_eq!(rec.outcome, EpisodeOutcome::Success);
    assert_eq!(rec.reward, 1.0);
    assert_eq!(rec.steps, 200);
    assert_eq!(rec.actions.len(), rec.steps);
    assert_eq!(rec.trajectory.len(), rec.steps + 1);
    assert!(rec.inconsistency < cfg.c_th());
    assert!(!rec.novelty_detected);
    assert!(rec.repair.is_none());
}

#[test]
fn heavy_cart_is_detected_and_repaired() {
    let cfg = ExperimentConfig::cartpole_mass(1, 2, AgentVariant::PlanningAdaptive);
    let (mut agent, mut env) = build(&cfg).unwrap();
    env.configure_episode(Some(&cfg.novelty_spec().unwrap()), cfg.novelty_episode).unwrap();
    let rec = agent.run_episode(env.as_mut(), cfg.novelty_episode, 7).unwrap();
    assert!(rec.inconsistency >= cfg.c_th());
    assert!(rec.novelty_detected);
    let repair = rec.repair.expect("adaptive agent repairs");
    assert!(repair.net_delta.get("mass_cart").is_some_and(|&d| d > 0.0), "{}", repair.log);
    assert!(repair.c_best < repair.c_empty);
    assert!(repair.log.starts_with("repair:[length_pole: "));
    assert_eq!(agent.model().net_edits().get(&FluentId::nullary("mass_cart")).copied(), repair.installed.get("mass_cart").copied());
}

#[test]
fn static_agent_never_repairs() {
    let cfg = ExperimentConfig::cartpole_mass(1, 2, AgentVariant::PlanningStatic);
    let (mut agent, mut env) = build(&cfg).unwrap();
    env.configure_episode(Some(&cfg.novelty_spec().unwrap()), cfg.novelty_episode).unwrap();
    let rec = agent.run_episode(env.as_mut(), cfg.novelty_episode, 7).unwrap();
    assert!(rec.novelty_detected);
    assert!(rec.repair.is_none());
    assert!(agent.model().net_edits().is_empty());
}
