use openworld::agent::{infer_state, BackgroundFacts};
use openworld::env::{CartPoleEnv, CartPoleParams, Environment, NoveltySpec};
use openworld::ir::{fluent_distance, Plan, PlanStep};
use openworld::presets::{cartpole_model, cartpole_pose_distance};
use openworld::sim::{simulate_plan, SimConfig};

fn background() -> BackgroundFacts {
    BackgroundFacts::default()
        .with_bool("ready", true)
        .with_num("force_x", 0.0)
        .with_num("force_y", 0.0)
        .with_copy("tick_time", "elapsed_time")
}

fn alternating(model: &openworld::ir::GroundedModel, n: usize) -> (Plan, Vec<&'static str>) {
    let names: Vec<&'static str> = (0..n).map(|i| if i % 2 == 0 { "push_left" } else { "push_right" }).collect();
    let steps = names
        .iter()
        .enumerate()
        .map(|(i, a)| PlanStep {
            time: i as f64 * 0.02,
            action: model.find_action_by_name(a).unwrap(),
        })
        .collect();
    (Plan::new(steps), names)
}

fn run_env(env: &mut CartPoleEnv, names: &[&str], seed: u64) -> Vec<openworld::env::Observation> {
    let mut obs = vec![env.reset(seed)];
    for a in names {
        obs.push(env.step(Some(a)).unwrap().observation);
    }
    obs
}

#[test]
fn model_matches_environment_without_novelty() {
    let model = cartpole_model();
    let (plan, names) = alternating(&model, 10);
    let mut env = CartPoleEnv::new(CartPoleParams::default(), 0.02);
    let obs = run_env(&mut env, &names, 7);
    let s0 = infer_state(&obs[0], &background(), &model).unwrap();
    let traj = simulate_plan(&model, &s0, &plan, &SimConfig::default().with_horizon(0.2)).unwrap();
    assert_eq!(traj.len(), obs.len());
    let all: Vec<&str> = ["cart_x", "cart_x_dot", "theta_x", "theta_x_dot", "cart_y", "cart_y_dot", "theta_y", "theta_y_dot"].to_vec();
    let spec = openworld::ir::DistanceSpec::unweighted(&all).resolve(&model).unwrap();
    for (o, s) in obs.iter().zip(&traj.states) {
        let observed = infer_state(o, &background(), &model).unwrap();
        assert!(fluent_distance(&observed, s, &spec) < 1e-9);
        assert_eq!(fluent_distance(&observed, s, &spec), 0.0, "bit-exact agreement");
    }
}

#[test]
fn heavy_cart_diverges_on_pose() {
    let model = cartpole_model();
    let (plan, names) = alternating(&model, 10);
    let mut env = CartPoleEnv::new(CartPoleParams::default(), 0.02);
    env.configure_episode(NoveltySpec::preset("mass_cart_x10", 0).as_ref(), 0).unwrap();
    let obs = run_env(&mut env, &names, 7);
    let s0 = infer_state(&obs[0], &background(), &model).unwrap();
    let traj = simulate_plan(&model, &s0, &plan, &SimConfig::default().with_horizon(0.2)).unwrap();
    let spec = cartpole_pose_distance().resolve(&model).unwrap();
    let max = obs
        .iter()
        .zip(&traj.states)
        .map(|(o, s)| fluent_distance(&infer_state(o, &background(), &model).unwrap(), s, &spec))
        .fold(0.0, f64::max);
    assert!(max > 0.009, "max pose distance {max}");
}
