use std::collections::HashSet;
use std::fs;

use openworld::harness::{
    craft_reward_samples, episode_seed, episodes_ndjson, mean_ci95, run_experiment, summarize, summary_csv, trial_seed,
    write_outputs, AgentVariant, ConfigError, EnvName, ExperimentConfig,
};
use proptest::prelude::*;

fn small(trials: usize, episodes: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::cartpole_mass(trials, episodes, AgentVariant::PlanningAdaptive);
    cfg.novelty_episode = 2;
    cfg
}

#[test]
fn confidence_interval_uses_the_sample_deviation() {
    assert_eq!(mean_ci95(&[0.7]), (0.7, 0.0));
    let (m, ci) = mean_ci95(&[1.0, 2.0, 3.0]);
    assert_eq!(m, 2.0);
    assert!((ci - 1.96 * (1.0f64 / 3.0).sqrt()).abs() < 1e-15);
    assert!(mean_ci95(&[]).0.is_nan());
}

proptest! {
    #[test]
    fn interval_is_nonnegative_and_shift_invariant(
        xs in prop::collection::vec(-10.0f64..10.0, 2..30),
        shift in -5.0f64..5.0,
    ) {
        let (m, ci) = mean_ci95(&xs);
        let moved: Vec<f64> = xs.iter().map(|x| x + shift).collect();
        let (m2, ci2) = mean_ci95(&moved);
        prop_assert!(ci >= 0.0);
        prop_assert!((m2 - m - shift).abs() < 1e-9);
        prop_assert!((ci2 - ci).abs() < 1e-9);
    }
}

#[test]
fn seeds_are_distinct() {
    let mut seen = HashSet::new();
    for t in 0..20 {
        for e in 0..50 {
            assert!(seen.insert(episode_seed(trial_seed(0, t), e)));
        }
    }
    assert_ne!(trial_seed(0, 1), trial_seed(1, 1));
}

#[test]
fn config_validation() {
    let ok = small(2, 4);
    assert!(ok.validate().is_ok());
    let check = |f: &dyn Fn(&mut ExperimentConfig)| {
        let mut c = ok.clone();
        f(&mut c);
        c.validate()
    };
    assert_eq!(check(&|c| c.novelty_episode = 0), Err(ConfigError::NoveltyEpisode { k: 0, n: 4 }));
    assert_eq!(check(&|c| c.novelty_episode = 5), Err(ConfigError::NoveltyEpisode { k: 5, n: 4 }));
    assert!(check(&|c| c.novelty_episode = 4).is_ok());
    assert_eq!(check(&|c| c.trials = 0), Err(ConfigError::Empty));
    assert_eq!(check(&|c| c.episodes = 0), Err(ConfigError::Empty));
    assert_eq!(check(&|c| c.novelty = "nope".into()), Err(ConfigError::UnknownNovelty("nope".into())));
    assert!(matches!(check(&|c| c.monitor.gamma = 1.0), Err(ConfigError::Invalid(_))));
    assert!(matches!(check(&|c| c.monitor.c_th = Some(-0.1)), Err(ConfigError::Invalid(_))));
    assert!(matches!(check(&|c| c.repair.node_budget = 0), Err(ConfigError::Invalid(_))));
}

#[test]
fn toml_configs() {
    let text = "env = \"craft\"\nnovelty = \"logs_x5\"\nepisodes = 10\nnovelty_episode = 3\ntrials = 4\n\
                agent = \"planning-static\"\n[monitor]\nc_th = 2.0\nwindow = 2\n";
    let cfg = ExperimentConfig::from_toml(text).unwrap();
    assert_eq!(cfg.env, EnvName::Craft);
    assert_eq!(cfg.agent, AgentVariant::PlanningStatic);
    assert_eq!(cfg.monitor.window, 2);
    assert_eq!(cfg.init_noise, 0.05);
    assert_eq!(cfg.c_th(), 2.0);
    assert!(matches!(ExperimentConfig::from_toml("env = \"craft\"\n"), Err(ConfigError::Syntax(_))));
    assert!(matches!(
        ExperimentConfig::from_toml(&format!("{text}typo = 1\n")),
        Err(ConfigError::Syntax(_))
    ));
    assert!(matches!(
        ExperimentConfig::from_toml(&text.replace("novelty_episode = 3", "novelty_episode = 11")),
        Err(ConfigError::NoveltyEpisode { .. })
    ));
}

#[test]
fn single_trial_has_zero_width() {
    let result = run_experiment(&small(1, 3)).unwrap();
    assert!(result.summary.episodes.iter().all(|e| e.ci95 == 0.0));
    assert_eq!(result.trials[0].episodes.len(), 3);
}

#[test]
fn summary_recomputes_from_records() {
    let cfg = small(3, 4);
    let result = run_experiment(&cfg).unwrap();
    assert_eq!(summarize(&result.trials, cfg.episodes), result.summary);
    for (ep, row) in result.summary.episodes.iter().enumerate() {
        let rewards: Vec<f64> = result.trials.iter().map(|t| t.episodes[ep].reward).collect();
        assert_eq!((row.mean_reward, row.ci95), mean_ci95(&rewards));
        let detections = result.trials.iter().filter(|t| t.episodes[ep].novelty_detected).count();
        assert_eq!(row.detections, detections);
    }
    let csv = summary_csv(&result.summary);
    let first_rows: Vec<&str> = csv.lines().take(2).collect();
    assert_eq!(first_rows[0], "episode,mean_reward,ci95,detections,repairs");
    assert!(first_rows[1].starts_with("0,"));
}

#[test]
fn episodes_before_the_novelty_are_nominal() {
    let result = run_experiment(&small(2, 4)).unwrap();
    for t in &result.trials {
        assert!(t.aborted.is_none());
        for e in &t.episodes[..2] {
            assert_eq!(e.reward, 1.0);
            assert!(!e.novelty_detected);
        }
        assert!(t.detection_episode.is_some_and(|d| d >= 2));
    }
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let mut cfg = small(3, 4);
    cfg.jobs = 1;
    let a = run_experiment(&cfg).unwrap();
    cfg.jobs = 3;
    let b = run_experiment(&cfg).unwrap();
    assert_eq!(episodes_ndjson(&a.trials), episodes_ndjson(&b.trials));
    cfg.seed = 1;
    let c = run_experiment(&cfg).unwrap();
    assert_ne!(episodes_ndjson(&a.trials), episodes_ndjson(&c.trials));
}

#[test]
fn outputs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(2, 3);
    let result = run_experiment(&cfg).unwrap();
    write_outputs(dir.path(), &cfg, &result).unwrap();
    let echoed: ExperimentConfig = serde_json::from_str(&fs::read_to_string(dir.path().join("config.json")).unwrap()).unwrap();
    assert_eq!(echoed, cfg);
    let lines: Vec<serde_json::Value> = fs::read_to_string(dir.path().join("episodes.ndjson"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 6);
    assert_eq!(lines[3]["trial"], 1);
    assert_eq!(lines[3]["episode"], 0);
    assert!(lines[0].get("trajectory").is_none());
    assert_eq!(fs::read_to_string(dir.path().join("summary.csv")).unwrap(), summary_csv(&result.summary));
}

#[test]
fn craft_rewards_are_normalized() {
    let samples = craft_reward_samples(0..3).unwrap();
    assert!(!samples.is_empty());
    assert!(samples.iter().all(|s| (0.0..=1.0).contains(&s.reward)));
    assert!(samples.iter().any(|s| s.reward == 1.0));
}
