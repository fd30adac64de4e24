use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const PDDL: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/../core/pddl");

const COUNTER_DOMAIN: &str = "(define (domain counter)
  (:requirements :fluents)
  (:functions (n))
  (:action inc :parameters () :precondition (< (n) 5) :effect (increase (n) 1)))";

const COUNTER_PROBLEM: &str = "(define (problem two) (:domain counter)
  (:init (= (n) 0))
  (:goal (>= (n) 2)))";

fn openworld(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_openworld"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn pddl(name: &str) -> String {
    format!("{PDDL}/{name}")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

fn small_experiment(dir: &Path) -> String {
    write(
        dir,
        "exp.toml",
        "env = \"cartpole\"\nnovelty = \"mass_cart_x10\"\nepisodes = 4\nnovelty_episode = 2\ntrials = 2\nagent = \"planning-adaptive\"\n",
    )
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_experiment(dir.path());
    let out = dir.path().join("out");
    let o = openworld(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let episodes = fs::read_to_string(out.join("episodes.ndjson")).unwrap();
    assert_eq!(episodes.lines().count(), 8);
    let summary = fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(summary.lines().next(), Some("episode,mean_reward,ci95,detections,repairs"));
    assert_eq!(summary.lines().count(), 5);
    assert!(out.join("config.json").exists());
}

#[test]
fn run_is_reproducible_from_echoed_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_experiment(dir.path());
    let a: PathBuf = dir.path().join("a");
    let b: PathBuf = dir.path().join("b");
    assert!(openworld(&["run", "--config", &cfg, "--out", a.to_str().unwrap(), "--jobs", "1"]).status.success());
    let echoed = a.join("config.json");
    assert!(openworld(&["run", "--config", echoed.to_str().unwrap(), "--out", b.to_str().unwrap(), "--jobs", "2"]).status.success());
    assert_eq!(fs::read(a.join("episodes.ndjson")).unwrap(), fs::read(b.join("episodes.ndjson")).unwrap());
}

#[test]
fn run_rejects_bad_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_experiment(dir.path());
    let out = dir.path().join("out");
    let o = openworld(&["run", "--config", &cfg, "--novelty-episode", "9", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(!out.exists());
    let bad = write(dir.path(), "bad.toml", "env = \"cartpole\"\nepisodes = 3\n");
    assert_eq!(openworld(&["run", "--config", &bad]).status.code(), Some(1));
    let unknown = write(dir.path(), "unknown.toml", &fs::read_to_string(&cfg).unwrap().replace("mass_cart_x10", "no_such"));
    assert_eq!(openworld(&["run", "--config", &unknown]).status.code(), Some(1));
}

#[test]
fn validate_reports_goal() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "d.pddl", COUNTER_DOMAIN);
    let p = write(dir.path(), "p.pddl", COUNTER_PROBLEM);
    let good = write(dir.path(), "good.plan", "t=0 inc\nt=1 inc\n");
    let short = write(dir.path(), "short.plan", "t=0 inc\n");
    let traj = dir.path().join("tau.ndjson");
    let o = openworld(&[
        "validate", "--domain", &d, "--problem", &p, "--plan", &good, "--delta-t", "1",
        "--trajectory-out", traj.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&traj).unwrap().lines().count(), 3);
    let o = openworld(&["validate", "--domain", &d, "--problem", &p, "--plan", &short, "--delta-t", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn validate_rejects_malformed_inputs() {
    let dir = tempfile::tempdir().unwrap();
    let d = write(dir.path(), "d.pddl", COUNTER_DOMAIN);
    let p = write(dir.path(), "p.pddl", COUNTER_PROBLEM);
    let unknown = write(dir.path(), "u.plan", "t=0 dec\n");
    let o = openworld(&["validate", "--domain", &d, "--problem", &p, "--plan", &unknown]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown action `dec`"));
    let broken = write(dir.path(), "broken.pddl", "(define (domain counter)");
    let o = openworld(&["validate", "--domain", &broken, "--problem", &p, "--plan", &unknown]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn repair_recovers_heavier_cart_offline() {
    let dir = tempfile::tempdir().unwrap();
    let domain = pddl("cartpole_domain.pddl");
    let nominal = pddl("cartpole_problem.pddl");
    let heavy = write(
        dir.path(),
        "heavy.pddl",
        &fs::read_to_string(&nominal).unwrap().replace("(= (mass_cart) 1.0)", "(= (mass_cart) 7.0)"),
    );
    let plan: String = (0..40)
        .map(|i| format!("t={} {}\n", i as f64 * 0.02, if (i / 3) % 2 == 0 { "push_left" } else { "push_right" }))
        .collect();
    let plan = write(dir.path(), "plan.txt", &plan);
    let tau = dir.path().join("tau.ndjson");
    openworld(&[
        "validate", "--domain", &domain, "--problem", &heavy, "--plan", &plan,
        "--trajectory-out", tau.to_str().unwrap(),
    ]);
    let space = write(
        dir.path(),
        "space.toml",
        "c_th = 1e-9\nnode_budget = 50\ndistance = { fluents = [\"cart_x\", \"cart_y\", \"theta_x\", \"theta_y\"] }\n\
         params = [{ fluent = \"mass_cart\", nominal = 1.0, delta = 1.0 }, { fluent = \"gravity\", nominal = 9.81, delta = 1.0 }]\n",
    );
    let o = openworld(&[
        "repair", "--domain", &domain, "--problem", &nominal, "--plan", &plan,
        "--trajectory", tau.to_str().unwrap(), "--space", &space,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    let (line, json) = stdout.split_once('\n').unwrap();
    assert!(line.starts_with("repair:[mass_cart: 6.0, gravity: 0]; resulting consistency: "), "{line}");
    let v: serde_json::Value = serde_json::from_str(json).unwrap();
    assert!(v["c_best"].as_f64().unwrap() < 1e-15);
    assert_eq!(v["halt"], "below_threshold");
}

#[test]
fn repair_needs_a_distance() {
    let dir = tempfile::tempdir().unwrap();
    let (domain, problem) = (pddl("cartpole_domain.pddl"), pddl("cartpole_problem.pddl"));
    let plan = write(dir.path(), "plan.txt", "t=0 push_left\n");
    let tau = dir.path().join("tau.ndjson");
    let o = openworld(&[
        "validate", "--domain", &domain, "--problem", &problem, "--plan", &plan,
        "--trajectory-out", tau.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    let tau = tau.to_str().unwrap();
    let space = write(dir.path(), "space.toml", "c_th = 0.1\n");
    let o = openworld(&["repair", "--domain", &domain, "--problem", &problem, "--plan", &plan, "--trajectory", tau, "--space", &space]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("needs `distance`"));
    let o = openworld(&["repair", "--domain", &domain, "--problem", &problem, "--plan", &plan, "--trajectory", tau, "--space", "cartpole"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}
