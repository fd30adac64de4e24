//! Bundled domain and problem files.

use crate::ir::{ground, DistanceSpec, DomainModel, GroundedModel, ProblemSpec};
use crate::pddl::{parse_domain_named, parse_problem_named};

pub const CARTPOLE_DOMAIN: &str = include_str!("../pddl/cartpole_domain.pddl");
pub const CARTPOLE_PROBLEM: &str = include_str!("../pddl/cartpole_problem.pddl");
pub const CRAFT_DOMAIN: &str = include_str!("../pddl/craft_domain.pddl");
pub const CRAFT_PROBLEM: &str = include_str!("../pddl/craft_problem.pddl");
/// A stand-alone single-plane movement process.
pub const MOVEMENT_PROCESS: &str = include_str!("../pddl/movement_process.pddl");

pub fn cartpole_domain() -> DomainModel {
    parse_domain_named(CARTPOLE_DOMAIN, "cartpole_domain.pddl").expect("bundled domain parses")
}

pub fn cartpole_problem() -> ProblemSpec {
    parse_problem_named(CARTPOLE_PROBLEM, &cartpole_domain(), "cartpole_problem.pddl")
        .expect("bundled problem parses")
}

pub fn cartpole_model() -> GroundedModel {
    ground(&cartpole_domain(), &cartpole_problem()).expect("bundled model grounds")
}

pub fn craft_domain() -> DomainModel {
    parse_domain_named(CRAFT_DOMAIN, "craft_domain.pddl").expect("bundled domain parses")
}

pub fn craft_problem() -> ProblemSpec {
    parse_problem_named(CRAFT_PROBLEM, &craft_domain(), "craft_problem.pddl")
        .expect("bundled problem parses")
}

pub fn craft_model() -> GroundedModel {
    ground(&craft_domain(), &craft_problem()).expect("bundled model grounds")
}

/// Euclidean distance over cart and pole pose.
pub fn cartpole_pose_distance() -> DistanceSpec {
    DistanceSpec::unweighted(&["cart_x", "cart_y", "theta_x", "theta_y"])
}

/// Inventory count differences, plus a small weight on the agent's position.
pub fn craft_inventory_distance() -> DistanceSpec {
    DistanceSpec::unweighted(&[
        "logs",
        "platinum",
        "diamonds",
        "saplings",
        "pogosticks",
        "agent_x",
        "agent_y",
    ])
    .with_weight("agent_x", 0.1)
    .with_weight("agent_y", 0.1)
}
