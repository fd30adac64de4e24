pub mod ir;
pub mod pddl;
pub mod presets;
pub mod sim;
pub mod env;
pub mod agent;
pub mod planner;
pub mod monitors;
pub mod repair;
pub mod harness;
