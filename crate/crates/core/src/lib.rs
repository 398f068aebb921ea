//! Rule-driven multi-agent urban grid simulator.
//!
//! Agents carry semantic concepts, observe a local window, ground a fixed
//! set of predicates into a boolean vector, and pick one of four actions by
//! stratified deduction over first-order clauses.

pub mod config;
pub mod grounding;
pub mod mode;
pub mod planner;
pub mod presets;
pub mod registry;
pub mod render;
pub mod rules;
pub mod seeding;
pub mod sim;
pub mod solver;
pub mod spf;
pub mod vap;
pub mod world;

pub use mode::Mode;
pub use registry::PredicateRegistry;
