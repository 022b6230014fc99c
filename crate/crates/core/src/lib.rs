//! Sokoban workbench for potential-based reward shaping.
//!
//! The potential of a state is the negated length of an A* plan from that
//! state to the goal. The crate bundles the game engine, XSB level I/O and
//! generation, the planner, the shaping wrapper, a from-scratch A2C agent and
//! the experiment harness that compares shaped and unshaped learning.

pub mod agent;
pub mod cli;
pub mod game;
pub mod harness;
pub mod level_io;
pub mod planner;
pub mod shaping;

pub use game::{Action, EnvConfig, Level, Pos, State, StepOutcome};
