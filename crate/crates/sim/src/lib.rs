//! Simulation and experiment harness for iterative landmark matching.

pub mod amcl;
pub mod experiments;
pub mod record;
pub mod simulator;

pub use simulator::{SensorModel, SimFrame, SimObservation, TrajectorySpec};
