//! 2D landmark localization by iterative landmark matching (ILM).
//!
//! The pipeline projects body-frame landmark detections into the world with a
//! pose guess, associates them one-to-one with an a-priori field map by solving
//! a linear assignment problem, re-estimates the pose in closed form, and
//! repeats until the pose stops moving. Outlier rejection, multi-hypothesis
//! initialization and filter-based fusion with odometry sit on top.

pub mod assignment;
pub mod field_map;
pub mod fusion;
pub mod geometry;
pub mod pose_estimation;
pub mod registration;
pub mod robustness;
pub mod rng;

pub use assignment::{Assignment, CostMatrix, MatchStrategy, Matching};
pub use field_map::{FieldMap, Landmark, LandmarkClass};
pub use geometry::{Point2, Pose2D};
pub use pose_estimation::{Estimator, PoseEstimate};
pub use registration::{RegistrationConfig, RegistrationError, RegistrationResult};


