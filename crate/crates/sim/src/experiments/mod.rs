//! Scripted reproductions of the quantitative experiments.

pub mod bench;
pub mod global;
pub mod heatmap;
pub mod noise;
pub mod trajectory;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment parameters: {0}")]
    Invalid(String),
    #[error("validation failed: {0}")]
    Validation(String),
    #[error(transparent)]
    Sim(#[from] crate::simulator::SimError),
    #[error(transparent)]
    Registration(#[from] ilm_core::registration::RegistrationError),
    #[error(transparent)]
    Robustness(#[from] ilm_core::robustness::RobustnessError),
    #[error(transparent)]
    Fusion(#[from] ilm_core::fusion::FusionError),
}
