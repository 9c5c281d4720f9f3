//! Synthetic RGB-D scenes, the pilot labelling rule and a walk simulator.

pub mod dataset;
mod error;
pub mod generate;
pub mod geometry;
pub mod oracle;
pub mod plan;
pub mod render;
pub mod sim;

pub use dataset::{generate_dataset, generate_dataset_with, BucketCount, Sampling};
pub use error::{Error, Result};
pub use generate::{generate_corridor, generate_scene, generate_scene_with, CorridorConfig, SceneClasses};
pub use geometry::{Pose, Vec2};
pub use oracle::{pilot_oracle, pilot_oracle_with, OracleConfig};
pub use plan::{ObstacleKind, RenderSettings, ScenePlan};
pub use render::{render, render_full, RenderOutput};
pub use sim::{simulate_walk, Policy, StepView, Trajectory, WalkConfig};
