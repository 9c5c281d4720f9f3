//! Shared data model for the sightwalk pipeline.
//!
//! Everything downstream (scene synthesis, the two networks, the evaluation
//! bench and the interaction service) speaks in terms of the types defined
//! here:
//!
//! - [`RgbdFrame`], [`SemanticMap`] and [`ClassTable`] for sensor grids,
//! - [`ActionLabel`] and [`Bucket`] for walk instructions and evaluation rows,
//! - [`encode_channels`] for the 5-plane network input,
//! - [`aca`] and [`learning_rate`] shared by both trainers,
//! - [`dataset`] and [`checkpoint`] for the on-disk formats.

pub mod checkpoint;
pub mod config;
pub mod dataset;
pub mod encode;
mod error;
pub mod metrics;
pub mod params;
pub mod schedule;
pub mod types;

pub use checkpoint::Checkpoint;
pub use config::TrainConfig;
pub use dataset::{load_dataset, load_frame, save_dataset, Dataset, DatasetManifest, SampleRecord};
pub use encode::{
    encode_channels, encode_depth, resample_nearest, resize_frame_nearest, resize_labels_nearest,
    EncodedInput, DEPTH_MAX_M,
};
pub use error::{Error, Result};
pub use metrics::aca;
pub use params::{ModelParams, ParamArray};
pub use schedule::learning_rate;
pub use types::{
    column_third, ActionLabel, Bucket, ClassEntry, ClassTable, Provenance, RgbdFrame, Sample,
    SemanticMap, Split, Third, MIN_VALID_DEPTH_M,
};
