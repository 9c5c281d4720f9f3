//! The two learned components and the depth-only baseline.
//!
//! - [`segnet`]: RGB + depth encoder-decoder producing per-pixel classes.
//! - [`navnet`]: channel-configurable classifier emitting a walk instruction.
//! - [`depth_t`]: the block heuristic that walks toward the deepest column.
//!
//! Everything runs in f64 on the CPU. Training is single-threaded and fully
//! determined by the config seed.

pub mod checkpoint;
pub mod depth_t;
mod error;
mod init;
pub mod navnet;
pub mod nn;
pub mod segnet;
pub mod train;

pub use depth_t::depth_t_instruction;
pub use error::{Error, Result};
pub use navnet::{nav_loss, predict_instruction, InstructionResult, NavArch, NavMode, NavModel};
pub use segnet::{seg_loss, segment, SegArch, SegModel};
pub use train::{train_navigation, train_segmentation, SemanticSource};
