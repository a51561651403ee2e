//! Multi-model 3D multi-object tracking core.
//!
//! Tracking-by-detection over LiDAR boxes: distance-aware score
//! conditioning, an Interacting Multiple Model bank over CV, CA, CTRV and
//! CTRA motion, gated track-to-detection assignment, and damping-window
//! trajectory lifecycle management.
//!
//! The crate is `no_std` and only needs `alloc`; file formats, evaluation
//! and the command line live in the `mmtrack` crate.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

pub mod association;
pub mod class;
pub mod error;
pub mod filter;
pub mod geometry;
pub mod imm;
pub mod lifecycle;
pub mod math;
pub mod motion;
pub mod pipeline;
pub mod preprocess;

pub use class::{ObjectClass, PerClass};
pub use error::{Error, Result};
pub use motion::{ModelKind, ModelState, UnifiedState};
pub use pipeline::{FrameOutput, TrackOutput, Tracker, TrackerConfig};
pub use preprocess::Detection;
