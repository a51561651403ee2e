//! Scene files, synthetic scenarios, CLEAR-style evaluation, ablation
//! sweeps and the `mmtrack` command line around [`mmtrack_core`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod curves;
pub mod error;
pub mod eval;
pub mod run;
pub mod scene;
pub mod sweep;
pub mod synth;

pub use config::{ConfigFile, RunConfig};
pub use error::{AppError, Result};
pub use eval::{evaluate, EvalReport};
pub use run::{track_and_evaluate, track_scene};
pub use scene::{load_scene, load_tracks, write_scene, write_tracks, SceneFile, TrackFile};
pub use synth::{generate_scenario, ScenarioSpec};
