//! Running the tracker over a whole scene.

use mmtrack_core::Tracker;

use crate::config::RunConfig;
use crate::error::Result;
use crate::eval::{self, EvalReport};
use crate::scene::{SceneFile, TrackFile};

/// Tracks every frame of `scene` with a fresh tracker. The step between
/// frames comes from timestamps when they increase, else from
/// `config.default_dt`.
pub fn track_scene(scene: &SceneFile, config: &RunConfig) -> Result<TrackFile> {
    let mut tracker = Tracker::new(config.tracker.clone())?;
    let mut out = TrackFile::new(&scene.header);
    let mut prev: Option<(i64, f64)> = None;
    for frame in &scene.frames {
        let dt = match prev {
            Some((_, t)) if frame.timestamp > t => frame.timestamp - t,
            Some((idx, _)) => config.default_dt * (frame.frame_index - idx) as f64,
            None => config.default_dt,
        };
        prev = Some((frame.frame_index, frame.timestamp));
        let dets = scene.detections(frame)?;
        let output = tracker.process_frame(&dets, frame.frame_index, dt)?;
        out.push(&output, frame.timestamp);
    }
    Ok(out)
}

/// Tracks `scene` and scores the result against its ground truth.
pub fn track_and_evaluate(
    scene: &SceneFile,
    config: &RunConfig,
    match_distance: f64,
) -> Result<(TrackFile, EvalReport)> {
    let tracks = track_scene(scene, config)?;
    let report = eval::evaluate(
        &eval::prediction_frames(&tracks)?,
        &eval::ground_truth_frames(scene)?,
        match_distance,
    )?;
    Ok((tracks, report))
}
