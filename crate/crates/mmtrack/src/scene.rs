//! Line-delimited JSON scene and trajectory files.
//!
//! A scene file starts with a header record followed by one record per
//! frame:
//!
//! ```text
//! {"format":"mmtrack-scene","version":1,"scene_id":"s0","classes":["car"],"frame_rate":2.0}
//! {"frame_index":0,"timestamp":0.0,"sensor_origin":[0,0,0],"detections":[...],"ground_truth":[...]}
//! ```
//!
//! Trajectory files use the same layout with `"format":"mmtrack-tracks"`
//! and a `tracks` list per frame.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use mmtrack_core::{Detection, FrameOutput, ObjectClass};
use serde::{de::DeserializeOwned, Deserialize, Serialize};

use crate::error::{AppError, Result};

pub const SCENE_FORMAT: &str = "mmtrack-scene";
pub const TRACKS_FORMAT: &str = "mmtrack-tracks";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneHeader {
    pub format: String,
    pub version: u32,
    pub scene_id: String,
    /// Class names; records refer to classes by index into this table.
    pub classes: Vec<String>,
    /// Keyframes per second.
    pub frame_rate: f64,
}

impl SceneHeader {
    pub fn new(format: &str, scene_id: impl Into<String>, classes: Vec<String>, frame_rate: f64) -> Self {
        SceneHeader {
            format: format.to_string(),
            version: FORMAT_VERSION,
            scene_id: scene_id.into(),
            classes,
            frame_rate,
        }
    }

    pub fn class(&self, id: u32) -> Option<ObjectClass> {
        self.classes.get(id as usize).and_then(|n| n.parse().ok())
    }

    pub fn class_id(&self, class: ObjectClass) -> Option<u32> {
        self.classes
            .iter()
            .position(|n| n.parse::<ObjectClass>().ok() == Some(class))
            .map(|i| i as u32)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectionRecord {
    pub center: [f64; 3],
    /// Width, length, height.
    pub extent: [f64; 3],
    pub yaw: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub velocity: Option<[f64; 2]>,
    pub score: f64,
    pub class_id: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroundTruthBox {
    pub track_id: u64,
    pub class_id: u32,
    pub center: [f64; 3],
    pub extent: [f64; 3],
    pub yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Frame {
    pub frame_index: i64,
    pub timestamp: f64,
    pub sensor_origin: [f64; 3],
    pub detections: Vec<DetectionRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ground_truth: Option<Vec<GroundTruthBox>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneFile {
    pub header: SceneHeader,
    pub frames: Vec<Frame>,
}

impl SceneFile {
    pub fn has_ground_truth(&self) -> bool {
        self.frames.iter().any(|f| f.ground_truth.is_some())
    }

    /// Detections of `frame` as core detections.
    pub fn detections(&self, frame: &Frame) -> Result<Vec<Detection>> {
        frame
            .detections
            .iter()
            .map(|d| {
                let class = self.header.class(d.class_id).ok_or_else(|| {
                    AppError::Data(format!("frame {}: unknown class id {}", frame.frame_index, d.class_id))
                })?;
                Ok(Detection {
                    center: d.center,
                    extent: d.extent,
                    yaw: d.yaw,
                    velocity: d.velocity,
                    score: d.score,
                    class,
                    sensor_origin: Some(frame.sensor_origin),
                })
            })
            .collect()
    }

    /// Checks the invariants enforced at load time.
    pub fn validate(&self) -> std::result::Result<(), (Option<usize>, String)> {
        check_header(&self.header, SCENE_FORMAT).map_err(|m| (None, m))?;
        let mut prev: Option<i64> = None;
        for (k, frame) in self.frames.iter().enumerate() {
            if let Some(p) = prev {
                if frame.frame_index <= p {
                    return Err((
                        Some(k),
                        format!("frame {} is out of order (follows frame {p})", frame.frame_index),
                    ));
                }
            }
            prev = Some(frame.frame_index);
            let ids = frame
                .detections
                .iter()
                .map(|d| d.class_id)
                .chain(frame.ground_truth.iter().flatten().map(|g| g.class_id));
            for id in ids {
                if self.header.class(id).is_none() {
                    return Err((
                        Some(k),
                        format!("frame {}: class id {id} is not in the class table", frame.frame_index),
                    ));
                }
            }
            for d in &frame.detections {
                if d.extent.iter().any(|&e| !(e > 0.0)) {
                    return Err((
                        Some(k),
                        format!("frame {}: detection extent must be positive", frame.frame_index),
                    ));
                }
                if !(0.0..=1.0).contains(&d.score) {
                    return Err((
                        Some(k),
                        format!(
                            "frame {}: detection score {} outside [0, 1]",
                            frame.frame_index, d.score
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}

fn check_header(header: &SceneHeader, format: &str) -> std::result::Result<(), String> {
    if header.format != format {
        return Err(format!("expected format `{format}`, found `{}`", header.format));
    }
    if header.version != FORMAT_VERSION {
        return Err(format!("unsupported version {}", header.version));
    }
    for name in &header.classes {
        if name.parse::<ObjectClass>().is_err() {
            return Err(format!("unknown class name `{name}` in class table"));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackRecord {
    pub id: u64,
    pub class_id: u32,
    pub center: [f64; 3],
    pub extent: [f64; 3],
    pub yaw: f64,
    pub velocity: [f64; 3],
    pub dw_score: f64,
    pub detection_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrackFrame {
    pub frame_index: i64,
    pub timestamp: f64,
    pub tracks: Vec<TrackRecord>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackFile {
    pub header: SceneHeader,
    pub frames: Vec<TrackFrame>,
}

impl TrackFile {
    pub fn new(scene: &SceneHeader) -> Self {
        TrackFile {
            header: SceneHeader::new(
                TRACKS_FORMAT,
                scene.scene_id.clone(),
                scene.classes.clone(),
                scene.frame_rate,
            ),
            frames: Vec::new(),
        }
    }

    /// Appends one tracker output frame. Classes missing from the table are
    /// added to it.
    pub fn push(&mut self, output: &FrameOutput, timestamp: f64) {
        let tracks = output
            .tracks
            .iter()
            .map(|t| {
                let class_id = match self.header.class_id(t.class) {
                    Some(id) => id,
                    None => {
                        self.header.classes.push(t.class.name().to_string());
                        (self.header.classes.len() - 1) as u32
                    }
                };
                let s = &t.state;
                TrackRecord {
                    id: t.id,
                    class_id,
                    center: [s.x, s.y, s.z],
                    extent: [s.w, s.l, s.h],
                    yaw: s.theta,
                    velocity: [s.vx, s.vy, s.vz],
                    dw_score: t.dw_score,
                    detection_score: t.detection_score,
                }
            })
            .collect();
        self.frames.push(TrackFrame {
            frame_index: output.frame_index,
            timestamp,
            tracks,
        });
    }
}

pub fn load_scene(path: impl AsRef<Path>) -> Result<SceneFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_scene(BufReader::new(file), path)
}

pub fn read_scene(reader: impl BufRead, path: &Path) -> Result<SceneFile> {
    let (header, frames, lines) = read_records::<Frame>(reader, path)?;
    let scene = SceneFile { header, frames };
    scene.validate().map_err(|(frame, message)| AppError::Load {
        path: path.to_path_buf(),
        line: frame.map(|k| lines[k]).unwrap_or(1),
        message,
    })?;
    Ok(scene)
}

pub fn write_scene(path: impl AsRef<Path>, scene: &SceneFile) -> Result<()> {
    write_records(path.as_ref(), &scene.header, &scene.frames)
}

pub fn load_tracks(path: impl AsRef<Path>) -> Result<TrackFile> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| AppError::io(path, e))?;
    read_tracks(BufReader::new(file), path)
}

pub fn read_tracks(reader: impl BufRead, path: &Path) -> Result<TrackFile> {
    let (header, frames, lines) = read_records::<TrackFrame>(reader, path)?;
    let load_err = |line: usize, message: String| AppError::Load {
        path: path.to_path_buf(),
        line,
        message,
    };
    check_header(&header, TRACKS_FORMAT).map_err(|m| load_err(1, m))?;
    for (k, f) in frames.iter().enumerate() {
        if k > 0 && f.frame_index <= frames[k - 1].frame_index {
            return Err(load_err(lines[k], format!("frame {} is out of order", f.frame_index)));
        }
        if let Some(t) = f.tracks.iter().find(|t| header.class(t.class_id).is_none()) {
            return Err(load_err(
                lines[k],
                format!(
                    "frame {}: class id {} is not in the class table",
                    f.frame_index, t.class_id
                ),
            ));
        }
    }
    Ok(TrackFile { header, frames })
}

pub fn write_tracks(path: impl AsRef<Path>, tracks: &TrackFile) -> Result<()> {
    write_records(path.as_ref(), &tracks.header, &tracks.frames)
}

/// Serializes a header and records as JSON lines into a string.
pub fn to_jsonl<R: Serialize>(header: &SceneHeader, records: &[R]) -> String {
    let mut out = serde_json::to_string(header).expect("header serializes");
    out.push('\n');
    for r in records {
        out.push_str(&serde_json::to_string(r).expect("record serializes"));
        out.push('\n');
    }
    out
}

fn write_records<R: Serialize>(path: &Path, header: &SceneHeader, records: &[R]) -> Result<()> {
    let file = File::create(path).map_err(|e| AppError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(to_jsonl(header, records).as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| AppError::io(path, e))
}

/// Returns the header, the records, and each record's 1-based line number.
fn read_records<R: DeserializeOwned>(reader: impl BufRead, path: &Path) -> Result<(SceneHeader, Vec<R>, Vec<usize>)> {
    let mut header = None;
    let mut records = Vec::new();
    let mut lines = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line_no = k + 1;
        let line = line.map_err(|e| AppError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let load_err = |e: serde_json::Error| AppError::Load {
            path: path.to_path_buf(),
            line: line_no,
            message: e.to_string(),
        };
        if header.is_none() {
            header = Some(serde_json::from_str::<SceneHeader>(&line).map_err(load_err)?);
        } else {
            records.push(serde_json::from_str::<R>(&line).map_err(load_err)?);
            lines.push(line_no);
        }
    }
    let header = header.ok_or_else(|| AppError::Load {
        path: path.to_path_buf(),
        line: 1,
        message: "empty file (missing header)".into(),
    })?;
    Ok((header, records, lines))
}
