//! CLEAR-style evaluation of tracker output against ground truth.
//!
//! Each frame is matched independently: per class, a minimum-cost
//! maximum-cardinality assignment on BEV center distance, with pairs
//! farther apart than the match gate forbidden. An identity switch is
//! counted when a ground-truth track is matched to a different prediction
//! id than at its previous matched frame.

use std::collections::{BTreeMap, BTreeSet};

use mmtrack_core::association::{self, AssignMethod, CostMatrix};
use mmtrack_core::{Error as CoreError, ObjectClass};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::scene::{SceneFile, TrackFile};

/// Default center-distance gate (m).
pub const DEFAULT_MATCH_DISTANCE: f64 = 2.0;
/// Recall operating points used by [`amota`].
pub const AMOTA_RECALL_POINTS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalBox {
    pub id: u64,
    pub class: ObjectClass,
    pub x: f64,
    pub y: f64,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalFrame {
    pub frame_index: i64,
    pub boxes: Vec<EvalBox>,
}

impl EvalFrame {
    pub fn new(frame_index: i64, boxes: Vec<EvalBox>) -> Self {
        EvalFrame { frame_index, boxes }
    }
}

/// Tracker output as evaluation frames; the score is the last detection score.
pub fn prediction_frames(tracks: &TrackFile) -> Result<Vec<EvalFrame>> {
    tracks
        .frames
        .iter()
        .map(|f| {
            let boxes = f
                .tracks
                .iter()
                .map(|t| {
                    let class = tracks.header.class(t.class_id).ok_or_else(|| {
                        AppError::Data(format!("frame {}: unknown class id {}", f.frame_index, t.class_id))
                    })?;
                    Ok(EvalBox {
                        id: t.id,
                        class,
                        x: t.center[0],
                        y: t.center[1],
                        score: t.detection_score,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(EvalFrame::new(f.frame_index, boxes))
        })
        .collect()
}

pub fn ground_truth_frames(scene: &SceneFile) -> Result<Vec<EvalFrame>> {
    scene
        .frames
        .iter()
        .map(|f| {
            let gt = f
                .ground_truth
                .as_ref()
                .ok_or_else(|| AppError::Data(format!("frame {} has no ground truth", f.frame_index)))?;
            let boxes = gt
                .iter()
                .map(|g| {
                    let class = scene.header.class(g.class_id).ok_or_else(|| {
                        AppError::Data(format!("frame {}: unknown class id {}", f.frame_index, g.class_id))
                    })?;
                    Ok(EvalBox {
                        id: g.track_id,
                        class,
                        x: g.center[0],
                        y: g.center[1],
                        score: 1.0,
                    })
                })
                .collect::<Result<_>>()?;
            Ok(EvalFrame::new(f.frame_index, boxes))
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub ids: u64,
    pub gt: u64,
    /// Sum of TP center distances (m).
    pub distance_sum: f64,
}

impl Counts {
    pub fn add(&mut self, o: &Counts) {
        self.tp += o.tp;
        self.fp += o.fp;
        self.fn_ += o.fn_;
        self.ids += o.ids;
        self.gt += o.gt;
        self.distance_sum += o.distance_sum;
    }

    /// `1 − (FP + FN + IDS) / GT`; `None` without ground truth.
    pub fn mota(&self) -> Option<f64> {
        (self.gt > 0).then(|| 1.0 - (self.fp + self.fn_ + self.ids) as f64 / self.gt as f64)
    }

    pub fn mean_position_error(&self) -> Option<f64> {
        (self.tp > 0).then(|| self.distance_sum / self.tp as f64)
    }

    /// `FN / (TP + FN)`.
    pub fn x1(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.fn_ as f64 / d as f64)
    }

    /// `FP / (TP + FN)`.
    pub fn x2(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0).then(|| self.fp as f64 / d as f64)
    }

    pub fn recall(&self) -> Option<f64> {
        (self.gt > 0).then(|| self.tp as f64 / self.gt as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    #[serde(flatten)]
    pub counts: Counts,
    pub mota: Option<f64>,
    pub mean_position_error: Option<f64>,
    pub x1: Option<f64>,
    pub x2: Option<f64>,
}

impl From<Counts> for Metrics {
    fn from(counts: Counts) -> Self {
        Metrics {
            mota: counts.mota(),
            mean_position_error: counts.mean_position_error(),
            x1: counts.x1(),
            x2: counts.x2(),
            counts,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub match_distance: f64,
    pub frames: usize,
    pub overall: Metrics,
    /// Keyed by class name; only classes present in either input.
    pub per_class: BTreeMap<String, Metrics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amota: Option<f64>,
}

impl EvalReport {
    pub fn counts(&self) -> &Counts {
        &self.overall.counts
    }

    /// Human-readable table.
    pub fn to_text(&self) -> String {
        let fmt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4}"));
        let mut out = format!(
            "{:<12} {:>7} {:>7} {:>7} {:>5} {:>7} {:>8} {:>8} {:>8} {:>8}\n",
            "class", "TP", "FP", "FN", "IDS", "GT", "MOTA", "MPE", "X1", "X2"
        );
        let rows = self
            .per_class
            .iter()
            .map(|(k, v)| (k.as_str(), v))
            .chain(std::iter::once(("overall", &self.overall)));
        for (name, m) in rows {
            let c = &m.counts;
            out.push_str(&format!(
                "{:<12} {:>7} {:>7} {:>7} {:>5} {:>7} {:>8} {:>8} {:>8} {:>8}\n",
                name,
                c.tp,
                c.fp,
                c.fn_,
                c.ids,
                c.gt,
                fmt(m.mota),
                fmt(m.mean_position_error),
                fmt(m.x1),
                fmt(m.x2)
            ));
        }
        if let Some(a) = self.amota {
            out.push_str(&format!("AMOTA {a:.4}\n"));
        }
        out
    }
}

/// Evaluates `predicted` against `truth`. Both must cover the same frame
/// indices; their order does not matter.
pub fn evaluate(predicted: &[EvalFrame], truth: &[EvalFrame], match_distance: f64) -> Result<EvalReport> {
    if !(match_distance > 0.0) {
        return Err(AppError::Config(format!(
            "match distance must be positive (got {match_distance})"
        )));
    }
    let pred = index_frames(predicted, "prediction")?;
    let gt = index_frames(truth, "ground truth")?;
    let pk: BTreeSet<i64> = pred.keys().copied().collect();
    let gk: BTreeSet<i64> = gt.keys().copied().collect();
    if pk != gk {
        let missing: Vec<_> = gk.symmetric_difference(&pk).take(5).collect();
        return Err(CoreError::Contract(format!(
            "prediction and ground-truth frames differ (e.g. frame {missing:?})"
        ))
        .into());
    }

    let mut per_class: BTreeMap<ObjectClass, Counts> = BTreeMap::new();
    let mut last_match: BTreeMap<(ObjectClass, u64), u64> = BTreeMap::new();
    for (frame, gts) in &gt {
        let preds = &pred[frame];
        let classes: BTreeSet<ObjectClass> = gts.iter().chain(preds.iter()).map(|b| b.class).collect();
        for class in classes {
            let g: Vec<&EvalBox> = gts.iter().filter(|b| b.class == class).collect();
            let p: Vec<&EvalBox> = preds.iter().filter(|b| b.class == class).collect();
            let counts = per_class.entry(class).or_default();
            counts.gt += g.len() as u64;
            let matches = match_frame(&g, &p, match_distance);
            counts.tp += matches.len() as u64;
            counts.fn_ += (g.len() - matches.len()) as u64;
            counts.fp += (p.len() - matches.len()) as u64;
            for (gi, pi, d) in matches {
                counts.distance_sum += d;
                let key = (class, g[gi].id);
                if let Some(prev) = last_match.insert(key, p[pi].id) {
                    if prev != p[pi].id {
                        counts.ids += 1;
                    }
                }
            }
        }
    }

    let mut overall = Counts::default();
    for c in per_class.values() {
        overall.add(c);
    }
    Ok(EvalReport {
        match_distance,
        frames: gt.len(),
        overall: overall.into(),
        per_class: per_class
            .into_iter()
            .map(|(k, v)| (k.name().to_string(), v.into()))
            .collect(),
        amota: None,
    })
}

fn index_frames<'a>(frames: &'a [EvalFrame], what: &str) -> Result<BTreeMap<i64, &'a [EvalBox]>> {
    let mut map = BTreeMap::new();
    for f in frames {
        if map.insert(f.frame_index, f.boxes.as_slice()).is_some() {
            return Err(AppError::Data(format!("{what}: duplicate frame {}", f.frame_index)));
        }
    }
    Ok(map)
}

/// Returns `(gt, prediction, distance)` triples.
fn match_frame(gt: &[&EvalBox], pred: &[&EvalBox], gate: f64) -> Vec<(usize, usize, f64)> {
    if gt.is_empty() || pred.is_empty() {
        return Vec::new();
    }
    let (n, m) = (gt.len(), pred.len());
    let costs = DMatrix::from_fn(n, m, |i, j| (gt[i].x - pred[j].x).hypot(gt[i].y - pred[j].y));
    let admissible = costs.map(|d| d <= gate);
    // Each extra match saves more than any total distance can cost.
    let penalty = gate * (n + m + 1) as f64;
    let matrix = CostMatrix {
        costs,
        admissible,
        row_penalty: vec![penalty; n],
        col_penalty: vec![penalty; m],
    };
    association::assign(&matrix, AssignMethod::Optimal)
        .matches
        .into_iter()
        .map(|(i, j)| (i, j, matrix.costs[(i, j)]))
        .collect()
}

/// Average over [`AMOTA_RECALL_POINTS`] recall targets of the clamped MOTA
/// at the highest score threshold reaching that recall. Unreachable
/// targets contribute zero.
pub fn amota(predicted: &[EvalFrame], truth: &[EvalFrame], match_distance: f64) -> Result<f64> {
    let mut scores: Vec<f64> = predicted.iter().flat_map(|f| f.boxes.iter().map(|b| b.score)).collect();
    scores.sort_by(|a, b| b.total_cmp(a));
    scores.dedup();
    const MAX_THRESHOLDS: usize = 200;
    if scores.len() > MAX_THRESHOLDS {
        let step = scores.len() as f64 / MAX_THRESHOLDS as f64;
        let last = *scores.last().unwrap();
        scores = (0..MAX_THRESHOLDS)
            .map(|k| scores[(k as f64 * step) as usize])
            .collect();
        scores.push(last);
    }

    // (recall, clamped MOTA) per threshold, thresholds descending.
    let mut points = Vec::with_capacity(scores.len());
    for &s in &scores {
        let filtered: Vec<EvalFrame> = predicted
            .iter()
            .map(|f| {
                EvalFrame::new(
                    f.frame_index,
                    f.boxes.iter().filter(|b| b.score >= s).copied().collect(),
                )
            })
            .collect();
        let r = evaluate(&filtered, truth, match_distance)?;
        let c = r.counts();
        points.push((c.recall().unwrap_or(0.0), c.mota().unwrap_or(0.0).max(0.0)));
    }

    let total: f64 = (1..=AMOTA_RECALL_POINTS)
        .map(|k| {
            let target = k as f64 / AMOTA_RECALL_POINTS as f64;
            points
                .iter()
                .find(|(r, _)| *r >= target - 1e-12)
                .map_or(0.0, |&(_, m)| m)
        })
        .sum();
    Ok(total / AMOTA_RECALL_POINTS as f64)
}
