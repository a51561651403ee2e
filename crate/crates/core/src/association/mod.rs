//! Track-to-detection matching: cost construction with per-class gates,
//! and greedy or optimal assignment.
//!
//! The optimal method minimizes the sum of matched costs plus a penalty for
//! every track and detection left unmatched. Each side's penalty is half its
//! class gate, so leaving a pair unmatched costs exactly the gate and any
//! admissible pair is worth matching on its own.

mod lap;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use nalgebra::DMatrix;

use crate::class::{ObjectClass, PerClass};
use crate::error::{Error, Result};
use crate::geometry::{giou, BevBox};
use crate::math::hypot;
use crate::motion::UnifiedState;
use crate::preprocess::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum CostMetric {
    /// Planar distance between centers (m).
    BevCenterDistance,
    /// `1 − GIoU` of the rotated BEV boxes, in `[0, 2)`.
    BevGiou,
}

impl FromStr for CostMetric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bev_center_distance" => Ok(CostMetric::BevCenterDistance),
            "bev_giou" => Ok(CostMetric::BevGiou),
            other => Err(Error::Config(alloc::format!("unknown association metric `{other}`"))),
        }
    }
}

impl fmt::Display for CostMetric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CostMetric::BevCenterDistance => "bev_center_distance",
            CostMetric::BevGiou => "bev_giou",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum AssignMethod {
    Greedy,
    Optimal,
}

impl FromStr for AssignMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "greedy" => Ok(AssignMethod::Greedy),
            "optimal" => Ok(AssignMethod::Optimal),
            other => Err(Error::Config(alloc::format!("unknown assignment method `{other}`"))),
        }
    }
}

/// Metric and admissibility threshold for one class.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Gate {
    pub metric: CostMetric,
    /// Pairs with cost above this are inadmissible.
    pub threshold: f64,
}

/// GIoU gated at 1.2 for vehicles; center distance gated at 2 m for
/// pedestrians, bicycles and motorcycles.
pub fn default_gates() -> PerClass<Gate> {
    let distance = Gate {
        metric: CostMetric::BevCenterDistance,
        threshold: 2.0,
    };
    PerClass::uniform(Gate {
        metric: CostMetric::BevGiou,
        threshold: 1.2,
    })
    .with(ObjectClass::Pedestrian, distance)
    .with(ObjectClass::Bicycle, distance)
    .with(ObjectClass::Motorcycle, distance)
}

/// A predicted track as seen by the association stage.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackView {
    pub class: ObjectClass,
    pub state: UnifiedState,
}

impl TrackView {
    fn bev(&self) -> BevBox {
        BevBox::new(self.state.x, self.state.y, self.state.w, self.state.l, self.state.theta)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostMatrix {
    /// Rows are tracks, columns detections.
    pub costs: DMatrix<f64>,
    pub admissible: DMatrix<bool>,
    /// Cost of leaving each track unmatched.
    pub row_penalty: Vec<f64>,
    /// Cost of leaving each detection unmatched.
    pub col_penalty: Vec<f64>,
}

impl CostMatrix {
    /// All pairs admissible, with penalties large enough that the optimal
    /// method always produces a maximum-cardinality matching.
    pub fn dense(costs: DMatrix<f64>) -> Self {
        let big = 1.0 + costs.iter().map(|c| c.abs()).sum::<f64>();
        let (r, c) = costs.shape();
        CostMatrix {
            admissible: DMatrix::from_element(r, c, true),
            row_penalty: vec![big; r],
            col_penalty: vec![big; c],
            costs,
        }
    }

    pub fn rows(&self) -> usize {
        self.costs.nrows()
    }

    pub fn cols(&self) -> usize {
        self.costs.ncols()
    }

    /// Every cost and penalty multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        CostMatrix {
            costs: &self.costs * factor,
            admissible: self.admissible.clone(),
            row_penalty: self.row_penalty.iter().map(|p| p * factor).collect(),
            col_penalty: self.col_penalty.iter().map(|p| p * factor).collect(),
        }
    }
}

pub fn build_costs(tracks: &[TrackView], dets: &[Detection], gates: &PerClass<Gate>) -> CostMatrix {
    let (n, m) = (tracks.len(), dets.len());
    let mut costs = DMatrix::zeros(n, m);
    let mut admissible = DMatrix::from_element(n, m, false);
    let track_boxes: Vec<BevBox> = tracks.iter().map(TrackView::bev).collect();
    let det_boxes: Vec<BevBox> = dets.iter().map(Detection::bev).collect();
    let mut worst: f64 = 0.0;
    for (i, t) in tracks.iter().enumerate() {
        let gate = gates.get(t.class);
        for (j, d) in dets.iter().enumerate() {
            if d.class != t.class {
                continue;
            }
            let c = match gate.metric {
                CostMetric::BevCenterDistance => hypot(t.state.x - d.center[0], t.state.y - d.center[1]),
                CostMetric::BevGiou => 1.0 - giou(&track_boxes[i], &det_boxes[j]),
            };
            costs[(i, j)] = c;
            if c <= gate.threshold {
                admissible[(i, j)] = true;
                worst = worst.max(c);
            }
        }
    }
    let sentinel = worst + 1.0;
    for i in 0..n {
        for j in 0..m {
            if !admissible[(i, j)] {
                costs[(i, j)] = sentinel.max(costs[(i, j)]);
            }
        }
    }
    CostMatrix {
        costs,
        admissible,
        row_penalty: tracks.iter().map(|t| 0.5 * gates.get(t.class).threshold).collect(),
        col_penalty: dets.iter().map(|d| 0.5 * gates.get(d.class).threshold).collect(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AssociationResult {
    /// `(track, detection)` pairs, sorted by track.
    pub matches: Vec<(usize, usize)>,
    pub unmatched_tracks: Vec<usize>,
    pub unmatched_detections: Vec<usize>,
}

impl AssociationResult {
    fn from_matches(mut matches: Vec<(usize, usize)>, rows: usize, cols: usize) -> Self {
        matches.sort_unstable();
        let mut row_used = vec![false; rows];
        let mut col_used = vec![false; cols];
        for &(r, c) in &matches {
            row_used[r] = true;
            col_used[c] = true;
        }
        AssociationResult {
            matches,
            unmatched_tracks: (0..rows).filter(|&r| !row_used[r]).collect(),
            unmatched_detections: (0..cols).filter(|&c| !col_used[c]).collect(),
        }
    }

    /// Sum of matched costs.
    pub fn matched_cost(&self, costs: &CostMatrix) -> f64 {
        self.matches.iter().map(|&(r, c)| costs.costs[(r, c)]).sum()
    }

    /// Matched costs plus the penalties of everything left unmatched; the
    /// objective the optimal method minimizes.
    pub fn total_cost(&self, costs: &CostMatrix) -> f64 {
        self.matched_cost(costs)
            + self.unmatched_tracks.iter().map(|&r| costs.row_penalty[r]).sum::<f64>()
            + self
                .unmatched_detections
                .iter()
                .map(|&c| costs.col_penalty[c])
                .sum::<f64>()
    }
}

pub fn assign(costs: &CostMatrix, method: AssignMethod) -> AssociationResult {
    match method {
        AssignMethod::Greedy => assign_greedy(costs),
        AssignMethod::Optimal => assign_optimal(costs),
    }
}

fn assign_greedy(costs: &CostMatrix) -> AssociationResult {
    let (n, m) = (costs.rows(), costs.cols());
    let mut pairs: Vec<(f64, usize, usize)> = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if costs.admissible[(i, j)] {
                pairs.push((costs.costs[(i, j)], i, j));
            }
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    let mut row_used = vec![false; n];
    let mut col_used = vec![false; m];
    let mut matches = Vec::new();
    for (_, i, j) in pairs {
        if !row_used[i] && !col_used[j] {
            row_used[i] = true;
            col_used[j] = true;
            matches.push((i, j));
        }
    }
    AssociationResult::from_matches(matches, n, m)
}

fn assign_optimal(costs: &CostMatrix) -> AssociationResult {
    let (n, m) = (costs.rows(), costs.cols());
    if n == 0 || m == 0 {
        return AssociationResult::from_matches(Vec::new(), n, m);
    }
    // Padded (n+m)² problem: real block, "track unmatched" diagonal on the
    // right, "detection unmatched" diagonal below, zeros in the corner.
    let size = n + m;
    let mut padded = vec![f64::INFINITY; size * size];
    for i in 0..n {
        for j in 0..m {
            if costs.admissible[(i, j)] {
                padded[i * size + j] = costs.costs[(i, j)];
            }
        }
        padded[i * size + m + i] = costs.row_penalty[i];
    }
    for j in 0..m {
        padded[(n + j) * size + j] = costs.col_penalty[j];
        for k in 0..n {
            padded[(n + j) * size + m + k] = 0.0;
        }
    }
    let solution = lap::solve(size, &padded);
    let matches = (0..n)
        .filter_map(|i| {
            let j = solution[i];
            (j < m && costs.admissible[(i, j)]).then_some((i, j))
        })
        .collect();
    AssociationResult::from_matches(matches, n, m)
}
