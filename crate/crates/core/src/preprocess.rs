//! Detection conditioning: distance-based score enhancement (DBSE), the
//! per-class score filter, and greedy rotated-box NMS, applied in that
//! order by [`preprocess`].

use alloc::vec::Vec;

use crate::class::{ObjectClass, PerClass};
use crate::error::{Error, Result};
use crate::geometry::{self, BevBox};
use crate::math::{exp, sqrt};

/// One detector box in the global frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Box center (m).
    pub center: [f64; 3],
    /// Width, length, height (m).
    pub extent: [f64; 3],
    pub yaw: f64,
    pub velocity: Option<[f64; 2]>,
    pub score: f64,
    pub class: ObjectClass,
    /// Position of the LiDAR that produced this frame.
    pub sensor_origin: Option<[f64; 3]>,
}

impl Detection {
    pub fn bev(&self) -> BevBox {
        BevBox::new(self.center[0], self.center[1], self.extent[0], self.extent[1], self.yaw)
    }

    /// Euclidean distance from the sensor, if its origin is known.
    pub fn range(&self) -> Option<f64> {
        self.sensor_origin.map(|o| {
            let d: f64 = (0..3).map(|i| (self.center[i] - o[i]) * (self.center[i] - o[i])).sum();
            sqrt(d)
        })
    }
}

/// Distance weighting function for one class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum DbseFunction {
    /// `d^-α + β`
    Power { alpha: f64, beta: f64 },
    /// `exp(-d/α) + β`
    Exponential { alpha: f64, beta: f64 },
    #[default]
    None,
}

impl DbseFunction {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DbseFunction::Power { alpha, beta } | DbseFunction::Exponential { alpha, beta } => {
                if !(alpha > 0.0) || !(beta >= 0.0) {
                    return Err(Error::Config(alloc::format!(
                        "DBSE needs alpha > 0 and beta >= 0 (got {alpha}, {beta})"
                    )));
                }
                Ok(())
            }
            DbseFunction::None => Ok(()),
        }
    }

    pub fn is_enabled(&self) -> bool {
        !matches!(self, DbseFunction::None)
    }
}

/// Canonical per-class weighting: power(0.01, 0.1) for car and trailer,
/// exponential(70, 0.1) for bus, exponential(90, 0.2) for bicycle.
pub fn default_dbse() -> PerClass<DbseFunction> {
    let power = DbseFunction::Power { alpha: 0.01, beta: 0.1 };
    PerClass::uniform(DbseFunction::None)
        .with(ObjectClass::Car, power)
        .with(ObjectClass::Trailer, power)
        .with(ObjectClass::Bus, DbseFunction::Exponential { alpha: 70.0, beta: 0.1 })
        .with(
            ObjectClass::Bicycle,
            DbseFunction::Exponential { alpha: 90.0, beta: 0.2 },
        )
}

pub fn dbse_weight(function: &DbseFunction, d: f64) -> Result<f64> {
    if !(d > 0.0) {
        return Err(Error::Domain {
            name: "distance",
            value: d,
        });
    }
    Ok(match *function {
        DbseFunction::Power { alpha, beta } => libm::pow(d, -alpha) + beta,
        DbseFunction::Exponential { alpha, beta } => exp(-d / alpha) + beta,
        DbseFunction::None => 1.0,
    })
}

/// Ranges below this are raised to it before weighting.
pub const MIN_DBSE_RANGE: f64 = 0.1;

/// Multiplies each score by its class weight at the detection's sensor
/// range (at least [`MIN_DBSE_RANGE`]). Enhanced scores are not clamped to 1.
pub fn dbse_enhance(dets: &[Detection], params: &PerClass<DbseFunction>) -> Result<Vec<Detection>> {
    dets.iter()
        .map(|det| {
            let function = params.get(det.class);
            if !function.is_enabled() {
                return Ok(det.clone());
            }
            let d = det.range().ok_or_else(|| {
                Error::Config(alloc::format!(
                    "DBSE is enabled for {} but the detection has no sensor origin",
                    det.class
                ))
            })?;
            let mut out = det.clone();
            out.score *= dbse_weight(function, d.max(MIN_DBSE_RANGE))?;
            Ok(out)
        })
        .collect()
}

pub fn score_filter(dets: &[Detection], thresholds: &PerClass<f64>) -> Vec<Detection> {
    dets.iter()
        .filter(|d| d.score >= *thresholds.get(d.class))
        .cloned()
        .collect()
}

/// Greedy per-class NMS on BEV IoU. Candidates are visited by descending
/// score, then ascending sensor range, then input order; a candidate is
/// dropped when its IoU with a kept box of the same class exceeds the
/// class threshold. Survivors keep their input order.
pub fn nms(dets: &[Detection], iou_threshold: &PerClass<f64>) -> Vec<Detection> {
    let mut order: Vec<usize> = (0..dets.len()).collect();
    order.sort_by(|&a, &b| {
        let (da, db) = (&dets[a], &dets[b]);
        db.score
            .total_cmp(&da.score)
            .then_with(|| {
                let ra = da.range().unwrap_or(0.0);
                let rb = db.range().unwrap_or(0.0);
                ra.total_cmp(&rb)
            })
            .then(a.cmp(&b))
    });
    let boxes: Vec<BevBox> = dets.iter().map(Detection::bev).collect();
    let mut kept: Vec<usize> = Vec::new();
    for &i in &order {
        let threshold = *iou_threshold.get(dets[i].class);
        let suppressed = kept
            .iter()
            .any(|&k| dets[k].class == dets[i].class && geometry::iou(&boxes[k], &boxes[i]) > threshold);
        if !suppressed {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept.into_iter().map(|i| dets[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreprocessConfig {
    pub dbse: PerClass<DbseFunction>,
    pub score_threshold: PerClass<f64>,
    pub nms_iou: PerClass<f64>,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            dbse: default_dbse(),
            score_threshold: PerClass::uniform(0.16),
            nms_iou: PerClass::uniform(0.1),
        }
    }
}

/// DBSE, then score filter, then NMS.
pub fn preprocess(dets: &[Detection], config: &PreprocessConfig) -> Result<Vec<Detection>> {
    let enhanced = dbse_enhance(dets, &config.dbse)?;
    let filtered = score_filter(&enhanced, &config.score_threshold);
    Ok(nms(&filtered, &config.nms_iou))
}
