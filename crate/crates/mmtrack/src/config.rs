//! TOML pipeline configuration.
//!
//! Every key is optional; an empty file reproduces [`TrackerConfig::default`].
//!
//! ```toml
//! [tracker]
//! assignment = "optimal"
//! default_dt = 0.5
//!
//! [imm]
//! models = ["CV", "CA", "CTRV", "CTRA"]
//! stay = 0.91
//!
//! [noise]
//! position = 0.1
//!
//! [ablation]
//! dbse = true
//! imm = true
//! dw = true
//!
//! [defaults]
//! score_threshold = 0.16
//!
//! [classes.car]
//! motion = "imm"
//! dbse = { kind = "power", alpha = 0.01, beta = 0.1 }
//! management = "dw"
//! theta_active = 0.3
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use mmtrack_core::association::{AssignMethod, CostMetric, Gate};
use mmtrack_core::filter::{NoiseConfig, NoiseLevels};
use mmtrack_core::imm::ImmConfig;
use mmtrack_core::lifecycle::{CountConfig, DampingConfig, Management};
use mmtrack_core::pipeline::MotionRouting;
use mmtrack_core::preprocess::DbseFunction;
use mmtrack_core::{ModelKind, ObjectClass, TrackerConfig};
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};

/// Frame interval used when a scene has no usable timestamps.
pub const DEFAULT_DT: f64 = 0.5;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub tracker: TrackerSection,
    pub imm: ImmSection,
    pub noise: NoiseSection,
    pub ablation: Ablation,
    pub defaults: ClassSection,
    pub classes: BTreeMap<String, ClassSection>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerSection {
    pub assignment: Option<AssignMethod>,
    pub birth_tentative: Option<bool>,
    pub report_lambda: Option<f64>,
    pub default_dt: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ImmSection {
    pub models: Option<Vec<ModelKind>>,
    /// Diagonal of a sticky Markov matrix; ignored when `markov` is given.
    pub stay: Option<f64>,
    /// Row-stochastic transition matrix, row `i` = from model `i`.
    pub markov: Option<Vec<Vec<f64>>>,
    pub initial: Option<Vec<f64>>,
    pub mixing: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub position: Option<f64>,
    pub extent: Option<f64>,
    pub heading: Option<f64>,
    pub velocity: Option<f64>,
    pub acceleration: Option<f64>,
    pub turn_rate: Option<f64>,
    pub meas_position: Option<f64>,
    pub meas_extent: Option<f64>,
    pub meas_heading: Option<f64>,
    pub meas_velocity: Option<f64>,
    pub init_velocity: Option<f64>,
    pub init_acceleration: Option<f64>,
    pub init_turn_rate: Option<f64>,
    pub observe_velocity: Option<bool>,
}

impl NoiseSection {
    fn apply(&self, levels: &mut NoiseLevels, observe_velocity: &mut bool) {
        let set = |dst: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *dst = v;
            }
        };
        set(&mut levels.position, self.position);
        set(&mut levels.extent, self.extent);
        set(&mut levels.heading, self.heading);
        set(&mut levels.velocity, self.velocity);
        set(&mut levels.acceleration, self.acceleration);
        set(&mut levels.turn_rate, self.turn_rate);
        set(&mut levels.meas_position, self.meas_position);
        set(&mut levels.meas_extent, self.meas_extent);
        set(&mut levels.meas_heading, self.meas_heading);
        set(&mut levels.meas_velocity, self.meas_velocity);
        set(&mut levels.init_velocity, self.init_velocity);
        set(&mut levels.init_acceleration, self.init_acceleration);
        set(&mut levels.init_turn_rate, self.init_turn_rate);
        if let Some(v) = self.observe_velocity {
            *observe_velocity = v;
        }
    }
}

/// Module toggles applied after all per-class settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ablation {
    /// When false, DBSE is disabled for every class.
    pub dbse: bool,
    /// When false, IMM-routed classes use `fallback_model` alone.
    pub imm: bool,
    /// When false, damping-window classes switch to count-based management.
    pub dw: bool,
    pub fallback_model: ModelKind,
}

impl Default for Ablation {
    fn default() -> Self {
        Ablation {
            dbse: true,
            imm: true,
            dw: true,
            fallback_model: ModelKind::Ctra,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ManagementKind {
    Dw,
    Count,
}

/// `"imm"` or a single model name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Routing(pub MotionRouting);

impl Serialize for Routing {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self.0 {
            MotionRouting::Imm => s.serialize_str("imm"),
            MotionRouting::Single(k) => s.serialize_str(k.name()),
        }
    }
}

impl<'de> Deserialize<'de> for Routing {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.eq_ignore_ascii_case("imm") {
            return Ok(Routing(MotionRouting::Imm));
        }
        s.parse::<ModelKind>()
            .map(|k| Routing(MotionRouting::Single(k)))
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GateSection {
    pub metric: CostMetric,
    pub threshold: f64,
}

/// Per-class settings; also used for `[defaults]`.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClassSection {
    pub motion: Option<Routing>,
    pub dbse: Option<DbseFunction>,
    pub score_threshold: Option<f64>,
    pub nms_iou: Option<f64>,
    pub gate: Option<GateSection>,
    pub management: Option<ManagementKind>,
    pub lambda: Option<f64>,
    pub theta_active: Option<f64>,
    pub theta_tentative: Option<f64>,
    pub max_coast: Option<u32>,
    pub confirm_hits: Option<u32>,
    pub max_misses: Option<u32>,
    pub noise: Option<NoiseSection>,
}

/// A resolved configuration ready to drive a [`mmtrack_core::Tracker`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub tracker: TrackerConfig,
    pub default_dt: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            tracker: TrackerConfig::default(),
            default_dt: DEFAULT_DT,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| AppError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| AppError::io(path, e))?;
        toml::from_str(&text).map_err(|e| AppError::Config(format!("{}: {e}", path.display())))
    }

    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = TrackerConfig::default();
        let t = &self.tracker;
        if let Some(a) = t.assignment {
            cfg.assignment = a;
        }
        if let Some(b) = t.birth_tentative {
            cfg.birth_tentative = b;
        }
        if let Some(l) = t.report_lambda {
            cfg.report_lambda = l;
        }
        let default_dt = t.default_dt.unwrap_or(DEFAULT_DT);
        if !(default_dt > 0.0) {
            return Err(AppError::Config("tracker.default_dt must be positive".into()));
        }

        cfg.imm = self.imm.resolve()?;

        let mut levels = NoiseLevels::default();
        let mut observe_velocity = false;
        self.noise.apply(&mut levels, &mut observe_velocity);
        if let Some(n) = &self.defaults.noise {
            n.apply(&mut levels, &mut observe_velocity);
        }

        let mut classes: BTreeMap<ObjectClass, &ClassSection> = BTreeMap::new();
        for (name, section) in &self.classes {
            let class: ObjectClass = name
                .parse()
                .map_err(|_| AppError::Config(format!("unknown class `{name}` in [classes]")))?;
            classes.insert(class, section);
        }

        for class in ObjectClass::ALL {
            // Class values override [defaults], which override built-ins.
            let layers: Vec<&ClassSection> = std::iter::once(&self.defaults)
                .chain(classes.get(&class).copied())
                .collect();
            for s in &layers {
                apply_class(&mut cfg, class, s);
            }
            let mut class_levels = levels;
            let mut class_observe = observe_velocity;
            if let Some(n) = classes.get(&class).and_then(|s| s.noise.as_ref()) {
                n.apply(&mut class_levels, &mut class_observe);
            }
            cfg.noise
                .set(class, NoiseConfig::from_levels(&class_levels, class_observe));
        }
        cfg.noise.default = NoiseConfig::from_levels(&levels, observe_velocity);

        let ab = self.ablation;
        for class in ObjectClass::ALL {
            if !ab.dbse {
                cfg.preprocess.dbse.set(class, DbseFunction::None);
            }
            if !ab.imm && *cfg.motion.get(class) == MotionRouting::Imm {
                cfg.motion.set(class, MotionRouting::Single(ab.fallback_model));
            }
            if !ab.dw {
                if let Management::DampingWindow(_) = cfg.management.get(class) {
                    let count = self.count_for(class);
                    cfg.management.set(class, Management::Count(count));
                }
            }
        }

        cfg.validate()?;
        Ok(RunConfig {
            tracker: cfg,
            default_dt,
        })
    }

    fn count_for(&self, class: ObjectClass) -> CountConfig {
        let mut c = CountConfig::default();
        let own = self
            .classes
            .iter()
            .find(|(n, _)| n.parse::<ObjectClass>().ok() == Some(class));
        for s in std::iter::once(&self.defaults).chain(own.map(|(_, s)| s)) {
            if let Some(h) = s.confirm_hits {
                c.confirm_hits = h;
            }
            if let Some(m) = s.max_misses {
                c.max_misses = m;
            }
        }
        c
    }
}

fn apply_class(cfg: &mut TrackerConfig, class: ObjectClass, s: &ClassSection) {
    if let Some(r) = s.motion {
        cfg.motion.set(class, r.0);
    }
    if let Some(f) = s.dbse {
        cfg.preprocess.dbse.set(class, f);
    }
    if let Some(v) = s.score_threshold {
        cfg.preprocess.score_threshold.set(class, v);
    }
    if let Some(v) = s.nms_iou {
        cfg.preprocess.nms_iou.set(class, v);
    }
    if let Some(g) = s.gate {
        cfg.gates.set(
            class,
            Gate {
                metric: g.metric,
                threshold: g.threshold,
            },
        );
    }

    let current = *cfg.management.get(class);
    let kind = s.management.unwrap_or(match current {
        Management::DampingWindow(_) => ManagementKind::Dw,
        Management::Count(_) => ManagementKind::Count,
    });
    let next = match kind {
        ManagementKind::Dw => {
            let mut d = match current {
                Management::DampingWindow(d) => d,
                Management::Count(_) => DampingConfig::default(),
            };
            if let Some(v) = s.lambda {
                d.lambda = v;
            }
            if let Some(v) = s.theta_active {
                d.theta_active = v;
            }
            if let Some(v) = s.theta_tentative {
                d.theta_tentative = v;
            }
            if let Some(v) = s.max_coast {
                d.max_coast = v;
            }
            Management::DampingWindow(d)
        }
        ManagementKind::Count => {
            let mut c = match current {
                Management::Count(c) => c,
                Management::DampingWindow(_) => CountConfig::default(),
            };
            if let Some(v) = s.confirm_hits {
                c.confirm_hits = v;
            }
            if let Some(v) = s.max_misses {
                c.max_misses = v;
            }
            Management::Count(c)
        }
    };
    cfg.management.set(class, next);
}

impl ImmSection {
    fn resolve(&self) -> Result<ImmConfig> {
        let models = self.models.clone().unwrap_or_else(|| ModelKind::ALL.to_vec());
        if models.is_empty() {
            return Err(AppError::Config("imm.models must not be empty".into()));
        }
        let n = models.len();
        let mut cfg = ImmConfig::sticky(models, self.stay.unwrap_or(0.91));
        if let Some(rows) = &self.markov {
            if rows.len() != n || rows.iter().any(|r| r.len() != n) {
                return Err(AppError::Config(format!("imm.markov must be {n}x{n}")));
            }
            cfg.markov = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        }
        if let Some(p) = &self.initial {
            if p.len() != n {
                return Err(AppError::Config(format!("imm.initial must have {n} entries")));
            }
            cfg.initial_probabilities = DVector::from_column_slice(p);
        }
        if let Some(m) = self.mixing {
            cfg.mixing = m;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Loads `path`, or returns the built-in configuration when `None`.
pub fn load_run_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => ConfigFile::load(p)?.resolve(),
        None => Ok(RunConfig::default()),
    }
}
