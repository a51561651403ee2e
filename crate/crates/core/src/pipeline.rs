//! Per-frame tracking loop: preprocess, predict, associate, update or
//! coast, birth, lifecycle, emit.

use alloc::vec::Vec;

use crate::association::{self, AssignMethod, Gate, TrackView};
use crate::class::{ObjectClass, PerClass};
use crate::error::{Error, Result};
use crate::filter::{NoiseConfig, Observation};
use crate::imm::{self, ImmConfig, ImmState};
use crate::lifecycle::{
    self, AssociationHistory, CountConfig, DampingAccumulator, DampingConfig, LifecyclePhase, Management,
};
use crate::motion::{ModelKind, UnifiedState};
use crate::preprocess::{self, Detection, PreprocessConfig};

/// Which filter tracks a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MotionRouting {
    /// The shared multi-model bank from [`TrackerConfig::imm`].
    Imm,
    /// One (extended) Kalman filter with this model.
    Single(ModelKind),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackerConfig {
    pub preprocess: PreprocessConfig,
    pub gates: PerClass<Gate>,
    pub assignment: AssignMethod,
    pub motion: PerClass<MotionRouting>,
    pub imm: ImmConfig,
    pub noise: PerClass<NoiseConfig>,
    pub management: PerClass<Management>,
    /// Hold newborn trajectories in `Tentative` for their birth frame
    /// instead of scoring them immediately.
    pub birth_tentative: bool,
    /// Damping rate used to report a score for count-managed classes.
    pub report_lambda: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        let count = Management::Count(CountConfig::default());
        let dw = |a, t| Management::DampingWindow(DampingConfig::with_thresholds(a, t));
        TrackerConfig {
            preprocess: PreprocessConfig::default(),
            gates: association::default_gates(),
            assignment: AssignMethod::Optimal,
            motion: PerClass::uniform(MotionRouting::Imm)
                .with(ObjectClass::Pedestrian, MotionRouting::Single(ModelKind::Ctra))
                .with(ObjectClass::Trailer, MotionRouting::Single(ModelKind::Ctra)),
            imm: ImmConfig::default(),
            noise: PerClass::uniform(NoiseConfig::default()),
            management: PerClass::uniform(count)
                .with(ObjectClass::Bus, dw(0.4, 0.05))
                .with(ObjectClass::Car, dw(0.3, 0.05))
                .with(ObjectClass::Pedestrian, dw(0.3, 0.1))
                .with(ObjectClass::Trailer, dw(0.6, 0.1)),
            birth_tentative: false,
            report_lambda: DampingConfig::default().lambda,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        self.imm.validate()?;
        for class in ObjectClass::ALL {
            self.noise.get(class).validate()?;
            self.preprocess.dbse.get(class).validate()?;
            if let Management::DampingWindow(d) = self.management.get(class) {
                d.validate()?;
            }
            let gate = self.gates.get(class);
            if !(gate.threshold > 0.0) || !gate.threshold.is_finite() {
                return Err(Error::Config(alloc::format!(
                    "association gate for {class} must be positive and finite"
                )));
            }
        }
        if !(self.report_lambda > 0.0) {
            return Err(Error::Config("report_lambda must be positive".into()));
        }
        Ok(())
    }

    fn imm_for(&self, class: ObjectClass) -> ImmConfig {
        match self.motion.get(class) {
            MotionRouting::Imm => self.imm.clone(),
            MotionRouting::Single(kind) => ImmConfig::single(*kind),
        }
    }

    fn lambda_for(&self, class: ObjectClass) -> f64 {
        match self.management.get(class) {
            Management::DampingWindow(d) => d.lambda,
            Management::Count(_) => self.report_lambda,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: u64,
    pub class: ObjectClass,
    pub imm: ImmState,
    /// Association flags indexed by processed-frame count.
    pub history: AssociationHistory,
    pub phase: LifecyclePhase,
    pub last_update_frame: i64,
    pub last_detection_score: f64,
    score: DampingAccumulator,
}

impl Trajectory {
    pub fn dw_score(&self) -> f64 {
        self.score.score()
    }
}

/// One emitted (active) trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct TrackOutput {
    pub id: u64,
    pub class: ObjectClass,
    pub state: UnifiedState,
    pub dw_score: f64,
    pub detection_score: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct FrameStats {
    pub raw_detections: usize,
    pub kept_detections: usize,
    pub matched: usize,
    pub births: usize,
    pub terminated: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub frame_index: i64,
    pub tracks: Vec<TrackOutput>,
    pub stats: FrameStats,
}

/// Owns the trajectory store of one scene.
#[derive(Debug, Clone)]
pub struct Tracker {
    config: TrackerConfig,
    trajectories: Vec<Trajectory>,
    next_id: u64,
    last_frame: Option<i64>,
    step: i64,
    created: u64,
}

impl Tracker {
    pub fn new(config: TrackerConfig) -> Result<Self> {
        config.validate()?;
        Ok(Tracker {
            config,
            trajectories: Vec::new(),
            next_id: 0,
            last_frame: None,
            step: 0,
            created: 0,
        })
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    /// Live (non-terminated) trajectories, ordered by id.
    pub fn trajectories(&self) -> &[Trajectory] {
        &self.trajectories
    }

    /// Number of trajectories ever created.
    pub fn created(&self) -> u64 {
        self.created
    }

    pub fn process_frame(&mut self, raw: &[Detection], frame_index: i64, dt: f64) -> Result<FrameOutput> {
        if let Some(last) = self.last_frame {
            if frame_index <= last {
                return Err(Error::Contract(alloc::format!(
                    "frame index {frame_index} does not follow {last}"
                )));
            }
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::Domain { name: "dt", value: dt });
        }
        self.last_frame = Some(frame_index);
        let step = self.step;
        self.step += 1;

        let dets = preprocess::preprocess(raw, &self.config.preprocess)?;
        let mut stats = FrameStats {
            raw_detections: raw.len(),
            kept_detections: dets.len(),
            ..FrameStats::default()
        };

        // Predict every live trajectory. Skipped on the very first frame,
        // where the store is empty anyway.
        let mut views = Vec::with_capacity(self.trajectories.len());
        for t in &mut self.trajectories {
            let cfg = self.config.imm_for(t.class);
            let (pred, fused) = imm::imm_predict(&t.imm, dt, &cfg, self.config.noise.get(t.class))?;
            t.imm = pred;
            views.push(TrackView {
                class: t.class,
                state: fused,
            });
        }

        let costs = association::build_costs(&views, &dets, &self.config.gates);
        let result = association::assign(&costs, self.config.assignment);
        stats.matched = result.matches.len();

        for &(ti, di) in &result.matches {
            let det = &dets[di];
            let t = &mut self.trajectories[ti];
            let noise = self.config.noise.get(t.class);
            let obs = observation_for(det, noise)?;
            let cfg = self.config.imm_for(t.class);
            t.imm = imm::imm_update(&t.imm, &obs, &cfg, noise)?;
            t.history.push(true);
            t.score.push(true);
            t.last_update_frame = frame_index;
            t.last_detection_score = det.score;
        }
        for &ti in &result.unmatched_tracks {
            let t = &mut self.trajectories[ti];
            t.history.push(false);
            t.score.push(false);
        }

        let mut newborn = Vec::with_capacity(result.unmatched_detections.len());
        for &di in &result.unmatched_detections {
            let det = &dets[di];
            let noise = self.config.noise.get(det.class);
            let cfg = self.config.imm_for(det.class);
            let mut state = imm::imm_init(det.center, det.extent, det.yaw, &cfg, noise)?;
            if noise.observe_velocity {
                // Seed with a measurement update so the first velocity is used.
                state = imm::imm_update(&state, &observation_for(det, noise)?, &cfg, noise)?;
            }
            let mut score = DampingAccumulator::new(self.config.lambda_for(det.class));
            score.push(true);
            newborn.push(Trajectory {
                id: self.next_id,
                class: det.class,
                imm: state,
                history: AssociationHistory::born(step),
                phase: LifecyclePhase::Tentative,
                last_update_frame: frame_index,
                last_detection_score: det.score,
                score,
            });
            self.next_id += 1;
        }
        stats.births = newborn.len();
        self.created += newborn.len() as u64;
        let first_new = self.trajectories.len();
        self.trajectories.extend(newborn);

        for (k, t) in self.trajectories.iter_mut().enumerate() {
            if k >= first_new && self.config.birth_tentative {
                continue;
            }
            let misses = t.history.consecutive_misses();
            t.phase = match self.config.management.get(t.class) {
                Management::DampingWindow(d) => lifecycle::step_phase(t.phase, t.score.score(), misses, d),
                Management::Count(c) => lifecycle::step_count_phase(t.phase, t.history.hits() as u32, misses, c),
            };
        }
        let before = self.trajectories.len();
        self.trajectories.retain(|t| t.phase != LifecyclePhase::Terminated);
        stats.terminated = before - self.trajectories.len();

        let tracks = self
            .trajectories
            .iter()
            .filter(|t| t.phase == LifecyclePhase::Active)
            .map(|t| TrackOutput {
                id: t.id,
                class: t.class,
                state: t.imm.fused,
                dw_score: t.dw_score(),
                detection_score: t.last_detection_score,
            })
            .collect();
        Ok(FrameOutput {
            frame_index,
            tracks,
            stats,
        })
    }
}

fn observation_for(det: &Detection, noise: &NoiseConfig) -> Result<Observation> {
    let obs = Observation::pose(det.center, det.extent, det.yaw, 0.0);
    if !noise.observe_velocity {
        return Ok(obs);
    }
    match det.velocity {
        Some(v) => Ok(obs.with_velocity(v)),
        None => Err(Error::Config(alloc::format!(
            "velocity observation is enabled for {} but a detection carries no velocity",
            det.class
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn car(x: f64, y: f64) -> Detection {
        Detection {
            center: [x, y, 0.0],
            extent: [1.8, 4.5, 1.6],
            yaw: 0.0,
            velocity: None,
            score: 0.9,
            class: ObjectClass::Car,
            sensor_origin: Some([0.0, 0.0, 0.0]),
        }
    }

    #[test]
    fn empty_stream() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        for f in 0..5 {
            assert!(t.process_frame(&[], f, 0.5).unwrap().tracks.is_empty());
        }
    }

    #[test]
    fn frame_index_must_increase() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.process_frame(&[], 3, 0.5).unwrap();
        assert!(matches!(t.process_frame(&[], 3, 0.5), Err(Error::Contract(_))));
        assert!(matches!(t.process_frame(&[], 2, 0.5), Err(Error::Contract(_))));
    }

    #[test]
    fn single_target_keeps_identity() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        for f in 0..10 {
            let out = t.process_frame(&[car(10.0 + 2.5 * f as f64, 5.0)], f, 0.5).unwrap();
            assert_eq!(out.tracks.len(), 1);
            assert_eq!(out.tracks[0].id, 0);
        }
        assert_eq!(t.created(), 1);
    }

    #[test]
    fn birth_tentative_delays_output() {
        let cfg = TrackerConfig {
            birth_tentative: true,
            ..TrackerConfig::default()
        };
        let mut t = Tracker::new(cfg).unwrap();
        assert!(t.process_frame(&[car(10.0, 5.0)], 0, 0.5).unwrap().tracks.is_empty());
        assert_eq!(t.process_frame(&[car(10.0, 5.0)], 1, 0.5).unwrap().tracks.len(), 1);
    }

    #[test]
    fn dw_track_coasts_then_dies() {
        let mut t = Tracker::new(TrackerConfig::default()).unwrap();
        t.process_frame(&[car(10.0, 5.0)], 0, 0.5).unwrap();
        let mut emitted = 0;
        for f in 1..30 {
            let out = t.process_frame(&[], f, 0.5).unwrap();
            emitted += out.tracks.len();
        }
        assert!(emitted > 0);
        assert!(t.trajectories().is_empty());
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = TrackerConfig::default();
        cfg.imm.markov[(0, 0)] = 2.0;
        assert!(Tracker::new(cfg).is_err());
    }
}
