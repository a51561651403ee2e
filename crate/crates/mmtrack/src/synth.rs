//! Synthetic scenes with exact ground truth.
//!
//! Each target follows a sequence of motion regimes integrated in closed
//! form. Detections are the ground-truth boxes plus Gaussian pose noise,
//! with a confidence that falls with sensor range; Poisson clutter and
//! i.i.d. dropout are layered on top. A seed fully determines the output.

use mmtrack_core::ObjectClass;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{AppError, Result};
use crate::scene::{DetectionRecord, Frame, GroundTruthBox, SceneFile, SceneHeader, SCENE_FORMAT};

/// Constant-input motion segment, `frames` steps long.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Regime {
    Cruise {
        frames: usize,
    },
    Accelerate {
        frames: usize,
        accel: f64,
    },
    /// `decel` is a positive magnitude; the target stops at zero speed.
    Decelerate {
        frames: usize,
        decel: f64,
    },
    Turn {
        frames: usize,
        omega: f64,
        #[serde(default)]
        accel: f64,
    },
}

impl Regime {
    pub fn frames(&self) -> usize {
        match *self {
            Regime::Cruise { frames }
            | Regime::Accelerate { frames, .. }
            | Regime::Decelerate { frames, .. }
            | Regime::Turn { frames, .. } => frames,
        }
    }

    /// `(acceleration, turn rate)`.
    fn inputs(&self) -> (f64, f64) {
        match *self {
            Regime::Cruise { .. } => (0.0, 0.0),
            Regime::Accelerate { accel, .. } => (accel, 0.0),
            Regime::Decelerate { decel, .. } => (-decel.abs(), 0.0),
            Regime::Turn { omega, accel, .. } => (accel, omega),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TargetSpec {
    pub id: u64,
    pub class: ObjectClass,
    /// Initial `[x, y, z]`.
    pub position: [f64; 3],
    pub yaw: f64,
    pub speed: f64,
    /// Width, length, height.
    pub extent: [f64; 3],
    #[serde(default)]
    pub start_frame: usize,
    pub regimes: Vec<Regime>,
}

impl TargetSpec {
    pub fn frames(&self) -> usize {
        self.regimes.iter().map(Regime::frames).sum()
    }
}

/// Kinematic state of one target.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinematics {
    pub x: f64,
    pub y: f64,
    pub yaw: f64,
    pub speed: f64,
}

impl Kinematics {
    /// Advances by `dt` under constant acceleration `a` and turn rate `w`.
    /// A decelerating target halts once its speed reaches zero.
    pub fn advance(self, a: f64, w: f64, dt: f64) -> Kinematics {
        if a < 0.0 && self.speed + a * dt < 0.0 {
            let t_stop = self.speed / -a;
            let mut s = self.advance_exact(a, w, t_stop);
            s.speed = 0.0;
            return s;
        }
        self.advance_exact(a, w, dt)
    }

    fn advance_exact(self, a: f64, w: f64, dt: f64) -> Kinematics {
        let Kinematics { x, y, yaw, speed: v } = self;
        let v1 = v + a * dt;
        let yaw1 = yaw + w * dt;
        let (dx, dy) = if w.abs() < 1e-9 {
            let s = v * dt + 0.5 * a * dt * dt;
            (s * yaw.cos(), s * yaw.sin())
        } else {
            (
                (v1 * yaw1.sin() - v * yaw.sin()) / w + a * (yaw1.cos() - yaw.cos()) / (w * w),
                (-v1 * yaw1.cos() + v * yaw.cos()) / w + a * (yaw1.sin() - yaw.sin()) / (w * w),
            )
        };
        Kinematics {
            x: x + dx,
            y: y + dy,
            yaw: yaw1,
            speed: v1,
        }
    }
}

/// Standard deviations of the detection noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PoseNoise {
    pub position: f64,
    pub extent: f64,
    pub yaw: f64,
    pub velocity: f64,
}

impl Default for PoseNoise {
    fn default() -> Self {
        PoseNoise {
            position: 0.2,
            extent: 0.05,
            yaw: 0.05,
            velocity: 0.3,
        }
    }
}

impl PoseNoise {
    pub fn zero() -> Self {
        PoseNoise {
            position: 0.0,
            extent: 0.0,
            yaw: 0.0,
            velocity: 0.0,
        }
    }
}

/// True-detection confidence: linear from `near` at the sensor to `far`
/// at `range` metres and beyond, plus Gaussian jitter, clamped to
/// `[0.01, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoreModel {
    pub near: f64,
    pub far: f64,
    pub range: f64,
    pub jitter: f64,
}

impl Default for ScoreModel {
    fn default() -> Self {
        ScoreModel {
            near: 0.95,
            far: 0.4,
            range: 100.0,
            jitter: 0.05,
        }
    }
}

impl ScoreModel {
    pub fn mean(&self, range: f64) -> f64 {
        let t = (range / self.range).clamp(0.0, 1.0);
        self.near + (self.far - self.near) * t
    }
}

/// False-positive boxes, Poisson-distributed per frame, placed uniformly in
/// azimuth and in range between `min_range` and `max_range`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClutterSpec {
    pub rate: f64,
    pub classes: Vec<ObjectClass>,
    pub min_range: f64,
    pub max_range: f64,
    pub score_min: f64,
    pub score_max: f64,
}

impl Default for ClutterSpec {
    fn default() -> Self {
        ClutterSpec {
            rate: 0.0,
            classes: vec![ObjectClass::Car],
            min_range: 5.0,
            max_range: 80.0,
            score_min: 0.1,
            score_max: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioSpec {
    pub scene_id: String,
    pub frame_rate: f64,
    /// Scene length; defaults to the longest target lifetime.
    pub frames: Option<usize>,
    pub sensor_origin: [f64; 3],
    pub targets: Vec<TargetSpec>,
    pub noise: PoseNoise,
    pub score: ScoreModel,
    pub clutter: ClutterSpec,
    pub dropout: f64,
    /// Emit detector velocity with each detection.
    pub velocity: bool,
    pub seed: u64,
}

impl Default for ScenarioSpec {
    fn default() -> Self {
        ScenarioSpec {
            scene_id: "synthetic".into(),
            frame_rate: 2.0,
            frames: None,
            sensor_origin: [0.0; 3],
            targets: Vec::new(),
            noise: PoseNoise::default(),
            score: ScoreModel::default(),
            clutter: ClutterSpec::default(),
            dropout: 0.0,
            velocity: true,
            seed: 0,
        }
    }
}

impl ScenarioSpec {
    pub fn dt(&self) -> f64 {
        1.0 / self.frame_rate
    }

    pub fn frame_count(&self) -> usize {
        self.frames.unwrap_or_else(|| {
            self.targets
                .iter()
                .map(|t| t.start_frame + t.frames() + 1)
                .max()
                .unwrap_or(0)
        })
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(AppError::Config(m));
        if !(self.frame_rate > 0.0) {
            return bad("frame_rate must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.dropout) {
            return bad(format!("dropout {} outside [0, 1]", self.dropout));
        }
        let c = &self.clutter;
        if !(c.rate >= 0.0) || !(c.min_range <= c.max_range) || !(c.score_min <= c.score_max) {
            return bad("clutter needs rate >= 0 and ordered ranges".into());
        }
        if c.rate > 0.0 && c.classes.is_empty() {
            return bad("clutter.classes must not be empty".into());
        }
        let n = &self.noise;
        if [n.position, n.extent, n.yaw, n.velocity, self.score.jitter]
            .iter()
            .any(|s| !(*s >= 0.0))
        {
            return bad("noise levels must be non-negative".into());
        }
        let mut ids: Vec<u64> = self.targets.iter().map(|t| t.id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return bad("target ids must be unique".into());
        }
        if self.targets.iter().any(|t| t.extent.iter().any(|e| !(*e > 0.0))) {
            return bad("target extents must be positive".into());
        }
        Ok(())
    }

    /// Ground-truth kinematics of `target` at every frame of its lifetime.
    pub fn trajectory(&self, target: &TargetSpec) -> Vec<Kinematics> {
        let dt = self.dt();
        let mut k = Kinematics {
            x: target.position[0],
            y: target.position[1],
            yaw: target.yaw,
            speed: target.speed,
        };
        let mut out = vec![k];
        for r in &target.regimes {
            let (a, w) = r.inputs();
            for _ in 0..r.frames() {
                k = if k.speed == 0.0 && a <= 0.0 {
                    k
                } else {
                    k.advance(a, w, dt)
                };
                out.push(k);
            }
        }
        out
    }
}

fn class_table() -> Vec<String> {
    ObjectClass::ALL.iter().map(|c| c.name().to_string()).collect()
}

fn class_id(class: ObjectClass) -> u32 {
    ObjectClass::ALL.iter().position(|&c| c == class).unwrap() as u32
}

/// Typical box size used for clutter.
pub fn typical_extent(class: ObjectClass) -> [f64; 3] {
    match class {
        ObjectClass::Bicycle => [0.6, 1.8, 1.3],
        ObjectClass::Bus => [2.9, 11.0, 3.5],
        ObjectClass::Car => [1.9, 4.6, 1.7],
        ObjectClass::Motorcycle => [0.8, 2.1, 1.5],
        ObjectClass::Pedestrian => [0.7, 0.7, 1.8],
        ObjectClass::Trailer => [2.9, 12.0, 3.9],
        ObjectClass::Truck => [2.5, 7.0, 2.9],
    }
}

fn gauss(rng: &mut ChaCha8Rng, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    let z: f64 = StandardNormal.sample(rng);
    sd * z
}

pub fn generate_scenario(spec: &ScenarioSpec) -> Result<SceneFile> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let dt = spec.dt();
    let n_frames = spec.frame_count();
    let paths: Vec<Vec<Kinematics>> = spec.targets.iter().map(|t| spec.trajectory(t)).collect();
    let clutter = if spec.clutter.rate > 0.0 {
        Some(Poisson::new(spec.clutter.rate).map_err(|e| AppError::Config(format!("clutter rate: {e}")))?)
    } else {
        None
    };
    let origin = spec.sensor_origin;
    let noise = spec.noise;

    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let mut gt = Vec::new();
        let mut detections = Vec::new();
        for (target, path) in spec.targets.iter().zip(&paths) {
            if f < target.start_frame || f - target.start_frame >= path.len() {
                continue;
            }
            let k = path[f - target.start_frame];
            let center = [k.x, k.y, target.position[2]];
            gt.push(GroundTruthBox {
                track_id: target.id,
                class_id: class_id(target.class),
                center,
                extent: target.extent,
                yaw: k.yaw,
            });

            // Always draw so dropout does not shift the random stream.
            let drop = rng.random::<f64>() < spec.dropout;
            let noisy_center = [
                center[0] + gauss(&mut rng, noise.position),
                center[1] + gauss(&mut rng, noise.position),
                center[2] + gauss(&mut rng, 0.5 * noise.position),
            ];
            let mut extent = target.extent;
            for e in &mut extent {
                *e = (*e + gauss(&mut rng, noise.extent)).max(0.1);
            }
            let yaw = k.yaw + gauss(&mut rng, noise.yaw);
            let velocity = [
                k.speed * k.yaw.cos() + gauss(&mut rng, noise.velocity),
                k.speed * k.yaw.sin() + gauss(&mut rng, noise.velocity),
            ];
            let range = distance(center, origin);
            let score = (spec.score.mean(range) + gauss(&mut rng, spec.score.jitter)).clamp(0.01, 1.0);
            if drop {
                continue;
            }
            detections.push(DetectionRecord {
                center: noisy_center,
                extent,
                yaw,
                velocity: spec.velocity.then_some(velocity),
                score,
                class_id: class_id(target.class),
            });
        }

        if let Some(p) = &clutter {
            let count = p.sample(&mut rng) as usize;
            let c = &spec.clutter;
            for _ in 0..count {
                let class = c.classes[rng.random_range(0..c.classes.len())];
                let r = c.min_range + (c.max_range - c.min_range) * rng.random::<f64>();
                let az = rng.random::<f64>() * std::f64::consts::TAU;
                let score = c.score_min + (c.score_max - c.score_min) * rng.random::<f64>();
                let yaw = (rng.random::<f64>() - 0.5) * std::f64::consts::TAU;
                let vel = [gauss(&mut rng, 1.0), gauss(&mut rng, 1.0)];
                detections.push(DetectionRecord {
                    center: [origin[0] + r * az.cos(), origin[1] + r * az.sin(), origin[2]],
                    extent: typical_extent(class),
                    yaw,
                    velocity: spec.velocity.then_some(vel),
                    score,
                    class_id: class_id(class),
                });
            }
        }

        frames.push(Frame {
            frame_index: f as i64,
            timestamp: f as f64 * dt,
            sensor_origin: origin,
            detections,
            ground_truth: Some(gt),
        });
    }

    Ok(SceneFile {
        header: SceneHeader::new(SCENE_FORMAT, spec.scene_id.clone(), class_table(), spec.frame_rate),
        frames,
    })
}

fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Named scenarios shipped with the CLI.
pub const PRESETS: [&str; 6] = [
    "noiseless",
    "cruise_turn",
    "regime_switch",
    "benchmark",
    "long_range_clutter",
    "crossing",
];

pub fn preset(name: &str, seed: u64) -> Result<ScenarioSpec> {
    let spec = match name {
        "noiseless" => noiseless(),
        "cruise_turn" => cruise_turn(),
        "regime_switch" => regime_switch(),
        "benchmark" => benchmark(),
        "long_range_clutter" => long_range_clutter(),
        "crossing" => crossing(),
        other => {
            return Err(AppError::Config(format!(
                "unknown preset `{other}` (available: {})",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(ScenarioSpec { seed, ..spec })
}

fn car(id: u64, position: [f64; 2], yaw: f64, speed: f64, regimes: Vec<Regime>) -> TargetSpec {
    TargetSpec {
        id,
        class: ObjectClass::Car,
        position: [position[0], position[1], 0.8],
        yaw,
        speed,
        extent: typical_extent(ObjectClass::Car),
        start_frame: 0,
        regimes,
    }
}

/// Three well-separated cars, no noise, no clutter, no dropout.
pub fn noiseless() -> ScenarioSpec {
    ScenarioSpec {
        scene_id: "noiseless".into(),
        targets: vec![
            car(1, [5.0, 10.0], 0.0, 8.0, vec![Regime::Cruise { frames: 30 }]),
            car(
                2,
                [-10.0, -20.0],
                0.5,
                6.0,
                vec![
                    Regime::Cruise { frames: 10 },
                    Regime::Turn {
                        frames: 20,
                        omega: 0.2,
                        accel: 0.0,
                    },
                ],
            ),
            car(
                3,
                [20.0, -5.0],
                1.5,
                4.0,
                vec![
                    Regime::Accelerate { frames: 15, accel: 1.0 },
                    Regime::Cruise { frames: 15 },
                ],
            ),
        ],
        noise: PoseNoise::zero(),
        score: ScoreModel {
            jitter: 0.0,
            ..ScoreModel::default()
        },
        ..ScenarioSpec::default()
    }
}

/// One car cruising for 20 frames then turning at 0.3 rad/s for 20.
pub fn cruise_turn() -> ScenarioSpec {
    ScenarioSpec {
        scene_id: "cruise_turn".into(),
        targets: vec![car(
            1,
            [10.0, 5.0],
            0.0,
            10.0,
            vec![
                Regime::Cruise { frames: 20 },
                Regime::Turn {
                    frames: 20,
                    omega: 0.3,
                    accel: 0.0,
                },
            ],
        )],
        ..ScenarioSpec::default()
    }
}

/// One car through decelerate, turn, accelerate and cruise segments.
pub fn regime_switch() -> ScenarioSpec {
    ScenarioSpec {
        scene_id: "regime_switch".into(),
        targets: vec![car(
            1,
            [0.0, 0.0],
            0.0,
            12.0,
            vec![
                Regime::Cruise { frames: 10 },
                Regime::Decelerate { frames: 10, decel: 1.0 },
                Regime::Turn {
                    frames: 12,
                    omega: 0.35,
                    accel: 0.0,
                },
                Regime::Accelerate { frames: 10, accel: 1.5 },
                Regime::Turn {
                    frames: 10,
                    omega: -0.25,
                    accel: 0.0,
                },
                Regime::Cruise { frames: 8 },
            ],
        )],
        ..ScenarioSpec::default()
    }
}

/// Mixed traffic with clutter and 20% dropout.
pub fn benchmark() -> ScenarioSpec {
    let mut targets = vec![
        car(1, [10.0, 15.0], 0.0, 8.0, vec![Regime::Cruise { frames: 40 }]),
        car(
            2,
            [-30.0, -10.0],
            0.3,
            10.0,
            vec![
                Regime::Cruise { frames: 15 },
                Regime::Turn {
                    frames: 15,
                    omega: 0.25,
                    accel: 0.0,
                },
                Regime::Cruise { frames: 10 },
            ],
        ),
        car(
            3,
            [40.0, -30.0],
            2.5,
            6.0,
            vec![
                Regime::Decelerate { frames: 20, decel: 0.5 },
                Regime::Cruise { frames: 20 },
            ],
        ),
        car(
            4,
            [-50.0, 40.0],
            -0.6,
            5.0,
            vec![
                Regime::Accelerate { frames: 20, accel: 0.8 },
                Regime::Cruise { frames: 20 },
            ],
        ),
    ];
    targets.push(TargetSpec {
        id: 5,
        class: ObjectClass::Bus,
        position: [0.0, -40.0, 1.7],
        yaw: 0.1,
        speed: 7.0,
        extent: typical_extent(ObjectClass::Bus),
        start_frame: 5,
        regimes: vec![Regime::Cruise { frames: 30 }],
    });
    targets.push(TargetSpec {
        id: 6,
        class: ObjectClass::Pedestrian,
        position: [5.0, -8.0, 0.9],
        yaw: 1.2,
        speed: 1.3,
        extent: typical_extent(ObjectClass::Pedestrian),
        start_frame: 0,
        regimes: vec![Regime::Cruise { frames: 40 }],
    });
    ScenarioSpec {
        scene_id: "benchmark".into(),
        targets,
        clutter: ClutterSpec {
            rate: 2.0,
            classes: vec![ObjectClass::Car, ObjectClass::Pedestrian],
            ..ClutterSpec::default()
        },
        dropout: 0.2,
        ..ScenarioSpec::default()
    }
}

/// Nearby buses and bicycles with clutter concentrated at long range.
pub fn long_range_clutter() -> ScenarioSpec {
    let target = |id, class, position: [f64; 2], yaw, speed| TargetSpec {
        id,
        class,
        position: [position[0], position[1], 1.0],
        yaw,
        speed,
        extent: typical_extent(class),
        start_frame: 0,
        regimes: vec![Regime::Cruise { frames: 30 }],
    };
    ScenarioSpec {
        scene_id: "long_range_clutter".into(),
        targets: vec![
            target(1, ObjectClass::Bus, [15.0, 10.0], 0.0, 6.0),
            target(2, ObjectClass::Bus, [-20.0, -15.0], 3.0, 5.0),
            target(3, ObjectClass::Bicycle, [8.0, -6.0], 1.0, 3.0),
            target(4, ObjectClass::Bicycle, [-12.0, 9.0], -2.0, 2.5),
        ],
        clutter: ClutterSpec {
            rate: 3.0,
            classes: vec![ObjectClass::Bus, ObjectClass::Bicycle],
            min_range: 60.0,
            max_range: 110.0,
            score_min: 0.17,
            score_max: 0.5,
        },
        dropout: 0.1,
        ..ScenarioSpec::default()
    }
}

/// Three cars whose paths cross near the origin.
pub fn crossing() -> ScenarioSpec {
    ScenarioSpec {
        scene_id: "crossing".into(),
        targets: vec![
            car(1, [-40.0, 0.0], 0.0, 8.0, vec![Regime::Cruise { frames: 20 }]),
            car(
                2,
                [0.0, -46.0],
                std::f64::consts::FRAC_PI_2,
                8.0,
                vec![Regime::Cruise { frames: 20 }],
            ),
            car(3, [40.56, 37.15], -2.4, 8.0, vec![Regime::Cruise { frames: 20 }]),
        ],
        noise: PoseNoise {
            position: 0.3,
            ..PoseNoise::default()
        },
        clutter: ClutterSpec {
            rate: 2.0,
            ..ClutterSpec::default()
        },
        ..ScenarioSpec::default()
    }
}
