//! Kalman / extended Kalman predict and update shared by every motion model.

use core::f64::consts::PI;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::math::{cos, exp, log, sin, wrap_angle};
use crate::motion::{self, check_dim, ModelKind, ModelState};

/// Observed components: `[x, y, z, w, l, h, θ]`, optionally followed by
/// `[vx, vy]`.
pub const POSE_DIM: usize = 7;
pub const POSE_VELOCITY_DIM: usize = 9;

/// Innovation covariances with a larger condition number are rejected.
pub const MAX_CONDITION: f64 = 1e12;

/// Diagonal noise magnitudes from which full matrices are built.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseLevels {
    /// Per-step process variance on x, y, z.
    pub position: f64,
    pub extent: f64,
    pub heading: f64,
    pub velocity: f64,
    pub acceleration: f64,
    pub turn_rate: f64,

    pub meas_position: f64,
    pub meas_extent: f64,
    pub meas_heading: f64,
    pub meas_velocity: f64,

    /// Initial variances for quantities the first detection does not observe.
    pub init_velocity: f64,
    pub init_acceleration: f64,
    pub init_turn_rate: f64,
}

impl Default for NoiseLevels {
    fn default() -> Self {
        NoiseLevels {
            position: 0.1,
            extent: 0.1,
            heading: 0.01,
            velocity: 1.0,
            acceleration: 1.0,
            turn_rate: 1.0,
            meas_position: 0.5,
            meas_extent: 0.1,
            meas_heading: 0.1,
            meas_velocity: 0.5,
            init_velocity: 10.0,
            init_acceleration: 10.0,
            init_turn_rate: 1.0,
        }
    }
}

/// Process, measurement and initial covariances.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseConfig {
    /// Process noise Q for CV, CA, CTRV, CTRA (in that order).
    pub process: [DMatrix<f64>; 4],
    /// Measurement noise R over the observation vector.
    pub measurement: DMatrix<f64>,
    /// Covariance a freshly initialized model starts with.
    pub initial: [DMatrix<f64>; 4],
    /// Whether detections also observe planar velocity.
    pub observe_velocity: bool,
}

impl NoiseConfig {
    pub fn from_levels(levels: &NoiseLevels, observe_velocity: bool) -> Self {
        let process = ModelKind::ALL.map(|k| {
            DMatrix::from_diagonal(&per_model_diagonal(k, levels, |l| ComponentNoise {
                position: l.position,
                extent: l.extent,
                heading: l.heading,
                velocity: l.velocity,
                acceleration: l.acceleration,
                turn_rate: l.turn_rate,
            }))
        });
        let initial = ModelKind::ALL.map(|k| {
            DMatrix::from_diagonal(&per_model_diagonal(k, levels, |l| ComponentNoise {
                position: l.meas_position,
                extent: l.meas_extent,
                heading: l.meas_heading,
                velocity: l.init_velocity,
                acceleration: l.init_acceleration,
                turn_rate: l.init_turn_rate,
            }))
        });
        let mut r = alloc::vec![
            levels.meas_position,
            levels.meas_position,
            levels.meas_position,
            levels.meas_extent,
            levels.meas_extent,
            levels.meas_extent,
            levels.meas_heading,
        ];
        if observe_velocity {
            r.push(levels.meas_velocity);
            r.push(levels.meas_velocity);
        }
        NoiseConfig {
            process,
            measurement: DMatrix::from_diagonal(&DVector::from_vec(r)),
            initial,
            observe_velocity,
        }
    }

    pub fn process(&self, kind: ModelKind) -> &DMatrix<f64> {
        &self.process[kind.slot()]
    }

    pub fn initial(&self, kind: ModelKind) -> &DMatrix<f64> {
        &self.initial[kind.slot()]
    }

    pub fn observation_dim(&self) -> usize {
        if self.observe_velocity {
            POSE_VELOCITY_DIM
        } else {
            POSE_DIM
        }
    }

    /// Checks shapes and that every matrix is symmetric PSD.
    pub fn validate(&self) -> Result<()> {
        for kind in ModelKind::ALL {
            check_square(self.process(kind), kind.dim())?;
            check_square(self.initial(kind), kind.dim())?;
            check_psd(self.process(kind))?;
            check_psd(self.initial(kind))?;
        }
        check_square(&self.measurement, self.observation_dim())?;
        check_psd(&self.measurement)
    }
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig::from_levels(&NoiseLevels::default(), false)
    }
}

struct ComponentNoise {
    position: f64,
    extent: f64,
    heading: f64,
    velocity: f64,
    acceleration: f64,
    turn_rate: f64,
}

fn per_model_diagonal(
    kind: ModelKind,
    levels: &NoiseLevels,
    pick: impl Fn(&NoiseLevels) -> ComponentNoise,
) -> DVector<f64> {
    let c = pick(levels);
    let mut d = DVector::zeros(kind.dim());
    for i in 0..3 {
        d[i] = c.position;
        d[3 + i] = c.extent;
    }
    match kind {
        ModelKind::Cv => {
            for i in 6..9 {
                d[i] = c.velocity;
            }
        }
        ModelKind::Ca => {
            for i in 6..9 {
                d[i] = c.velocity;
                d[i + 3] = c.acceleration;
            }
        }
        ModelKind::Ctrv => {
            d[6] = c.velocity;
            d[8] = c.turn_rate;
        }
        ModelKind::Ctra => {
            d[6] = c.velocity;
            d[7] = c.acceleration;
            d[9] = c.turn_rate;
        }
    }
    d[kind.heading_index()] = c.heading;
    d
}

fn check_square(m: &DMatrix<f64>, n: usize) -> Result<()> {
    check_dim(n, m.nrows())?;
    check_dim(n, m.ncols())
}

fn check_psd(m: &DMatrix<f64>) -> Result<()> {
    if (m - m.transpose()).amax() > 1e-12 {
        return Err(Error::Config("noise matrix is not symmetric".into()));
    }
    let min = SymmetricEigen::new(m.clone()).eigenvalues.min();
    if min < -1e-10 {
        return Err(Error::NotPositiveSemiDefinite { eigenvalue: min });
    }
    Ok(())
}

/// One measurement `[x, y, z, w, l, h, θ]` (plus `[vx, vy]` when velocity is
/// observed).
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub z: DVector<f64>,
    pub timestamp: f64,
}

impl Observation {
    pub fn pose(center: [f64; 3], extent: [f64; 3], yaw: f64, timestamp: f64) -> Self {
        Observation {
            z: DVector::from_column_slice(&[
                center[0],
                center[1],
                center[2],
                extent[0],
                extent[1],
                extent[2],
                wrap_angle(yaw),
            ]),
            timestamp,
        }
    }

    pub fn with_velocity(mut self, velocity: [f64; 2]) -> Self {
        let mut z = alloc::vec::Vec::from(self.z.as_slice());
        z.truncate(POSE_DIM);
        z.extend_from_slice(&velocity);
        self.z = DVector::from_vec(z);
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateResult {
    pub posterior: ModelState,
    pub residual: DVector<f64>,
    pub residual_covariance: DMatrix<f64>,
    pub likelihood: f64,
    /// Natural log of `likelihood`, kept because the density underflows
    /// quickly in seven dimensions.
    pub log_likelihood: f64,
}

/// Predicted measurement and its Jacobian for a model state.
pub fn observe(kind: ModelKind, state: &DVector<f64>, with_velocity: bool) -> (DVector<f64>, DMatrix<f64>) {
    let m = if with_velocity { POSE_VELOCITY_DIM } else { POSE_DIM };
    let n = kind.dim();
    let mut h = DMatrix::zeros(m, n);
    let mut z = DVector::zeros(m);
    for i in 0..6 {
        h[(i, i)] = 1.0;
        z[i] = state[i];
    }
    let hi = kind.heading_index();
    h[(6, hi)] = 1.0;
    z[6] = state[hi];
    if with_velocity {
        match kind {
            ModelKind::Cv | ModelKind::Ca => {
                h[(7, 6)] = 1.0;
                h[(8, 7)] = 1.0;
                z[7] = state[6];
                z[8] = state[7];
            }
            ModelKind::Ctrv | ModelKind::Ctra => {
                let (v, th) = (state[6], state[hi]);
                let (c, s) = (cos(th), sin(th));
                z[7] = v * c;
                z[8] = v * s;
                h[(7, 6)] = c;
                h[(8, 6)] = s;
                h[(7, hi)] = -v * s;
                h[(8, hi)] = v * c;
            }
        }
    }
    (z, h)
}

/// Time update: `x = f(x)`, `P = F P Fᵀ + Q`.
pub fn predict(state: &ModelState, noise: &NoiseConfig, dt: f64) -> Result<ModelState> {
    let kind = state.kind;
    let f = motion::jacobian(kind, &state.mean, dt)?;
    let mean = motion::transition(kind, &state.mean, dt)?;
    let mut covariance = &f * &state.covariance * f.transpose() + noise.process(kind);
    crate::math::ensure_psd(&mut covariance)?;
    Ok(ModelState { kind, mean, covariance })
}

/// Measurement update in Joseph form. The heading residual is wrapped
/// before the gain is applied.
pub fn update(state: &ModelState, obs: &Observation, noise: &NoiseConfig) -> Result<UpdateResult> {
    let kind = state.kind;
    check_dim(noise.observation_dim(), obs.z.len())?;
    if obs.z.iter().any(|v| !v.is_finite()) {
        return Err(Error::Contract("observation is not finite".into()));
    }
    let (predicted, h) = observe(kind, &state.mean, noise.observe_velocity);
    let mut residual = &obs.z - predicted;
    residual[6] = wrap_angle(residual[6]);

    let p = &state.covariance;
    let mut s = &h * p * h.transpose() + &noise.measurement;
    crate::math::symmetrize(&mut s);
    let eig = SymmetricEigen::new(s.clone());
    let (lo, hi) = (eig.eigenvalues.min(), eig.eigenvalues.max());
    if !(lo > 0.0) || hi / lo > MAX_CONDITION {
        return Err(Error::IllConditioned {
            condition: if lo > 0.0 { hi / lo } else { f64::INFINITY },
        });
    }
    let s_inv =
        &eig.eigenvectors * DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l)) * eig.eigenvectors.transpose();
    let log_det: f64 = eig.eigenvalues.iter().map(|&l| log(l)).sum();

    let gain = p * h.transpose() * &s_inv;
    let mut mean = &state.mean + &gain * &residual;
    let hi_idx = kind.heading_index();
    mean[hi_idx] = wrap_angle(mean[hi_idx]);

    let n = kind.dim();
    let i_kh = DMatrix::identity(n, n) - &gain * &h;
    let mut covariance = &i_kh * p * i_kh.transpose() + &gain * &noise.measurement * gain.transpose();
    crate::math::ensure_psd(&mut covariance)?;

    let mahalanobis = (residual.transpose() * &s_inv * &residual)[(0, 0)];
    let m = residual.len() as f64;
    let log_likelihood = -0.5 * (mahalanobis + log_det + m * log(2.0 * PI));

    Ok(UpdateResult {
        posterior: ModelState { kind, mean, covariance },
        residual,
        residual_covariance: s,
        likelihood: exp(log_likelihood),
        log_likelihood,
    })
}
