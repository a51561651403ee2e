//! Kinematic motion models and their embedding into the shared 14-element
//! tracking state.
//!
//! Per-model state layouts:
//!
//! | model | vector                                          |
//! |-------|-------------------------------------------------|
//! | CV    | `x y z w l h vx vy vz θ`                        |
//! | CA    | `x y z w l h vx vy vz ax ay az θ`               |
//! | CTRV  | `x y z w l h v θ ω`                             |
//! | CTRA  | `x y z w l h v a θ ω`                           |
//!
//! Box extent and vertical position are carried as constants by every model
//! (the turning models have no vertical velocity).

use core::fmt;
use core::str::FromStr;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::math::{cos, hypot, sin, wrap_angle};

/// Below this turn rate magnitude (rad/s) the turning models use their
/// straight-line limit.
pub const TURN_RATE_EPSILON: f64 = 1e-6;

/// Dimension of [`UnifiedState`] as a vector.
pub const UNIFIED_DIM: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ModelKind {
    #[cfg_attr(feature = "serde", serde(rename = "CV"))]
    Cv,
    #[cfg_attr(feature = "serde", serde(rename = "CA"))]
    Ca,
    #[cfg_attr(feature = "serde", serde(rename = "CTRV"))]
    Ctrv,
    #[cfg_attr(feature = "serde", serde(rename = "CTRA"))]
    Ctra,
}

impl ModelKind {
    pub const ALL: [ModelKind; 4] = [ModelKind::Cv, ModelKind::Ca, ModelKind::Ctrv, ModelKind::Ctra];

    pub const fn dim(self) -> usize {
        match self {
            ModelKind::Cv => 10,
            ModelKind::Ca => 13,
            ModelKind::Ctrv => 9,
            ModelKind::Ctra => 10,
        }
    }

    /// Index of the heading angle in the per-model vector.
    pub const fn heading_index(self) -> usize {
        match self {
            ModelKind::Cv => 9,
            ModelKind::Ca => 12,
            ModelKind::Ctrv => 7,
            ModelKind::Ctra => 8,
        }
    }

    pub const fn is_turning(self) -> bool {
        matches!(self, ModelKind::Ctrv | ModelKind::Ctra)
    }

    pub const fn name(self) -> &'static str {
        match self {
            ModelKind::Cv => "CV",
            ModelKind::Ca => "CA",
            ModelKind::Ctrv => "CTRV",
            ModelKind::Ctra => "CTRA",
        }
    }

    /// Slot in a four-element per-kind table.
    pub(crate) const fn slot(self) -> usize {
        match self {
            ModelKind::Cv => 0,
            ModelKind::Ca => 1,
            ModelKind::Ctrv => 2,
            ModelKind::Ctra => 3,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::Config(alloc::format!("unknown motion model `{s}`")))
    }
}

/// Full kinematic state shared by all models.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct UnifiedState {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub w: f64,
    pub l: f64,
    pub h: f64,
    pub vx: f64,
    pub vy: f64,
    pub vz: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
    pub theta: f64,
    pub omega: f64,
}

impl UnifiedState {
    pub fn to_vector(&self) -> DVector<f64> {
        DVector::from_column_slice(&[
            self.x, self.y, self.z, self.w, self.l, self.h, self.vx, self.vy, self.vz, self.ax, self.ay, self.az,
            self.theta, self.omega,
        ])
    }

    pub fn from_vector(v: &DVector<f64>) -> Result<Self> {
        check_dim(UNIFIED_DIM, v.len())?;
        Ok(UnifiedState {
            x: v[0],
            y: v[1],
            z: v[2],
            w: v[3],
            l: v[4],
            h: v[5],
            vx: v[6],
            vy: v[7],
            vz: v[8],
            ax: v[9],
            ay: v[10],
            az: v[11],
            theta: wrap_angle(v[12]),
            omega: v[13],
        })
    }

    pub fn speed(&self) -> f64 {
        hypot(self.vx, self.vy)
    }
}

/// Mean and covariance of one motion model's filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelState {
    pub kind: ModelKind,
    pub mean: DVector<f64>,
    pub covariance: DMatrix<f64>,
}

impl ModelState {
    pub fn new(kind: ModelKind, mean: DVector<f64>, covariance: DMatrix<f64>) -> Result<Self> {
        check_dim(kind.dim(), mean.len())?;
        check_dim(kind.dim(), covariance.nrows())?;
        check_dim(kind.dim(), covariance.ncols())?;
        Ok(ModelState { kind, mean, covariance })
    }

    pub fn heading(&self) -> f64 {
        self.mean[self.kind.heading_index()]
    }

    pub fn to_unified(&self) -> UnifiedState {
        to_unified(self.kind, &self.mean)
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}

/// Propagates a per-model state vector over `dt` seconds.
pub fn transition(kind: ModelKind, state: &DVector<f64>, dt: f64) -> Result<DVector<f64>> {
    check_dim(kind.dim(), state.len())?;
    check_dt(dt)?;
    let mut out = state.clone();
    match kind {
        ModelKind::Cv => {
            for axis in 0..3 {
                out[axis] += state[6 + axis] * dt;
            }
        }
        ModelKind::Ca => {
            for axis in 0..3 {
                let (v, a) = (state[6 + axis], state[9 + axis]);
                out[axis] += v * dt + 0.5 * a * dt * dt;
                out[6 + axis] += a * dt;
            }
        }
        ModelKind::Ctrv | ModelKind::Ctra => {
            let t = TurnTerms::new(kind, state, dt);
            out[0] += t.dx;
            out[1] += t.dy;
            if kind == ModelKind::Ctra {
                out[6] += t.a * dt;
            }
            let (hi, wi) = (kind.heading_index(), kind.heading_index() + 1);
            out[hi] = state[hi] + state[wi] * dt;
        }
    }
    let hi = kind.heading_index();
    out[hi] = wrap_angle(out[hi]);
    Ok(out)
}

/// Jacobian of [`transition`] with respect to the state, evaluated at `state`.
pub fn jacobian(kind: ModelKind, state: &DVector<f64>, dt: f64) -> Result<DMatrix<f64>> {
    check_dim(kind.dim(), state.len())?;
    check_dt(dt)?;
    let n = kind.dim();
    let mut f = DMatrix::identity(n, n);
    match kind {
        ModelKind::Cv => {
            for axis in 0..3 {
                f[(axis, 6 + axis)] = dt;
            }
        }
        ModelKind::Ca => {
            for axis in 0..3 {
                f[(axis, 6 + axis)] = dt;
                f[(axis, 9 + axis)] = 0.5 * dt * dt;
                f[(6 + axis, 9 + axis)] = dt;
            }
        }
        ModelKind::Ctrv | ModelKind::Ctra => {
            let t = TurnTerms::new(kind, state, dt);
            let hi = kind.heading_index();
            let wi = hi + 1;
            // heading
            f[(0, hi)] = -t.dy;
            f[(1, hi)] = t.dx;
            // speed
            f[(0, 6)] = dt * t.c[0];
            f[(1, 6)] = dt * t.s[0];
            // turn rate
            let dt2 = dt * dt;
            f[(0, wi)] = -dt2 * (t.v * t.s[1] + t.a * dt * t.s[2]);
            f[(1, wi)] = dt2 * (t.v * t.c[1] + t.a * dt * t.c[2]);
            f[(hi, wi)] = dt;
            if kind == ModelKind::Ctra {
                f[(0, 7)] = dt2 * t.c[1];
                f[(1, 7)] = dt2 * t.s[1];
                f[(6, 7)] = dt;
            }
        }
    }
    Ok(f)
}

fn check_dt(dt: f64) -> Result<()> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain { name: "dt", value: dt })
    }
}

/// Planar displacement of a turning model together with the rotated moment
/// integrals its Jacobian needs.
struct TurnTerms {
    v: f64,
    a: f64,
    dx: f64,
    dy: f64,
    /// `Re(e^{iθ} E_k(ωΔt))` for k = 0, 1, 2.
    c: [f64; 3],
    /// `Im(e^{iθ} E_k(ωΔt))` for k = 0, 1, 2.
    s: [f64; 3],
}

impl TurnTerms {
    fn new(kind: ModelKind, state: &DVector<f64>, dt: f64) -> Self {
        let hi = kind.heading_index();
        let theta = state[hi];
        let omega = state[hi + 1];
        let v = state[6];
        let a = if kind == ModelKind::Ctra { state[7] } else { 0.0 };
        let u = if omega.abs() < TURN_RATE_EPSILON {
            0.0
        } else {
            omega * dt
        };
        let rot = Complex64::new(cos(theta), sin(theta));
        let moments = turn_moments(u);
        let mut c = [0.0; 3];
        let mut s = [0.0; 3];
        for k in 0..3 {
            let r = rot * moments[k];
            c[k] = r.re;
            s[k] = r.im;
        }
        TurnTerms {
            v,
            a,
            dx: dt * (v * c[0] + a * dt * c[1]),
            dy: dt * (v * s[0] + a * dt * s[1]),
            c,
            s,
        }
    }
}

/// `E_k(u) = ∫₀¹ τ^k e^{iuτ} dτ` for k = 0, 1, 2.
///
/// The displacement of a body moving with speed `v + a·s` and heading
/// `θ + ω·s` over `[0, Δt]` is `Δt·e^{iθ}(v·E_0 + aΔt·E_1)` at `u = ωΔt`.
fn turn_moments(u: f64) -> [Complex64; 3] {
    let mut out = [Complex64::new(0.0, 0.0); 3];
    if u.abs() <= 1.0 {
        // Power series in iu; 1/22! is below double precision.
        let iu = Complex64::new(0.0, u);
        for (k, slot) in out.iter_mut().enumerate() {
            let mut term = Complex64::new(1.0, 0.0);
            let mut sum = Complex64::new(0.0, 0.0);
            for n in 0..24 {
                if n > 0 {
                    term = term * iu / n as f64;
                }
                sum += term / (n + k + 1) as f64;
            }
            *slot = sum;
        }
    } else {
        let iu = Complex64::new(0.0, u);
        let e = Complex64::new(cos(u), sin(u));
        out[0] = (e - 1.0) / iu;
        for k in 1..3 {
            out[k] = (e - out[k - 1] * k as f64) / iu;
        }
    }
    out
}

/// Embeds a per-model vector into the unified state, zero-filling
/// quantities the model does not carry.
pub fn to_unified(kind: ModelKind, s: &DVector<f64>) -> UnifiedState {
    let mut u = UnifiedState {
        x: s[0],
        y: s[1],
        z: s[2],
        w: s[3],
        l: s[4],
        h: s[5],
        theta: wrap_angle(s[kind.heading_index()]),
        ..UnifiedState::default()
    };
    match kind {
        ModelKind::Cv => {
            u.vx = s[6];
            u.vy = s[7];
            u.vz = s[8];
        }
        ModelKind::Ca => {
            u.vx = s[6];
            u.vy = s[7];
            u.vz = s[8];
            u.ax = s[9];
            u.ay = s[10];
            u.az = s[11];
        }
        ModelKind::Ctrv | ModelKind::Ctra => {
            let theta = s[kind.heading_index()];
            let (c, sn) = (cos(theta), sin(theta));
            u.vx = s[6] * c;
            u.vy = s[6] * sn;
            if kind == ModelKind::Ctra {
                u.ax = s[7] * c;
                u.ay = s[7] * sn;
            }
            u.omega = s[kind.heading_index() + 1];
        }
    }
    u
}

/// Projects a unified state onto a model's vector.
///
/// Turning models take speed as `hypot(vx, vy)` signed by the projection of
/// the velocity on the heading (so reversing bodies keep a negative speed),
/// and likewise for the tangential acceleration.
pub fn from_unified(kind: ModelKind, u: &UnifiedState) -> DVector<f64> {
    let mut s = DVector::zeros(kind.dim());
    s[0] = u.x;
    s[1] = u.y;
    s[2] = u.z;
    s[3] = u.w;
    s[4] = u.l;
    s[5] = u.h;
    match kind {
        ModelKind::Cv => {
            s[6] = u.vx;
            s[7] = u.vy;
            s[8] = u.vz;
        }
        ModelKind::Ca => {
            s[6] = u.vx;
            s[7] = u.vy;
            s[8] = u.vz;
            s[9] = u.ax;
            s[10] = u.ay;
            s[11] = u.az;
        }
        ModelKind::Ctrv | ModelKind::Ctra => {
            s[6] = signed_norm(u.vx, u.vy, u.theta);
            if kind == ModelKind::Ctra {
                s[7] = signed_norm(u.ax, u.ay, u.theta);
            }
            s[kind.heading_index() + 1] = u.omega;
        }
    }
    s[kind.heading_index()] = u.theta;
    s
}

fn signed_norm(px: f64, py: f64, theta: f64) -> f64 {
    let n = hypot(px, py);
    if px * cos(theta) + py * sin(theta) < 0.0 {
        -n
    } else {
        n
    }
}

/// Jacobian (14 × n) of [`to_unified`] at `s`.
pub fn to_unified_jacobian(kind: ModelKind, s: &DVector<f64>) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(UNIFIED_DIM, kind.dim());
    for i in 0..6 {
        j[(i, i)] = 1.0;
    }
    let hi = kind.heading_index();
    j[(12, hi)] = 1.0;
    match kind {
        ModelKind::Cv => {
            for i in 0..3 {
                j[(6 + i, 6 + i)] = 1.0;
            }
        }
        ModelKind::Ca => {
            for i in 0..6 {
                j[(6 + i, 6 + i)] = 1.0;
            }
        }
        ModelKind::Ctrv | ModelKind::Ctra => {
            let theta = s[hi];
            let (c, sn) = (cos(theta), sin(theta));
            let v = s[6];
            j[(6, 6)] = c;
            j[(7, 6)] = sn;
            j[(6, hi)] = -v * sn;
            j[(7, hi)] = v * c;
            if kind == ModelKind::Ctra {
                let a = s[7];
                j[(9, 7)] = c;
                j[(10, 7)] = sn;
                j[(9, hi)] = -a * sn;
                j[(10, hi)] = a * c;
            }
            j[(13, hi + 1)] = 1.0;
        }
    }
    j
}

/// Jacobian (n × 14) of [`from_unified`] at `u`.
///
/// At zero planar speed the derivative of the speed along the heading
/// direction is used.
pub fn from_unified_jacobian(kind: ModelKind, u: &UnifiedState) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(kind.dim(), UNIFIED_DIM);
    for i in 0..6 {
        j[(i, i)] = 1.0;
    }
    let hi = kind.heading_index();
    j[(hi, 12)] = 1.0;
    match kind {
        ModelKind::Cv => {
            for i in 0..3 {
                j[(6 + i, 6 + i)] = 1.0;
            }
        }
        ModelKind::Ca => {
            for i in 0..6 {
                j[(6 + i, 6 + i)] = 1.0;
            }
        }
        ModelKind::Ctrv | ModelKind::Ctra => {
            let (gx, gy) = signed_norm_gradient(u.vx, u.vy, u.theta);
            j[(6, 6)] = gx;
            j[(6, 7)] = gy;
            if kind == ModelKind::Ctra {
                let (gx, gy) = signed_norm_gradient(u.ax, u.ay, u.theta);
                j[(7, 9)] = gx;
                j[(7, 10)] = gy;
            }
            j[(hi + 1, 13)] = 1.0;
        }
    }
    j
}

fn signed_norm_gradient(px: f64, py: f64, theta: f64) -> (f64, f64) {
    let n = signed_norm(px, py, theta);
    if n.abs() < 1e-9 {
        (cos(theta), sin(theta))
    } else {
        (px / n, py / n)
    }
}
