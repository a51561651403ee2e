//! Trajectory lifecycle: the damping-window score and the
//! tentative/active/terminated state machine, plus a hit/miss counting
//! fallback for classes managed without the score.
//!
//! The damping-window score of a trajectory at frame `t` is the weighted
//! fraction of associated frames,
//!
//! ```text
//! s(t) = Σ wᵢ f(i − t) / Σ f(i − t),    f(x) = e^{λx}, x ≤ 0
//! ```
//!
//! with `wᵢ ∈ {0, 1}` the association flag of frame `i`. Because `f` is
//! exponential, numerator and denominator obey `N_t = e^{−λ} N_{t−1} + w_t`
//! and `D_t = e^{−λ} D_{t−1} + 1`, which [`DampingAccumulator`] tracks in
//! constant time per frame.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LifecyclePhase {
    Tentative,
    Active,
    Terminated,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingConfig {
    /// Decay rate per frame.
    pub lambda: f64,
    pub theta_active: f64,
    pub theta_tentative: f64,
    /// Consecutive misses that terminate a trajectory regardless of score.
    pub max_coast: u32,
}

impl DampingConfig {
    pub fn with_thresholds(theta_active: f64, theta_tentative: f64) -> Self {
        DampingConfig {
            theta_active,
            theta_tentative,
            ..DampingConfig::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Config(alloc::format!(
                "damping rate must be positive (got {})",
                self.lambda
            )));
        }
        if !(0.0 <= self.theta_tentative && self.theta_tentative < self.theta_active && self.theta_active <= 1.0) {
            return Err(Error::Config(alloc::format!(
                "need 0 <= tentative < active <= 1 (got {}, {})",
                self.theta_tentative,
                self.theta_active
            )));
        }
        Ok(())
    }
}

impl Default for DampingConfig {
    fn default() -> Self {
        DampingConfig {
            lambda: 0.4,
            theta_active: 0.3,
            theta_tentative: 0.05,
            max_coast: 10,
        }
    }
}

/// Hit/miss counting management.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountConfig {
    /// Associated frames needed before a trajectory is confirmed.
    pub confirm_hits: u32,
    /// Consecutive misses that terminate a confirmed trajectory.
    pub max_misses: u32,
}

impl Default for CountConfig {
    fn default() -> Self {
        CountConfig {
            confirm_hits: 2,
            max_misses: 5,
        }
    }
}

/// How a class's trajectories are born, confirmed and killed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Management {
    DampingWindow(DampingConfig),
    Count(CountConfig),
}

/// Damping function `f(x) = e^{λx}` on `x ≤ 0`.
pub fn damping_function(lambda: f64, x: f64) -> Result<f64> {
    if x > 0.0 {
        return Err(Error::Domain {
            name: "frame offset",
            value: x,
        });
    }
    Ok(exp(lambda * x))
}

/// Association flags of a trajectory from its birth frame onwards.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationHistory {
    pub birth_frame: i64,
    pub flags: Vec<bool>,
}

impl AssociationHistory {
    /// A history born from an associated detection.
    pub fn born(birth_frame: i64) -> Self {
        AssociationHistory {
            birth_frame,
            flags: alloc::vec![true],
        }
    }

    pub fn from_flags(birth_frame: i64, flags: Vec<bool>) -> Self {
        AssociationHistory { birth_frame, flags }
    }

    pub fn push(&mut self, associated: bool) {
        self.flags.push(associated);
    }

    /// Frame index of the most recent flag.
    pub fn last_frame(&self) -> i64 {
        self.birth_frame + self.flags.len() as i64 - 1
    }

    pub fn hits(&self) -> usize {
        self.flags.iter().filter(|&&f| f).count()
    }

    pub fn consecutive_misses(&self) -> u32 {
        self.flags.iter().rev().take_while(|&&f| !f).count() as u32
    }
}

/// Direct evaluation of the damping-window score at frame `t`.
pub fn dw_score(history: &AssociationHistory, t: i64, lambda: f64) -> f64 {
    let (mut num, mut den) = (0.0, 0.0);
    for (k, &flag) in history.flags.iter().enumerate() {
        let offset = (history.birth_frame + k as i64 - t) as f64;
        let f = exp(lambda * offset.min(0.0));
        den += f;
        if flag {
            num += f;
        }
    }
    if den > 0.0 {
        (num / den).clamp(0.0, 1.0)
    } else {
        0.0
    }
}

/// Running numerator/denominator of the damping-window score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DampingAccumulator {
    decay: f64,
    numerator: f64,
    denominator: f64,
}

impl DampingAccumulator {
    pub fn new(lambda: f64) -> Self {
        DampingAccumulator {
            decay: exp(-lambda),
            numerator: 0.0,
            denominator: 0.0,
        }
    }

    /// Advances one frame with association flag `associated`.
    pub fn push(&mut self, associated: bool) {
        self.numerator = self.decay * self.numerator + if associated { 1.0 } else { 0.0 };
        self.denominator = self.decay * self.denominator + 1.0;
    }

    pub fn score(&self) -> f64 {
        if self.denominator > 0.0 {
            (self.numerator / self.denominator).clamp(0.0, 1.0)
        } else {
            0.0
        }
    }
}

/// Damping-window phase transition.
pub fn step_phase(
    phase: LifecyclePhase,
    score: f64,
    consecutive_misses: u32,
    config: &DampingConfig,
) -> LifecyclePhase {
    if phase == LifecyclePhase::Terminated || consecutive_misses >= config.max_coast {
        return LifecyclePhase::Terminated;
    }
    if score >= config.theta_active {
        LifecyclePhase::Active
    } else if score >= config.theta_tentative {
        LifecyclePhase::Tentative
    } else {
        LifecyclePhase::Terminated
    }
}

/// Counting phase transition: tentative until `confirm_hits` associations,
/// a tentative trajectory dies on its first miss, a confirmed one after
/// `max_misses` consecutive misses.
pub fn step_count_phase(
    phase: LifecyclePhase,
    hits: u32,
    consecutive_misses: u32,
    config: &CountConfig,
) -> LifecyclePhase {
    match phase {
        LifecyclePhase::Terminated => LifecyclePhase::Terminated,
        LifecyclePhase::Tentative if consecutive_misses > 0 => LifecyclePhase::Terminated,
        LifecyclePhase::Tentative if hits >= config.confirm_hits => LifecyclePhase::Active,
        LifecyclePhase::Tentative => LifecyclePhase::Tentative,
        LifecyclePhase::Active if consecutive_misses >= config.max_misses => LifecyclePhase::Terminated,
        LifecyclePhase::Active => LifecyclePhase::Active,
    }
}
