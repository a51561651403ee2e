//! Interacting Multiple Model filter bank.
//!
//! Each model filters independently from its own previous posterior; the
//! model outputs are fused by the current mode probabilities, and those
//! probabilities follow a Markov chain reweighted by measurement
//! likelihoods. The classical interaction (state-mixing) step can be
//! enabled with [`ImmConfig::mixing`].

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::filter::{self, NoiseConfig, Observation};
use crate::math::{atan2, cos, ensure_psd, sin, wrap_angle};
use crate::motion::{
    from_unified, from_unified_jacobian, to_unified_jacobian, ModelKind, ModelState, UnifiedState, UNIFIED_DIM,
};

/// Likelihoods are floored here before normalizing mode probabilities.
pub const LIKELIHOOD_FLOOR: f64 = 1e-300;

const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct ImmConfig {
    pub model_set: Vec<ModelKind>,
    /// Row-stochastic; entry `(j, i)` is the probability of switching from
    /// model `j` to model `i`.
    pub markov: DMatrix<f64>,
    pub initial_probabilities: DVector<f64>,
    /// Run the interaction step before prediction.
    pub mixing: bool,
}

impl ImmConfig {
    /// Sticky Markov chain with `stay` on the diagonal and the remainder
    /// spread evenly, uniform prior.
    pub fn sticky(model_set: Vec<ModelKind>, stay: f64) -> Self {
        let n = model_set.len();
        let off = if n > 1 { (1.0 - stay) / (n - 1) as f64 } else { 0.0 };
        let markov = DMatrix::from_fn(n, n, |i, j| {
            if i == j {
                if n > 1 {
                    stay
                } else {
                    1.0
                }
            } else {
                off
            }
        });
        ImmConfig {
            model_set,
            markov,
            initial_probabilities: DVector::from_element(n, 1.0 / n as f64),
            mixing: false,
        }
    }

    /// A single-model "bank": an ordinary (extended) Kalman filter.
    pub fn single(kind: ModelKind) -> Self {
        ImmConfig::sticky(alloc::vec![kind], 1.0)
    }

    pub fn len(&self) -> usize {
        self.model_set.len()
    }

    pub fn is_empty(&self) -> bool {
        self.model_set.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.model_set.len();
        if n == 0 {
            return Err(Error::Config("IMM model set is empty".into()));
        }
        if self.markov.nrows() != n || self.markov.ncols() != n {
            return Err(Error::Config(alloc::format!(
                "Markov matrix must be {n}x{n}, got {}x{}",
                self.markov.nrows(),
                self.markov.ncols()
            )));
        }
        for (r, row) in self.markov.row_iter().enumerate() {
            if row.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
                return Err(Error::Config(alloc::format!(
                    "Markov row {r} has entries outside [0, 1]"
                )));
            }
            if (row.sum() - 1.0).abs() > SIMPLEX_TOLERANCE {
                return Err(Error::Config(alloc::format!("Markov row {r} sums to {}", row.sum())));
            }
        }
        check_simplex(&self.initial_probabilities, n)
    }
}

impl Default for ImmConfig {
    fn default() -> Self {
        ImmConfig::sticky(ModelKind::ALL.to_vec(), 0.91)
    }
}

fn check_simplex(p: &DVector<f64>, n: usize) -> Result<()> {
    if p.len() != n {
        return Err(Error::Config(alloc::format!(
            "expected {n} model probabilities, got {}",
            p.len()
        )));
    }
    if p.iter().any(|&v| !(0.0..=1.0).contains(&v)) || (p.sum() - 1.0).abs() > SIMPLEX_TOLERANCE {
        return Err(Error::Config("model probabilities are not on the simplex".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ImmState {
    pub models: Vec<ModelState>,
    pub probabilities: DVector<f64>,
    pub fused: UnifiedState,
    pub fused_covariance: DMatrix<f64>,
}

impl ImmState {
    /// Index of the most probable model (first on ties).
    pub fn dominant(&self) -> usize {
        let mut best = 0;
        for i in 1..self.probabilities.len() {
            if self.probabilities[i] > self.probabilities[best] {
                best = i;
            }
        }
        best
    }

    pub fn dominant_kind(&self) -> ModelKind {
        self.models[self.dominant()].kind
    }
}

/// Initializes every model at the detection pose and extent with zero
/// kinematics.
pub fn imm_init(
    center: [f64; 3],
    extent: [f64; 3],
    yaw: f64,
    config: &ImmConfig,
    noise: &NoiseConfig,
) -> Result<ImmState> {
    config.validate()?;
    let seed = UnifiedState {
        x: center[0],
        y: center[1],
        z: center[2],
        w: extent[0],
        l: extent[1],
        h: extent[2],
        theta: wrap_angle(yaw),
        ..UnifiedState::default()
    };
    let models = config
        .model_set
        .iter()
        .map(|&k| ModelState::new(k, from_unified(k, &seed), noise.initial(k).clone()))
        .collect::<Result<Vec<_>>>()?;
    let probabilities = config.initial_probabilities.clone();
    let (fused, fused_covariance) = fuse(&models, &probabilities);
    Ok(ImmState {
        models,
        probabilities,
        fused,
        fused_covariance,
    })
}

/// Predicts every model over `dt` and fuses the predictions with the
/// previous mode probabilities. The returned unified state is the
/// association-stage prediction.
pub fn imm_predict(
    state: &ImmState,
    dt: f64,
    config: &ImmConfig,
    noise: &NoiseConfig,
) -> Result<(ImmState, UnifiedState)> {
    let sources = if config.mixing {
        mix(state, &config.markov)?
    } else {
        state.models.clone()
    };
    let models = sources
        .iter()
        .map(|m| filter::predict(m, noise, dt))
        .collect::<Result<Vec<_>>>()?;
    let probabilities = state.probabilities.clone();
    let (fused, fused_covariance) = fuse(&models, &probabilities);
    Ok((
        ImmState {
            models,
            probabilities,
            fused,
            fused_covariance,
        },
        fused,
    ))
}

/// Updates every model against `obs` and recomputes the mode
/// probabilities.
pub fn imm_update(state: &ImmState, obs: &Observation, config: &ImmConfig, noise: &NoiseConfig) -> Result<ImmState> {
    let mut models = Vec::with_capacity(state.models.len());
    let mut likelihoods = DVector::zeros(state.models.len());
    for (i, m) in state.models.iter().enumerate() {
        let r = filter::update(m, obs, noise)?;
        likelihoods[i] = r.likelihood;
        models.push(r.posterior);
    }
    let probabilities = update_probabilities(&config.markov, &state.probabilities, &likelihoods);
    let (fused, fused_covariance) = fuse(&models, &probabilities);
    Ok(ImmState {
        models,
        probabilities,
        fused,
        fused_covariance,
    })
}

/// Predicted mode probabilities `c_i = Σ_j π_ji μ_j`.
pub fn predicted_probabilities(markov: &DMatrix<f64>, prior: &DVector<f64>) -> DVector<f64> {
    markov.transpose() * prior
}

/// `μ_i = c_i Λ_i / Σ_j c_j Λ_j` with likelihoods floored at
/// [`LIKELIHOOD_FLOOR`]; when every likelihood sits on the floor the
/// predicted probabilities `c` are returned.
pub fn update_probabilities(markov: &DMatrix<f64>, prior: &DVector<f64>, likelihoods: &DVector<f64>) -> DVector<f64> {
    let c = predicted_probabilities(markov, prior);
    let floored = likelihoods.map(|l| {
        if l.is_nan() {
            LIKELIHOOD_FLOOR
        } else {
            l.max(LIKELIHOOD_FLOOR)
        }
    });
    let c_sum = c.sum();
    let c = if c_sum > 0.0 { c / c_sum } else { c };
    if floored.iter().all(|&l| l <= LIKELIHOOD_FLOOR) {
        return c;
    }
    let weighted = c.component_mul(&floored);
    let total = weighted.sum();
    if !(total > 0.0) || !total.is_finite() {
        return c;
    }
    weighted / total
}

/// Probability-weighted fusion of the model states in unified coordinates.
///
/// Heading is a circular mean; the covariance is the mixture second moment
/// (weighted covariances plus the spread of the means), with the heading
/// spread measured on the circle.
pub fn fuse(models: &[ModelState], probabilities: &DVector<f64>) -> (UnifiedState, DMatrix<f64>) {
    if models.len() == 1 {
        let m = &models[0];
        let j = to_unified_jacobian(m.kind, &m.mean);
        return (m.to_unified(), &j * &m.covariance * j.transpose());
    }
    let unified: Vec<UnifiedState> = models.iter().map(|m| m.to_unified()).collect();
    let mut mean = DVector::zeros(UNIFIED_DIM);
    let (mut sx, mut cx) = (0.0, 0.0);
    for (u, &p) in unified.iter().zip(probabilities.iter()) {
        mean += u.to_vector() * p;
        sx += p * sin(u.theta);
        cx += p * cos(u.theta);
    }
    mean[12] = if sx == 0.0 && cx == 0.0 {
        unified[0].theta
    } else {
        atan2(sx, cx)
    };
    let fused = UnifiedState::from_vector(&mean).expect("unified dimension");
    let mean = fused.to_vector();

    let mut cov = DMatrix::zeros(UNIFIED_DIM, UNIFIED_DIM);
    for ((m, u), &p) in models.iter().zip(&unified).zip(probabilities.iter()) {
        if p == 0.0 {
            continue;
        }
        let j = to_unified_jacobian(m.kind, &m.mean);
        let mut d = u.to_vector() - &mean;
        d[12] = wrap_angle(d[12]);
        cov += (&j * &m.covariance * j.transpose() + &d * d.transpose()) * p;
    }
    crate::math::symmetrize(&mut cov);
    (fused, cov)
}

/// Interaction step: each model restarts from the mixture of all model
/// posteriors, weighted by the probability of having switched into it.
fn mix(state: &ImmState, markov: &DMatrix<f64>) -> Result<Vec<ModelState>> {
    let n = state.models.len();
    let c = predicted_probabilities(markov, &state.probabilities);
    let unified: Vec<UnifiedState> = state.models.iter().map(|m| m.to_unified()).collect();
    let mut out = Vec::with_capacity(n);
    for (j, target) in state.models.iter().enumerate() {
        if !(c[j] > 0.0) {
            out.push(target.clone());
            continue;
        }
        let kind = target.kind;
        let weights: Vec<f64> = (0..n).map(|i| markov[(i, j)] * state.probabilities[i] / c[j]).collect();
        let converted: Vec<DVector<f64>> = unified.iter().map(|u| from_unified(kind, u)).collect();

        let hi = kind.heading_index();
        let mut mean = DVector::zeros(kind.dim());
        let (mut sx, mut cx) = (0.0, 0.0);
        for (x, &w) in converted.iter().zip(&weights) {
            mean += x * w;
            sx += w * sin(x[hi]);
            cx += w * cos(x[hi]);
        }
        mean[hi] = if sx == 0.0 && cx == 0.0 {
            target.heading()
        } else {
            atan2(sx, cx)
        };

        let mut cov = DMatrix::zeros(kind.dim(), kind.dim());
        for (i, (x, &w)) in converted.iter().zip(&weights).enumerate() {
            if w == 0.0 {
                continue;
            }
            let src = &state.models[i];
            let p = if src.kind == kind {
                src.covariance.clone()
            } else {
                let t = from_unified_jacobian(kind, &unified[i]) * to_unified_jacobian(src.kind, &src.mean);
                &t * &src.covariance * t.transpose()
            };
            let mut d = x - &mean;
            d[hi] = wrap_angle(d[hi]);
            cov += (p + &d * d.transpose()) * w;
        }
        // Quantities a source model does not carry contribute no variance
        // after conversion, so keep the target's own uncertainty on them.
        for k in 0..kind.dim() {
            if cov[(k, k)] < target.covariance[(k, k)] * 1e-6 {
                cov[(k, k)] = target.covariance[(k, k)];
            }
        }
        ensure_psd(&mut cov)?;
        out.push(ModelState::new(kind, mean, cov)?);
    }
    Ok(out)
}
