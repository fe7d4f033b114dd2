use std::f64::consts::PI;

use nalgebra::DVector;

use super::Environment;
use crate::error::{BanditError, Result};
use crate::rng::RandomStream;
use crate::types::{normalize_pool, ArmId, ContextVector};

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// A `N(0, I)` draw scaled to unit length.
pub fn unit_gaussian_context(dim: usize, rng: &mut RandomStream) -> ContextVector {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.standard_normal()).collect();
        let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm > 0.0 {
            return ContextVector::new(v.into_iter().map(|a| a / norm).collect()).expect("finite");
        }
    }
}

/// Where round contexts come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ContextSource {
    SyntheticGaussian,
    /// Cycles through recorded contexts.
    FromLog(Vec<ContextVector>),
}

impl ContextSource {
    pub fn context(&self, dim: usize, t: u64, rng: &mut RandomStream) -> ContextVector {
        match self {
            ContextSource::SyntheticGaussian => unit_gaussian_context(dim, rng),
            ContextSource::FromLog(xs) => xs[(t % xs.len() as u64) as usize].clone(),
        }
    }
}

/// How the true coefficients move over time.
#[derive(Debug, Clone, PartialEq)]
pub enum DriftPattern {
    /// Each coefficient takes a `N(0, 1)` step with the change probability.
    RandomWalk,
    /// Coordinate `coord` of every arm equals `values[s]` during segment `s`;
    /// segment `s` starts at `boundaries[s - 1]`.
    Piecewise {
        coord: usize,
        values: Vec<f64>,
        boundaries: Vec<u64>,
    },
    /// Coordinate `coord` of every arm follows `offset + amplitude sin(2π t / period)`.
    Periodic {
        coord: usize,
        period: f64,
        amplitude: f64,
        offset: f64,
    },
}

impl DriftPattern {
    /// Piecewise pattern with equal-length segments over `horizon` rounds.
    pub fn piecewise_even(coord: usize, values: Vec<f64>, horizon: u64) -> Self {
        let n = values.len() as u64;
        let boundaries = (1..n).map(|s| horizon * s / n).collect();
        DriftPattern::Piecewise {
            coord,
            values,
            boundaries,
        }
    }

    /// Value of the designated coordinate at round `t`, if the pattern pins one.
    pub fn pinned_value(&self, t: u64) -> Option<(usize, f64)> {
        match self {
            DriftPattern::RandomWalk => None,
            DriftPattern::Piecewise {
                coord,
                values,
                boundaries,
            } => {
                let segment = boundaries.iter().take_while(|&&b| b <= t).count();
                Some((*coord, values[segment]))
            }
            DriftPattern::Periodic {
                coord,
                period,
                amplitude,
                offset,
            } => Some((
                *coord,
                offset + amplitude * (2.0 * PI * t as f64 / period).sin(),
            )),
        }
    }

    fn validate(&self, dim: usize) -> Result<()> {
        match self {
            DriftPattern::RandomWalk => Ok(()),
            DriftPattern::Piecewise {
                coord,
                values,
                boundaries,
            } => {
                if *coord >= dim {
                    return Err(BanditError::Config(format!(
                        "drift coordinate {coord} out of range for dim {dim}"
                    )));
                }
                if values.len() != boundaries.len() + 1 {
                    return Err(BanditError::Config(
                        "piecewise needs one more value than boundaries".into(),
                    ));
                }
                if boundaries.windows(2).any(|w| w[0] >= w[1]) {
                    return Err(BanditError::Config(
                        "piecewise boundaries must increase".into(),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(BanditError::NonFinite("piecewise value"));
                }
                Ok(())
            }
            DriftPattern::Periodic {
                coord,
                period,
                amplitude,
                offset,
            } => {
                if *coord >= dim {
                    return Err(BanditError::Config(format!(
                        "drift coordinate {coord} out of range for dim {dim}"
                    )));
                }
                if !(*period > 0.0
                    && period.is_finite()
                    && amplitude.is_finite()
                    && offset.is_finite())
                {
                    return Err(BanditError::Config(
                        "periodic needs a finite period > 0".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RewardModel {
    /// Click with probability `sigmoid(wᵀx)`.
    Logistic,
    /// `wᵀx` plus Gaussian noise.
    Gaussian { noise_sd: f64 },
}

/// K arms whose coefficient vectors drift over time.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftingLinearEnv {
    arms: Vec<ArmId>,
    dim: usize,
    weights: Vec<DVector<f64>>,
    change_prob: f64,
    pattern: DriftPattern,
    reward_model: RewardModel,
}

impl DriftingLinearEnv {
    /// Draws `w_k ~ N(m, I)` around one shared `m ~ N(0, I)`.
    pub fn new(
        arms: impl IntoIterator<Item = ArmId>,
        dim: usize,
        change_prob: f64,
        pattern: DriftPattern,
        reward_model: RewardModel,
        rng: &mut RandomStream,
    ) -> Result<Self> {
        let arms = normalize_pool(arms)?;
        let m = DVector::from_fn(dim, |_, _| rng.standard_normal());
        let weights: Vec<DVector<f64>> = arms
            .iter()
            .map(|_| DVector::from_fn(dim, |i, _| m[i] + rng.standard_normal()))
            .collect();
        Self::with_weights(
            arms.into_iter().zip(weights),
            change_prob,
            pattern,
            reward_model,
        )
    }

    pub fn with_weights(
        arms: impl IntoIterator<Item = (ArmId, DVector<f64>)>,
        change_prob: f64,
        pattern: DriftPattern,
        reward_model: RewardModel,
    ) -> Result<Self> {
        let mut pairs: Vec<(ArmId, DVector<f64>)> = arms.into_iter().collect();
        let arms = normalize_pool(pairs.iter().map(|(a, _)| a.clone()))?;
        pairs.sort_by(|a, b| a.0.cmp(&b.0));
        let dim = pairs[0].1.len();
        if let Some((_, w)) = pairs.iter().find(|(_, w)| w.len() != dim) {
            return Err(BanditError::DimensionMismatch {
                expected: dim,
                actual: w.len(),
            });
        }
        if pairs.iter().any(|(_, w)| w.iter().any(|v| !v.is_finite())) {
            return Err(BanditError::NonFinite("coefficient"));
        }
        if !(0.0..=1.0).contains(&change_prob) {
            return Err(BanditError::Config(format!(
                "change probability must be in [0, 1], got {change_prob}"
            )));
        }
        pattern.validate(dim)?;
        if let RewardModel::Gaussian { noise_sd } = reward_model {
            if !(noise_sd >= 0.0 && noise_sd.is_finite()) {
                return Err(BanditError::Config(format!(
                    "noise_sd must be >= 0, got {noise_sd}"
                )));
            }
        }
        Ok(Self {
            arms,
            dim,
            weights: pairs.into_iter().map(|(_, w)| w).collect(),
            change_prob,
            pattern,
            reward_model,
        })
    }

    pub fn change_prob(&self) -> f64 {
        self.change_prob
    }

    pub fn pattern(&self) -> &DriftPattern {
        &self.pattern
    }

    fn index(&self, arm: &ArmId) -> Result<usize> {
        self.arms
            .binary_search(arm)
            .map_err(|_| BanditError::UnknownArm(arm.to_string()))
    }

    /// Current coefficient of `arm`.
    pub fn weights(&self, arm: &ArmId) -> Result<&DVector<f64>> {
        Ok(&self.weights[self.index(arm)?])
    }

    /// `wᵀx` for `arm`.
    pub fn linear_score(&self, arm: &ArmId, x: &ContextVector) -> Result<f64> {
        x.ensure_dim(self.dim)?;
        let w = self.weights(arm)?;
        Ok(x.as_slice().iter().zip(w.iter()).map(|(a, b)| a * b).sum())
    }

    /// Applies round `t`'s drift: pinned patterns set their coordinate, the
    /// random walk steps every coefficient with the change probability
    /// (from `t = 1` on, so round 0 sees the initial coefficients).
    pub fn env_drift(&mut self, t: u64, rng: &mut RandomStream) {
        match self.pattern.pinned_value(t) {
            Some((coord, value)) => {
                for w in &mut self.weights {
                    w[coord] = value;
                }
            }
            None if t > 0 && self.change_prob > 0.0 => {
                for w in &mut self.weights {
                    for v in w.iter_mut() {
                        if rng.uniform() < self.change_prob {
                            *v += rng.standard_normal();
                        }
                    }
                }
            }
            None => {}
        }
    }

    /// Reward for pulling `arm` at `x`: a click under the logistic model.
    pub fn env_step(&self, arm: &ArmId, x: &ContextVector, rng: &mut RandomStream) -> Result<f64> {
        let z = self.linear_score(arm, x)?;
        Ok(match self.reward_model {
            RewardModel::Logistic => (rng.uniform() < sigmoid(z)) as u8 as f64,
            RewardModel::Gaussian { noise_sd } => z + noise_sd * rng.standard_normal(),
        })
    }
}

impl Environment for DriftingLinearEnv {
    fn arms(&self) -> &[ArmId] {
        &self.arms
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn advance(&mut self, t: u64, rng: &mut RandomStream) {
        self.env_drift(t, rng);
    }

    fn expected_reward(&self, arm: &ArmId, x: &ContextVector) -> Result<f64> {
        let z = self.linear_score(arm, x)?;
        Ok(match self.reward_model {
            RewardModel::Logistic => sigmoid(z),
            RewardModel::Gaussian { .. } => z,
        })
    }

    fn reward(&self, arm: &ArmId, x: &ContextVector, rng: &mut RandomStream) -> Result<f64> {
        self.env_step(arm, x, rng)
    }
}
