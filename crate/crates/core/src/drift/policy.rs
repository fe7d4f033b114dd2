use nalgebra::{DMatrix, DVector};

use super::particle::{
    kalman_state_update, normalize_log_weights, param_update, particle_log_weight,
    per_particle_w_posterior, resample, sample_params, sample_state, DriftPrior, ParticleSet,
};
use crate::bayes::VarianceForm;
use crate::error::{BanditError, Result};
use crate::linalg::{self, psd_sqrt, quad_form, sample_with_factor, symmetrize};
use crate::rng::RandomStream;
use crate::types::{argmax_first, normalize_pool, ArmId, ContextVector, Interaction, Policy};

/// Particle-averaged coefficient posterior of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct AggregatePosterior {
    /// `(1/p) Σ μ_w⁽ⁱ⁾`
    pub mu_bar: DVector<f64>,
    /// `(1/p²) Σ σ²⁽ⁱ⁾ Σ_w⁽ⁱ⁾`
    pub sigma_bar: DMatrix<f64>,
    /// `(1/p²) Σ σ²⁽ⁱ⁾`
    pub noise: f64,
    sigma_bar_inv: Option<DMatrix<f64>>,
    sigma_bar_factor: Option<DMatrix<f64>>,
}

impl AggregatePosterior {
    pub fn new(mu_bar: DVector<f64>, sigma_bar: DMatrix<f64>, noise: f64) -> Self {
        let sigma_bar_inv = linalg::inverse(&sigma_bar, "aggregated covariance")
            .ok()
            .map(|mut m| {
                symmetrize(&mut m);
                m
            });
        let sigma_bar_factor = psd_sqrt(&sigma_bar).ok();
        Self {
            mu_bar,
            sigma_bar,
            noise,
            sigma_bar_inv,
            sigma_bar_factor,
        }
    }

    pub fn expected_reward(&self, x: &DVector<f64>) -> f64 {
        x.dot(&self.mu_bar)
    }

    /// `xᵀμ̄ + λ sqrt(xᵀ Σ̄⁻¹ x + noise)`; the covariance form uses `xᵀ Σ̄ x`.
    pub fn ucb_score(&self, x: &DVector<f64>, lambda: f64, form: VarianceForm) -> Result<f64> {
        let quad = match form {
            VarianceForm::Inverse => {
                let inv = self
                    .sigma_bar_inv
                    .as_ref()
                    .ok_or(BanditError::Singular("aggregated covariance"))?;
                quad_form(inv, x)
            }
            VarianceForm::Covariance => quad_form(&self.sigma_bar, x),
        };
        Ok(self.expected_reward(x) + lambda * (quad + self.noise).max(0.0).sqrt())
    }

    /// `w̄ ~ N(μ̄, Σ̄)`.
    pub fn sample(&self, rng: &mut RandomStream) -> Result<DVector<f64>> {
        let factor = self.sigma_bar_factor.as_ref().ok_or(BanditError::NotPsd)?;
        Ok(sample_with_factor(&self.mu_bar, factor, 1.0, rng))
    }
}

pub fn aggregate_posterior(set: &ParticleSet) -> Result<AggregatePosterior> {
    let p = set.p();
    if p == 0 {
        return Err(BanditError::EmptyParticleSet);
    }
    let d = set.particles[0].dim();
    let mut mu_sum = DVector::zeros(d);
    let mut sigma_sum = DMatrix::zeros(d, d);
    let mut noise_sum = 0.0;
    for pt in &set.particles {
        let (mu_w, sigma_w) = per_particle_w_posterior(pt)?;
        mu_sum += mu_w;
        sigma_sum += sigma_w * pt.sigma2;
        noise_sum += pt.sigma2;
    }
    let p = p as f64;
    let mut sigma_bar = sigma_sum / (p * p);
    symmetrize(&mut sigma_bar);
    Ok(AggregatePosterior::new(
        mu_sum / p,
        sigma_bar,
        noise_sum / (p * p),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvKind {
    /// Time-varying UCB.
    Ucb,
    /// Time-varying Thompson sampling.
    Thompson,
}

/// Index of the arm to pull; `aggregates` follow sorted arm order.
pub fn tv_select(
    kind: TvKind,
    aggregates: &[AggregatePosterior],
    x: &ContextVector,
    lambda: f64,
    form: VarianceForm,
    rng: &mut RandomStream,
) -> Result<usize> {
    let first = aggregates.first().ok_or(BanditError::EmptyArmPool)?;
    x.ensure_dim(first.mu_bar.len())?;
    let xv = x.to_dvector();
    let scores: Vec<f64> = match kind {
        TvKind::Ucb => aggregates
            .iter()
            .map(|a| a.ucb_score(&xv, lambda, form))
            .collect::<Result<_>>()?,
        TvKind::Thompson => aggregates
            .iter()
            .map(|a| a.sample(rng).map(|w| xv.dot(&w)))
            .collect::<Result<_>>()?,
    };
    if scores.iter().any(|s| s.is_nan()) {
        return Err(BanditError::NonFinite("arm score"));
    }
    Ok(argmax_first(&scores).expect("non-empty"))
}

/// One resample-propagate step for the pulled arm:
///
/// 1. weight every particle by the predictive density of `r`;
/// 2. resample p particles (stream `rng.child(0)`);
/// 3. per particle `i` (stream `rng.child(i + 1)`): Kalman state update,
///    sample `η`, parameter update, sample `(σ², c_w, θ)`.
pub fn drift_update(
    set: &ParticleSet,
    x: &ContextVector,
    r: f64,
    rng: &RandomStream,
) -> Result<ParticleSet> {
    if set.p() == 0 {
        return Err(BanditError::EmptyParticleSet);
    }
    if !r.is_finite() {
        return Err(BanditError::NonFinite("reward"));
    }
    let log_weights = set
        .particles
        .iter()
        .map(|pt| particle_log_weight(pt, x, r))
        .collect::<Result<Vec<_>>>()?;
    let weights = normalize_log_weights(&log_weights)?;
    let mut next = resample(set, &weights, &mut rng.child(0))?;
    for (i, pt) in next.particles.iter_mut().enumerate() {
        let mut stream = rng.child(i as u64 + 1);
        let (mu_eta, sigma_eta) = kalman_state_update(pt, x, r)?;
        pt.mu_eta = mu_eta;
        pt.sigma_eta = sigma_eta;
        sample_state(pt, &mut stream)?;
        *pt = param_update(pt, x, r)?;
        sample_params(pt, &mut stream)?;
    }
    Ok(next)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriftConfig {
    pub kind: TvKind,
    pub lambda: f64,
    pub particles: usize,
    pub prior: DriftPrior,
    pub variance_form: VarianceForm,
}

impl DriftConfig {
    pub fn new(kind: TvKind) -> Self {
        Self {
            kind,
            lambda: 0.5,
            particles: 5,
            prior: DriftPrior::default(),
            variance_form: VarianceForm::Inverse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.particles == 0 {
            return Err(BanditError::Config("particle count must be >= 1".into()));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(BanditError::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        let p = &self.prior;
        if !(p.q0 > 0.0 && p.alpha0 > 0.0 && p.beta0 > 0.0) {
            return Err(BanditError::Config("q0, alpha0, beta0 must be > 0".into()));
        }
        Ok(())
    }
}

/// TVUCB / TVTP over a pool of arms, each with its own particle set.
#[derive(Debug, Clone)]
pub struct DriftPolicy {
    config: DriftConfig,
    arms: Vec<ArmId>,
    sets: Vec<ParticleSet>,
    aggregates: Vec<AggregatePosterior>,
}

impl DriftPolicy {
    /// Arm `k` (in sorted order) draws its prior particles from `rng.child(k)`.
    pub fn new(
        config: DriftConfig,
        arms: impl IntoIterator<Item = ArmId>,
        dim: usize,
        rng: &RandomStream,
    ) -> Result<Self> {
        config.validate()?;
        let arms = normalize_pool(arms)?;
        let sets = arms
            .iter()
            .enumerate()
            .map(|(k, arm)| {
                ParticleSet::from_prior(
                    arm.clone(),
                    config.particles,
                    dim,
                    &config.prior,
                    &rng.child(k as u64),
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let aggregates = sets
            .iter()
            .map(aggregate_posterior)
            .collect::<Result<_>>()?;
        Ok(Self {
            config,
            arms,
            sets,
            aggregates,
        })
    }

    pub fn config(&self) -> &DriftConfig {
        &self.config
    }

    pub fn particle_set(&self, arm: &ArmId) -> Option<&ParticleSet> {
        self.arms.binary_search(arm).ok().map(|k| &self.sets[k])
    }

    pub fn aggregate(&self, arm: &ArmId) -> Option<&AggregatePosterior> {
        self.arms
            .binary_search(arm)
            .ok()
            .map(|k| &self.aggregates[k])
    }
}

impl Policy for DriftPolicy {
    fn name(&self) -> String {
        match self.config.kind {
            TvKind::Ucb => format!("TVUCB({})", self.config.lambda),
            TvKind::Thompson => format!("TVTP({})", self.config.prior.q0),
        }
    }

    fn arms(&self) -> &[ArmId] {
        &self.arms
    }

    fn select(&self, context: &ContextVector, rng: &mut RandomStream) -> Result<ArmId> {
        let k = tv_select(
            self.config.kind,
            &self.aggregates,
            context,
            self.config.lambda,
            self.config.variance_form,
            rng,
        )?;
        Ok(self.arms[k].clone())
    }

    fn update(&mut self, interaction: &Interaction, rng: &mut RandomStream) -> Result<()> {
        let k = self
            .arms
            .binary_search(&interaction.chosen)
            .map_err(|_| BanditError::UnknownArm(interaction.chosen.to_string()))?;
        let next = drift_update(&self.sets[k], &interaction.context, interaction.reward, rng)?;
        self.aggregates[k] = aggregate_posterior(&next)?;
        self.sets[k] = next;
        Ok(())
    }
}
