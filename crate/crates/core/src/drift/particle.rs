use nalgebra::{DMatrix, DVector};

use crate::error::{BanditError, Result};
use crate::linalg::{self, psd_sqrt, quad_form, sample_with_factor, spd_inverse, symmetrize};
use crate::rng::RandomStream;
use crate::types::{ArmId, ContextVector};

/// Prior shared by every particle of every arm: `μ = 0`, `Σ = q0⁻¹ I₂d`,
/// `μ_η = 0`, `Σ_η = I`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftPrior {
    pub q0: f64,
    pub alpha0: f64,
    pub beta0: f64,
}

impl Default for DriftPrior {
    fn default() -> Self {
        Self {
            q0: 1.0,
            alpha0: 2.0,
            beta0: 2.0,
        }
    }
}

/// Sampled values and sufficient statistics for one arm hypothesis.
#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub sigma2: f64,
    pub c_w: DVector<f64>,
    pub theta: DVector<f64>,
    pub eta: DVector<f64>,
    /// Joint mean of `ν = (c_w, θ)`, length 2d.
    pub mu_nu: DVector<f64>,
    /// Joint covariance of `ν` (before the σ² scale), 2d × 2d.
    pub sigma_nu: DMatrix<f64>,
    pub alpha: f64,
    pub beta: f64,
    pub mu_eta: DVector<f64>,
    pub sigma_eta: DMatrix<f64>,
}

impl Particle {
    /// Draws a particle from the prior.
    pub fn from_prior(dim: usize, prior: &DriftPrior, rng: &mut RandomStream) -> Result<Self> {
        if !(prior.q0 > 0.0 && prior.alpha0 > 0.0 && prior.beta0 > 0.0) {
            return Err(BanditError::InvalidPosterior(
                "drift prior requires q0, alpha0, beta0 > 0".into(),
            ));
        }
        let mut pt = Self {
            sigma2: 1.0,
            c_w: DVector::zeros(dim),
            theta: DVector::zeros(dim),
            eta: DVector::zeros(dim),
            mu_nu: DVector::zeros(2 * dim),
            sigma_nu: DMatrix::identity(2 * dim, 2 * dim) / prior.q0,
            alpha: prior.alpha0,
            beta: prior.beta0,
            mu_eta: DVector::zeros(dim),
            sigma_eta: DMatrix::identity(dim, dim),
        };
        sample_params(&mut pt, rng)?;
        sample_state(&mut pt, rng)?;
        Ok(pt)
    }

    pub fn dim(&self) -> usize {
        self.c_w.len()
    }

    /// The particle's realized coefficient `c_w + θ ⊙ η`.
    pub fn coefficient(&self) -> DVector<f64> {
        &self.c_w + self.theta.component_mul(&self.eta)
    }

    pub fn mu_c(&self) -> DVector<f64> {
        self.mu_nu.rows(0, self.dim()).into_owned()
    }

    pub fn mu_theta(&self) -> DVector<f64> {
        self.mu_nu.rows(self.dim(), self.dim()).into_owned()
    }

    pub fn sigma_c(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.sigma_nu.view((0, 0), (d, d)).into_owned()
    }

    pub fn sigma_theta(&self) -> DMatrix<f64> {
        let d = self.dim();
        self.sigma_nu.view((d, d), (d, d)).into_owned()
    }

    fn check(&self, x: &ContextVector) -> Result<()> {
        x.ensure_dim(self.dim())
    }
}

/// Predictive mean and variance of the reward with the state integrated out:
/// `m = xᵀ(c_w + θ⊙μ_η)`, `Q = σ² + (x⊙θ)ᵀ (I + Σ_η) (x⊙θ)`.
pub fn predictive(pt: &Particle, x: &ContextVector) -> Result<(f64, f64)> {
    pt.check(x)?;
    let xv = x.to_dvector();
    let m = xv.dot(&(&pt.c_w + pt.theta.component_mul(&pt.mu_eta)));
    let tx = pt.theta.component_mul(&xv);
    let spread = &pt.sigma_eta + DMatrix::identity(pt.dim(), pt.dim());
    let q = pt.sigma2 + quad_form(&spread, &tx);
    if !q.is_finite() || q <= 0.0 {
        return Err(BanditError::NonPositiveVariance(q));
    }
    Ok((m, q))
}

/// Unnormalized particle weight: the density `N(r; m, Q)`.
pub fn particle_weight(pt: &Particle, x: &ContextVector, r: f64) -> Result<f64> {
    let (m, q) = predictive(pt, x)?;
    Ok((-(r - m).powi(2) / (2.0 * q)).exp() / (2.0 * std::f64::consts::PI * q).sqrt())
}

/// Log of [`particle_weight`], used for normalization so that far-off
/// observations do not underflow every weight to zero.
pub fn particle_log_weight(pt: &Particle, x: &ContextVector, r: f64) -> Result<f64> {
    let (m, q) = predictive(pt, x)?;
    Ok(-(r - m).powi(2) / (2.0 * q) - 0.5 * (2.0 * std::f64::consts::PI * q).ln())
}

pub fn normalize_weights(weights: &[f64]) -> Result<Vec<f64>> {
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(BanditError::InvalidWeights(
            "weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(BanditError::WeightCollapse);
    }
    Ok(weights.iter().map(|w| w / total).collect())
}

pub fn normalize_log_weights(log_weights: &[f64]) -> Result<Vec<f64>> {
    if log_weights
        .iter()
        .any(|l| l.is_nan() || *l == f64::INFINITY)
    {
        return Err(BanditError::InvalidWeights(
            "log-weights must not be NaN or +inf".into(),
        ));
    }
    let max = log_weights
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(BanditError::WeightCollapse);
    }
    let shifted: Vec<f64> = log_weights.iter().map(|l| (l - max).exp()).collect();
    normalize_weights(&shifted)
}

/// The p particles of one arm.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleSet {
    pub arm: ArmId,
    pub particles: Vec<Particle>,
}

impl ParticleSet {
    /// `p` prior particles; particle `i` is drawn from `rng.child(i)`.
    pub fn from_prior(
        arm: ArmId,
        p: usize,
        dim: usize,
        prior: &DriftPrior,
        rng: &RandomStream,
    ) -> Result<Self> {
        if p == 0 {
            return Err(BanditError::EmptyParticleSet);
        }
        let particles = (0..p)
            .map(|i| Particle::from_prior(dim, prior, &mut rng.child(i as u64)))
            .collect::<Result<_>>()?;
        Ok(Self { arm, particles })
    }

    pub fn p(&self) -> usize {
        self.particles.len()
    }

    /// Mean over particles of `c_w + θ ⊙ η`.
    pub fn mean_coefficient(&self) -> DVector<f64> {
        let p = self.p() as f64;
        self.particles
            .iter()
            .fold(DVector::zeros(self.particles[0].dim()), |acc, pt| {
                acc + pt.coefficient()
            })
            / p
    }
}

/// Multinomial resampling with replacement: p draws proportional to `weights`.
pub fn resample(set: &ParticleSet, weights: &[f64], rng: &mut RandomStream) -> Result<ParticleSet> {
    let p = set.p();
    if p == 0 {
        return Err(BanditError::EmptyParticleSet);
    }
    if weights.len() != p {
        return Err(BanditError::DimensionMismatch {
            expected: p,
            actual: weights.len(),
        });
    }
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(BanditError::InvalidWeights(
            "weights must be finite and non-negative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Err(BanditError::WeightCollapse);
    }
    if (total - 1.0).abs() > 1e-9 {
        return Err(BanditError::InvalidWeights(format!(
            "weights sum to {total}, expected 1"
        )));
    }
    let mut cumulative = Vec::with_capacity(p);
    let mut acc = 0.0;
    for w in weights {
        acc += w;
        cumulative.push(acc);
    }
    let last_positive = weights.iter().rposition(|w| *w > 0.0).expect("total > 0");
    let particles = (0..p)
        .map(|_| {
            let u = rng.uniform() * total;
            let i = cumulative
                .iter()
                .position(|c| *c > u)
                .unwrap_or(last_positive);
            set.particles[i].clone()
        })
        .collect();
    Ok(ParticleSet {
        arm: set.arm.clone(),
        particles,
    })
}

/// Kalman correction of the state statistics:
///
/// ```text
/// G   = (I + Σ_η)(θ⊙x) / Q
/// μ'_η = μ_η + G (r − xᵀ(c_w + θ⊙μ_η))
/// Σ'_η = Σ_η + I − G Q Gᵀ
/// ```
pub fn kalman_state_update(
    pt: &Particle,
    x: &ContextVector,
    r: f64,
) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let (m, q) = predictive(pt, x)?;
    let d = pt.dim();
    let tx = pt.theta.component_mul(&x.to_dvector());
    let spread = &pt.sigma_eta + DMatrix::identity(d, d);
    let gain = (&spread * tx) / q;
    let mu = &pt.mu_eta + &gain * (r - m);
    let mut sigma = spread - (&gain * gain.transpose()) * q;
    symmetrize(&mut sigma);
    Ok((mu, sigma))
}

/// Draws `η ~ N(μ_η, Σ_η)` from the particle's current state statistics and
/// stores it.
pub fn sample_state(pt: &mut Particle, rng: &mut RandomStream) -> Result<DVector<f64>> {
    let factor = psd_sqrt(&pt.sigma_eta)?;
    pt.eta = sample_with_factor(&pt.mu_eta, &factor, 1.0, rng);
    Ok(pt.eta.clone())
}

/// Conjugate update of `(μ, Σ, α, β)` for `ν = (c_w, θ)` with regressor
/// `z = (x, x⊙η)` using the particle's freshly sampled `η`.
pub fn param_update(pt: &Particle, x: &ContextVector, r: f64) -> Result<Particle> {
    pt.check(x)?;
    if !r.is_finite() {
        return Err(BanditError::NonFinite("reward"));
    }
    let xv = x.to_dvector();
    let d = pt.dim();
    let mut z = DVector::zeros(2 * d);
    z.rows_mut(0, d).copy_from(&xv);
    z.rows_mut(d, d).copy_from(&xv.component_mul(&pt.eta));

    let precision = spd_inverse(&pt.sigma_nu, "parameter covariance")?;
    let mut precision_new = &precision + &z * z.transpose();
    symmetrize(&mut precision_new);
    let chol = precision_new
        .clone()
        .cholesky()
        .ok_or(BanditError::Singular("parameter precision"))?;
    let mu_new = chol.solve(&(&precision * &pt.mu_nu + &z * r));
    let mut sigma_new = chol.inverse();
    symmetrize(&mut sigma_new);

    // ½(μᵀΣ⁻¹μ + r² − μ'ᵀΣ'⁻¹μ') = ½ (r − zᵀμ)² / (1 + zᵀΣz).
    let resid = r - z.dot(&pt.mu_nu);
    let beta = pt.beta + 0.5 * resid * resid / (1.0 + quad_form(&pt.sigma_nu, &z));

    Ok(Particle {
        mu_nu: mu_new,
        sigma_nu: sigma_new,
        alpha: pt.alpha + 0.5,
        beta,
        ..pt.clone()
    })
}

/// Draws `σ² ~ IG(α, β)` and `ν ~ N(μ, σ² Σ)` and stores `σ², c_w, θ`.
pub fn sample_params(pt: &mut Particle, rng: &mut RandomStream) -> Result<()> {
    let d = pt.dim();
    let sigma2 = rng.inverse_gamma(pt.alpha, pt.beta);
    let factor = psd_sqrt(&pt.sigma_nu)?;
    let nu = sample_with_factor(&pt.mu_nu, &factor, sigma2.sqrt(), rng);
    pt.sigma2 = sigma2;
    pt.c_w = nu.rows(0, d).into_owned();
    pt.theta = nu.rows(d, d).into_owned();
    Ok(())
}

/// Per-particle posterior of the coefficient:
///
/// ```text
/// μ_w = μ_c + (Σ_η + σ²Σ_θ)⁻¹ (Σ_η μ_θ + σ² Σ_θ μ_η)
/// Σ_w = σ² Σ_c + σ² Σ_θ Σ_η (Σ_η + σ² Σ_θ)⁻¹
/// ```
///
/// `Σ_w` is symmetrized on return.
pub fn per_particle_w_posterior(pt: &Particle) -> Result<(DVector<f64>, DMatrix<f64>)> {
    let s2 = pt.sigma2;
    let sigma_theta = pt.sigma_theta();
    let blend = &pt.sigma_eta + &sigma_theta * s2;
    let blend_inv = linalg::inverse(&blend, "state/scale blend")?;
    let mu_w =
        pt.mu_c() + &blend_inv * (&pt.sigma_eta * pt.mu_theta() + (&sigma_theta * &pt.mu_eta) * s2);
    let mut sigma_w = pt.sigma_c() * s2 + (&sigma_theta * &pt.sigma_eta * &blend_inv) * s2;
    symmetrize(&mut sigma_w);
    Ok((mu_w, sigma_w))
}
