//! Conjugate Normal-Inverse-Gamma linear regression per arm, and the flat
//! baselines built on it: random, ε-greedy, Thompson sampling and LinUCB.

use nalgebra::{DMatrix, DVector};

use crate::error::{BanditError, Result};
use crate::linalg::{self, max_asymmetry, quad_form, sample_with_factor};
use crate::rng::RandomStream;
use crate::types::{argmax_first, normalize_pool, ArmId, ContextVector, Interaction, Policy};

/// Which quadratic form feeds the exploration bonus of the UCB scores.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceForm {
    /// `xᵀ Σ⁻¹ x`, with the covariance inverted.
    #[default]
    Inverse,
    /// `xᵀ Σ x`, the predictive-variance quadratic form.
    Covariance,
}

impl std::str::FromStr for VarianceForm {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inverse" => Ok(Self::Inverse),
            "covariance" => Ok(Self::Covariance),
            other => Err(BanditError::Config(format!(
                "unknown variance form `{other}` (expected inverse|covariance)"
            ))),
        }
    }
}

/// NIG(μ_w, Σ_w, α, β): `w | σ² ~ N(μ_w, σ² Σ_w)`, `σ² ~ IG(α, β)`.
///
/// The precision `Σ_w⁻¹` is carried alongside `Σ_w` so updates are a rank-one
/// addition followed by one Cholesky solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NigPosterior {
    mu: DVector<f64>,
    sigma: DMatrix<f64>,
    precision: DMatrix<f64>,
    sigma_factor: DMatrix<f64>,
    alpha: f64,
    beta: f64,
}

impl NigPosterior {
    pub fn new(mu: DVector<f64>, sigma: DMatrix<f64>, alpha: f64, beta: f64) -> Result<Self> {
        let d = mu.len();
        if sigma.nrows() != d || sigma.ncols() != d {
            return Err(BanditError::DimensionMismatch {
                expected: d,
                actual: sigma.nrows(),
            });
        }
        if !mu.iter().all(|v| v.is_finite()) || !linalg::is_finite_matrix(&sigma) {
            return Err(BanditError::NonFinite("posterior"));
        }
        if max_asymmetry(&sigma) > 1e-10 {
            return Err(BanditError::InvalidPosterior(
                "sigma_w is not symmetric".into(),
            ));
        }
        if !(alpha > 0.0 && beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
            return Err(BanditError::InvalidPosterior(format!(
                "alpha and beta must be positive (alpha = {alpha}, beta = {beta})"
            )));
        }
        let chol = sigma.clone().cholesky().ok_or_else(|| {
            BanditError::InvalidPosterior("sigma_w is not positive definite".into())
        })?;
        let sigma_factor = chol.l();
        let mut precision = chol.inverse();
        linalg::symmetrize(&mut precision);
        Ok(Self {
            mu,
            sigma,
            precision,
            sigma_factor,
            alpha,
            beta,
        })
    }

    /// Prior with `μ_w = 0`, `Σ_w = q0⁻¹ I`.
    pub fn isotropic(dim: usize, q0: f64, alpha0: f64, beta0: f64) -> Result<Self> {
        if !(q0 > 0.0 && q0.is_finite()) {
            return Err(BanditError::InvalidPosterior(format!(
                "q0 must be positive, got {q0}"
            )));
        }
        Self::new(
            DVector::zeros(dim),
            DMatrix::identity(dim, dim) / q0,
            alpha0,
            beta0,
        )
    }

    fn from_precision(
        precision: DMatrix<f64>,
        mu: DVector<f64>,
        alpha: f64,
        beta: f64,
    ) -> Result<Self> {
        let chol = precision
            .clone()
            .cholesky()
            .ok_or(BanditError::Singular("posterior precision"))?;
        let mut sigma = chol.inverse();
        linalg::symmetrize(&mut sigma);
        let sigma_factor = sigma
            .clone()
            .cholesky()
            .ok_or(BanditError::Singular("posterior covariance"))?
            .l();
        Ok(Self {
            mu,
            sigma,
            precision,
            sigma_factor,
            alpha,
            beta,
        })
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    pub fn mu(&self) -> &DVector<f64> {
        &self.mu
    }

    pub fn sigma(&self) -> &DMatrix<f64> {
        &self.sigma
    }

    pub fn precision(&self) -> &DMatrix<f64> {
        &self.precision
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Conjugate update with one observation `(x, r)`:
    ///
    /// ```text
    /// Σ' = (Σ⁻¹ + x xᵀ)⁻¹
    /// μ' = Σ' (Σ⁻¹ μ + x r)
    /// α' = α + 1/2
    /// β' = β + 1/2 [r² + μᵀ Σ⁻¹ μ − μ'ᵀ Σ'⁻¹ μ']
    /// ```
    pub fn update(&self, x: &ContextVector, r: f64) -> Result<Self> {
        x.ensure_dim(self.dim())?;
        if !r.is_finite() {
            return Err(BanditError::NonFinite("reward"));
        }
        let x = x.to_dvector();
        let mut precision = &self.precision + &x * x.transpose();
        linalg::symmetrize(&mut precision);
        let rhs = &self.precision * &self.mu + &x * r;
        let chol = precision
            .clone()
            .cholesky()
            .ok_or(BanditError::Singular("posterior precision"))?;
        let mu = chol.solve(&rhs);
        // The bracket equals (r − xᵀμ)² / (1 + xᵀΣx); this form cannot go
        // negative through cancellation.
        let resid = r - x.dot(&self.mu);
        let beta = self.beta + 0.5 * resid * resid / (1.0 + quad_form(&self.sigma, &x));
        Self::from_precision(precision, mu, self.alpha + 0.5, beta)
    }

    /// `(σ², w)` with `σ² ~ IG(α, β)` and `w ~ N(μ_w, σ² Σ_w)`.
    pub fn sample(&self, rng: &mut RandomStream) -> (f64, DVector<f64>) {
        let sigma2 = rng.inverse_gamma(self.alpha, self.beta);
        let w = sample_with_factor(&self.mu, &self.sigma_factor, sigma2.sqrt(), rng);
        (sigma2, w)
    }

    pub fn expected_reward(&self, x: &ContextVector) -> Result<f64> {
        x.ensure_dim(self.dim())?;
        Ok(x.as_slice()
            .iter()
            .zip(self.mu.iter())
            .map(|(a, b)| a * b)
            .sum())
    }

    /// Plug-in noise scale `sqrt(β / (α − 1))`, the posterior mean of σ².
    pub fn plug_in_sigma(&self) -> Result<f64> {
        if self.alpha <= 1.0 {
            return Err(BanditError::UndefinedPlugInVariance(self.alpha));
        }
        Ok((self.beta / (self.alpha - 1.0)).sqrt())
    }

    /// LinUCB score `xᵀμ_w + (λ/σ) sqrt(xᵀ Σ_w⁻¹ x)` with the plug-in σ.
    /// Under [`VarianceForm::Covariance`] the bonus is `λ σ sqrt(xᵀ Σ_w x)`.
    pub fn linucb_score(&self, x: &ContextVector, lambda: f64, form: VarianceForm) -> Result<f64> {
        let mean = self.expected_reward(x)?;
        let sigma = self.plug_in_sigma()?;
        if lambda == 0.0 {
            return Ok(mean);
        }
        let xv = x.to_dvector();
        let bonus = match form {
            VarianceForm::Inverse => {
                lambda / sigma * quad_form(&self.precision, &xv).max(0.0).sqrt()
            }
            VarianceForm::Covariance => {
                lambda * sigma * quad_form(&self.sigma, &xv).max(0.0).sqrt()
            }
        };
        Ok(mean + bonus)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlatKind {
    Random,
    EpsGreedy,
    Thompson,
    LinUcb,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlatPolicyConfig {
    pub kind: FlatKind,
    pub epsilon: f64,
    pub lambda: f64,
    pub q0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub variance_form: VarianceForm,
}

impl FlatPolicyConfig {
    pub fn new(kind: FlatKind) -> Self {
        Self {
            kind,
            epsilon: 0.1,
            lambda: 0.5,
            q0: 1.0,
            alpha0: 2.0,
            beta0: 2.0,
            variance_form: VarianceForm::Inverse,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(BanditError::Config(format!(
                "epsilon must be in [0, 1], got {}",
                self.epsilon
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(BanditError::Config(format!(
                "lambda must be >= 0, got {}",
                self.lambda
            )));
        }
        if !(self.q0 > 0.0 && self.q0.is_finite()) {
            return Err(BanditError::Config(format!(
                "q0 must be > 0, got {}",
                self.q0
            )));
        }
        if !(self.alpha0 > 0.0 && self.beta0 > 0.0) {
            return Err(BanditError::Config("alpha0 and beta0 must be > 0".into()));
        }
        if self.kind == FlatKind::LinUcb && self.alpha0 <= 1.0 {
            return Err(BanditError::Config("linucb requires alpha0 > 1".into()));
        }
        Ok(())
    }

    pub fn prior(&self, dim: usize) -> Result<NigPosterior> {
        NigPosterior::isotropic(dim, self.q0, self.alpha0, self.beta0)
    }
}

/// Picks an arm index for `x`. `posteriors[i]` belongs to the i-th arm of a
/// sorted pool, so the first maximum is the lexicographically smallest id.
pub fn flat_select(
    config: &FlatPolicyConfig,
    posteriors: &[NigPosterior],
    x: &ContextVector,
    rng: &mut RandomStream,
) -> Result<usize> {
    if posteriors.is_empty() {
        return Err(BanditError::EmptyArmPool);
    }
    let k = posteriors.len();
    let scores: Vec<f64> = match config.kind {
        FlatKind::Random => return Ok(rng.index(k)),
        FlatKind::EpsGreedy => {
            if rng.uniform() < config.epsilon {
                return Ok(rng.index(k));
            }
            posteriors
                .iter()
                .map(|p| p.expected_reward(x))
                .collect::<Result<_>>()?
        }
        FlatKind::Thompson => {
            x.ensure_dim(posteriors[0].dim())?;
            let xv = x.to_dvector();
            posteriors
                .iter()
                .map(|p| xv.dot(&p.sample(rng).1))
                .collect()
        }
        FlatKind::LinUcb => posteriors
            .iter()
            .map(|p| p.linucb_score(x, config.lambda, config.variance_form))
            .collect::<Result<_>>()?,
    };
    if scores.iter().any(|s| s.is_nan()) {
        return Err(BanditError::NonFinite("arm score"));
    }
    Ok(argmax_first(&scores).expect("non-empty pool"))
}

/// A flat contextual bandit with one NIG posterior per arm.
#[derive(Debug, Clone)]
pub struct FlatPolicy {
    config: FlatPolicyConfig,
    arms: Vec<ArmId>,
    posteriors: Vec<NigPosterior>,
}

impl FlatPolicy {
    pub fn new(
        config: FlatPolicyConfig,
        arms: impl IntoIterator<Item = ArmId>,
        dim: usize,
    ) -> Result<Self> {
        config.validate()?;
        let arms = normalize_pool(arms)?;
        let prior = config.prior(dim)?;
        let posteriors = vec![prior; arms.len()];
        Ok(Self {
            config,
            arms,
            posteriors,
        })
    }

    pub fn config(&self) -> &FlatPolicyConfig {
        &self.config
    }

    pub fn posterior(&self, arm: &ArmId) -> Option<&NigPosterior> {
        self.arms
            .binary_search(arm)
            .ok()
            .map(|i| &self.posteriors[i])
    }

    pub fn posteriors(&self) -> &[NigPosterior] {
        &self.posteriors
    }
}

impl Policy for FlatPolicy {
    fn name(&self) -> String {
        let c = &self.config;
        match c.kind {
            FlatKind::Random => "Random".into(),
            FlatKind::EpsGreedy => format!("EpsGreedy({})", c.epsilon),
            FlatKind::Thompson => format!("TS({})", c.q0),
            FlatKind::LinUcb => format!("LinUCB({})", c.lambda),
        }
    }

    fn arms(&self) -> &[ArmId] {
        &self.arms
    }

    fn select(&self, context: &ContextVector, rng: &mut RandomStream) -> Result<ArmId> {
        let i = flat_select(&self.config, &self.posteriors, context, rng)?;
        Ok(self.arms[i].clone())
    }

    fn update(&mut self, interaction: &Interaction, _rng: &mut RandomStream) -> Result<()> {
        let i = self
            .arms
            .binary_search(&interaction.chosen)
            .map_err(|_| BanditError::UnknownArm(interaction.chosen.to_string()))?;
        self.posteriors[i] = self.posteriors[i].update(&interaction.context, interaction.reward)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use approx::assert_abs_diff_eq;

    fn ctx(v: &[f64]) -> ContextVector {
        ContextVector::new(v.to_vec()).unwrap()
    }

    fn scalar(mu: f64, sigma: f64, alpha: f64, beta: f64) -> NigPosterior {
        NigPosterior::new(
            DVector::from_element(1, mu),
            DMatrix::from_element(1, 1, sigma),
            alpha,
            beta,
        )
        .unwrap()
    }

    /// Batch posterior from scratch: Λn = Λ0 + XᵀX, μn = Λn⁻¹(Λ0μ0 + Xᵀr),
    /// βn = β0 + ½(rᵀr + μ0ᵀΛ0μ0 − μnᵀΛnμn).
    fn batch_oracle(
        prior: &NigPosterior,
        obs: &[(Vec<f64>, f64)],
    ) -> (DVector<f64>, DMatrix<f64>, f64, f64) {
        let d = prior.dim();
        let lambda0 = prior.sigma().clone().try_inverse().unwrap();
        let mut lambda_n = lambda0.clone();
        let mut xty = &lambda0 * prior.mu();
        let mut yy = 0.0;
        for (x, r) in obs {
            let xv = DVector::from_column_slice(x);
            lambda_n += &xv * xv.transpose();
            xty += &xv * *r;
            yy += r * r;
        }
        let sigma_n = lambda_n.clone().try_inverse().unwrap();
        let mu_n = &sigma_n * xty;
        let alpha_n = prior.alpha() + obs.len() as f64 / 2.0;
        let beta_n = prior.beta()
            + 0.5
                * (yy + prior.mu().dot(&(&lambda0 * prior.mu())) - mu_n.dot(&(&lambda_n * &mu_n)));
        assert_eq!(mu_n.len(), d);
        (mu_n, sigma_n, alpha_n, beta_n)
    }

    #[test]
    fn zero_context_only_moves_beta() {
        let post = scalar(0.0, 1.0, 1.0, 1.0)
            .update(&ctx(&[0.0]), 5.0)
            .unwrap();
        assert_eq!(post.mu()[0], 0.0);
        assert_eq!(post.sigma()[(0, 0)], 1.0);
        assert_eq!(post.alpha(), 1.5);
        assert_eq!(post.beta(), 13.5);
    }

    #[test]
    fn single_observation_two_dims() {
        let prior = NigPosterior::isotropic(2, 1.0, 2.0, 2.0).unwrap();
        let obs = vec![(vec![1.0, 0.0], 1.0)];
        let (mu_o, sigma_o, alpha_o, beta_o) = batch_oracle(&prior, &obs);
        // Frozen from the batch oracle.
        assert_abs_diff_eq!(mu_o[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(beta_o, 2.25, epsilon = 1e-15);

        let post = prior.update(&ctx(&[1.0, 0.0]), 1.0).unwrap();
        assert_abs_diff_eq!(post.mu()[0], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(post.mu()[1], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.sigma()[(0, 0)], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(post.sigma()[(1, 1)], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.sigma()[(0, 1)], 0.0, epsilon = 1e-12);
        assert_eq!(post.alpha(), 2.5);
        assert_abs_diff_eq!(post.beta(), 2.25, epsilon = 1e-12);
        assert!((post.sigma() - sigma_o).abs().max() < 1e-12);
        assert_eq!(post.alpha(), alpha_o);
    }

    #[test]
    fn two_identical_observations() {
        let prior = NigPosterior::isotropic(2, 1.0, 2.0, 2.0).unwrap();
        let obs = vec![(vec![1.0, 0.0], 1.0), (vec![1.0, 0.0], 1.0)];
        let (mu_o, sigma_o, _, _) = batch_oracle(&prior, &obs);
        assert_abs_diff_eq!(mu_o[0], 2.0 / 3.0, epsilon = 1e-15);
        assert_abs_diff_eq!(sigma_o[(0, 0)], 1.0 / 3.0, epsilon = 1e-15);

        let x = ctx(&[1.0, 0.0]);
        let post = prior.update(&x, 1.0).unwrap().update(&x, 1.0).unwrap();
        assert_abs_diff_eq!(post.mu()[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.sigma()[(0, 0)], 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(post.sigma()[(1, 1)], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn beta_bracket_matches_printed_form() {
        let prior = NigPosterior::new(
            DVector::from_vec(vec![0.3, -0.2]),
            DMatrix::from_row_slice(2, 2, &[1.5, 0.2, 0.2, 0.7]),
            2.0,
            1.0,
        )
        .unwrap();
        let x = ctx(&[0.4, -1.1]);
        let r = 0.8;
        let post = prior.update(&x, r).unwrap();
        let printed = prior.beta()
            + 0.5
                * (r * r + prior.mu().dot(&(prior.precision() * prior.mu()))
                    - post.mu().dot(&(post.precision() * post.mu())));
        assert_abs_diff_eq!(post.beta(), printed, epsilon = 1e-12);
    }

    #[test]
    fn update_rejects_bad_input() {
        let prior = NigPosterior::isotropic(2, 1.0, 2.0, 2.0).unwrap();
        assert!(matches!(
            prior.update(&ctx(&[1.0]), 1.0),
            Err(BanditError::DimensionMismatch {
                expected: 2,
                actual: 1
            })
        ));
        assert_eq!(
            prior.update(&ctx(&[1.0, 0.0]), f64::NAN),
            Err(BanditError::NonFinite("reward"))
        );
    }

    #[test]
    fn new_rejects_invalid() {
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(NigPosterior::new(DVector::zeros(2), asym, 1.0, 1.0).is_err());
        let indef = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(NigPosterior::new(DVector::zeros(2), indef, 1.0, 1.0).is_err());
        assert!(NigPosterior::isotropic(2, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn sample_degenerate_covariance() {
        let post = NigPosterior::new(
            DVector::from_vec(vec![1.0, 2.0]),
            DMatrix::identity(2, 2) * 1e-12,
            3.0,
            2.0,
        )
        .unwrap();
        let mut rng = derive_stream(1, &[]);
        for _ in 0..100 {
            let (_, w) = post.sample(&mut rng);
            assert!((w - post.mu()).abs().max() < 1e-4);
        }
    }

    #[test]
    fn sample_sigma2_moment() {
        let post = NigPosterior::isotropic(1, 1.0, 3.0, 2.0).unwrap();
        let mut rng = derive_stream(77, &[1]);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| post.sample(&mut rng).0).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        let se = (var / n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * se, "mean {mean}, se {se}");
    }

    #[test]
    fn sample_is_deterministic() {
        let post = NigPosterior::isotropic(3, 1.0, 2.0, 2.0).unwrap();
        let a = post.sample(&mut derive_stream(5, &[2]));
        let b = post.sample(&mut derive_stream(5, &[2]));
        assert_eq!(a, b);
    }

    #[test]
    fn linucb_examples() {
        let post = scalar(1.0, 1.0, 3.0, 2.0);
        assert_abs_diff_eq!(
            post.linucb_score(&ctx(&[1.0]), 1.0, VarianceForm::Inverse)
                .unwrap(),
            2.0,
            epsilon = 1e-12
        );
        assert_eq!(
            post.linucb_score(&ctx(&[1.0]), 0.0, VarianceForm::Inverse)
                .unwrap(),
            1.0
        );
        assert_eq!(
            post.linucb_score(&ctx(&[0.0]), 1.0, VarianceForm::Inverse)
                .unwrap(),
            0.0
        );
        let bad = scalar(1.0, 1.0, 1.0, 2.0);
        assert_eq!(
            bad.linucb_score(&ctx(&[1.0]), 1.0, VarianceForm::Inverse),
            Err(BanditError::UndefinedPlugInVariance(1.0))
        );
    }

    #[test]
    fn linucb_forms_differ_on_non_identity_sigma() {
        let post = scalar(0.0, 4.0, 3.0, 2.0);
        let x = ctx(&[1.0]);
        // σ = 1: inverse-form bonus sqrt(1/4), covariance bonus sqrt(4).
        assert_abs_diff_eq!(
            post.linucb_score(&x, 1.0, VarianceForm::Inverse).unwrap(),
            0.5,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            post.linucb_score(&x, 1.0, VarianceForm::Covariance)
                .unwrap(),
            2.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn eps_zero_exploits() {
        let posts = vec![scalar(1.0, 1.0, 2.0, 2.0), scalar(2.0, 1.0, 2.0, 2.0)];
        let mut cfg = FlatPolicyConfig::new(FlatKind::EpsGreedy);
        cfg.epsilon = 0.0;
        let mut rng = derive_stream(0, &[]);
        assert_eq!(
            flat_select(&cfg, &posts, &ctx(&[1.0]), &mut rng).unwrap(),
            1
        );
    }

    #[test]
    fn ties_go_to_smallest_arm() {
        let arms = vec![
            ArmId::new("b").unwrap(),
            ArmId::new("a").unwrap(),
            ArmId::new("c").unwrap(),
        ];
        let mut cfg = FlatPolicyConfig::new(FlatKind::LinUcb);
        cfg.lambda = 0.0;
        let policy = FlatPolicy::new(cfg, arms, 2).unwrap();
        let mut rng = derive_stream(0, &[]);
        assert_eq!(
            policy.select(&ctx(&[0.3, 0.1]), &mut rng).unwrap().as_str(),
            "a"
        );
    }

    #[test]
    fn eps_one_is_uniform() {
        let posts = vec![NigPosterior::isotropic(1, 1.0, 2.0, 2.0).unwrap(); 4];
        let mut cfg = FlatPolicyConfig::new(FlatKind::EpsGreedy);
        cfg.epsilon = 1.0;
        let n = 10_000;
        let mut counts = [0usize; 4];
        for t in 0..n {
            let mut rng = derive_stream(31, &[t as u64]);
            counts[flat_select(&cfg, &posts, &ctx(&[1.0]), &mut rng).unwrap()] += 1;
        }
        // Binomial(n, 1/4): sd = sqrt(n * 1/4 * 3/4).
        let sd = (n as f64 * 0.25 * 0.75).sqrt();
        for c in counts {
            assert!((c as f64 - n as f64 / 4.0).abs() < 3.0 * sd, "{counts:?}");
        }
    }

    #[test]
    fn random_policy_reproducible() {
        let arms = crate::types::numbered_arms("a", 3);
        let policy = FlatPolicy::new(FlatPolicyConfig::new(FlatKind::Random), arms, 1).unwrap();
        let run = || -> Vec<ArmId> {
            (0..50)
                .map(|t| {
                    policy
                        .select(&ctx(&[0.0]), &mut derive_stream(8, &[t]))
                        .unwrap()
                })
                .collect()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn update_unknown_arm_errors() {
        let mut policy = FlatPolicy::new(
            FlatPolicyConfig::new(FlatKind::Thompson),
            crate::types::numbered_arms("a", 2),
            1,
        )
        .unwrap();
        let err = policy
            .update(
                &Interaction {
                    t: 1,
                    context: ctx(&[1.0]),
                    chosen: ArmId::new("zzz").unwrap(),
                    reward: 1.0,
                },
                &mut derive_stream(0, &[]),
            )
            .unwrap_err();
        assert_eq!(err, BanditError::UnknownArm("zzz".into()));
    }

    #[test]
    fn config_validation() {
        let mut cfg = FlatPolicyConfig::new(FlatKind::EpsGreedy);
        cfg.epsilon = 1.5;
        assert!(cfg.validate().is_err());
        let mut cfg = FlatPolicyConfig::new(FlatKind::LinUcb);
        cfg.lambda = -1.0;
        assert!(cfg.validate().is_err());
        let mut cfg = FlatPolicyConfig::new(FlatKind::Thompson);
        cfg.q0 = 0.0;
        assert!(cfg.validate().is_err());
    }
}
