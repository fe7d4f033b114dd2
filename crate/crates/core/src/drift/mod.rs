//! Context-drift model learned by particle learning.
//!
//! Each arm's coefficient is `w_t = c_w + θ ⊙ η_t`, where `η_t` is a standard
//! Gaussian random walk. A [`ParticleSet`] per arm tracks the state `η` with a
//! Kalman filter and the parameters `(σ², c_w, θ)` with a conjugate NIG
//! posterior, updating in resample-propagate order.

mod particle;
mod policy;

pub use particle::{
    kalman_state_update, normalize_log_weights, normalize_weights, param_update,
    particle_log_weight, particle_weight, per_particle_w_posterior, predictive, resample,
    sample_params, sample_state, DriftPrior, Particle, ParticleSet,
};
pub use policy::{
    aggregate_posterior, drift_update, tv_select, AggregatePosterior, DriftConfig, DriftPolicy,
    TvKind,
};
