//! Contextual bandits for drifting and hierarchical reward structures.
//!
//! - [`bayes`]: conjugate Bayesian linear regression and the flat policies
//!   (random, ε-greedy, Thompson sampling, LinUCB).
//! - [`drift`]: per-arm particle learning of a drifting coefficient and the
//!   TVUCB / TVTP policies built on it.
//! - [`hierarchy`]: taxonomies of arms and path-level HMAB policies.
//! - [`envs`]: simulators, the log replayer and file formats.
//! - [`harness`]: experiment configs, runs and CSV output.

pub mod bayes;
pub mod drift;
pub mod envs;
pub mod error;
pub mod harness;
pub mod hierarchy;
pub mod linalg;
pub mod rng;
pub mod types;

pub use bayes::{FlatKind, FlatPolicy, FlatPolicyConfig, NigPosterior, VarianceForm};
pub use drift::{DriftConfig, DriftPolicy, TvKind};
pub use error::{BanditError, Result};
pub use hierarchy::{HmabConfig, HmabKind, HmabPolicy, PathSelection, Taxonomy, TaxonomyError};
pub use rng::{derive_stream, RandomStream};
pub use types::{
    argmax_first, ArmId, ContextVector, Interaction, MetricsBucket, MetricsRecorder, Policy,
};
