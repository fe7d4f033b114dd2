use rayon::prelude::*;

use super::config::{ExperimentConfig, Mode, PolicyKind};
use crate::bayes::{FlatKind, FlatPolicy, FlatPolicyConfig};
use crate::drift::{DriftConfig, DriftPolicy};
use crate::envs::{
    parse_event_log, parse_taxonomy, replayer_evaluate, synth_hier_env, unit_gaussian_context,
    DriftingLinearEnv, Environment, HierEnv, LoggedEvent,
};
use crate::error::{BanditError, Result};
use crate::hierarchy::{HmabConfig, HmabPolicy, Taxonomy};
use crate::rng::{derive_stream, RandomStream};
use crate::types::{
    normalize_pool, numbered_arms, totals, ArmId, Interaction, MetricsBucket, MetricsRecorder,
    Policy,
};

/// Stream labels. Each replication's seed is combined with one of these,
/// plus the round index where relevant.
pub mod stream {
    pub const ENV: u64 = 0;
    pub const POLICY: u64 = 1;
    pub const DRIFT: u64 = 2;
    pub const CONTEXT: u64 = 3;
    pub const SELECT: u64 = 4;
    pub const REWARD: u64 = 5;
    pub const UPDATE: u64 = 6;
    pub const REPLAY: u64 = 7;
}

/// Outcome of one online run.
#[derive(Debug, Clone, PartialEq)]
pub struct OnlineRun {
    pub buckets: Vec<MetricsBucket>,
    pub interactions: Vec<Interaction>,
}

/// The select / observe / update loop for `horizon` rounds. Drift, context,
/// selection, reward and update draws come from independent streams keyed
/// by `(seed, label, t)`, so two policies run with the same seed see the
/// same environment and contexts.
pub fn run_online<E, P>(
    env: &mut E,
    policy: &mut P,
    horizon: u64,
    bucket_size: usize,
    seed: u64,
) -> Result<OnlineRun>
where
    E: Environment + ?Sized,
    P: Policy + ?Sized,
{
    let mut recorder = MetricsRecorder::new(bucket_size);
    let mut interactions = Vec::with_capacity(horizon as usize);
    for t in 0..horizon {
        env.advance(t, &mut derive_stream(seed, &[stream::DRIFT, t]));
        let context =
            unit_gaussian_context(env.dim(), &mut derive_stream(seed, &[stream::CONTEXT, t]));
        let chosen = policy.select(&context, &mut derive_stream(seed, &[stream::SELECT, t]))?;
        let reward = env.reward(
            &chosen,
            &context,
            &mut derive_stream(seed, &[stream::REWARD, t]),
        )?;
        recorder.record(t as usize, reward);
        let interaction = Interaction {
            t: t + 1,
            context,
            chosen,
            reward,
        };
        policy.update(&interaction, &mut derive_stream(seed, &[stream::UPDATE, t]))?;
        interactions.push(interaction);
    }
    Ok(OnlineRun {
        buckets: recorder.into_buckets(),
        interactions,
    })
}

/// Builds the configured policy over `arms`. Hierarchical policies need the
/// taxonomy; their arms are its leaves.
pub fn build_policy(
    cfg: &ExperimentConfig,
    kind: PolicyKind,
    arms: &[ArmId],
    dim: usize,
    taxonomy: Option<&Taxonomy>,
    rng: &RandomStream,
) -> Result<Box<dyn Policy>> {
    let flat = |kind: FlatKind| FlatPolicyConfig {
        kind,
        epsilon: cfg.epsilon,
        lambda: cfg.lambda,
        q0: cfg.q0,
        alpha0: cfg.alpha0,
        beta0: cfg.beta0,
        variance_form: cfg.variance_form,
    };
    Ok(match kind {
        PolicyKind::Flat(k) => Box::new(FlatPolicy::new(flat(k), arms.iter().cloned(), dim)?),
        PolicyKind::Drift(k) => {
            let mut dc = DriftConfig::new(k);
            dc.lambda = cfg.lambda;
            dc.particles = cfg.particles;
            dc.prior.q0 = cfg.q0;
            dc.prior.alpha0 = cfg.alpha0;
            dc.prior.beta0 = cfg.beta0;
            dc.variance_form = cfg.variance_form;
            Box::new(DriftPolicy::new(dc, arms.iter().cloned(), dim, rng)?)
        }
        PolicyKind::Hier(k) => {
            let t = taxonomy.ok_or_else(|| {
                BanditError::Config("hierarchical policy without a taxonomy".into())
            })?;
            Box::new(HmabPolicy::new(
                HmabConfig::from_flat(k, &flat(k.flat_kind())),
                t.clone(),
                dim,
            )?)
        }
    })
}

/// Result of one replication.
#[derive(Debug, Clone, PartialEq)]
pub struct Replication {
    pub seed: u64,
    pub buckets: Vec<MetricsBucket>,
    /// Random-policy buckets on the same environment (hier mode).
    pub baseline: Option<Vec<MetricsBucket>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub policy: String,
    /// Per-bucket sums over replications.
    pub buckets: Vec<MetricsBucket>,
    pub baseline: Option<Vec<MetricsBucket>>,
    /// Relative success rate against the Random baseline (hier mode).
    pub rsr: Option<f64>,
    pub replications: Vec<Replication>,
}

impl ExperimentReport {
    pub fn ctr(&self) -> Option<f64> {
        let (i, s) = totals(&self.buckets);
        crate::types::ratio(s, i)
    }
}

/// Sums buckets index by index, in the given order.
pub fn merge_buckets<'a>(
    runs: impl IntoIterator<Item = &'a [MetricsBucket]>,
) -> Vec<MetricsBucket> {
    let mut out: Vec<MetricsBucket> = Vec::new();
    for run in runs {
        for b in run {
            while out.len() <= b.bucket_index {
                out.push(MetricsBucket::new(out.len()));
            }
            out[b.bucket_index].impressions += b.impressions;
            out[b.bucket_index].successes += b.successes;
        }
    }
    out
}

/// `(alg successes / alg impressions) / (random successes / random impressions)`;
/// `None` when either rate is undefined or the random rate is zero.
pub fn compute_rsr(alg: &[MetricsBucket], random: &[MetricsBucket]) -> Option<f64> {
    let (ai, asucc) = totals(alg);
    let (ri, rsucc) = totals(random);
    if ai == 0 || ri == 0 || rsucc == 0.0 {
        return None;
    }
    Some((asucc / ai as f64) / (rsucc / ri as f64))
}

enum Workload {
    Simulate,
    Replay {
        log: Vec<LoggedEvent>,
        arms: Vec<ArmId>,
        dim: usize,
    },
    Hier {
        taxonomy: Taxonomy,
    },
}

fn load(cfg: &ExperimentConfig) -> Result<Workload> {
    Ok(match cfg.mode {
        Mode::Simulate => Workload::Simulate,
        Mode::Replay => {
            let path = cfg
                .log_path
                .as_ref()
                .ok_or_else(|| BanditError::Config("missing log_path".into()))?;
            let log = parse_event_log(path)?;
            let first = log.first().ok_or(BanditError::EmptyLog)?;
            let dim = first.context.dim();
            let mut arms: Vec<ArmId> = log.iter().map(|e| e.displayed.clone()).collect();
            arms.sort();
            arms.dedup();
            Workload::Replay {
                arms: normalize_pool(arms)?,
                log,
                dim,
            }
        }
        Mode::Hier => {
            let taxonomy = match &cfg.taxonomy_path {
                Some(p) => parse_taxonomy(p)?,
                None => Taxonomy::balanced(cfg.branching, cfg.depth)?,
            };
            Workload::Hier { taxonomy }
        }
    })
}

fn hier_env(cfg: &ExperimentConfig, taxonomy: &Taxonomy, seed: u64) -> Result<HierEnv> {
    synth_hier_env(
        taxonomy.clone(),
        cfg.dim,
        cfg.category_scale,
        cfg.leaf_scale,
        &mut derive_stream(seed, &[stream::ENV]),
    )
}

fn replicate(cfg: &ExperimentConfig, work: &Workload, seed: u64) -> Result<(String, Replication)> {
    let policy_rng = derive_stream(seed, &[stream::POLICY]);
    match work {
        Workload::Simulate => {
            let arms = numbered_arms("arm", cfg.arms);
            let mut env = DriftingLinearEnv::new(
                arms.clone(),
                cfg.dim,
                cfg.change_prob,
                cfg.drift_pattern(),
                cfg.reward_model()?,
                &mut derive_stream(seed, &[stream::ENV]),
            )?;
            let mut policy = build_policy(cfg, cfg.policy, &arms, cfg.dim, None, &policy_rng)?;
            let run = run_online(&mut env, &mut policy, cfg.horizon, cfg.bucket_size, seed)?;
            Ok((
                policy.name(),
                Replication {
                    seed,
                    buckets: run.buckets,
                    baseline: None,
                },
            ))
        }
        Workload::Replay { log, arms, dim } => {
            let mut policy = build_policy(cfg, cfg.policy, arms, *dim, None, &policy_rng)?;
            let out = replayer_evaluate(
                log,
                &mut policy,
                cfg.bucket_size,
                &derive_stream(seed, &[stream::REPLAY]),
            )?;
            Ok((
                policy.name(),
                Replication {
                    seed,
                    buckets: out.buckets,
                    baseline: None,
                },
            ))
        }
        Workload::Hier { taxonomy } => {
            let leaves = taxonomy.leaves();
            let mut policy = build_policy(
                cfg,
                cfg.policy,
                &leaves,
                cfg.dim,
                Some(taxonomy),
                &policy_rng,
            )?;
            let run = run_online(
                &mut hier_env(cfg, taxonomy, seed)?,
                &mut policy,
                cfg.horizon,
                cfg.bucket_size,
                seed,
            )?;
            let mut random = build_policy(
                cfg,
                PolicyKind::Flat(FlatKind::Random),
                &leaves,
                cfg.dim,
                None,
                &policy_rng,
            )?;
            let base = run_online(
                &mut hier_env(cfg, taxonomy, seed)?,
                &mut random,
                cfg.horizon,
                cfg.bucket_size,
                seed,
            )?;
            Ok((
                policy.name(),
                Replication {
                    seed,
                    buckets: run.buckets,
                    baseline: Some(base.buckets),
                },
            ))
        }
    }
}

/// Runs every replication (seeds `seed, seed + 1, ...`) in parallel and
/// reduces them in replication order.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let work = load(cfg)?;
    let results = (0..cfg.replications)
        .into_par_iter()
        .map(|rep| replicate(cfg, &work, cfg.seed.wrapping_add(rep)))
        .collect::<Result<Vec<_>>>()?;
    let policy = results[0].0.clone();
    let replications: Vec<Replication> = results.into_iter().map(|(_, r)| r).collect();
    let buckets = merge_buckets(replications.iter().map(|r| r.buckets.as_slice()));
    let baseline = replications
        .iter()
        .map(|r| r.baseline.as_deref())
        .collect::<Option<Vec<_>>>()
        .map(merge_buckets);
    let rsr = baseline.as_ref().and_then(|b| compute_rsr(&buckets, b));
    Ok(ExperimentReport {
        policy,
        buckets,
        baseline,
        rsr,
        replications,
    })
}
