use super::{ContextSource, Environment, LoggedEvent};
use crate::error::{BanditError, Result};
use crate::rng::RandomStream;
use crate::types::{ratio, Interaction, MetricsBucket, MetricsRecorder, Policy};

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayOutcome {
    pub impressions: u64,
    pub successes: f64,
    pub skipped: u64,
    /// Bucketed by event position in the log.
    pub buckets: Vec<MetricsBucket>,
}

impl ReplayOutcome {
    /// `None` when no event matched.
    pub fn ctr(&self) -> Option<f64> {
        ratio(self.successes, self.impressions)
    }
}

/// Replays `log` against `policy`. Only events where the policy picks the
/// logged arm count as impressions and reach `policy.update`; the rest are
/// skipped without touching the policy. Event `i` selects with
/// `rng.child(i).child(0)` and updates with `rng.child(i).child(1)`.
pub fn replayer_evaluate<P: Policy + ?Sized>(
    log: &[LoggedEvent],
    policy: &mut P,
    bucket_size: usize,
    rng: &RandomStream,
) -> Result<ReplayOutcome> {
    if log.is_empty() {
        return Err(BanditError::EmptyLog);
    }
    if let Some(e) = log
        .iter()
        .find(|e| policy.arms().binary_search(&e.displayed).is_err())
    {
        return Err(BanditError::UnknownArm(e.displayed.to_string()));
    }
    let mut recorder = MetricsRecorder::new(bucket_size);
    let (mut impressions, mut successes, mut skipped) = (0u64, 0.0, 0u64);
    for (i, event) in log.iter().enumerate() {
        let stream = rng.child(i as u64);
        let chosen = policy.select(&event.context, &mut stream.child(0))?;
        if chosen != event.displayed {
            skipped += 1;
            recorder.skip(i);
            continue;
        }
        impressions += 1;
        successes += event.reward;
        recorder.record(i, event.reward);
        let interaction = Interaction {
            t: impressions,
            context: event.context.clone(),
            chosen,
            reward: event.reward,
        };
        policy.update(&interaction, &mut stream.child(1))?;
    }
    Ok(ReplayOutcome {
        impressions,
        successes,
        skipped,
        buckets: recorder.into_buckets(),
    })
}

/// `n` events logged by a uniformly random policy. Round `t` uses
/// `rng.child(t)` with children 0..4 for drift, context, arm and reward.
pub fn generate_uniform_log<E: Environment + ?Sized>(
    env: &mut E,
    contexts: &ContextSource,
    n: u64,
    rng: &RandomStream,
) -> Result<Vec<LoggedEvent>> {
    let k = env.arms().len();
    (0..n)
        .map(|t| {
            let stream = rng.child(t);
            env.advance(t, &mut stream.child(0));
            let context = contexts.context(env.dim(), t, &mut stream.child(1));
            let displayed = env.arms()[stream.child(2).index(k)].clone();
            let reward = env.reward(&displayed, &context, &mut stream.child(3))?;
            Ok(LoggedEvent {
                t,
                displayed,
                reward,
                context,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_stream;
    use crate::types::{numbered_arms, ArmId, ContextVector};

    /// Replays a fixed script of arms.
    struct Scripted {
        arms: Vec<ArmId>,
        script: Vec<ArmId>,
        cursor: std::cell::Cell<usize>,
        updates: usize,
    }

    impl Policy for Scripted {
        fn name(&self) -> String {
            "scripted".into()
        }
        fn arms(&self) -> &[ArmId] {
            &self.arms
        }
        fn select(&self, _: &ContextVector, _: &mut RandomStream) -> Result<ArmId> {
            let i = self.cursor.get();
            self.cursor.set(i + 1);
            Ok(self.script[i % self.script.len()].clone())
        }
        fn update(&mut self, _: &Interaction, _: &mut RandomStream) -> Result<()> {
            self.updates += 1;
            Ok(())
        }
    }

    fn log() -> Vec<LoggedEvent> {
        let arms = numbered_arms("a", 3);
        (0..9u64)
            .map(|t| LoggedEvent {
                t,
                displayed: arms[(t % 3) as usize].clone(),
                reward: (t % 2) as f64,
                context: ContextVector::new(vec![t as f64]).unwrap(),
            })
            .collect()
    }

    #[test]
    fn replaying_own_choices_matches_everything() {
        let log = log();
        let mut p = Scripted {
            arms: numbered_arms("a", 3),
            script: log.iter().map(|e| e.displayed.clone()).collect(),
            cursor: Default::default(),
            updates: 0,
        };
        let out = replayer_evaluate(&log, &mut p, 4, &derive_stream(0, &[])).unwrap();
        assert_eq!(out.impressions, 9);
        assert_eq!(out.skipped, 0);
        assert_eq!(out.ctr(), Some(4.0 / 9.0));
        assert_eq!(p.updates, 9);
        assert_eq!(
            out.buckets
                .iter()
                .map(|b| b.impressions)
                .collect::<Vec<_>>(),
            vec![4, 4, 1]
        );
    }

    #[test]
    fn never_matching_is_undefined() {
        let log = log();
        let mut arms = numbered_arms("a", 3);
        arms.push(ArmId::new("b").unwrap());
        let mut p = Scripted {
            script: vec![ArmId::new("b").unwrap()],
            arms,
            cursor: Default::default(),
            updates: 0,
        };
        let out = replayer_evaluate(&log, &mut p, 100, &derive_stream(0, &[])).unwrap();
        assert_eq!(out.impressions, 0);
        assert_eq!(out.ctr(), None);
        assert_eq!(out.skipped, 9);
        assert_eq!(p.updates, 0);
    }

    #[test]
    fn foreign_arm_and_empty_log_error() {
        let mut p = Scripted {
            arms: numbered_arms("a", 2),
            script: vec![ArmId::new("a000").unwrap()],
            cursor: Default::default(),
            updates: 0,
        };
        assert_eq!(
            replayer_evaluate(&log(), &mut p, 10, &derive_stream(0, &[])),
            Err(BanditError::UnknownArm("a002".into()))
        );
        assert_eq!(
            replayer_evaluate(&[], &mut p, 10, &derive_stream(0, &[])),
            Err(BanditError::EmptyLog)
        );
    }
}
