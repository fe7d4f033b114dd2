//! Shared contracts: contexts, arm identifiers, interactions, the policy
//! interface and time-bucketed metrics.

use std::fmt;

use nalgebra::DVector;

use crate::error::{BanditError, Result};
use crate::rng::RandomStream;

/// A d-dimensional, finite feature vector presented at one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextVector(Vec<f64>);

impl ContextVector {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(BanditError::NonFinite("context"));
        }
        Ok(Self(values))
    }

    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.0)
    }

    pub fn ensure_dim(&self, expected: usize) -> Result<()> {
        if self.dim() != expected {
            return Err(BanditError::DimensionMismatch {
                expected,
                actual: self.dim(),
            });
        }
        Ok(())
    }
}

impl TryFrom<Vec<f64>> for ContextVector {
    type Error = BanditError;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

/// Opaque, non-empty arm identifier. Ordering is lexicographic on the string,
/// which is also the tie-break order for every argmax in the crate.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ArmId(String);

impl ArmId {
    pub fn new(id: impl Into<String>) -> Result<Self> {
        let id = id.into();
        if id.is_empty() {
            return Err(BanditError::EmptyArmId);
        }
        Ok(Self(id))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ArmId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Sorts and de-duplicates an arm pool, rejecting empty pools and duplicates.
pub fn normalize_pool(arms: impl IntoIterator<Item = ArmId>) -> Result<Vec<ArmId>> {
    let mut pool: Vec<ArmId> = arms.into_iter().collect();
    if pool.is_empty() {
        return Err(BanditError::EmptyArmPool);
    }
    pool.sort();
    if let Some(w) = pool.windows(2).find(|w| w[0] == w[1]) {
        return Err(BanditError::DuplicateArm(w[0].to_string()));
    }
    Ok(pool)
}

/// Arm ids `prefix000`, `prefix001`, ... zero-padded so lexicographic and
/// numeric order agree.
pub fn numbered_arms(prefix: &str, count: usize) -> Vec<ArmId> {
    let width = count.saturating_sub(1).to_string().len().max(3);
    (0..count)
        .map(|i| ArmId(format!("{prefix}{i:0width$}")))
        .collect()
}

/// One observed round: the context, the arm credited, and its reward.
#[derive(Debug, Clone, PartialEq)]
pub struct Interaction {
    pub t: u64,
    pub context: ContextVector,
    pub chosen: ArmId,
    pub reward: f64,
}

/// Total reward over a run.
pub fn cumulative_reward(log: &[Interaction]) -> f64 {
    log.iter().map(|i| i.reward).sum()
}

/// A decision rule that maps contexts to arms and learns from feedback.
///
/// `select` never mutates posterior state; all randomness comes from the
/// supplied stream. `update` is single-writer and only touches the arms
/// credited with the reward.
pub trait Policy: Send {
    fn name(&self) -> String;

    /// Arms this policy can return from `select`, sorted.
    fn arms(&self) -> &[ArmId];

    fn select(&self, context: &ContextVector, rng: &mut RandomStream) -> Result<ArmId>;

    fn update(&mut self, interaction: &Interaction, rng: &mut RandomStream) -> Result<()>;
}

impl<P: Policy + ?Sized> Policy for Box<P> {
    fn name(&self) -> String {
        (**self).name()
    }

    fn arms(&self) -> &[ArmId] {
        (**self).arms()
    }

    fn select(&self, context: &ContextVector, rng: &mut RandomStream) -> Result<ArmId> {
        (**self).select(context, rng)
    }

    fn update(&mut self, interaction: &Interaction, rng: &mut RandomStream) -> Result<()> {
        (**self).update(interaction, rng)
    }
}

/// Index of the first maximum. Earlier entries win ties, so callers iterate
/// arms in sorted order to get the lexicographic tie-break.
pub fn argmax_first(scores: &[f64]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, &s) in scores.iter().enumerate() {
        match best {
            Some((_, b)) if s <= b => {}
            _ => best = Some((i, s)),
        }
    }
    best.map(|(i, _)| i)
}

/// Aggregated outcome of one time bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsBucket {
    pub bucket_index: usize,
    pub impressions: u64,
    pub successes: f64,
}

impl MetricsBucket {
    pub fn new(bucket_index: usize) -> Self {
        Self {
            bucket_index,
            impressions: 0,
            successes: 0.0,
        }
    }

    /// `None` when the bucket has no impressions.
    pub fn ctr(&self) -> Option<f64> {
        ratio(self.successes, self.impressions)
    }
}

pub fn ratio(successes: f64, impressions: u64) -> Option<f64> {
    (impressions > 0).then(|| successes / impressions as f64)
}

/// Groups rounds into fixed-width buckets by 0-based round index.
#[derive(Debug, Clone)]
pub struct MetricsRecorder {
    bucket_size: usize,
    buckets: Vec<MetricsBucket>,
}

impl MetricsRecorder {
    pub fn new(bucket_size: usize) -> Self {
        assert!(bucket_size >= 1, "bucket_size must be >= 1");
        Self {
            bucket_size,
            buckets: Vec::new(),
        }
    }

    fn bucket_mut(&mut self, round_index: usize) -> &mut MetricsBucket {
        let b = round_index / self.bucket_size;
        while self.buckets.len() <= b {
            let next = self.buckets.len();
            self.buckets.push(MetricsBucket::new(next));
        }
        &mut self.buckets[b]
    }

    /// Records an impression with its reward at `round_index`.
    pub fn record(&mut self, round_index: usize, reward: f64) {
        let bucket = self.bucket_mut(round_index);
        bucket.impressions += 1;
        bucket.successes += reward;
    }

    /// Marks `round_index` as seen without an impression.
    pub fn skip(&mut self, round_index: usize) {
        self.bucket_mut(round_index);
    }

    pub fn buckets(&self) -> &[MetricsBucket] {
        &self.buckets
    }

    pub fn into_buckets(self) -> Vec<MetricsBucket> {
        self.buckets
    }
}

/// Totals over a set of buckets.
pub fn totals(buckets: &[MetricsBucket]) -> (u64, f64) {
    buckets
        .iter()
        .fold((0, 0.0), |(i, s), b| (i + b.impressions, s + b.successes))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn context_rejects_nan() {
        assert!(ContextVector::new(vec![1.0, f64::NAN]).is_err());
        assert!(ContextVector::new(vec![1.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn arm_id_non_empty_and_ordered() {
        assert_eq!(ArmId::new(""), Err(BanditError::EmptyArmId));
        let a = ArmId::new("a10").unwrap();
        let b = ArmId::new("a2").unwrap();
        assert!(a < b);
    }

    #[test]
    fn pool_rejects_duplicates() {
        let a = ArmId::new("x").unwrap();
        assert_eq!(
            normalize_pool(vec![a.clone(), a]),
            Err(BanditError::DuplicateArm("x".into()))
        );
        assert_eq!(normalize_pool(vec![]), Err(BanditError::EmptyArmPool));
    }

    #[test]
    fn numbered_arms_sort_numerically() {
        let arms = numbered_arms("arm", 12);
        let mut sorted = arms.clone();
        sorted.sort();
        assert_eq!(arms, sorted);
        assert_eq!(arms[11].as_str(), "arm011");
    }

    #[test]
    fn argmax_prefers_first() {
        assert_eq!(argmax_first(&[1.0, 3.0, 3.0]), Some(1));
        assert_eq!(argmax_first(&[]), None);
        assert_eq!(argmax_first(&[f64::NEG_INFINITY, -1.0]), Some(1));
    }

    #[test]
    fn bucketing_arithmetic() {
        let mut rec = MetricsRecorder::new(100);
        for t in 0..250 {
            rec.record(t, (t % 2) as f64);
        }
        let imps: Vec<u64> = rec.buckets().iter().map(|b| b.impressions).collect();
        assert_eq!(imps, vec![100, 100, 50]);
        assert_eq!(totals(rec.buckets()).0, 250);
    }

    #[test]
    fn skipped_bucket_has_undefined_ctr() {
        let mut rec = MetricsRecorder::new(2);
        rec.skip(0);
        rec.record(2, 1.0);
        assert_eq!(rec.buckets()[0].ctr(), None);
        assert_eq!(rec.buckets()[1].ctr(), Some(1.0));
    }
}
