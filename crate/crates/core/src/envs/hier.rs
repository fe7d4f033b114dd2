use std::collections::BTreeMap;

use nalgebra::DVector;

use super::{sigmoid, Environment};
use crate::error::{BanditError, Result};
use crate::hierarchy::Taxonomy;
use crate::rng::RandomStream;
use crate::types::{ArmId, ContextVector};

/// Leaves click with probability `sigmoid(xᵀ Σ effects)`, summed over the
/// non-root nodes of the leaf's path, so siblings share their ancestors' effects.
#[derive(Debug, Clone, PartialEq)]
pub struct HierEnv {
    taxonomy: Taxonomy,
    dim: usize,
    leaves: Vec<ArmId>,
    effects: BTreeMap<ArmId, DVector<f64>>,
    leaf_weights: Vec<DVector<f64>>,
}

impl HierEnv {
    /// `effects` needs one vector per non-root node.
    pub fn new(taxonomy: Taxonomy, effects: BTreeMap<ArmId, DVector<f64>>) -> Result<Self> {
        let nodes = taxonomy.non_root_nodes();
        let dim = effects.values().next().map_or(0, DVector::len);
        for n in &nodes {
            let e = effects
                .get(n)
                .ok_or_else(|| BanditError::UnknownArm(n.to_string()))?;
            if e.len() != dim {
                return Err(BanditError::DimensionMismatch {
                    expected: dim,
                    actual: e.len(),
                });
            }
        }
        let leaves = taxonomy.leaves();
        let leaf_weights = leaves
            .iter()
            .map(|l| {
                let path = taxonomy.path_to(l).expect("leaf");
                path[1..]
                    .iter()
                    .fold(DVector::zeros(dim), |acc, n| acc + &effects[n])
            })
            .collect();
        Ok(Self {
            taxonomy,
            dim,
            leaves,
            effects,
            leaf_weights,
        })
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn effect(&self, node: &ArmId) -> Option<&DVector<f64>> {
        self.effects.get(node)
    }

    /// Summed coefficient of `leaf`.
    pub fn leaf_weights(&self, leaf: &ArmId) -> Result<&DVector<f64>> {
        let i = self
            .leaves
            .binary_search(leaf)
            .map_err(|_| BanditError::UnknownArm(leaf.to_string()))?;
        Ok(&self.leaf_weights[i])
    }

    pub fn success_probability(&self, leaf: &ArmId, x: &ContextVector) -> Result<f64> {
        x.ensure_dim(self.dim)?;
        Ok(sigmoid(x.to_dvector().dot(self.leaf_weights(leaf)?)))
    }
}

/// Internal nodes get `N(0, category_scale² I)` effects, leaves `N(0, leaf_scale² I)`.
pub fn synth_hier_env(
    taxonomy: Taxonomy,
    dim: usize,
    category_scale: f64,
    leaf_scale: f64,
    rng: &mut RandomStream,
) -> Result<HierEnv> {
    if !(category_scale >= 0.0
        && leaf_scale >= 0.0
        && category_scale.is_finite()
        && leaf_scale.is_finite())
    {
        return Err(BanditError::Config(
            "effect scales must be finite and >= 0".into(),
        ));
    }
    let effects = taxonomy
        .non_root_nodes()
        .into_iter()
        .map(|n| {
            let scale = if taxonomy.is_leaf(&n) {
                leaf_scale
            } else {
                category_scale
            };
            let e = DVector::from_fn(dim, |_, _| scale * rng.standard_normal());
            (n, e)
        })
        .collect();
    HierEnv::new(taxonomy, effects)
}

impl Environment for HierEnv {
    fn arms(&self) -> &[ArmId] {
        &self.leaves
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn advance(&mut self, _t: u64, _rng: &mut RandomStream) {}

    fn expected_reward(&self, arm: &ArmId, x: &ContextVector) -> Result<f64> {
        self.success_probability(arm, x)
    }

    fn reward(&self, arm: &ArmId, x: &ContextVector, rng: &mut RandomStream) -> Result<f64> {
        let p = self.success_probability(arm, x)?;
        Ok((rng.uniform() < p) as u8 as f64)
    }
}
