//! Tree-structured arms. Internal nodes are categories, leaves are items, and
//! a recommendation is a whole root-to-leaf path whose nodes share the reward.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::bayes::{FlatKind, FlatPolicyConfig, NigPosterior, VarianceForm};
use crate::error::{BanditError, Result};
use crate::rng::RandomStream;
use crate::types::{argmax_first, ArmId, ContextVector, Interaction, Policy};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TaxonomyError {
    #[error("taxonomy has no edges")]
    Empty,
    #[error("multiple roots: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("orphan node `{0}` is connected to nothing")]
    Orphan(String),
    #[error("cycle through `{0}`")]
    Cycle(String),
    #[error("node `{0}` has more than one parent")]
    MultipleParents(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
}

/// A validated rooted tree over arm ids.
#[derive(Debug, Clone, PartialEq)]
pub struct Taxonomy {
    root: ArmId,
    nodes: BTreeSet<ArmId>,
    children: BTreeMap<ArmId, Vec<ArmId>>,
    parent: BTreeMap<ArmId, ArmId>,
}

impl Taxonomy {
    pub fn from_edges(
        edges: impl IntoIterator<Item = (ArmId, ArmId)>,
    ) -> std::result::Result<Self, TaxonomyError> {
        Self::new(std::iter::empty(), edges)
    }

    /// `nodes` may list ids with no edges; they are reported as orphans.
    pub fn new(
        nodes: impl IntoIterator<Item = ArmId>,
        edges: impl IntoIterator<Item = (ArmId, ArmId)>,
    ) -> std::result::Result<Self, TaxonomyError> {
        let mut all: BTreeSet<ArmId> = nodes.into_iter().collect();
        let mut children: BTreeMap<ArmId, Vec<ArmId>> = BTreeMap::new();
        let mut parent: BTreeMap<ArmId, ArmId> = BTreeMap::new();
        let mut seen = BTreeSet::new();
        for (p, c) in edges {
            if !seen.insert((p.clone(), c.clone())) {
                continue;
            }
            all.insert(p.clone());
            all.insert(c.clone());
            if parent.insert(c.clone(), p.clone()).is_some() {
                return Err(TaxonomyError::MultipleParents(c.to_string()));
            }
            children.entry(p).or_default().push(c);
        }
        if seen.is_empty() {
            return Err(TaxonomyError::Empty);
        }
        for list in children.values_mut() {
            list.sort();
        }

        let roots: Vec<&ArmId> = all.iter().filter(|n| !parent.contains_key(*n)).collect();
        let root = match roots.as_slice() {
            [] => {
                return Err(TaxonomyError::Cycle(
                    all.first().expect("non-empty").to_string(),
                ))
            }
            [r] => (*r).clone(),
            _ => {
                if let Some(orphan) = roots.iter().find(|r| !children.contains_key(**r)) {
                    return Err(TaxonomyError::Orphan(orphan.to_string()));
                }
                return Err(TaxonomyError::MultipleRoots(
                    roots.iter().map(|r| r.to_string()).collect(),
                ));
            }
        };

        // Every node has one parent and only the root has none, so anything
        // unreachable from the root sits on a cycle.
        let mut reached = BTreeSet::new();
        let mut stack = vec![root.clone()];
        while let Some(n) = stack.pop() {
            if !reached.insert(n.clone()) {
                return Err(TaxonomyError::Cycle(n.to_string()));
            }
            if let Some(cs) = children.get(&n) {
                stack.extend(cs.iter().cloned());
            }
        }
        if let Some(n) = all.iter().find(|n| !reached.contains(*n)) {
            return Err(TaxonomyError::Cycle(n.to_string()));
        }

        Ok(Self {
            root,
            nodes: all,
            children,
            parent,
        })
    }

    /// Balanced tree with `branching` children per internal node and `depth`
    /// edge levels. Node ids encode their position, e.g. `n1.3`.
    pub fn balanced(branching: usize, depth: usize) -> std::result::Result<Self, TaxonomyError> {
        let width = branching.saturating_sub(1).to_string().len();
        let mut edges = Vec::new();
        let mut frontier = vec!["n".to_string()];
        for level in 0..depth {
            let mut next = Vec::new();
            for p in &frontier {
                for b in 0..branching {
                    let c = if level == 0 {
                        format!("n{b:0width$}")
                    } else {
                        format!("{p}.{b:0width$}")
                    };
                    edges.push((arm(p), arm(&c)));
                    next.push(c);
                }
            }
            frontier = next;
        }
        Self::from_edges(edges)
    }

    pub fn root(&self) -> &ArmId {
        &self.root
    }

    pub fn nodes(&self) -> &BTreeSet<ArmId> {
        &self.nodes
    }

    pub fn contains(&self, node: &ArmId) -> bool {
        self.nodes.contains(node)
    }

    pub fn children(&self, node: &ArmId) -> &[ArmId] {
        self.children.get(node).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn parent(&self, node: &ArmId) -> Option<&ArmId> {
        self.parent.get(node)
    }

    pub fn is_leaf(&self, node: &ArmId) -> bool {
        self.contains(node) && !self.children.contains_key(node)
    }

    /// Leaves in sorted order.
    pub fn leaves(&self) -> Vec<ArmId> {
        self.nodes
            .iter()
            .filter(|n| self.is_leaf(n))
            .cloned()
            .collect()
    }

    /// Every node that carries a model, in sorted order.
    pub fn non_root_nodes(&self) -> Vec<ArmId> {
        self.nodes
            .iter()
            .filter(|n| **n != self.root)
            .cloned()
            .collect()
    }

    /// Edges in (parent, child) sorted order.
    pub fn edges(&self) -> Vec<(ArmId, ArmId)> {
        self.children
            .iter()
            .flat_map(|(p, cs)| cs.iter().map(move |c| (p.clone(), c.clone())))
            .collect()
    }

    /// Root-to-leaf path ending at `leaf`.
    pub fn path_to(&self, leaf: &ArmId) -> std::result::Result<Vec<ArmId>, TaxonomyError> {
        if !self.is_leaf(leaf) {
            return Err(TaxonomyError::UnknownNode(leaf.to_string()));
        }
        let mut path = vec![leaf.clone()];
        let mut n = leaf;
        while let Some(p) = self.parent.get(n) {
            path.push(p.clone());
            n = p;
        }
        path.reverse();
        Ok(path)
    }

    /// All root-to-leaf paths, ordered by leaf.
    pub fn paths(&self) -> Vec<Vec<ArmId>> {
        self.leaves()
            .iter()
            .map(|l| self.path_to(l).expect("leaf"))
            .collect()
    }

    /// Ok when `path` runs parent to child from the root to a leaf.
    pub fn check_path(&self, path: &[ArmId]) -> Result<()> {
        let invalid = || {
            BanditError::InvalidPath(path.iter().map(ArmId::as_str).collect::<Vec<_>>().join("/"))
        };
        match (path.first(), path.last()) {
            (Some(first), Some(last))
                if *first == self.root && self.is_leaf(last) && path.len() >= 2 => {}
            _ => return Err(invalid()),
        }
        if path
            .windows(2)
            .all(|w| self.parent.get(&w[1]) == Some(&w[0]))
        {
            Ok(())
        } else {
            Err(invalid())
        }
    }
}

fn arm(s: &str) -> ArmId {
    ArmId::new(s).expect("non-empty id")
}

/// A root-to-leaf path and its total score.
#[derive(Debug, Clone, PartialEq)]
pub struct PathSelection {
    pub path: Vec<ArmId>,
    pub leaf: ArmId,
    /// NaN when ε-greedy explored instead of scoring.
    pub score: f64,
}

/// Sum of `eval` over every non-root node on `path`.
pub fn path_score(
    t: &Taxonomy,
    path: &[ArmId],
    mut eval: impl FnMut(&ArmId) -> f64,
) -> Result<f64> {
    t.check_path(path)?;
    Ok(path[1..].iter().map(&mut eval).sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HmabKind {
    Thompson,
    LinUcb,
    EpsGreedy,
}

impl HmabKind {
    /// The flat policy that scores single nodes the same way.
    pub fn flat_kind(self) -> FlatKind {
        match self {
            HmabKind::Thompson => FlatKind::Thompson,
            HmabKind::LinUcb => FlatKind::LinUcb,
            HmabKind::EpsGreedy => FlatKind::EpsGreedy,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HmabConfig {
    pub kind: HmabKind,
    pub epsilon: f64,
    pub lambda: f64,
    pub q0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub variance_form: VarianceForm,
}

impl HmabConfig {
    pub fn new(kind: HmabKind) -> Self {
        Self::from_flat(kind, &FlatPolicyConfig::new(kind.flat_kind()))
    }

    pub fn from_flat(kind: HmabKind, flat: &FlatPolicyConfig) -> Self {
        Self {
            kind,
            epsilon: flat.epsilon,
            lambda: flat.lambda,
            q0: flat.q0,
            alpha0: flat.alpha0,
            beta0: flat.beta0,
            variance_form: flat.variance_form,
        }
    }

    pub fn flat(&self) -> FlatPolicyConfig {
        FlatPolicyConfig {
            kind: self.kind.flat_kind(),
            epsilon: self.epsilon,
            lambda: self.lambda,
            q0: self.q0,
            alpha0: self.alpha0,
            beta0: self.beta0,
            variance_form: self.variance_form,
        }
    }
}

/// Chooses the best root-to-leaf path. `posteriors[i]` belongs to the i-th
/// entry of `t.non_root_nodes()`. Each node is evaluated exactly once, in
/// sorted node order, then paths are compared in sorted leaf order.
pub fn hmab_select(
    t: &Taxonomy,
    posteriors: &[NigPosterior],
    x: &ContextVector,
    config: &HmabConfig,
    rng: &mut RandomStream,
) -> Result<PathSelection> {
    let nodes = t.non_root_nodes();
    if nodes.is_empty() {
        return Err(BanditError::Taxonomy(TaxonomyError::Empty));
    }
    if posteriors.len() != nodes.len() {
        return Err(BanditError::DimensionMismatch {
            expected: nodes.len(),
            actual: posteriors.len(),
        });
    }
    x.ensure_dim(posteriors[0].dim())?;
    let leaves = t.leaves();

    let node_scores: Vec<f64> = match config.kind {
        HmabKind::Thompson => {
            let xv = x.to_dvector();
            posteriors
                .iter()
                .map(|p| xv.dot(&p.sample(rng).1))
                .collect()
        }
        HmabKind::LinUcb => posteriors
            .iter()
            .map(|p| p.linucb_score(x, config.lambda, config.variance_form))
            .collect::<Result<_>>()?,
        HmabKind::EpsGreedy => {
            if rng.uniform() < config.epsilon {
                let leaf = leaves[rng.index(leaves.len())].clone();
                let path = t.path_to(&leaf)?;
                return Ok(PathSelection {
                    path,
                    leaf,
                    score: f64::NAN,
                });
            }
            posteriors
                .iter()
                .map(|p| p.expected_reward(x))
                .collect::<Result<_>>()?
        }
    };
    if node_scores.iter().any(|s| s.is_nan()) {
        return Err(BanditError::NonFinite("node score"));
    }
    let eval = |n: &ArmId| node_scores[nodes.binary_search(n).expect("non-root node")];

    let paths = t.paths();
    let scores = paths
        .iter()
        .map(|p| path_score(t, p, eval))
        .collect::<Result<Vec<_>>>()?;
    let best = argmax_first(&scores).expect("at least one leaf");
    Ok(PathSelection {
        path: paths[best].clone(),
        leaf: leaves[best].clone(),
        score: scores[best],
    })
}

/// Applies the conjugate update for `(x, r)` to every non-root node on `path`.
pub fn hmab_update(
    t: &Taxonomy,
    posteriors: &mut [NigPosterior],
    path: &[ArmId],
    x: &ContextVector,
    r: f64,
) -> Result<()> {
    t.check_path(path)?;
    let nodes = t.non_root_nodes();
    for node in &path[1..] {
        let i = nodes.binary_search(node).expect("checked path");
        posteriors[i] = posteriors[i].update(x, r)?;
    }
    Ok(())
}

/// HMAB over a taxonomy; its arms are the leaves.
#[derive(Debug, Clone)]
pub struct HmabPolicy {
    config: HmabConfig,
    taxonomy: Taxonomy,
    leaves: Vec<ArmId>,
    nodes: Vec<ArmId>,
    posteriors: Vec<NigPosterior>,
}

impl HmabPolicy {
    pub fn new(config: HmabConfig, taxonomy: Taxonomy, dim: usize) -> Result<Self> {
        let flat = config.flat();
        flat.validate()?;
        let prior = flat.prior(dim)?;
        let nodes = taxonomy.non_root_nodes();
        Ok(Self {
            posteriors: vec![prior; nodes.len()],
            leaves: taxonomy.leaves(),
            nodes,
            taxonomy,
            config,
        })
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn posterior(&self, node: &ArmId) -> Option<&NigPosterior> {
        self.nodes
            .binary_search(node)
            .ok()
            .map(|i| &self.posteriors[i])
    }

    pub fn select_path(&self, x: &ContextVector, rng: &mut RandomStream) -> Result<PathSelection> {
        hmab_select(&self.taxonomy, &self.posteriors, x, &self.config, rng)
    }
}

impl Policy for HmabPolicy {
    fn name(&self) -> String {
        let c = &self.config;
        match c.kind {
            HmabKind::Thompson => format!("HMAB-TS({})", c.q0),
            HmabKind::LinUcb => format!("HMAB-LinUCB({})", c.lambda),
            HmabKind::EpsGreedy => format!("HMAB-EpsGreedy({})", c.epsilon),
        }
    }

    fn arms(&self) -> &[ArmId] {
        &self.leaves
    }

    fn select(&self, context: &ContextVector, rng: &mut RandomStream) -> Result<ArmId> {
        Ok(self.select_path(context, rng)?.leaf)
    }

    fn update(&mut self, interaction: &Interaction, _rng: &mut RandomStream) -> Result<()> {
        let path = self
            .taxonomy
            .path_to(&interaction.chosen)
            .map_err(|_| BanditError::UnknownArm(interaction.chosen.to_string()))?;
        hmab_update(
            &self.taxonomy,
            &mut self.posteriors,
            &path,
            &interaction.context,
            interaction.reward,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bayes::{FlatPolicy, FlatPolicyConfig};
    use crate::rng::derive_stream;
    use approx::assert_abs_diff_eq;

    fn e(p: &str, c: &str) -> (ArmId, ArmId) {
        (arm(p), arm(c))
    }

    fn sample_tree() -> Vec<(ArmId, ArmId)> {
        vec![
            e("root", "A"),
            e("root", "B"),
            e("A", "a1"),
            e("A", "a2"),
            e("B", "b1"),
        ]
    }

    fn ctx(v: &[f64]) -> ContextVector {
        ContextVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn accepts_well_formed_tree() {
        let t = Taxonomy::from_edges(sample_tree()).unwrap();
        assert_eq!(t.root().as_str(), "root");
        assert_eq!(t.leaves(), vec![arm("a1"), arm("a2"), arm("b1")]);
        assert_eq!(
            t.path_to(&arm("a2")).unwrap(),
            vec![arm("root"), arm("A"), arm("a2")]
        );
        assert_eq!(t.non_root_nodes().len(), 5);
    }

    #[test]
    fn distinct_validation_errors() {
        let mut two_roots = sample_tree();
        two_roots.push(e("other", "o1"));
        assert!(matches!(
            Taxonomy::from_edges(two_roots),
            Err(TaxonomyError::MultipleRoots(_))
        ));

        let mut cyclic = sample_tree();
        cyclic.push(e("a1", "root"));
        assert!(matches!(
            Taxonomy::from_edges(cyclic),
            Err(TaxonomyError::Cycle(_))
        ));

        let mut detached_cycle = sample_tree();
        detached_cycle.extend([e("x", "y"), e("y", "x")]);
        assert!(matches!(
            Taxonomy::from_edges(detached_cycle),
            Err(TaxonomyError::Cycle(_))
        ));

        let mut two_parents = sample_tree();
        two_parents.push(e("B", "a1"));
        assert_eq!(
            Taxonomy::from_edges(two_parents),
            Err(TaxonomyError::MultipleParents("a1".into()))
        );

        assert_eq!(
            Taxonomy::new([arm("lonely")], sample_tree()),
            Err(TaxonomyError::Orphan("lonely".into()))
        );
        assert_eq!(Taxonomy::from_edges(vec![]), Err(TaxonomyError::Empty));
    }

    #[test]
    fn balanced_shape() {
        let t = Taxonomy::balanced(4, 2).unwrap();
        assert_eq!(t.leaves().len(), 16);
        assert_eq!(t.non_root_nodes().len(), 20);
        assert!(t.paths().iter().all(|p| p.len() == 3));
    }

    #[test]
    fn path_score_sums_non_root_nodes() {
        let t = Taxonomy::from_edges(sample_tree()).unwrap();
        let scores: BTreeMap<ArmId, f64> = [
            ("A", 0.3),
            ("a1", 0.5),
            ("a2", 0.0),
            ("B", 0.0),
            ("b1", 0.0),
        ]
        .into_iter()
        .map(|(k, v)| (arm(k), v))
        .collect();
        let path = t.path_to(&arm("a1")).unwrap();
        assert_abs_diff_eq!(
            path_score(&t, &path, |n| scores[n]).unwrap(),
            0.8,
            epsilon = 1e-15
        );
        assert!(path_score(&t, &[arm("root"), arm("B"), arm("a1")], |_| 0.0).is_err());
        assert!(path_score(&t, &[arm("root"), arm("A")], |_| 0.0).is_err());

        let flat = Taxonomy::from_edges(vec![e("r", "x"), e("r", "y")]).unwrap();
        assert_eq!(
            path_score(&flat, &[arm("r"), arm("y")], |_| 0.7).unwrap(),
            0.7
        );
    }

    #[test]
    fn deterministic_two_path_argmax() {
        // (0.3 + 0.5) beats (0.4 + 0.1) with exploit-only scoring.
        let t =
            Taxonomy::from_edges(vec![e("r", "A"), e("r", "B"), e("A", "a"), e("B", "b")]).unwrap();
        let mean = |m: f64| {
            NigPosterior::new(
                DVector::from_element(1, m),
                DMatrix::identity(1, 1),
                2.0,
                2.0,
            )
            .unwrap()
        };
        // non-root order: A, B, a, b
        let posts = vec![mean(0.3), mean(0.4), mean(0.5), mean(0.1)];
        let mut config = HmabConfig::new(HmabKind::EpsGreedy);
        config.epsilon = 0.0;
        let sel = hmab_select(
            &t,
            &posts,
            &ctx(&[1.0]),
            &config,
            &mut derive_stream(0, &[]),
        )
        .unwrap();
        assert_eq!(sel.leaf, arm("a"));
        assert_abs_diff_eq!(sel.score, 0.8, epsilon = 1e-15);
        assert_eq!(sel.path, vec![arm("r"), arm("A"), arm("a")]);
    }

    use nalgebra::{DMatrix, DVector};

    #[test]
    fn update_touches_only_path_nodes() {
        let t = Taxonomy::from_edges(sample_tree()).unwrap();
        let mut policy = HmabPolicy::new(HmabConfig::new(HmabKind::Thompson), t, 2).unwrap();
        let before = policy.posteriors.clone();
        let x = ctx(&[0.6, 0.8]);
        policy
            .update(
                &Interaction {
                    t: 1,
                    context: x,
                    chosen: arm("a2"),
                    reward: 1.0,
                },
                &mut derive_stream(0, &[]),
            )
            .unwrap();
        let changed: Vec<&ArmId> = policy
            .nodes
            .iter()
            .zip(before.iter().zip(&policy.posteriors))
            .filter(|(_, (b, a))| b != a)
            .map(|(n, _)| n)
            .collect();
        assert_eq!(changed, vec![&arm("A"), &arm("a2")]);
    }

    #[test]
    fn alpha_counts_path_updates() {
        let t = Taxonomy::from_edges(sample_tree()).unwrap();
        let mut policy = HmabPolicy::new(HmabConfig::new(HmabKind::LinUcb), t, 2).unwrap();
        for i in 0..6 {
            let it = Interaction {
                t: i,
                context: ctx(&[0.1 * i as f64, 1.0]),
                chosen: arm("b1"),
                reward: 1.0,
            };
            policy.update(&it, &mut derive_stream(0, &[])).unwrap();
        }
        assert_eq!(policy.posterior(&arm("B")).unwrap().alpha(), 2.0 + 3.0);
        assert_eq!(policy.posterior(&arm("b1")).unwrap().alpha(), 2.0 + 3.0);
        assert_eq!(policy.posterior(&arm("A")).unwrap().alpha(), 2.0);
    }

    #[test]
    fn category_absorbs_both_children() {
        let t = Taxonomy::from_edges(sample_tree()).unwrap();
        let mut policy = HmabPolicy::new(HmabConfig::new(HmabKind::Thompson), t, 2).unwrap();
        let obs = [
            ("a1", [0.3, -0.2], 1.0),
            ("a2", [0.9, 0.1], 0.0),
            ("a1", [-0.4, 0.7], 1.0),
        ];
        for (i, (leaf, x, r)) in obs.iter().enumerate() {
            let it = Interaction {
                t: i as u64,
                context: ctx(x),
                chosen: arm(leaf),
                reward: *r,
            };
            policy.update(&it, &mut derive_stream(0, &[])).unwrap();
        }
        // Batch oracle: Λ = I + Σ x xᵀ, μ = Λ⁻¹ Σ x r.
        let mut lambda = DMatrix::<f64>::identity(2, 2);
        let mut xr = DVector::<f64>::zeros(2);
        for (_, x, r) in &obs {
            let xv = DVector::from_column_slice(x);
            lambda += &xv * xv.transpose();
            xr += xv * *r;
        }
        let mu = lambda.clone().try_inverse().unwrap() * xr;
        let cat = policy.posterior(&arm("A")).unwrap();
        assert!((cat.mu() - mu).abs().max() < 1e-12);
        assert!((cat.precision() - lambda).abs().max() < 1e-12);
    }

    #[test]
    fn depth_one_matches_flat_policies() {
        let leaves = crate::types::numbered_arms("item", 6);
        let t = Taxonomy::from_edges(leaves.iter().map(|l| (arm("root"), l.clone()))).unwrap();
        for kind in [HmabKind::Thompson, HmabKind::LinUcb, HmabKind::EpsGreedy] {
            let mut hier = HmabPolicy::new(HmabConfig::new(kind), t.clone(), 3).unwrap();
            let mut flat =
                FlatPolicy::new(FlatPolicyConfig::new(kind.flat_kind()), leaves.clone(), 3)
                    .unwrap();
            for step in 0..200u64 {
                let s = step as f64;
                let x = ctx(&[(s * 0.37).sin(), (s * 0.11).cos(), 0.5]);
                let a = hier.select(&x, &mut derive_stream(11, &[step])).unwrap();
                let b = flat.select(&x, &mut derive_stream(11, &[step])).unwrap();
                assert_eq!(a, b, "{kind:?} diverged at {step}");
                let r = ((step * 7) % 3 == 0) as u8 as f64;
                let it = Interaction {
                    t: step,
                    context: x,
                    chosen: a,
                    reward: r,
                };
                hier.update(&it, &mut derive_stream(0, &[])).unwrap();
                flat.update(&it, &mut derive_stream(0, &[])).unwrap();
            }
        }
    }

    #[test]
    fn selection_ends_at_leaf() {
        let t = Taxonomy::balanced(3, 3).unwrap();
        let policy = HmabPolicy::new(HmabConfig::new(HmabKind::Thompson), t.clone(), 2).unwrap();
        for s in 0..50 {
            let sel = policy
                .select_path(&ctx(&[1.0, -0.5]), &mut derive_stream(2, &[s]))
                .unwrap();
            assert!(t.is_leaf(&sel.leaf));
            t.check_path(&sel.path).unwrap();
        }
    }
}
