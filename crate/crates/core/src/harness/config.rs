use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::bayes::{FlatKind, VarianceForm};
use crate::drift::TvKind;
use crate::envs::{DriftPattern, RewardModel};
use crate::error::{BanditError, Result};
use crate::hierarchy::HmabKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Simulate,
    Replay,
    Hier,
}

impl FromStr for Mode {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "simulate" => Ok(Mode::Simulate),
            "replay" => Ok(Mode::Replay),
            "hier" => Ok(Mode::Hier),
            _ => Err(BanditError::Config(format!("unknown mode `{s}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Simulate => "simulate",
            Mode::Replay => "replay",
            Mode::Hier => "hier",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolicyKind {
    Flat(FlatKind),
    Drift(TvKind),
    Hier(HmabKind),
}

impl FromStr for PolicyKind {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "random" => PolicyKind::Flat(FlatKind::Random),
            "eps_greedy" => PolicyKind::Flat(FlatKind::EpsGreedy),
            "ts" => PolicyKind::Flat(FlatKind::Thompson),
            "linucb" => PolicyKind::Flat(FlatKind::LinUcb),
            "tvucb" => PolicyKind::Drift(TvKind::Ucb),
            "tvtp" => PolicyKind::Drift(TvKind::Thompson),
            "hmab_ts" => PolicyKind::Hier(HmabKind::Thompson),
            "hmab_linucb" => PolicyKind::Hier(HmabKind::LinUcb),
            "hmab_eps_greedy" => PolicyKind::Hier(HmabKind::EpsGreedy),
            _ => return Err(BanditError::Config(format!("unknown policy `{s}`"))),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatternKind {
    RandomWalk,
    Piecewise,
    Periodic,
}

impl FromStr for PatternKind {
    type Err = BanditError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random_walk" => Ok(PatternKind::RandomWalk),
            "piecewise" => Ok(PatternKind::Piecewise),
            "periodic" => Ok(PatternKind::Periodic),
            _ => Err(BanditError::Config(format!("unknown pattern `{s}`"))),
        }
    }
}

/// Everything one experiment needs. Parsed from `key = value` lines.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub policy: PolicyKind,
    pub epsilon: f64,
    pub lambda: f64,
    pub q0: f64,
    pub alpha0: f64,
    pub beta0: f64,
    pub particles: usize,
    pub variance_form: VarianceForm,
    pub arms: usize,
    pub dim: usize,
    pub horizon: u64,
    pub bucket_size: usize,
    pub seed: u64,
    pub replications: u64,
    pub change_prob: f64,
    pub pattern: PatternKind,
    pub drift_coord: usize,
    pub piecewise_values: Vec<f64>,
    pub period: f64,
    pub amplitude: f64,
    pub offset: f64,
    pub reward_model: String,
    pub noise_sd: f64,
    pub log_path: Option<PathBuf>,
    pub taxonomy_path: Option<PathBuf>,
    pub branching: usize,
    pub depth: usize,
    pub category_scale: f64,
    pub leaf_scale: f64,
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(mode: Mode, policy: PolicyKind) -> Self {
        Self {
            mode,
            policy,
            epsilon: 0.1,
            lambda: 0.5,
            q0: 1.0,
            alpha0: 2.0,
            beta0: 2.0,
            particles: 5,
            variance_form: VarianceForm::Inverse,
            arms: 20,
            dim: 5,
            horizon: 10_000,
            bucket_size: 100,
            seed: 0,
            replications: 1,
            change_prob: 0.0,
            pattern: PatternKind::RandomWalk,
            drift_coord: 0,
            piecewise_values: vec![1.0, -1.0, 2.0, 0.0],
            period: 1000.0,
            amplitude: 1.0,
            offset: 0.0,
            reward_model: "logistic".into(),
            noise_sd: 0.1,
            log_path: None,
            taxonomy_path: None,
            branching: 4,
            depth: 2,
            category_scale: 1.0,
            leaf_scale: 0.25,
            output: None,
        }
    }

    /// Reads a config file; relative paths inside resolve against its directory.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_file_for(path, None)
    }

    /// Like [`from_file`](Self::from_file), with `mode` supplied by the caller.
    /// A `mode` key in the file must then agree with it.
    pub fn from_file_for(path: impl AsRef<Path>, mode: Option<Mode>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| BanditError::Io(format!("{}: {e}", path.display())))?;
        let mut cfg = Self::parse_for(&text, mode)?;
        let base = path.parent().unwrap_or(Path::new(""));
        for p in [&mut cfg.log_path, &mut cfg.taxonomy_path, &mut cfg.output]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        Ok(cfg)
    }

    /// Parses `key = value` lines; `#` starts a comment line. `mode` and
    /// `policy` are required, every other key has a default.
    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_for(text, None)
    }

    pub fn parse_for(text: &str, mode: Option<Mode>) -> Result<Self> {
        let mut pairs = Vec::new();
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| BanditError::Parse {
                line: i + 1,
                message: "expected `key = value`".into(),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return Err(BanditError::Parse {
                    line: i + 1,
                    message: format!("duplicate key `{key}`"),
                });
            }
            pairs.push((i + 1, key, value));
        }
        let required = |name: &str| {
            pairs
                .iter()
                .find(|(_, k, _)| *k == name)
                .map(|(_, _, v)| *v)
                .ok_or_else(|| BanditError::Config(format!("missing required key `{name}`")))
        };
        let file_mode = match (required("mode"), mode) {
            (Ok(m), None) => m.parse()?,
            (Ok(m), Some(given)) => {
                let m: Mode = m.parse()?;
                if m != given {
                    return Err(BanditError::Config(format!(
                        "config mode `{m}` conflicts with `{given}`"
                    )));
                }
                m
            }
            (Err(_), Some(given)) => given,
            (Err(e), None) => return Err(e),
        };
        let mut cfg = Self::new(file_mode, required("policy")?.parse()?);
        for (line, key, value) in pairs {
            cfg.set(key, value).map_err(|e| BanditError::Parse {
                line,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// Sets one key from its textual value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        fn num<T: FromStr>(key: &str, value: &str) -> Result<T> {
            value
                .parse()
                .map_err(|_| BanditError::Config(format!("`{key}`: cannot parse `{value}`")))
        }
        match key {
            "mode" => self.mode = value.parse()?,
            "policy" => self.policy = value.parse()?,
            "epsilon" => self.epsilon = num(key, value)?,
            "lambda" => self.lambda = num(key, value)?,
            "q0" => self.q0 = num(key, value)?,
            "alpha0" => self.alpha0 = num(key, value)?,
            "beta0" => self.beta0 = num(key, value)?,
            "particles" => self.particles = num(key, value)?,
            "ucb_variance_form" => self.variance_form = value.parse()?,
            "arms" => self.arms = num(key, value)?,
            "dim" => self.dim = num(key, value)?,
            "horizon" => self.horizon = num(key, value)?,
            "bucket_size" => self.bucket_size = num(key, value)?,
            "seed" => self.seed = num(key, value)?,
            "replications" => self.replications = num(key, value)?,
            "change_prob" => self.change_prob = num(key, value)?,
            "pattern" => self.pattern = value.parse()?,
            "drift_coord" => self.drift_coord = num(key, value)?,
            "piecewise_values" => {
                self.piecewise_values = value
                    .split(',')
                    .map(|v| num(key, v.trim()))
                    .collect::<Result<_>>()?
            }
            "period" => self.period = num(key, value)?,
            "amplitude" => self.amplitude = num(key, value)?,
            "offset" => self.offset = num(key, value)?,
            "reward_model" => self.reward_model = value.to_string(),
            "noise_sd" => self.noise_sd = num(key, value)?,
            "log_path" => self.log_path = Some(PathBuf::from(value)),
            "taxonomy_path" => self.taxonomy_path = Some(PathBuf::from(value)),
            "branching" => self.branching = num(key, value)?,
            "depth" => self.depth = num(key, value)?,
            "category_scale" => self.category_scale = num(key, value)?,
            "leaf_scale" => self.leaf_scale = num(key, value)?,
            "output" => self.output = Some(PathBuf::from(value)),
            _ => return Err(BanditError::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(BanditError::Config(m));
        if self.horizon < 1 {
            return fail("horizon must be >= 1".into());
        }
        if self.bucket_size < 1 {
            return fail("bucket_size must be >= 1".into());
        }
        if self.replications < 1 {
            return fail("replications must be >= 1".into());
        }
        if self.dim < 1 {
            return fail("dim must be >= 1".into());
        }
        if self.mode == Mode::Simulate && self.arms < 1 {
            return fail("arms must be >= 1".into());
        }
        if self.mode == Mode::Replay && self.log_path.is_none() {
            return fail("replay mode needs log_path".into());
        }
        if self.mode == Mode::Hier
            && self.taxonomy_path.is_none()
            && (self.branching < 1 || self.depth < 1)
        {
            return fail("hier mode needs taxonomy_path or branching, depth >= 1".into());
        }
        if matches!(self.policy, PolicyKind::Hier(_)) && self.mode != Mode::Hier {
            return fail(format!(
                "hierarchical policies need mode = hier, not {}",
                self.mode
            ));
        }
        self.reward_model()?;
        Ok(())
    }

    pub fn reward_model(&self) -> Result<RewardModel> {
        match self.reward_model.as_str() {
            "logistic" => Ok(RewardModel::Logistic),
            "gaussian" => Ok(RewardModel::Gaussian {
                noise_sd: self.noise_sd,
            }),
            other => Err(BanditError::Config(format!(
                "unknown reward_model `{other}`"
            ))),
        }
    }

    pub fn drift_pattern(&self) -> DriftPattern {
        match self.pattern {
            PatternKind::RandomWalk => DriftPattern::RandomWalk,
            PatternKind::Piecewise => DriftPattern::piecewise_even(
                self.drift_coord,
                self.piecewise_values.clone(),
                self.horizon,
            ),
            PatternKind::Periodic => DriftPattern::Periodic {
                coord: self.drift_coord,
                period: self.period,
                amplitude: self.amplitude,
                offset: self.offset,
            },
        }
    }
}
