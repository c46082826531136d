//! Flat key-value experiment configuration.
//!
//! A config file is a sequence of `key = value` lines; `#` starts a comment
//! and blank lines are ignored. Every key is listed in the README together
//! with its default. Parsing is fail-fast: unknown keys, duplicates, type
//! errors, and cross-field inconsistencies are all reported before any run
//! starts, with the offending line where one exists.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use bilevel_core::{BallRadius, EstimatorConfig, SolverConfig};

#[derive(Debug)]
pub enum ConfigError {
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    Syntax {
        line: usize,
        reason: String,
    },
    UnknownKey {
        line: usize,
        key: String,
    },
    DuplicateKey {
        line: usize,
        key: String,
    },
    InvalidValue {
        line: usize,
        key: String,
        reason: String,
    },
    MissingKey {
        key: &'static str,
    },
    Inconsistent {
        reason: String,
    },
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::Io { path, source } => {
                write!(f, "cannot read config {}: {source}", path.display())
            }
            ConfigError::Syntax { line, reason } => write!(f, "line {line}: {reason}"),
            ConfigError::UnknownKey { line, key } => {
                write!(f, "line {line}: unknown key '{key}'")
            }
            ConfigError::DuplicateKey { line, key } => {
                write!(f, "line {line}: duplicate key '{key}'")
            }
            ConfigError::InvalidValue { line, key, reason } => {
                write!(f, "line {line}: invalid value for '{key}': {reason}")
            }
            ConfigError::MissingKey { key } => write!(f, "missing required key '{key}'"),
            ConfigError::Inconsistent { reason } => write!(f, "{reason}"),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    AlsSpider,
    AlsStorm,
    SgdBaseline,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::AlsSpider => "als-spider",
            Algorithm::AlsStorm => "als-storm",
            Algorithm::SgdBaseline => "sgd-baseline",
        }
    }
}

/// Which benchmark to build and the data it needs. Two configs describe the
/// same problem instance exactly when these compare equal.
#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Synthetic {
        n: usize,
        dim: usize,
        reg: f64,
        data_seed: u64,
    },
    HyperCleanSynthetic {
        n_train: usize,
        n_val: usize,
        n_test: usize,
        dim: usize,
        n_classes: usize,
        corruption_prob: f64,
        reg_c: f64,
        data_seed: u64,
    },
    HyperCleanIdx {
        train_images: PathBuf,
        train_labels: PathBuf,
        test_images: PathBuf,
        test_labels: PathBuf,
        n_train: usize,
        n_val: usize,
        corruption_prob: f64,
        reg_c: f64,
        data_seed: u64,
    },
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub algorithm: Algorithm,
    pub k_max: usize,
    pub t_steps: usize,
    pub j_steps: usize,
    pub step_x: f64,
    pub step_y: f64,
    pub step_v: f64,
    pub radius: f64,
    pub s1: usize,
    pub s2: usize,
    pub q1: usize,
    pub tau_x: f64,
    pub tau_y: f64,
    pub tau_v: f64,
    pub seeds: Vec<u64>,
    pub eval_every: usize,
    pub output: PathBuf,
    pub lyapunov: bool,
    pub record_wall_time: bool,
}

impl RunConfig {
    pub fn estimator(&self) -> EstimatorConfig {
        EstimatorConfig {
            tau_x: self.tau_x,
            tau_y: self.tau_y,
            tau_v: self.tau_v,
            s1: self.s1,
            s2: self.s2,
            q1: self.q1,
        }
    }

    pub fn solver_config(&self, seed: u64) -> Result<SolverConfig, ConfigError> {
        let radius = BallRadius::new(self.radius).map_err(|e| ConfigError::Inconsistent {
            reason: e.to_string(),
        })?;
        let config = SolverConfig {
            k_max: self.k_max,
            t_steps: self.t_steps,
            j_steps: self.j_steps,
            step_x: self.step_x,
            step_y: self.step_y,
            step_v: self.step_v,
            radius,
            estimator: self.estimator(),
            seed,
        };
        config.validate().map_err(|e| ConfigError::Inconsistent {
            reason: e.to_string(),
        })?;
        Ok(config)
    }
}

struct Extractor {
    entries: BTreeMap<String, (usize, String)>,
}

impl Extractor {
    fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let stripped = raw.trim();
            if stripped.is_empty() || stripped.starts_with('#') {
                continue;
            }
            let (key, value) = stripped.split_once('=').ok_or(ConfigError::Syntax {
                line,
                reason: format!("expected 'key = value', got '{stripped}'"),
            })?;
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if key.is_empty() {
                return Err(ConfigError::Syntax {
                    line,
                    reason: "empty key".to_string(),
                });
            }
            if entries.insert(key.clone(), (line, value)).is_some() {
                return Err(ConfigError::DuplicateKey { line, key });
            }
        }
        Ok(Extractor { entries })
    }

    fn take_raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.remove(key)
    }

    fn required<T: FromStr>(&mut self, key: &'static str) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.optional(key)? {
            Some(v) => Ok(v),
            None => Err(ConfigError::MissingKey { key }),
        }
    }

    fn optional<T: FromStr>(&mut self, key: &'static str) -> Result<Option<T>, ConfigError>
    where
        T::Err: fmt::Display,
    {
        match self.take_raw(key) {
            None => Ok(None),
            Some((line, value)) => {
                value
                    .parse::<T>()
                    .map(Some)
                    .map_err(|e| ConfigError::InvalidValue {
                        line,
                        key: key.to_string(),
                        reason: e.to_string(),
                    })
            }
        }
    }

    fn with_default<T: FromStr>(&mut self, key: &'static str, default: T) -> Result<T, ConfigError>
    where
        T::Err: fmt::Display,
    {
        Ok(self.optional(key)?.unwrap_or(default))
    }

    fn required_path(&mut self, key: &'static str) -> Result<PathBuf, ConfigError> {
        match self.take_raw(key) {
            Some((_, value)) => Ok(PathBuf::from(value)),
            None => Err(ConfigError::MissingKey { key }),
        }
    }

    fn bool_with_default(&mut self, key: &'static str, default: bool) -> Result<bool, ConfigError> {
        match self.take_raw(key) {
            None => Ok(default),
            Some((line, value)) => match value.as_str() {
                "true" => Ok(true),
                "false" => Ok(false),
                other => Err(ConfigError::InvalidValue {
                    line,
                    key: key.to_string(),
                    reason: format!("expected 'true' or 'false', got '{other}'"),
                }),
            },
        }
    }

    /// Every key must have been consumed by now.
    fn finish(self) -> Result<(), ConfigError> {
        if let Some((key, (line, _))) = self.entries.into_iter().min_by_key(|(_, (l, _))| *l) {
            return Err(ConfigError::UnknownKey { line, key });
        }
        Ok(())
    }
}

pub fn load_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let mut ex = Extractor::parse(text)?;

    let algorithm = match ex.take_raw("algorithm") {
        None => return Err(ConfigError::MissingKey { key: "algorithm" }),
        Some((line, value)) => match value.as_str() {
            "als-spider" => Algorithm::AlsSpider,
            "als-storm" => Algorithm::AlsStorm,
            "sgd-baseline" => Algorithm::SgdBaseline,
            other => {
                return Err(ConfigError::InvalidValue {
                    line,
                    key: "algorithm".to_string(),
                    reason: format!(
                        "expected als-spider, als-storm, or sgd-baseline, got '{other}'"
                    ),
                })
            }
        },
    };

    let problem = match ex.take_raw("problem") {
        None => return Err(ConfigError::MissingKey { key: "problem" }),
        Some((line, value)) => match value.as_str() {
            "synthetic" => ProblemSpec::Synthetic {
                n: ex.required("n")?,
                dim: ex.required("dim")?,
                reg: ex.with_default("reg", 0.5)?,
                data_seed: ex.with_default("data_seed", 0)?,
            },
            "hyperclean" => ProblemSpec::HyperCleanSynthetic {
                n_train: ex.required("n_train")?,
                n_val: ex.required("n_val")?,
                n_test: ex.required("n_test")?,
                dim: ex.required("dim")?,
                n_classes: ex.required("n_classes")?,
                corruption_prob: ex.with_default("corruption_prob", 0.3)?,
                reg_c: ex.with_default("reg_c", 0.01)?,
                data_seed: ex.with_default("data_seed", 0)?,
            },
            "hyperclean-idx" => ProblemSpec::HyperCleanIdx {
                train_images: ex.required_path("train_images")?,
                train_labels: ex.required_path("train_labels")?,
                test_images: ex.required_path("test_images")?,
                test_labels: ex.required_path("test_labels")?,
                n_train: ex.required("n_train")?,
                n_val: ex.required("n_val")?,
                corruption_prob: ex.with_default("corruption_prob", 0.3)?,
                reg_c: ex.with_default("reg_c", 0.01)?,
                data_seed: ex.with_default("data_seed", 0)?,
            },
            other => {
                return Err(ConfigError::InvalidValue {
                    line,
                    key: "problem".to_string(),
                    reason: format!(
                        "expected synthetic, hyperclean, or hyperclean-idx, got '{other}'"
                    ),
                })
            }
        },
    };

    let k_max: usize = ex.required("k_max")?;

    // Per-algorithm defaults: the damping factors and the anchoring period.
    let (default_taus, default_q1) = match algorithm {
        Algorithm::AlsSpider => ((0.0, 0.0, 0.0), None),
        Algorithm::AlsStorm => ((0.01, 0.0001, 0.01), Some(k_max)),
        Algorithm::SgdBaseline => ((1.0, 1.0, 1.0), Some(1)),
    };
    let tau_x = ex.with_default("tau_x", default_taus.0)?;
    let tau_y = ex.with_default("tau_y", default_taus.1)?;
    let tau_v = ex.with_default("tau_v", default_taus.2)?;
    let q1 = match (ex.optional::<usize>("q1")?, default_q1) {
        (Some(q1), _) => q1,
        (None, Some(default)) => default,
        (None, None) => return Err(ConfigError::MissingKey { key: "q1" }),
    };

    let seeds = match (ex.optional::<u64>("seed")?, ex.take_raw("seeds")) {
        (Some(_), Some((line, _))) => {
            return Err(ConfigError::InvalidValue {
                line,
                key: "seeds".to_string(),
                reason: "give either 'seed' or 'seeds', not both".to_string(),
            })
        }
        (Some(seed), None) => vec![seed],
        (None, Some((line, value))) => {
            let mut seeds = Vec::new();
            for part in value.split(',') {
                let seed = part
                    .trim()
                    .parse::<u64>()
                    .map_err(|e| ConfigError::InvalidValue {
                        line,
                        key: "seeds".to_string(),
                        reason: format!("'{}': {e}", part.trim()),
                    })?;
                seeds.push(seed);
            }
            if seeds.is_empty() {
                return Err(ConfigError::InvalidValue {
                    line,
                    key: "seeds".to_string(),
                    reason: "empty seed list".to_string(),
                });
            }
            seeds
        }
        (None, None) => vec![0],
    };

    let eval_every: usize = ex.with_default("eval_every", 1)?;
    if eval_every == 0 {
        return Err(ConfigError::Inconsistent {
            reason: "eval_every must be positive".to_string(),
        });
    }

    let config = RunConfig {
        problem,
        algorithm,
        k_max,
        t_steps: ex.required("t_steps")?,
        j_steps: ex.required("j_steps")?,
        step_x: ex.required("step_x")?,
        step_y: ex.required("step_y")?,
        step_v: ex.required("step_v")?,
        radius: ex.with_default("radius", 1000.0)?,
        s1: ex.required("s1")?,
        s2: ex.required("s2")?,
        q1,
        tau_x,
        tau_y,
        tau_v,
        seeds,
        eval_every,
        output: ex.required_path("output")?,
        lyapunov: ex.bool_with_default("lyapunov", true)?,
        record_wall_time: ex.bool_with_default("record_wall_time", false)?,
    };
    ex.finish()?;

    // The algorithm name must agree with the damping factors before any
    // structural check, so a tau typo is reported as a tau problem rather
    // than as whatever anchoring-period rule it happens to break.
    let taus = (config.tau_x, config.tau_y, config.tau_v);
    let mode_name = match config.estimator().mode() {
        Some(bilevel_core::EstimatorMode::Spider) => "als-spider",
        Some(bilevel_core::EstimatorMode::Storm) => "als-storm",
        Some(bilevel_core::EstimatorMode::SgdBaseline) => "sgd-baseline",
        None => {
            return Err(ConfigError::Inconsistent {
                reason: format!(
                    "tau_x/tau_y/tau_v = {taus:?} mix damping regimes: use all 0 \
                     (als-spider), all inside (0, 1) (als-storm), or all 1 (sgd-baseline)"
                ),
            })
        }
    };
    if mode_name != config.algorithm.name() {
        return Err(ConfigError::Inconsistent {
            reason: format!(
                "algorithm is '{}' but tau_x/tau_y/tau_v = {taus:?} select '{mode_name}'",
                config.algorithm.name(),
            ),
        });
    }
    // Remaining structural checks (positivity, anchoring period) come from
    // the solver itself; a config never starts a run it cannot finish.
    config.solver_config(config.seeds[0])?;
    Ok(config)
}
