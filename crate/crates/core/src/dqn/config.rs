use std::fmt::Write as _;
use std::str::FromStr;

use thiserror::Error;

use crate::nn::{NetShape, DEFAULT_HIDDEN};
use crate::rbgen::{Preset, RbParams};

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: bad value `{value}` for `{key}`")]
    Value { line: usize, key: String, value: String },
    #[error("`{0}` must be positive")]
    NotPositive(&'static str),
    #[error("`{0}` is out of range")]
    Range(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl FromStr for Precision {
    type Err = ();

    fn from_str(s: &str) -> Result<Self, ()> {
        match s {
            "f32" => Ok(Precision::F32),
            "f64" => Ok(Precision::F64),
            _ => Err(()),
        }
    }
}

impl Precision {
    pub fn as_str(self) -> &'static str {
        match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        }
    }
}

/// Training hyper-parameters. Defaults are the full-scale settings.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub episodes: usize,
    pub t_max: u64,
    pub gamma: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    pub eps_decay_steps: u64,
    pub lr: f64,
    pub batch: usize,
    pub capacity: usize,
    /// Episodes between target network syncs.
    pub target_sync: usize,
    pub val_size: usize,
    /// Episodes between validations.
    pub val_period: usize,
    pub val_cutoff: u64,
    pub embed: usize,
    pub rounds: usize,
    pub hidden: usize,
    pub preset: Preset,
    pub n: usize,
    pub seed: u64,
    pub precision: Precision,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            episodes: 1000,
            t_max: 10_000,
            gamma: 0.99,
            eps_start: 1.0,
            eps_end: 0.05,
            eps_decay_steps: 20_000,
            lr: 5e-5,
            batch: 128,
            capacity: 100_000,
            target_sync: 100,
            val_size: 200,
            val_period: 10,
            val_cutoff: 10_000,
            embed: 128,
            rounds: 5,
            hidden: DEFAULT_HIDDEN,
            preset: Preset::D1,
            n: 15,
            seed: 0,
            precision: Precision::F64,
        }
    }
}

/// Linear decay from `eps_start` to `eps_end` over `eps_decay_steps`, then
/// constant.
pub fn epsilon_at(step: u64, cfg: &TrainConfig) -> f64 {
    let slope = (cfg.eps_start - cfg.eps_end) / cfg.eps_decay_steps as f64;
    (cfg.eps_start - step as f64 * slope).max(cfg.eps_end)
}

impl TrainConfig {
    /// The reduced setting used for single-machine runs: `p = 32`, `K = 3`,
    /// 300 episodes.
    pub fn desk_scale() -> Self {
        Self { embed: 32, rounds: 3, episodes: 300, ..Self::default() }
    }

    pub fn shape(&self) -> NetShape {
        NetShape { embed: self.embed, rounds: self.rounds, hidden: self.hidden }
    }

    pub fn instance_class(&self) -> RbParams {
        self.preset.params(self.n)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("episodes", self.episodes as f64),
            ("t_max", self.t_max as f64),
            ("eps_decay_steps", self.eps_decay_steps as f64),
            ("lr", self.lr),
            ("batch", self.batch as f64),
            ("capacity", self.capacity as f64),
            ("target_sync", self.target_sync as f64),
            ("val_size", self.val_size as f64),
            ("val_period", self.val_period as f64),
            ("val_cutoff", self.val_cutoff as f64),
            ("embed", self.embed as f64),
            ("hidden", self.hidden as f64),
            ("n", self.n as f64),
        ];
        for (name, v) in positive {
            if !(v > 0.0) {
                return Err(ConfigError::NotPositive(name));
            }
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(ConfigError::Range("gamma"));
        }
        if !(0.0 < self.eps_end && self.eps_end <= self.eps_start && self.eps_start <= 1.0) {
            return Err(ConfigError::Range("eps_start/eps_end"));
        }
        if self.batch > self.capacity {
            return Err(ConfigError::Range("batch"));
        }
        if self.n < 2 {
            return Err(ConfigError::Range("n"));
        }
        Ok(())
    }

    /// `key = value` lines for every field, parseable by [`TrainConfig::parse`].
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| writeln!(s, "{k} = {v}").unwrap();
        kv("episodes", self.episodes.to_string());
        kv("t_max", self.t_max.to_string());
        kv("gamma", self.gamma.to_string());
        kv("eps_start", self.eps_start.to_string());
        kv("eps_end", self.eps_end.to_string());
        kv("eps_decay_steps", self.eps_decay_steps.to_string());
        kv("lr", self.lr.to_string());
        kv("batch", self.batch.to_string());
        kv("capacity", self.capacity.to_string());
        kv("target_sync", self.target_sync.to_string());
        kv("val_size", self.val_size.to_string());
        kv("val_period", self.val_period.to_string());
        kv("val_cutoff", self.val_cutoff.to_string());
        kv("embed", self.embed.to_string());
        kv("rounds", self.rounds.to_string());
        kv("hidden", self.hidden.to_string());
        kv("preset", self.preset.to_string());
        kv("n", self.n.to_string());
        kv("seed", self.seed.to_string());
        kv("precision", self.precision.as_str().to_string());
        s
    }

    /// Reads `key = value` lines over the defaults. Blank lines and `#`
    /// comments are skipped; unknown keys are an error.
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        Self::parse_over(Self::default(), text)
    }

    pub fn parse_over(mut cfg: Self, text: &str) -> Result<Self, ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.split('#').next().unwrap().trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Syntax { line: line_no })?;
            cfg.set(line_no, key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, line: usize, key: &str, value: &str) -> Result<(), ConfigError> {
        fn parse<T: FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError> {
            value.parse().map_err(|_| ConfigError::Value { line, key: key.into(), value: value.into() })
        }
        match key {
            "episodes" => self.episodes = parse(line, key, value)?,
            "t_max" => self.t_max = parse(line, key, value)?,
            "gamma" => self.gamma = parse(line, key, value)?,
            "eps_start" => self.eps_start = parse(line, key, value)?,
            "eps_end" => self.eps_end = parse(line, key, value)?,
            "eps_decay_steps" => self.eps_decay_steps = parse(line, key, value)?,
            "lr" => self.lr = parse(line, key, value)?,
            "batch" => self.batch = parse(line, key, value)?,
            "capacity" => self.capacity = parse(line, key, value)?,
            "target_sync" => self.target_sync = parse(line, key, value)?,
            "val_size" => self.val_size = parse(line, key, value)?,
            "val_period" => self.val_period = parse(line, key, value)?,
            "val_cutoff" => self.val_cutoff = parse(line, key, value)?,
            "embed" => self.embed = parse(line, key, value)?,
            "rounds" => self.rounds = parse(line, key, value)?,
            "hidden" => self.hidden = parse(line, key, value)?,
            "preset" => self.preset = parse(line, key, value)?,
            "n" => self.n = parse(line, key, value)?,
            "seed" => self.seed = parse(line, key, value)?,
            "precision" => self.precision = parse(line, key, value)?,
            _ => return Err(ConfigError::UnknownKey { line, key: key.into() }),
        }
        Ok(())
    }
}
