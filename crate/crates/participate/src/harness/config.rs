//! Experiment presets and configuration.
//!
//! Every runnable experiment comes from a closed preset list. All knobs have
//! defaults; overrides arrive as `key=value` pairs, either on the command
//! line or from a plain-text config file with one pair per line (`#` starts
//! a comment). The resolved configuration is snapshotted next to the
//! metrics in the same format, so a result directory is re-runnable as-is.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::cleanup::MapId;
use crate::error::{Error, Result};
use crate::ipd::IpdVariant;
use crate::theory::SharePricing;

/// The closed list of experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentId {
    IpdNone,
    IpdEqual,
    IpdChoose,
    IpdTrade50,
    IpdTrade10,
    Cleanup2None,
    Cleanup2Equal,
    Cleanup2PreTrade,
    Cleanup3None,
    Cleanup3Equal,
    Cleanup3PreTrade,
    Cleanup3Pool,
    Analytic,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 13] = [
        ExperimentId::IpdNone,
        ExperimentId::IpdEqual,
        ExperimentId::IpdChoose,
        ExperimentId::IpdTrade50,
        ExperimentId::IpdTrade10,
        ExperimentId::Cleanup2None,
        ExperimentId::Cleanup2Equal,
        ExperimentId::Cleanup2PreTrade,
        ExperimentId::Cleanup3None,
        ExperimentId::Cleanup3Equal,
        ExperimentId::Cleanup3PreTrade,
        ExperimentId::Cleanup3Pool,
        ExperimentId::Analytic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentId::IpdNone => "ipd-i",
            ExperimentId::IpdEqual => "ipd-ii",
            ExperimentId::IpdChoose => "ipd-iii",
            ExperimentId::IpdTrade50 => "ipd-iv",
            ExperimentId::IpdTrade10 => "ipd-v",
            ExperimentId::Cleanup2None => "cleanup2-none",
            ExperimentId::Cleanup2Equal => "cleanup2-equal",
            ExperimentId::Cleanup2PreTrade => "cleanup2-pretrade",
            ExperimentId::Cleanup3None => "cleanup3-none",
            ExperimentId::Cleanup3Equal => "cleanup3-equal",
            ExperimentId::Cleanup3PreTrade => "cleanup3-pretrade",
            ExperimentId::Cleanup3Pool => "cleanup3-pool",
            ExperimentId::Analytic => "analytic",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentId::IpdNone => "IPD (i): no participation, tabular actor-critic",
            ExperimentId::IpdEqual => "IPD (ii): rewards split equally every step",
            ExperimentId::IpdChoose => "IPD (iii): both must opt in to share a step's rewards",
            ExperimentId::IpdTrade50 => "IPD (iv): per-step trading of 50% share blocks",
            ExperimentId::IpdTrade10 => "IPD (v): per-step trading of 10% share blocks",
            ExperimentId::Cleanup2None => "Cleanup (i), 7x7, two agents: no participation",
            ExperimentId::Cleanup2Equal => "Cleanup (iii), 7x7, two agents: equal split",
            ExperimentId::Cleanup2PreTrade => {
                "Cleanup (iv), 7x7, two agents: pre-traded participation rights"
            }
            ExperimentId::Cleanup3None => "Cleanup (i), 10x10, three agents: no participation",
            ExperimentId::Cleanup3Equal => "Cleanup (iii), 10x10, three agents: equal split",
            ExperimentId::Cleanup3PreTrade => {
                "Cleanup (iv), 10x10, three agents: pre-traded participation rights"
            }
            ExperimentId::Cleanup3Pool => {
                "Cleanup (v), 10x10, three agents: opt-in common reward pool"
            }
            ExperimentId::Analytic => "Broker-priced share dynamics, exact update equations",
        }
    }

    pub fn ipd_variant(self) -> Option<IpdVariant> {
        match self {
            ExperimentId::IpdNone => Some(IpdVariant::NoParticipation),
            ExperimentId::IpdEqual => Some(IpdVariant::EqualSplit),
            ExperimentId::IpdChoose => Some(IpdVariant::ChooseShare),
            ExperimentId::IpdTrade50 => Some(IpdVariant::Trade50),
            ExperimentId::IpdTrade10 => Some(IpdVariant::Trade10),
            _ => None,
        }
    }

    pub fn cleanup_map(self) -> Option<MapId> {
        match self {
            ExperimentId::Cleanup2None
            | ExperimentId::Cleanup2Equal
            | ExperimentId::Cleanup2PreTrade => Some(MapId::Small7x7),
            ExperimentId::Cleanup3None
            | ExperimentId::Cleanup3Equal
            | ExperimentId::Cleanup3PreTrade
            | ExperimentId::Cleanup3Pool => Some(MapId::Big10x10),
            _ => None,
        }
    }

    pub fn default_seeds(self) -> u32 {
        match self {
            ExperimentId::Analytic => 20,
            _ => 5,
        }
    }

    pub fn default_episodes(self) -> u32 {
        match self {
            ExperimentId::IpdTrade50 | ExperimentId::IpdTrade10 => 30_000,
            ExperimentId::Analytic => 100,
            id if id.cleanup_map().is_some() => 50_000,
            _ => 10_000,
        }
    }
}

impl fmt::Display for ExperimentId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ExperimentId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ExperimentId::ALL
            .into_iter()
            .find(|id| id.name() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown experiment '{s}'; run `participate list` for the preset table"
                ))
            })
    }
}

/// Every tunable knob, with defaults.
#[derive(Debug, Clone)]
pub struct Params {
    /// Discount for the learning experiments.
    pub gamma: f64,
    pub actor_lr: f64,
    pub critic_lr: f64,
    pub eps_start: f64,
    pub eps_end: f64,
    /// Fraction of the episode budget over which epsilon decays.
    pub eps_decay_frac: f64,
    /// Hidden width of the cleanup policy network.
    pub mlp_hidden: usize,
    /// Parameter init range [-scale, scale].
    pub init_scale: f64,
    /// Override for the IPD episode length (default: 5, or 40 when trading).
    pub ipd_horizon: Option<u32>,
    pub cleanup_horizon: u32,
    pub apple_base_rate: f64,
    pub waste_spawn_prob: f64,
    pub depletion_threshold: f64,
    pub theory_gamma: f64,
    pub theory_alpha: f64,
    pub theory_share_step: f64,
    pub theory_pricing: SharePricing,
}

impl Default for Params {
    fn default() -> Self {
        Params {
            gamma: 0.99,
            actor_lr: 1e-3,
            critic_lr: 0.1,
            eps_start: 1.0,
            eps_end: 0.01,
            eps_decay_frac: 0.5,
            mlp_hidden: 64,
            init_scale: 0.05,
            ipd_horizon: None,
            cleanup_horizon: 50,
            apple_base_rate: 0.3,
            waste_spawn_prob: 0.75,
            depletion_threshold: 0.7,
            theory_gamma: 0.9,
            theory_alpha: 0.1,
            theory_share_step: 0.05,
            theory_pricing: SharePricing::BrokerPerUnit,
        }
    }
}

/// A fully resolved experiment invocation.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    /// Number of independent runs; run `i` uses RNG stream `i`.
    pub seeds: u32,
    pub episodes: u32,
    pub master_seed: u64,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub params: Params,
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentId, out_dir: impl Into<PathBuf>) -> Self {
        ExperimentConfig {
            experiment,
            seeds: experiment.default_seeds(),
            episodes: experiment.default_episodes(),
            master_seed: 0,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
            out_dir: out_dir.into(),
            params: Params::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds < 1 {
            return Err(Error::invalid("seeds must be at least 1"));
        }
        if self.episodes < 1 {
            return Err(Error::invalid("episodes must be at least 1"));
        }
        if self.workers < 1 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        Ok(())
    }

    /// Apply one `key=value` override.
    pub fn apply_override(&mut self, key: &str, value: &str) -> Result<()> {
        let bad = |e: std::num::ParseFloatError| {
            Error::invalid(format!("bad value '{value}' for {key}: {e}"))
        };
        let bad_int =
            |e: std::num::ParseIntError| Error::invalid(format!("bad value '{value}' for {key}: {e}"));
        match key {
            "experiment" => self.experiment = value.parse()?,
            "seeds" => self.seeds = value.parse().map_err(bad_int)?,
            "episodes" => self.episodes = value.parse().map_err(bad_int)?,
            "master_seed" => self.master_seed = value.parse().map_err(bad_int)?,
            "workers" => self.workers = value.parse().map_err(bad_int)?,
            "gamma" => self.params.gamma = value.parse().map_err(bad)?,
            "actor_lr" => self.params.actor_lr = value.parse().map_err(bad)?,
            "critic_lr" => self.params.critic_lr = value.parse().map_err(bad)?,
            "eps_start" => self.params.eps_start = value.parse().map_err(bad)?,
            "eps_end" => self.params.eps_end = value.parse().map_err(bad)?,
            "eps_decay_frac" => self.params.eps_decay_frac = value.parse().map_err(bad)?,
            "mlp_hidden" => self.params.mlp_hidden = value.parse().map_err(bad_int)?,
            "init_scale" => self.params.init_scale = value.parse().map_err(bad)?,
            "ipd_horizon" => self.params.ipd_horizon = Some(value.parse().map_err(bad_int)?),
            "cleanup_horizon" => self.params.cleanup_horizon = value.parse().map_err(bad_int)?,
            "apple_base_rate" => self.params.apple_base_rate = value.parse().map_err(bad)?,
            "waste_spawn_prob" => self.params.waste_spawn_prob = value.parse().map_err(bad)?,
            "depletion_threshold" => {
                self.params.depletion_threshold = value.parse().map_err(bad)?
            }
            "theory_gamma" => self.params.theory_gamma = value.parse().map_err(bad)?,
            "theory_alpha" => self.params.theory_alpha = value.parse().map_err(bad)?,
            "theory_share_step" => self.params.theory_share_step = value.parse().map_err(bad)?,
            "theory_pricing" => {
                self.params.theory_pricing = match value {
                    "free" => SharePricing::Free,
                    "broker" => SharePricing::BrokerPerUnit,
                    "broker-inside" => SharePricing::BrokerInsideBracket,
                    other => {
                        return Err(Error::invalid(format!(
                            "unknown pricing '{other}' (free | broker | broker-inside)"
                        )));
                    }
                }
            }
            other => return Err(Error::invalid(format!("unknown config key '{other}'"))),
        }
        Ok(())
    }

    /// Apply `key=value` overrides from config-file text. Blank lines and
    /// `#` comments are skipped.
    pub fn apply_config_text(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::parse(i + 1, format!("expected key=value, got '{line}'")))?;
            self.apply_override(key.trim(), value.trim())
                .map_err(|e| Error::parse(i + 1, e.to_string()))?;
        }
        Ok(())
    }

    /// Resolved configuration as reloadable `key=value` lines.
    pub fn snapshot_text(&self) -> String {
        let p = &self.params;
        let pricing = match p.theory_pricing {
            SharePricing::Free => "free",
            SharePricing::BrokerPerUnit => "broker",
            SharePricing::BrokerInsideBracket => "broker-inside",
        };
        let mut out = String::new();
        out.push_str(&format!("experiment={}\n", self.experiment));
        out.push_str(&format!("seeds={}\n", self.seeds));
        out.push_str(&format!("episodes={}\n", self.episodes));
        out.push_str(&format!("master_seed={}\n", self.master_seed));
        out.push_str(&format!("workers={}\n", self.workers));
        out.push_str(&format!("gamma={}\n", p.gamma));
        out.push_str(&format!("actor_lr={}\n", p.actor_lr));
        out.push_str(&format!("critic_lr={}\n", p.critic_lr));
        out.push_str(&format!("eps_start={}\n", p.eps_start));
        out.push_str(&format!("eps_end={}\n", p.eps_end));
        out.push_str(&format!("eps_decay_frac={}\n", p.eps_decay_frac));
        out.push_str(&format!("mlp_hidden={}\n", p.mlp_hidden));
        out.push_str(&format!("init_scale={}\n", p.init_scale));
        if let Some(h) = p.ipd_horizon {
            out.push_str(&format!("ipd_horizon={h}\n"));
        }
        out.push_str(&format!("cleanup_horizon={}\n", p.cleanup_horizon));
        out.push_str(&format!("apple_base_rate={}\n", p.apple_base_rate));
        out.push_str(&format!("waste_spawn_prob={}\n", p.waste_spawn_prob));
        out.push_str(&format!("depletion_threshold={}\n", p.depletion_threshold));
        out.push_str(&format!("theory_gamma={}\n", p.theory_gamma));
        out.push_str(&format!("theory_alpha={}\n", p.theory_alpha));
        out.push_str(&format!("theory_share_step={}\n", p.theory_share_step));
        out.push_str(&format!("theory_pricing={pricing}\n"));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn there_are_thirteen_presets() {
        // ipd i-v, cleanup2 x3, cleanup3 x4, analytic.
        assert_eq!(ExperimentId::ALL.len(), 13);
        assert!(ExperimentId::ALL.iter().any(|id| id.name() == "ipd-iv"));
    }

    #[test]
    fn names_roundtrip() {
        for id in ExperimentId::ALL {
            assert_eq!(id.name().parse::<ExperimentId>().unwrap(), id);
        }
        assert!("ipd-vi".parse::<ExperimentId>().is_err());
    }

    #[test]
    fn overrides_apply_and_unknown_keys_fail() {
        let mut config = ExperimentConfig::new(ExperimentId::IpdNone, "/tmp/x");
        config.apply_override("episodes", "123").unwrap();
        config.apply_override("gamma", "0.5").unwrap();
        assert_eq!(config.episodes, 123);
        assert_eq!(config.params.gamma, 0.5);
        assert!(config.apply_override("bogus", "1").is_err());
        assert!(config.apply_override("episodes", "many").is_err());
    }

    #[test]
    fn config_snapshot_reloads_identically() {
        let mut config = ExperimentConfig::new(ExperimentId::Cleanup2Equal, "/tmp/x");
        config.seeds = 3;
        config.params.apple_base_rate = 0.25;
        let text = config.snapshot_text();

        let mut reloaded = ExperimentConfig::new(ExperimentId::IpdNone, "/tmp/x");
        reloaded.apply_config_text(&text).unwrap();
        assert_eq!(reloaded.experiment, ExperimentId::Cleanup2Equal);
        assert_eq!(reloaded.seeds, 3);
        assert_eq!(reloaded.params.apple_base_rate, 0.25);
    }

    #[test]
    fn config_text_skips_comments_and_flags_bad_lines() {
        let mut config = ExperimentConfig::new(ExperimentId::IpdNone, "/tmp/x");
        config
            .apply_config_text("# comment\n\nseeds=7\n  episodes = 9\n")
            .unwrap();
        assert_eq!(config.seeds, 7);
        assert_eq!(config.episodes, 9);
        assert!(config.apply_config_text("nonsense\n").is_err());
    }
}
