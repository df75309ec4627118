//! Run configuration: one TOML tree, every field defaulted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orchestrator::EpisodeConfig;
use crate::trainer::{RewardConfig, TrainerConfig};
use crate::world::{KindMix, WorldConstants};

/// Environment variable that overrides `paths.log_dir`.
pub const LOG_DIR_ENV: &str = "PHYSPLAN_LOG_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    #[default]
    FlowGrpo,
    OfflineSft,
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WorldConfig {
    pub bank_size: usize,
    pub bank_seed: u64,
    pub base_corruption: f64,
    pub kind_mix: KindMix,
    pub constants: WorldConstants,
}

impl Default for WorldConfig {
    fn default() -> Self {
        WorldConfig {
            bank_size: 300,
            bank_seed: 7,
            base_corruption: 0.4,
            kind_mix: KindMix::uniform(),
            constants: WorldConstants::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SftConfig {
    /// Scripted-oracle episodes logged per training scene.
    pub episodes_per_scene: usize,
    pub reward_floor: f64,
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for SftConfig {
    fn default() -> Self {
        SftConfig {
            episodes_per_scene: 1,
            reward_floor: 3.0,
            epochs: 300,
            learning_rate: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Held-out bank, drawn with the training bank's size, mix and corruption.
    pub bank_seed: u64,
    pub seeds: Vec<u64>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            bank_seed: 1007,
            seeds: vec![101, 102, 103],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub log_dir: PathBuf,
    pub checkpoint_dir: PathBuf,
    /// Checkpoint every this many iterations (0: final checkpoint only).
    pub checkpoint_every: usize,
    /// Log full trajectories every this many iterations (0: never).
    pub trajectory_log_every: usize,
}

impl Default for PathsConfig {
    fn default() -> Self {
        PathsConfig {
            log_dir: PathBuf::from("runs/logs"),
            checkpoint_dir: PathBuf::from("runs/checkpoints"),
            checkpoint_every: 50,
            trajectory_log_every: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub trainer: TrainerConfig,
    pub world: WorldConfig,
    pub episode: EpisodeConfig,
    pub reward: RewardConfig,
    pub sft: SftConfig,
    pub eval: EvalConfig,
    pub paths: PathsConfig,
}

impl RunConfig {
    pub fn check(&self) -> Result<()> {
        self.trainer.check()?;
        self.world.constants.check()?;
        self.world.kind_mix.weights()?;
        self.episode.check()?;
        self.reward.check()?;
        if self.trainer.cycles != self.episode.cycles {
            return Err(Error::Config(format!(
                "trainer.cycles ({}) and episode.cycles ({}) disagree",
                self.trainer.cycles, self.episode.cycles
            )));
        }
        if self.world.bank_size == 0 {
            return Err(Error::Config("world.bank_size must be >= 1".into()));
        }
        if !(self.world.base_corruption >= 0.0 && self.world.base_corruption.is_finite()) {
            return Err(Error::Config("world.base_corruption must be finite and >= 0".into()));
        }
        if self.eval.seeds.is_empty() {
            return Err(Error::Config("eval.seeds must not be empty".into()));
        }
        if self.trainer.iterations == 0 {
            return Err(Error::Config("trainer.iterations must be >= 1".into()));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(format!("cannot serialize config: {e}")))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads `path` (or starts from defaults), applies `key.path=value`
    /// overrides, then the log-directory environment override, and validates.
    pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                text.parse::<toml::Table>()
                    .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for o in overrides {
            apply_override(&mut table, o)?;
        }
        let mut config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        if let Some(dir) = std::env::var_os(LOG_DIR_ENV) {
            config.paths.log_dir = PathBuf::from(dir);
        }
        config.check()?;
        Ok(config)
    }
}

/// `a.b.c=value`; the value is parsed as a TOML literal, falling back to a
/// bare string. `cycles=N` sets both cycle budgets.
fn apply_override(table: &mut toml::Table, spec: &str) -> Result<()> {
    let (key, raw) = spec
        .split_once('=')
        .ok_or_else(|| Error::Config(format!("override `{spec}` is not key=value")))?;
    let key = key.trim();
    if key == "cycles" {
        apply_override(table, &format!("trainer.cycles={raw}"))?;
        return apply_override(table, &format!("episode.cycles={raw}"));
    }
    let value = format!("v = {}", raw.trim())
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()));
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(Error::Config(format!("bad override key `{key}`")));
    }
    let (last, parents) = parts.split_last().expect("split yields at least one part");
    let mut node = table;
    for p in parents {
        let entry = node
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        node = entry
            .as_table_mut()
            .ok_or_else(|| Error::Config(format!("override `{key}`: `{p}` is not a table")))?;
    }
    node.insert(last.to_string(), value);
    Ok(())
}
