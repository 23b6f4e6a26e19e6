use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::agents::{
    BiasedBrain, Brain, CerebellumConfig, Critic, OracleBrain, OracleCritic, PromptStyle,
    ScriptedCerebellum,
};
use crate::critic_train::LearnedCritic;
use crate::scheduler::{SchedulerConfig, SchedulerKind};
use crate::world::{PerturbationEvent, ScenarioConfig, ScenarioName};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BrainKind {
    #[default]
    Oracle,
    /// Right-handed side/arm prior for cups.
    Biased,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CriticKind {
    #[default]
    Oracle,
    Learned,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AgentConfig {
    pub brain: BrainKind,
    pub prompt_style: PromptStyle,
    pub cerebellum: CerebellumConfig,
    pub critic: CriticKind,
    /// Saved learned critic; required when `critic = "learned"`.
    pub critic_path: Option<PathBuf>,
}

/// A scheduled event added to one scenario's presets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduledPerturbation {
    pub scenario: ScenarioName,
    #[serde(flatten)]
    pub event: PerturbationEvent,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CampaignConfig {
    pub name: String,
    pub scenarios: Vec<ScenarioName>,
    pub schedulers: Vec<SchedulerKind>,
    pub episodes_per_cell: usize,
    /// Cell `i` (scheduler-major order) uses seed `base_seed + i`.
    pub base_seed: u64,
    pub agents: AgentConfig,
    pub scheduler: SchedulerConfig,
    /// Overrides the preset observation noise of every scenario.
    pub noise_level: Option<f64>,
    pub perturbations: Vec<ScheduledPerturbation>,
}

impl Default for CampaignConfig {
    fn default() -> Self {
        CampaignConfig {
            name: "default".into(),
            scenarios: ScenarioName::ALL.to_vec(),
            schedulers: SchedulerKind::ALL.to_vec(),
            episodes_per_cell: 100,
            base_seed: 1000,
            agents: AgentConfig::default(),
            scheduler: SchedulerConfig::default(),
            noise_level: None,
            perturbations: Vec::new(),
        }
    }
}

impl CampaignConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() {
            return Err(Error::config("campaign has no scenarios"));
        }
        if self.schedulers.is_empty() {
            return Err(Error::config("campaign has no schedulers"));
        }
        if self.episodes_per_cell == 0 {
            return Err(Error::config("episodes_per_cell must be at least 1"));
        }
        if self.agents.critic == CriticKind::Learned && self.agents.critic_path.is_none() {
            return Err(Error::config("learned critic needs critic_path"));
        }
        self.scheduler.validate()?;
        if self.agents.cerebellum.horizon != self.scheduler.horizon {
            return Err(Error::config(format!(
                "cerebellum horizon {} differs from scheduler horizon {}",
                self.agents.cerebellum.horizon, self.scheduler.horizon
            )));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: CampaignConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("campaign config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::config(format!("campaign config: {e}")))
    }

    /// Scenario for one episode: preset, seed, then configured overrides.
    pub fn scenario(&self, name: ScenarioName, seed: u64) -> Result<ScenarioConfig> {
        let mut sc = ScenarioConfig::preset(name, seed);
        if let Some(n) = self.noise_level {
            sc.noise_level = n;
        }
        sc.perturbations.extend(
            self.perturbations
                .iter()
                .filter(|p| p.scenario == name)
                .map(|p| p.event.clone()),
        );
        sc.validate()?;
        Ok(sc)
    }
}

/// Agents built once per campaign; the controller is re-seeded per episode.
#[derive(Clone)]
pub struct AgentSet {
    pub brain: Arc<dyn Brain>,
    pub critic: Arc<dyn Critic>,
    pub cerebellum: CerebellumConfig,
}

impl AgentSet {
    pub fn build(cfg: &AgentConfig) -> Result<Self> {
        let brain: Arc<dyn Brain> = match cfg.brain {
            BrainKind::Oracle => Arc::new(OracleBrain {
                style: cfg.prompt_style,
            }),
            BrainKind::Biased => Arc::new(BiasedBrain {
                style: cfg.prompt_style,
            }),
        };
        let critic: Arc<dyn Critic> = match cfg.critic {
            CriticKind::Oracle => Arc::new(OracleCritic::default()),
            CriticKind::Learned => {
                let path = cfg
                    .critic_path
                    .as_ref()
                    .ok_or_else(|| Error::config("learned critic needs critic_path"))?;
                let text = std::fs::read_to_string(path)?;
                let critic: LearnedCritic = serde_json::from_str(&text)?;
                Arc::new(critic)
            }
        };
        Ok(AgentSet {
            brain,
            critic,
            cerebellum: cfg.cerebellum.clone(),
        })
    }

    pub fn cerebellum(&self, seed: u64) -> ScriptedCerebellum {
        ScriptedCerebellum::new(self.cerebellum.clone(), seed)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn toml_round_trip_and_rejections() {
        let cfg = CampaignConfig::default();
        let text = cfg.to_toml_string().unwrap();
        assert_eq!(CampaignConfig::from_toml_str(&text).unwrap(), cfg);
        assert!(CampaignConfig::from_toml_str("scenarios = []").is_err());
        assert!(CampaignConfig::from_toml_str("episodes_per_cell = 0").is_err());
        assert!(CampaignConfig::from_toml_str("bogus = 1").is_err());
        assert!(CampaignConfig::from_toml_str("[agents]\ncritic = \"learned\"").is_err());
    }

    #[test]
    fn scheduled_perturbations_reach_their_scenario() {
        let cfg = CampaignConfig::from_toml_str(
            r#"
scenarios = ["ordered", "scattered"]
noise_level = 0.001

[[perturbations]]
scenario = "ordered"
at_tick = 50
kind = "displace"
target = "cup"
"#,
        )
        .unwrap();
        let o = cfg.scenario(ScenarioName::Ordered, 1).unwrap();
        assert_eq!(o.perturbations.len(), 1);
        assert_eq!(o.noise_level, 0.001);
        assert!(cfg.scenario(ScenarioName::Scattered, 1).unwrap().perturbations.is_empty());
    }
}
