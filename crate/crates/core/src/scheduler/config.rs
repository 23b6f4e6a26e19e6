use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::agents::SubtaskGoal;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SchedulerConfig {
    /// Completion fires when the progress value strictly exceeds this.
    pub tau_succ: f64,
    /// Ticks without a new progress maximum before a stall reset.
    pub n_stag: u64,
    /// Action chunk length; must match the controller's.
    pub horizon: usize,
    /// Maximum verdict staleness in ticks.
    pub critic_lag: u64,
    pub max_episode_ticks: u64,
    /// Per-goal completion thresholds keyed by plain goal text.
    pub tau_overrides: BTreeMap<String, f64>,
}

impl Default for SchedulerConfig {
    fn default() -> Self {
        SchedulerConfig {
            tau_succ: -0.041,
            n_stag: 180,
            horizon: 16,
            critic_lag: 0,
            max_episode_ticks: 1500,
            tau_overrides: BTreeMap::new(),
        }
    }
}

fn check_tau(name: &str, tau: f64) -> Result<()> {
    if tau > -1.0 && tau <= 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} = {tau} outside (-1, 0]")))
    }
}

impl SchedulerConfig {
    pub fn validate(&self) -> Result<()> {
        check_tau("tau_succ", self.tau_succ)?;
        for (goal, tau) in &self.tau_overrides {
            check_tau(&format!("tau_overrides[{goal:?}]"), *tau)?;
        }
        if self.n_stag == 0 {
            return Err(Error::config("n_stag must be at least 1"));
        }
        if self.horizon == 0 {
            return Err(Error::config("horizon must be at least 1"));
        }
        Ok(())
    }

    pub fn tau_for(&self, goal: &SubtaskGoal) -> f64 {
        self.tau_overrides
            .get(&goal.plain_text())
            .copied()
            .unwrap_or(self.tau_succ)
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SchedulerConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("scheduler config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let c = SchedulerConfig::default();
        c.validate().unwrap();
        assert_eq!(c.tau_succ, -0.041);
        assert_eq!(c.n_stag, 180);
    }

    #[test]
    fn rejects_bad_values() {
        for tau in [-1.0, 0.01, f64::NAN] {
            let c = SchedulerConfig {
                tau_succ: tau,
                ..Default::default()
            };
            assert!(c.validate().is_err(), "{tau}");
        }
        let c = SchedulerConfig {
            n_stag: 0,
            ..Default::default()
        };
        assert!(c.validate().is_err());
        assert!(SchedulerConfig::from_toml_str("tau = 1").is_err());
    }

    #[test]
    fn override_applies_by_plain_text() {
        let c = SchedulerConfig::from_toml_str(
            "n_stag = 5\n[tau_overrides]\n\"open the trash bag\" = -0.2\n",
        )
        .unwrap();
        assert_eq!(c.n_stag, 5);
        assert_eq!(c.tau_for(&SubtaskGoal::open_bag("bag")), -0.2);
        assert_eq!(c.tau_for(&SubtaskGoal::right_object("cup")), -0.041);
    }
}
