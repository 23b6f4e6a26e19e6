//! Left-cup ablation: prompt structure, planner bias and controller transfer.

use std::sync::atomic::{AtomicU64, Ordering};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::agents::{
    BiasedBrain, Brain, CerebellumConfig, MemoryContext, OracleBrain, OracleCritic, PromptStyle,
    ScriptedCerebellum, SubtaskGoal,
};
use crate::scheduler::{run_episode, Agents, SchedulerConfig};
use crate::seed;
use crate::world::{category_of, Category, Instruction, Observation, ScenarioConfig, ScenarioName, Side};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AblationConfig {
    pub episodes: usize,
    pub base_seed: u64,
    pub p_drop: f64,
    pub scheduler: SchedulerConfig,
}

impl AblationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.episodes == 0 {
            return Err(crate::Error::config("ablation needs at least one episode"));
        }
        if !(0.0..=1.0).contains(&self.p_drop) {
            return Err(crate::Error::config("p_drop must lie in [0, 1]"));
        }
        self.scheduler.validate()
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: AblationConfig = toml::from_str(text)
            .map_err(|e| crate::Error::config(format!("ablation config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

impl Default for AblationConfig {
    fn default() -> Self {
        AblationConfig {
            episodes: 100,
            base_seed: 2000,
            p_drop: CerebellumConfig::default().p_drop,
            scheduler: SchedulerConfig::default(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationCase {
    pub case: u8,
    pub structured: bool,
    pub biased_brain: bool,
    pub left_cup_transfer: bool,
}

/// The four cells, in order.
pub const CASES: [AblationCase; 4] = [
    AblationCase {
        case: 1,
        structured: false,
        biased_brain: false,
        left_cup_transfer: false,
    },
    AblationCase {
        case: 2,
        structured: false,
        biased_brain: false,
        left_cup_transfer: true,
    },
    AblationCase {
        case: 3,
        structured: true,
        biased_brain: true,
        left_cup_transfer: true,
    },
    AblationCase {
        case: 4,
        structured: true,
        biased_brain: false,
        left_cup_transfer: true,
    },
];

impl AblationCase {
    pub fn describe(&self) -> &'static str {
        match self.case {
            1 => "plain prompt, no left-arm transfer",
            2 => "plain prompt, left-arm transfer",
            3 => "structured prompt, biased planner",
            _ => "structured prompt, oracle planner",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CaseReport {
    pub case: AblationCase,
    pub description: String,
    pub episodes: usize,
    pub successes: usize,
    pub cup_queries: u64,
    /// Share of cup goals that named the right arm; `None` without cup goals
    /// carrying an arm token.
    pub cup_arm_right_fraction: Option<f64>,
    pub stagnation_resets: usize,
}

impl CaseReport {
    pub fn success_rate(&self) -> f64 {
        self.successes as f64 / self.episodes as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub config: AblationConfig,
    pub cases: Vec<CaseReport>,
}

/// Counts the cup goals a planner emits and how many name the right arm.
struct Tally<'a> {
    inner: &'a dyn Brain,
    cup: AtomicU64,
    cup_with_arm: AtomicU64,
    cup_right: AtomicU64,
}

impl Brain for Tally<'_> {
    fn plan(&self, obs: &Observation, ins: &Instruction, m: &MemoryContext) -> Result<SubtaskGoal> {
        let g = self.inner.plan(obs, ins, m)?;
        if category_of(&g.object) == Some(Category::Cup) {
            self.cup.fetch_add(1, Ordering::Relaxed);
            if let Some(arm) = g.arm {
                self.cup_with_arm.fetch_add(1, Ordering::Relaxed);
                if arm == Side::Right {
                    self.cup_right.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
        Ok(g)
    }
}

struct EpisodeOutcome {
    success: bool,
    resets: usize,
    cup: u64,
    with_arm: u64,
    right: u64,
}

fn run_case(case: AblationCase, index: usize, cfg: &AblationConfig) -> Result<CaseReport> {
    let style = if case.structured {
        PromptStyle::Structured
    } else {
        PromptStyle::Plain
    };
    let brain: Box<dyn Brain> = if case.biased_brain {
        Box::new(BiasedBrain { style })
    } else {
        Box::new(OracleBrain { style })
    };
    let critic = OracleCritic::default();
    let cell_seed = cfg.base_seed + index as u64;
    let outcomes: Vec<Result<EpisodeOutcome>> = (0..cfg.episodes)
        .into_par_iter()
        .map(|e| {
            let ep_seed = seed::mix(&[cell_seed, e as u64]);
            let tally = Tally {
                inner: brain.as_ref(),
                cup: AtomicU64::new(0),
                cup_with_arm: AtomicU64::new(0),
                cup_right: AtomicU64::new(0),
            };
            let cb = ScriptedCerebellum::new(
                CerebellumConfig {
                    p_drop: cfg.p_drop,
                    left_cup_transfer: case.left_cup_transfer,
                    horizon: cfg.scheduler.horizon,
                    ..Default::default()
                },
                ep_seed,
            );
            let agents = Agents {
                brain: &tally,
                cerebellum: &cb,
                critic: Some(&critic),
            };
            let t = run_episode(&ScenarioConfig::preset(ScenarioName::LeftCup, ep_seed), &agents, &cfg.scheduler)?;
            Ok(EpisodeOutcome {
                success: t.success,
                resets: t.stagnation_resets(),
                cup: tally.cup.into_inner(),
                with_arm: tally.cup_with_arm.into_inner(),
                right: tally.cup_right.into_inner(),
            })
        })
        .collect();
    let mut r = CaseReport {
        case,
        description: case.describe().to_string(),
        episodes: cfg.episodes,
        successes: 0,
        cup_queries: 0,
        cup_arm_right_fraction: None,
        stagnation_resets: 0,
    };
    let (mut with_arm, mut right) = (0u64, 0u64);
    for o in outcomes {
        let o = o?;
        r.successes += o.success as usize;
        r.stagnation_resets += o.resets;
        r.cup_queries += o.cup;
        with_arm += o.with_arm;
        right += o.right;
    }
    r.cup_arm_right_fraction = (with_arm > 0).then(|| right as f64 / with_arm as f64);
    Ok(r)
}

/// All four cases on the left-cup scenario under the critic-guided scheduler.
/// Case `i` (0-based) uses cell seed `base_seed + i`.
pub fn ablation_left_cup(cfg: &AblationConfig) -> Result<AblationReport> {
    cfg.validate()?;
    let cases = CASES
        .iter()
        .enumerate()
        .map(|(i, c)| run_case(*c, i, cfg))
        .collect::<Result<Vec<_>>>()?;
    Ok(AblationReport {
        config: cfg.clone(),
        cases,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biased_planner_always_names_right_arm() {
        let r = ablation_left_cup(&AblationConfig {
            episodes: 4,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(r.cases.len(), 4);
        let c3 = &r.cases[2];
        assert!(c3.cup_queries > 0);
        assert_eq!(c3.cup_arm_right_fraction, Some(1.0));
        assert_eq!(r.cases[0].cup_arm_right_fraction, None);
        assert!(r.cases[3].successes >= c3.successes);
    }
}
