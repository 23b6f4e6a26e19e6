//! Critic-guided scheduling loop and the two reference schedulers.
//!
//! * [`tri_tick`] / [`run_episode`]: planner dormant until the critic reports
//!   an anomaly, a completion or a stall.
//! * [`run_episode_dual`]: planner re-queried at every chunk refill with no
//!   memory and no critic.
//! * [`run_episode_single`]: the controller follows the raw instruction.

mod baseline;
mod config;
mod episode;
mod trace;
mod tri;
mod trigger;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use self::baseline::{run_episode_dual, run_episode_single};
pub use self::config::SchedulerConfig;
pub use self::trace::{
    read_trace, stale_actions, write_trace, EpisodeTrace, FinalWorld, GoalSwitch, PreemptionEvent,
    TickRecord, TraceLine,
};
pub use self::tri::{run_episode, tri_tick, SchedulerState, TickOutcome};
pub use self::trigger::{classify_trigger, classify_value, StallTracker, TriggerKind};

use crate::agents::{Brain, Cerebellum, Critic};
use crate::world::ScenarioConfig;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchedulerKind {
    Single,
    Dual,
    Tri,
}

impl SchedulerKind {
    pub const ALL: [SchedulerKind; 3] = [SchedulerKind::Single, SchedulerKind::Dual, SchedulerKind::Tri];

    pub fn as_str(self) -> &'static str {
        match self {
            SchedulerKind::Single => "single",
            SchedulerKind::Dual => "dual",
            SchedulerKind::Tri => "tri",
        }
    }
}

impl fmt::Display for SchedulerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SchedulerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SchedulerKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown scheduler {s:?}")))
    }
}

/// The three agent roles one episode runs against. Only the tri scheduler
/// needs a critic; running it without one is a fatal episode error.
#[derive(Clone, Copy)]
pub struct Agents<'a> {
    pub brain: &'a dyn Brain,
    pub cerebellum: &'a dyn Cerebellum,
    pub critic: Option<&'a dyn Critic>,
}

/// Run one episode under the given scheduler.
pub fn run_with(
    kind: SchedulerKind,
    scenario: &ScenarioConfig,
    agents: &Agents<'_>,
    config: &SchedulerConfig,
) -> Result<EpisodeTrace> {
    match kind {
        SchedulerKind::Single => run_episode_single(scenario, agents, config),
        SchedulerKind::Dual => run_episode_dual(scenario, agents, config),
        SchedulerKind::Tri => run_episode(scenario, agents, config),
    }
}
