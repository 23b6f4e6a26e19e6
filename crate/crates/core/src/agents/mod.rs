//! Planner, controller and critic interfaces with scripted implementations.
//!
//! Every agent sees the world only through an [`Observation`]; the scripted
//! ones decode it back into a belief [`WorldState`] with [`decode`].

mod brain;
mod cerebellum;
mod critic;
mod goal;
mod memory;
mod scene;
pub mod skills;

use serde::{Deserialize, Serialize};

pub(crate) use self::brain::{next_script_goal, oracle_tokens};
pub use self::brain::{BiasedBrain, InstructionBrain, OracleBrain};
pub use self::cerebellum::{CerebellumConfig, ScriptedCerebellum};
pub use self::critic::{anomaly_visible, remaining_path, OracleCritic, ScriptedCritic};
pub use self::goal::{PromptStyle, SubtaskGoal, Verb};
pub use self::memory::{brain_prompt, MemoryContext, MemoryKind};
pub use self::scene::decode;

use crate::critic_train::{Bin, ValueToken};
use crate::world::{ActionPair, ArmState, Instruction, Observation};
use crate::Result;

/// A fixed-length open-loop command sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionChunk {
    pub actions: Vec<ActionPair>,
    pub horizon: usize,
    pub issued_at_tick: u64,
    /// Set when the controller could not act on the goal.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl ActionChunk {
    pub fn idle(horizon: usize, tick: u64) -> Self {
        ActionChunk {
            actions: vec![ActionPair::NOOP; horizon],
            horizon,
            issued_at_tick: tick,
            error: None,
        }
    }

    pub fn failed(horizon: usize, tick: u64, error: String) -> Self {
        ActionChunk {
            error: Some(error),
            ..Self::idle(horizon, tick)
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictKind {
    Progress,
    Anomaly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CriticVerdict {
    pub output: ValueToken,
    pub evaluated_at_tick: u64,
}

impl CriticVerdict {
    pub fn kind(&self) -> VerdictKind {
        match self.output {
            ValueToken::Progress(_) => VerdictKind::Progress,
            ValueToken::Anomaly => VerdictKind::Anomaly,
        }
    }

    pub fn bin(&self) -> Option<Bin> {
        self.output.bin()
    }

    pub fn value(&self) -> Option<f64> {
        self.bin().map(Bin::value)
    }

    /// The critic's text output: a bin index or `<aci>`.
    pub fn token(&self) -> String {
        self.output.to_string()
    }
}

/// High-level planner.
pub trait Brain: Send + Sync {
    fn plan(
        &self,
        obs: &Observation,
        instruction: &Instruction,
        memory: &MemoryContext,
    ) -> Result<SubtaskGoal>;
}

/// Low-level controller.
pub trait Cerebellum: Send + Sync {
    fn horizon(&self) -> usize;

    fn act(&self, obs: &Observation, proprio: &[ArmState; 2], goal: &SubtaskGoal)
        -> Result<ActionChunk>;
}

/// Progress monitor.
pub trait Critic: Send + Sync {
    fn eval(&self, obs: &Observation, goal: &SubtaskGoal) -> Result<CriticVerdict>;
}

impl<T: Brain + ?Sized> Brain for Box<T> {
    fn plan(&self, o: &Observation, i: &Instruction, m: &MemoryContext) -> Result<SubtaskGoal> {
        (**self).plan(o, i, m)
    }
}

impl<T: Cerebellum + ?Sized> Cerebellum for Box<T> {
    fn horizon(&self) -> usize {
        (**self).horizon()
    }

    fn act(&self, o: &Observation, p: &[ArmState; 2], g: &SubtaskGoal) -> Result<ActionChunk> {
        (**self).act(o, p, g)
    }
}

impl<T: Critic + ?Sized> Critic for Box<T> {
    fn eval(&self, o: &Observation, g: &SubtaskGoal) -> Result<CriticVerdict> {
        (**self).eval(o, g)
    }
}
