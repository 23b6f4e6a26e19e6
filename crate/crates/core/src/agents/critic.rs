//! Progress monitors.

use serde::{Deserialize, Serialize};

use super::skills::{self, nearest_feasible_arm};
use super::{decode, Critic, CriticVerdict, SubtaskGoal, Verb};
use crate::critic_train::{quantize, ValueToken};
use crate::world::{subtask_done, WorldState};
use crate::Result;

/// Ground-truth progress: remaining scripted path length, normalized by
/// `path_scale` and mapped onto `[-1, 0]`. Unfinished goals never report
/// more than `-min_gap`, so only completion crosses a threshold near zero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleCritic {
    pub path_scale: f64,
    pub min_gap: f64,
}

impl Default for OracleCritic {
    fn default() -> Self {
        OracleCritic {
            path_scale: 1.0,
            min_gap: 0.05,
        }
    }
}

/// Any rigid object lying on its side, unless that is what the goal fixes.
pub fn anomaly_visible(world: &WorldState, goal: &SubtaskGoal) -> bool {
    goal.verb != Verb::RightObject && world.objects.iter().any(|o| o.is_fallen())
}

/// Remaining scripted path length in meters for the arm a critic would
/// attribute the goal to; zero once the goal holds.
pub fn remaining_path(world: &WorldState, goal: &SubtaskGoal) -> Result<f64> {
    if subtask_done(world, goal)? {
        return Ok(0.0);
    }
    let arm = match (goal.arm, world.holder_of(&goal.object)) {
        (Some(a), _) => a,
        (None, Some(h)) => h,
        (None, None) if goal.verb == Verb::FollowInstruction => {
            match skills::resolve_instruction(world) {
                Some(g) => nearest_feasible_arm(world, &g)?,
                None => return Ok(0.0),
            }
        }
        (None, None) => nearest_feasible_arm(world, goal)?,
    };
    let steps = skills::plan(world, goal, arm)?;
    Ok(skills::path_length(world, &steps))
}

impl OracleCritic {
    pub fn value(&self, world: &WorldState, goal: &SubtaskGoal) -> Result<f64> {
        if subtask_done(world, goal)? {
            return Ok(0.0);
        }
        let remaining = remaining_path(world, goal)? / self.path_scale;
        Ok(-remaining.clamp(self.min_gap, 1.0))
    }
}

impl Critic for OracleCritic {
    fn eval(&self, obs: &crate::world::Observation, goal: &SubtaskGoal) -> Result<CriticVerdict> {
        let world = decode(obs)?;
        let output = if anomaly_visible(&world, goal) {
            ValueToken::Anomaly
        } else {
            ValueToken::Progress(quantize(self.value(&world, goal)?)?)
        };
        Ok(CriticVerdict {
            output,
            evaluated_at_tick: obs.tick,
        })
    }
}

/// Replays a fixed verdict stream indexed by observation tick; ticks past
/// the end repeat the last entry.
#[derive(Clone, Debug, PartialEq)]
pub struct ScriptedCritic {
    pub stream: Vec<ValueToken>,
}

impl Critic for ScriptedCritic {
    fn eval(&self, obs: &crate::world::Observation, _: &SubtaskGoal) -> Result<CriticVerdict> {
        let i = (obs.tick as usize).min(self.stream.len().saturating_sub(1));
        let output = self
            .stream
            .get(i)
            .copied()
            .ok_or_else(|| crate::Error::Agent("scripted critic has an empty stream".into()))?;
        Ok(CriticVerdict {
            output,
            evaluated_at_tick: obs.tick,
        })
    }
}
