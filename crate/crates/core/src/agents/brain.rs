//! Scripted planners.

use serde::{Deserialize, Serialize};

use super::skills::{feasible, nearest_feasible_arm};
use super::{decode, Brain, MemoryContext, PromptStyle, SubtaskGoal};
use crate::world::{script, subtask_done, Category, Instruction, Observation, Side, WorldState};
use crate::{Error, Result};

/// Next goal from ground truth: right any fallen rigid object first,
/// otherwise the first unsatisfied script goal (the last one once all hold).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OracleBrain {
    pub style: PromptStyle,
}

/// Same verb/object choice as the oracle, but side and arm tokens for cups
/// come from a right-handed prior regardless of where the cup is.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct BiasedBrain {
    pub style: PromptStyle,
}

/// Returns the global instruction unchanged.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstructionBrain;

pub(crate) fn next_script_goal(world: &WorldState) -> Result<SubtaskGoal> {
    if let Some(o) = world.objects.iter().find(|o| o.is_fallen()) {
        return Ok(SubtaskGoal::right_object(o.id.as_str()));
    }
    let goals = script(world.scenario.family());
    for g in &goals {
        if !subtask_done(world, g)? {
            return Ok(g.clone());
        }
    }
    goals
        .last()
        .cloned()
        .ok_or_else(|| Error::config("empty subtask vocabulary"))
}

pub(crate) fn oracle_tokens(world: &WorldState, goal: SubtaskGoal) -> Result<SubtaskGoal> {
    let o = world
        .object(&goal.object)
        .ok_or_else(|| Error::Agent(format!("object {} not in scene", goal.object)))?;
    let side = Side::of_x(o.pose.x);
    let arm = if feasible(world, &goal, side) {
        side
    } else {
        nearest_feasible_arm(world, &goal)?
    };
    Ok(goal.with_tokens(Some(side), Some(arm)))
}

impl Brain for OracleBrain {
    fn plan(&self, obs: &Observation, _: &Instruction, _: &MemoryContext) -> Result<SubtaskGoal> {
        let world = decode(obs)?;
        let goal = next_script_goal(&world)?;
        match self.style {
            PromptStyle::Plain => Ok(goal),
            PromptStyle::Structured => oracle_tokens(&world, goal),
        }
    }
}

impl Brain for BiasedBrain {
    fn plan(&self, obs: &Observation, _: &Instruction, _: &MemoryContext) -> Result<SubtaskGoal> {
        let world = decode(obs)?;
        let goal = next_script_goal(&world)?;
        if self.style == PromptStyle::Plain {
            return Ok(goal);
        }
        let is_cup = world
            .object(&goal.object)
            .is_some_and(|o| o.category == Category::Cup);
        if is_cup {
            Ok(goal.with_tokens(Some(Side::Right), Some(Side::Right)))
        } else {
            oracle_tokens(&world, goal)
        }
    }
}

impl Brain for InstructionBrain {
    fn plan(&self, _: &Observation, ins: &Instruction, _: &MemoryContext) -> Result<SubtaskGoal> {
        if ins.text.is_empty() {
            return Err(Error::config("empty instruction"));
        }
        Ok(SubtaskGoal::follow_instruction(&ins.text))
    }
}
