use serde::{Deserialize, Serialize};

use super::SubtaskGoal;
use crate::world::Instruction;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MemoryKind {
    None,
    Completed,
    Accident,
    StagnationTimeout,
}

/// Short-term memory handed to the planner after an event.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MemoryContext {
    pub kind: MemoryKind,
    pub prev_goal: Option<SubtaskGoal>,
    pub text: String,
}

impl MemoryContext {
    pub fn none() -> Self {
        MemoryContext {
            kind: MemoryKind::None,
            prev_goal: None,
            text: String::new(),
        }
    }

    pub fn completed(goal: &SubtaskGoal) -> Self {
        MemoryContext {
            kind: MemoryKind::Completed,
            text: format!("{} completed", goal.text),
            prev_goal: Some(goal.clone()),
        }
    }

    pub fn accident(goal: &SubtaskGoal) -> Self {
        MemoryContext {
            kind: MemoryKind::Accident,
            prev_goal: Some(goal.clone()),
            text: "accident happened".to_string(),
        }
    }

    pub fn stagnation(goal: &SubtaskGoal) -> Self {
        MemoryContext {
            kind: MemoryKind::StagnationTimeout,
            prev_goal: Some(goal.clone()),
            text: "stagnation timeout".to_string(),
        }
    }
}

impl Default for MemoryContext {
    fn default() -> Self {
        Self::none()
    }
}

/// The planner prompt string.
pub fn brain_prompt(instruction: &Instruction, memory: &MemoryContext) -> String {
    format!(
        "Task: {}; Info: {}; Current Subtask:",
        instruction.text, memory.text
    )
}
