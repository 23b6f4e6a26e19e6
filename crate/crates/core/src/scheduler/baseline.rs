//! Reference schedulers without a critic.

use std::collections::VecDeque;

use super::episode::{self, ActionBuffer, Loop};
use super::{Agents, EpisodeTrace, GoalSwitch, SchedulerConfig, SchedulerKind, TickRecord};
use crate::agents::{MemoryContext, SubtaskGoal};
use crate::world::{observe, Instruction, ScenarioConfig, WorldState};
use crate::{Error, Result};

/// Shared buffer-refill loop; `replan` decides whether the planner is asked
/// for a fresh goal at each refill.
struct ChunkLoop<'a> {
    buffer: ActionBuffer,
    goal: Option<SubtaskGoal>,
    replan: bool,
    instruction: Instruction,
    agents: Agents<'a>,
    horizon: usize,
}

impl Loop for ChunkLoop<'_> {
    fn tick(&mut self, world: &WorldState, trace: &mut EpisodeTrace) -> Result<(WorldState, TickRecord)> {
        let tick = world.tick;
        let mut brain_queried = false;
        let mut refilled = false;
        let mut chunk_error = None;
        if self.buffer.is_empty() {
            let obs = observe(world);
            if self.replan {
                let g = self.agents.brain.plan(&obs, &self.instruction, &MemoryContext::none())?;
                trace.brain_query_count += 1;
                brain_queried = true;
                if let Some(prev) = self.goal.as_ref().filter(|p| **p != g) {
                    trace.switches.push(GoalSwitch::new(world, prev, &g, None));
                }
                self.goal = Some(g);
            }
            let goal = self
                .goal
                .as_ref()
                .ok_or_else(|| Error::Agent("no active goal".into()))?;
            let chunk = self.agents.cerebellum.act(&obs, &world.arms, goal)?;
            chunk_error = episode::refill(&mut self.buffer, chunk, self.horizon, tick)?;
            refilled = true;
        }
        let (action, issued_at_tick) = self
            .buffer
            .pop_front()
            .ok_or_else(|| Error::Agent("empty action buffer after refill".into()))?;
        let goal = self.goal.as_ref().map(|g| g.text.clone()).unwrap_or_default();
        Ok((
            world.clone(),
            TickRecord {
                tick,
                goal,
                verdict: None,
                action,
                issued_at_tick,
                event: None,
                reset_applied: false,
                brain_queried,
                refilled,
                chunk_error,
            },
        ))
    }
}

/// Planner queried at every refill with empty memory; no preemption.
pub fn run_episode_dual(
    scenario: &ScenarioConfig,
    agents: &Agents<'_>,
    config: &SchedulerConfig,
) -> Result<EpisodeTrace> {
    let (world, instruction, trace) = episode::begin(SchedulerKind::Dual, scenario, agents, config)?;
    let mut lp = ChunkLoop {
        buffer: VecDeque::new(),
        goal: None,
        replan: true,
        instruction,
        agents: *agents,
        horizon: config.horizon,
    };
    episode::drive(world, trace, scenario, config, &mut lp)
}

/// Controller conditioned on the raw instruction. The instruction itself
/// stands in for the one planning step, so the query count is 1.
pub fn run_episode_single(
    scenario: &ScenarioConfig,
    agents: &Agents<'_>,
    config: &SchedulerConfig,
) -> Result<EpisodeTrace> {
    let (world, instruction, mut trace) = episode::begin(SchedulerKind::Single, scenario, agents, config)?;
    trace.brain_query_count = 1;
    let mut lp = ChunkLoop {
        buffer: VecDeque::new(),
        goal: Some(SubtaskGoal::follow_instruction(&instruction.text)),
        replan: false,
        instruction,
        agents: *agents,
        horizon: config.horizon,
    };
    episode::drive(world, trace, scenario, config, &mut lp)
}
