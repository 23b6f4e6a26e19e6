//! Episode plumbing shared by all three schedulers.

use std::collections::VecDeque;

use super::{Agents, EpisodeTrace, FinalWorld, SchedulerConfig, SchedulerKind, TickRecord};
use crate::agents::ActionChunk;
use crate::world::{
    inject_perturbations, scenario_complete, scenario_init, scenario_progress, script, step,
    ActionPair, Instruction, ScenarioConfig, WorldState,
};
use crate::{Error, Result};

/// Pending actions tagged with the tick their chunk was issued.
pub(super) type ActionBuffer = VecDeque<(ActionPair, u64)>;

pub(super) trait Loop {
    /// One scheduling iteration on `world`. Returns the world to step (the
    /// scheduler may have reset the robot) and the tick's record.
    fn tick(&mut self, world: &WorldState, trace: &mut EpisodeTrace) -> Result<(WorldState, TickRecord)>;
}

/// Validate inputs, build the initial world (tick-0 perturbations applied)
/// and an empty trace.
pub(super) fn begin(
    kind: SchedulerKind,
    scenario: &ScenarioConfig,
    agents: &Agents<'_>,
    config: &SchedulerConfig,
) -> Result<(WorldState, Instruction, EpisodeTrace)> {
    config.validate()?;
    scenario.validate()?;
    if agents.cerebellum.horizon() != config.horizon {
        return Err(Error::config(format!(
            "controller horizon {} differs from scheduler horizon {}",
            agents.cerebellum.horizon(),
            config.horizon
        )));
    }
    let instruction = Instruction::for_scenario(scenario.name);
    let world = inject_perturbations(&scenario_init(scenario)?, scenario)?;
    let trace = EpisodeTrace {
        scheduler: kind,
        scenario: scenario.name,
        seed: scenario.seed,
        instruction: instruction.text.clone(),
        records: Vec::new(),
        events: Vec::new(),
        switches: Vec::new(),
        brain_query_count: 0,
        success: false,
        subtasks_done: 0,
        subtasks_total: script(scenario.name.family()).len(),
        final_world: None,
        error: None,
    };
    Ok((world, instruction, trace))
}

/// Tick until the scenario holds, the tick budget runs out or an agent fails.
pub(super) fn drive(
    mut world: WorldState,
    mut trace: EpisodeTrace,
    scenario: &ScenarioConfig,
    config: &SchedulerConfig,
    lp: &mut impl Loop,
) -> Result<EpisodeTrace> {
    while trace.error.is_none() && world.tick < config.max_episode_ticks && !scenario_complete(&world) {
        match lp.tick(&world, &mut trace) {
            Ok((w, rec)) => {
                let next = step(&w, &rec.action);
                trace.records.push(rec);
                world = inject_perturbations(&next, scenario)?;
            }
            Err(e) => trace.error = Some(e.to_string()),
        }
    }
    Ok(finish(trace, &world))
}

pub(super) fn finish(mut trace: EpisodeTrace, world: &WorldState) -> EpisodeTrace {
    trace.success = trace.error.is_none() && !trace.records.is_empty() && scenario_complete(world);
    trace.subtasks_done = scenario_progress(world);
    trace.final_world = Some(FinalWorld::from(world));
    trace
}

/// Append a controller chunk, rejecting one of the wrong length.
pub(super) fn refill(buffer: &mut ActionBuffer, chunk: ActionChunk, horizon: usize, tick: u64) -> Result<Option<String>> {
    if chunk.actions.len() != horizon {
        return Err(Error::Agent(format!(
            "controller returned {} actions for horizon {horizon}",
            chunk.actions.len()
        )));
    }
    buffer.extend(chunk.actions.into_iter().map(|a| (a, tick)));
    Ok(chunk.error)
}
