//! The critic-guided loop.

use std::collections::VecDeque;

use super::episode::{self, ActionBuffer, Loop};
use super::{
    classify_trigger, Agents, EpisodeTrace, GoalSwitch, PreemptionEvent, SchedulerConfig,
    SchedulerKind, StallTracker, TickRecord, TriggerKind,
};
use crate::agents::{CriticVerdict, MemoryContext, SubtaskGoal};
use crate::world::{observe, reset_robot_state, ActionPair, Instruction, ScenarioConfig, WorldState};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct SchedulerState {
    pub buffer: ActionBuffer,
    pub tracker: StallTracker,
    pub goal: SubtaskGoal,
    pub memory: MemoryContext,
    /// Last tick processed.
    pub tick: u64,
    /// Bumped at every event; verdicts from an older epoch are discarded.
    pub epoch: u64,
    /// Verdicts not yet delivered, tagged with the epoch they belong to.
    pub pending: VecDeque<(u64, CriticVerdict)>,
}

impl SchedulerState {
    pub fn new(goal: SubtaskGoal) -> Self {
        SchedulerState {
            buffer: VecDeque::new(),
            tracker: StallTracker::default(),
            goal,
            memory: MemoryContext::none(),
            tick: 0,
            epoch: 0,
            pending: VecDeque::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TickOutcome {
    pub state: SchedulerState,
    /// The world to step: reset when a stall fired at this tick.
    pub world: WorldState,
    pub record: TickRecord,
    pub event: Option<PreemptionEvent>,
    pub switch: Option<GoalSwitch>,
}

impl TickOutcome {
    pub fn action(&self) -> ActionPair {
        self.record.action
    }
}

/// One iteration of the critic-guided loop. Pure in its inputs.
pub fn tri_tick(
    state: &SchedulerState,
    world: &WorldState,
    instruction: &Instruction,
    agents: &Agents<'_>,
    config: &SchedulerConfig,
) -> Result<TickOutcome> {
    let critic = agents
        .critic
        .ok_or_else(|| Error::Agent("tri scheduler has no critic".into()))?;
    let mut s = state.clone();
    let mut world = world.clone();
    let tick = world.tick;
    s.tick = tick;

    let obs = observe(&world);
    s.pending.push_back((s.epoch, critic.eval(&obs, &s.goal)?));
    let mut verdict = None;
    while let Some((epoch, v)) = s.pending.front().copied() {
        if v.evaluated_at_tick + config.critic_lag > tick {
            break;
        }
        s.pending.pop_front();
        if epoch == s.epoch {
            verdict = Some(v);
        }
    }

    let trigger = verdict
        .and_then(|v| classify_trigger(&v, config.tau_for(&s.goal), config.n_stag, &mut s.tracker));
    let mut event = None;
    let mut switch = None;
    let mut reset_applied = false;
    if let Some(kind) = trigger {
        s.buffer.clear();
        s.tracker.reset();
        s.memory = match kind {
            TriggerKind::Anomaly => MemoryContext::accident(&s.goal),
            TriggerKind::Completion => MemoryContext::completed(&s.goal),
            TriggerKind::Stagnation => MemoryContext::stagnation(&s.goal),
        };
        if kind == TriggerKind::Stagnation {
            world = reset_robot_state(&world);
            reset_applied = true;
        }
        let after = agents.brain.plan(&observe(&world), instruction, &s.memory)?;
        if after != s.goal {
            switch = Some(GoalSwitch::new(&world, &s.goal, &after, Some(kind)));
        }
        event = Some(PreemptionEvent {
            kind,
            tick,
            goal_before: std::mem::replace(&mut s.goal, after),
            goal_after: s.goal.clone(),
        });
        s.epoch += 1;
        s.pending.clear();
    }

    let mut refilled = false;
    let mut chunk_error = None;
    if s.buffer.is_empty() {
        let chunk = agents.cerebellum.act(&observe(&world), &world.arms, &s.goal)?;
        chunk_error = episode::refill(&mut s.buffer, chunk, config.horizon, tick)?;
        refilled = true;
    }
    let (action, issued_at_tick) = s
        .buffer
        .pop_front()
        .ok_or_else(|| Error::Agent("empty action buffer after refill".into()))?;

    let record = TickRecord {
        tick,
        goal: s.goal.text.clone(),
        verdict,
        action,
        issued_at_tick,
        event: trigger,
        reset_applied,
        brain_queried: trigger.is_some(),
        refilled,
        chunk_error,
    };
    Ok(TickOutcome {
        state: s,
        world,
        record,
        event,
        switch,
    })
}

struct TriLoop<'a> {
    state: SchedulerState,
    instruction: Instruction,
    agents: Agents<'a>,
    config: &'a SchedulerConfig,
}

impl Loop for TriLoop<'_> {
    fn tick(&mut self, world: &WorldState, trace: &mut EpisodeTrace) -> Result<(WorldState, TickRecord)> {
        let out = tri_tick(&self.state, world, &self.instruction, &self.agents, self.config)?;
        self.state = out.state;
        if let Some(e) = out.event {
            trace.events.push(e);
            trace.brain_query_count += 1;
        }
        trace.switches.extend(out.switch);
        Ok((out.world, out.record))
    }
}

/// A full critic-guided episode: one initial plan, then replans only on events.
pub fn run_episode(
    scenario: &ScenarioConfig,
    agents: &Agents<'_>,
    config: &SchedulerConfig,
) -> Result<EpisodeTrace> {
    let (world, instruction, mut trace) = episode::begin(SchedulerKind::Tri, scenario, agents, config)?;
    let goal = match agents
        .brain
        .plan(&observe(&world), &instruction, &MemoryContext::none())
    {
        Ok(g) => g,
        Err(e) => {
            trace.error = Some(e.to_string());
            return Ok(episode::finish(trace, &world));
        }
    };
    trace.brain_query_count = 1;
    let mut lp = TriLoop {
        state: SchedulerState::new(goal),
        instruction,
        agents: *agents,
        config,
    };
    episode::drive(world, trace, scenario, config, &mut lp)
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::agents::{
        ActionChunk, Brain, Cerebellum, CerebellumConfig, OracleBrain, OracleCritic,
        ScriptedCerebellum, ScriptedCritic, Verb,
    };
    use crate::critic_train::{quantize, ValueToken};
    use crate::scheduler::stale_actions;
    use crate::seed;
    use crate::world::{scenario_init, step, ArmState, Observation, ScenarioName};

    struct Idle;

    impl Cerebellum for Idle {
        fn horizon(&self) -> usize {
            16
        }

        fn act(&self, obs: &Observation, _: &[ArmState; 2], _: &SubtaskGoal) -> Result<ActionChunk> {
            Ok(ActionChunk::idle(16, obs.tick))
        }
    }

    /// Straight-line replay of the trigger rules over a verdict stream.
    fn reference(stream: &[Option<f64>], ticks: usize, lag: usize, tau: f64, n: u64) -> Vec<(TriggerKind, u64)> {
        let mut out = Vec::new();
        let (mut v_max, mut t_stag) = (f64::NEG_INFINITY, 0u64);
        let mut last_event: Option<usize> = None;
        for t in 0..ticks {
            if t < lag {
                continue;
            }
            let s = t - lag;
            if last_event.is_some_and(|e| s <= e) {
                continue;
            }
            let kind = match stream[s.min(stream.len() - 1)] {
                None => Some(TriggerKind::Anomaly),
                Some(v) => {
                    if v > v_max {
                        v_max = v;
                        t_stag = 0;
                    } else {
                        t_stag += 1;
                    }
                    if v > tau {
                        Some(TriggerKind::Completion)
                    } else if t_stag >= n {
                        Some(TriggerKind::Stagnation)
                    } else {
                        None
                    }
                }
            };
            if let Some(k) = kind {
                out.push((k, t as u64));
                v_max = f64::NEG_INFINITY;
                t_stag = 0;
                last_event = Some(t);
            }
        }
        out
    }

    fn tokens(stream: &[Option<f64>]) -> Vec<ValueToken> {
        stream
            .iter()
            .map(|v| match v {
                Some(x) => ValueToken::Progress(quantize(*x).unwrap()),
                None => ValueToken::Anomaly,
            })
            .collect()
    }

    fn run_scripted(stream: &[Option<f64>], cfg: &SchedulerConfig) -> EpisodeTrace {
        let critic = ScriptedCritic { stream: tokens(stream) };
        let brain = OracleBrain::default();
        let agents = Agents {
            brain: &brain,
            cerebellum: &Idle,
            critic: Some(&critic),
        };
        let mut sc = ScenarioConfig::preset(ScenarioName::Ordered, 2);
        sc.perturbations.clear();
        run_episode(&sc, &agents, cfg).unwrap()
    }

    fn random_stream(rng: &mut impl Rng, len: usize) -> Vec<Option<f64>> {
        let mut out = Vec::with_capacity(len);
        let mut bin = rng.random_range(0..60u32);
        while out.len() < len {
            let run = rng.random_range(1..60usize);
            let regime = rng.random_range(0..10u32);
            for _ in 0..run {
                let tok = match regime {
                    0 => None,
                    1..=3 => {
                        bin = (bin + rng.random_range(0..3)).min(95);
                        Some(bin)
                    }
                    4 => Some(rng.random_range(90..=100)),
                    _ => Some(bin),
                };
                out.push(tok.map(|b| b as f64 / 100.0 - 1.0));
            }
        }
        out.truncate(len);
        out
    }

    #[test]
    fn event_sequence_matches_reference() {
        let mut rng = seed::rng(&[77]);
        for case in 0..60 {
            let len = rng.random_range(1..300);
            let stream = random_stream(&mut rng, len);
            let cfg = SchedulerConfig {
                n_stag: [1, 2, 7, 40][case % 4],
                critic_lag: [0, 0, 1, 3][(case / 4) % 4],
                max_episode_ticks: 320,
                ..Default::default()
            };
            let trace = run_scripted(&stream, &cfg);
            assert_eq!(trace.records.len(), 320);
            let want = reference(&stream, 320, cfg.critic_lag as usize, cfg.tau_succ, cfg.n_stag);
            assert_eq!(trace.event_ticks(), want, "case {case}");
            assert_eq!(trace.brain_query_count, 1 + want.len() as u64);
            assert!(stale_actions(&trace).is_empty());
        }
    }

    #[test]
    fn flat_stream_stalls_exactly() {
        for (t0, n) in [(0u64, 1u64), (0, 2), (0, 180), (25, 180), (10, 2)] {
            // Rising until t0, then flat.
            let stream: Vec<Option<f64>> = (0..=t0).map(|t| Some(-0.9 + 0.01 * t as f64)).collect();
            let cfg = SchedulerConfig {
                n_stag: n,
                max_episode_ticks: t0 + n + 1,
                ..Default::default()
            };
            let trace = run_scripted(&stream, &cfg);
            assert_eq!(trace.event_ticks(), vec![(TriggerKind::Stagnation, t0 + n)]);
            let rec = &trace.records[(t0 + n) as usize];
            assert!(rec.reset_applied);
            assert_eq!(trace.records.iter().filter(|r| r.reset_applied).count(), 1);
        }
    }

    #[test]
    fn completion_threshold_on_bins() {
        let cfg = SchedulerConfig {
            max_episode_ticks: 3,
            ..Default::default()
        };
        // Bin 96 reads -0.04, bin 95 reads -0.05.
        let hit = run_scripted(&[Some(-0.04)], &cfg);
        assert_eq!(hit.events[0].kind, TriggerKind::Completion);
        assert_eq!(hit.events[0].tick, 0);
        let miss = run_scripted(&[Some(-0.05)], &cfg);
        assert!(miss.events.is_empty());
    }

    #[test]
    fn anomaly_outranks_completion_and_sets_memory() {
        let cfg = SchedulerConfig {
            max_episode_ticks: 2,
            ..Default::default()
        };
        let trace = run_scripted(&[None], &cfg);
        assert_eq!(trace.events[0].kind, TriggerKind::Anomaly);
        let world = scenario_init(&ScenarioConfig::preset(ScenarioName::Ordered, 2)).unwrap();
        let critic = ScriptedCritic {
            stream: vec![ValueToken::Anomaly],
        };
        let brain = OracleBrain::default();
        let agents = Agents {
            brain: &brain,
            cerebellum: &Idle,
            critic: Some(&critic),
        };
        let goal = SubtaskGoal::stack("bowl_large", "plate");
        let mut state = SchedulerState::new(goal.clone());
        state.buffer.push_back((ActionPair::NOOP, 0));
        let ins = Instruction::for_scenario(ScenarioName::Ordered);
        let out = tri_tick(&state, &world, &ins, &agents, &SchedulerConfig::default()).unwrap();
        assert_eq!(out.state.memory.text, "accident happened");
        assert!(out.record.refilled, "buffer flushed and refilled");
        assert_eq!(out.state.buffer.len(), 15);
        assert_eq!(out.state.tracker, StallTracker::default());
        // Same inputs, same outputs.
        assert_eq!(out, tri_tick(&state, &world, &ins, &agents, &SchedulerConfig::default()).unwrap());
    }

    #[test]
    fn no_critic_is_recorded_as_fatal() {
        let brain = OracleBrain::default();
        let agents = Agents {
            brain: &brain,
            cerebellum: &Idle,
            critic: None,
        };
        let t = run_episode(&ScenarioConfig::preset(ScenarioName::Ordered, 1), &agents, &SchedulerConfig::default())
            .unwrap();
        assert!(t.error.is_some());
        assert!(!t.success);
    }

    fn oracle_run(name: ScenarioName, seed: u64, cfg: &SchedulerConfig) -> EpisodeTrace {
        let brain = OracleBrain::default();
        let cb = ScriptedCerebellum::new(
            CerebellumConfig {
                p_drop: 0.0,
                ..Default::default()
            },
            seed,
        );
        let critic = OracleCritic::default();
        let agents = Agents {
            brain: &brain,
            cerebellum: &cb,
            critic: Some(&critic),
        };
        run_episode(&ScenarioConfig::preset(name, seed), &agents, cfg).unwrap()
    }

    #[test]
    fn ordered_oracle_succeeds_without_anomalies() {
        let t = oracle_run(ScenarioName::Ordered, 3, &SchedulerConfig::default());
        assert!(t.success);
        assert!(t.events.iter().all(|e| e.kind != TriggerKind::Anomaly));
        assert_eq!(t.brain_query_count, 1 + t.events.len() as u64);
    }

    #[test]
    fn knock_over_raises_anomaly_then_righting() {
        let mut sc = ScenarioConfig::preset(ScenarioName::Fallen, 5);
        for p in &mut sc.perturbations {
            p.at_tick = 40;
        }
        let brain = OracleBrain::default();
        let cb = ScriptedCerebellum::new(CerebellumConfig::default(), 5);
        let critic = OracleCritic::default();
        let agents = Agents {
            brain: &brain,
            cerebellum: &cb,
            critic: Some(&critic),
        };
        let t = run_episode(&sc, &agents, &SchedulerConfig::default()).unwrap();
        let a = t.events.iter().find(|e| e.kind == TriggerKind::Anomaly).unwrap();
        assert!(a.tick >= 40);
        assert_eq!(a.goal_after.verb, Verb::RightObject);
        assert_eq!(a.goal_after.object.as_str(), "cup");
    }

    #[test]
    fn zero_budget_gives_empty_failure() {
        let t = oracle_run(
            ScenarioName::Ordered,
            1,
            &SchedulerConfig {
                max_episode_ticks: 0,
                ..Default::default()
            },
        );
        assert!(t.records.is_empty());
        assert!(!t.success);
    }

    #[test]
    fn replay_from_recorded_states_is_identical() {
        let cfg = SchedulerConfig::default();
        let brain = OracleBrain::default();
        let cb = ScriptedCerebellum::new(CerebellumConfig::default(), 9);
        let critic = OracleCritic::default();
        let agents = Agents {
            brain: &brain,
            cerebellum: &cb,
            critic: Some(&critic),
        };
        let ins = Instruction::for_scenario(ScenarioName::Scattered);
        let mut world = scenario_init(&ScenarioConfig::preset(ScenarioName::Scattered, 9)).unwrap();
        let mut state = SchedulerState::new(
            brain
                .plan(&observe(&world), &ins, &MemoryContext::none())
                .unwrap(),
        );
        for _ in 0..120 {
            let a = tri_tick(&state, &world, &ins, &agents, &cfg).unwrap();
            let b = tri_tick(&state, &world, &ins, &agents, &cfg).unwrap();
            assert_eq!(a, b);
            if a.event.is_some() {
                assert_eq!(a.state.tracker, StallTracker::default());
                assert_eq!(a.state.buffer.len(), cfg.horizon - 1);
            }
            world = step(&a.world, &a.action());
            state = a.state;
        }
    }
}
