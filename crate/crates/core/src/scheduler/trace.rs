//! Episode traces and their line-delimited form.
//!
//! A trace file is one JSON object per line, tagged by `"record"`:
//! a `header`, one `tick` line per executed tick, then a `summary`.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{SchedulerKind, TriggerKind};
use crate::agents::{CriticVerdict, SubtaskGoal};
use crate::world::{subtask_done, ActionPair, ArmState, ObjectSpec, ScenarioName, WorldState};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PreemptionEvent {
    pub kind: TriggerKind,
    pub tick: u64,
    pub goal_before: SubtaskGoal,
    pub goal_after: SubtaskGoal,
}

/// A change of active goal. `cause` is the event behind it; schedulers
/// without a critic have none, and `from_satisfied` then records whether the
/// simulator already considered the old goal done.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalSwitch {
    pub tick: u64,
    pub from: SubtaskGoal,
    pub to: SubtaskGoal,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cause: Option<TriggerKind>,
    pub from_satisfied: bool,
}

impl GoalSwitch {
    pub fn new(world: &WorldState, from: &SubtaskGoal, to: &SubtaskGoal, cause: Option<TriggerKind>) -> Self {
        GoalSwitch {
            tick: world.tick,
            from: from.clone(),
            to: to.clone(),
            cause,
            from_satisfied: subtask_done(world, from).unwrap_or(false),
        }
    }

    /// A switch not explained by a completion.
    pub fn is_oscillation(&self) -> bool {
        match self.cause {
            Some(TriggerKind::Completion) => false,
            Some(_) => true,
            None => !self.from_satisfied,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TickRecord {
    pub tick: u64,
    /// Goal the executed action was issued under.
    pub goal: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<CriticVerdict>,
    pub action: ActionPair,
    pub issued_at_tick: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub event: Option<TriggerKind>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub reset_applied: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub brain_queried: bool,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub refilled: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chunk_error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FinalWorld {
    pub tick: u64,
    pub objects: Vec<ObjectSpec>,
    pub arms: [ArmState; 2],
    pub bag_open: bool,
}

impl From<&WorldState> for FinalWorld {
    fn from(w: &WorldState) -> Self {
        FinalWorld {
            tick: w.tick,
            objects: w.objects.clone(),
            arms: w.arms.clone(),
            bag_open: w.bag_open,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeTrace {
    pub scheduler: SchedulerKind,
    pub scenario: ScenarioName,
    pub seed: u64,
    pub instruction: String,
    pub records: Vec<TickRecord>,
    pub events: Vec<PreemptionEvent>,
    pub switches: Vec<GoalSwitch>,
    pub brain_query_count: u64,
    pub success: bool,
    /// Leading scenario goals satisfied at the end.
    pub subtasks_done: usize,
    pub subtasks_total: usize,
    pub final_world: Option<FinalWorld>,
    /// Fatal agent failure that ended the episode early.
    pub error: Option<String>,
}

impl EpisodeTrace {
    pub fn oscillations(&self) -> usize {
        self.switches.iter().filter(|s| s.is_oscillation()).count()
    }

    pub fn stagnation_resets(&self) -> usize {
        self.events
            .iter()
            .filter(|e| e.kind == TriggerKind::Stagnation)
            .count()
    }

    pub fn event_ticks(&self) -> Vec<(TriggerKind, u64)> {
        self.events.iter().map(|e| (e.kind, e.tick)).collect()
    }

    /// JSONL bytes, as written by [`write_trace`].
    pub fn to_jsonl(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        write_trace(&mut buf, self)?;
        Ok(buf)
    }
}

/// Ticks whose executed action predates the latest preemption.
pub fn stale_actions(trace: &EpisodeTrace) -> Vec<u64> {
    let mut last_preempt: Option<u64> = None;
    let mut stale = Vec::new();
    for r in &trace.records {
        if r.event.is_some() {
            last_preempt = Some(r.tick);
        }
        if last_preempt.is_some_and(|p| r.issued_at_tick < p) {
            stale.push(r.tick);
        }
    }
    stale
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "record", rename_all = "snake_case")]
pub enum TraceLine {
    Header {
        scheduler: SchedulerKind,
        scenario: ScenarioName,
        seed: u64,
        instruction: String,
    },
    Tick(TickRecord),
    Summary {
        events: Vec<PreemptionEvent>,
        switches: Vec<GoalSwitch>,
        brain_query_count: u64,
        success: bool,
        subtasks_done: usize,
        subtasks_total: usize,
        final_world: Option<FinalWorld>,
        error: Option<String>,
    },
}

fn line<W: Write>(w: &mut W, l: &TraceLine) -> Result<()> {
    serde_json::to_writer(&mut *w, l)?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn write_trace<W: Write>(mut w: W, t: &EpisodeTrace) -> Result<()> {
    line(
        &mut w,
        &TraceLine::Header {
            scheduler: t.scheduler,
            scenario: t.scenario,
            seed: t.seed,
            instruction: t.instruction.clone(),
        },
    )?;
    for r in &t.records {
        line(&mut w, &TraceLine::Tick(r.clone()))?;
    }
    line(
        &mut w,
        &TraceLine::Summary {
            events: t.events.clone(),
            switches: t.switches.clone(),
            brain_query_count: t.brain_query_count,
            success: t.success,
            subtasks_done: t.subtasks_done,
            subtasks_total: t.subtasks_total,
            final_world: t.final_world.clone(),
            error: t.error.clone(),
        },
    )
}

pub fn read_trace<R: BufRead>(r: R) -> Result<EpisodeTrace> {
    let mut lines = Vec::new();
    for (n, l) in r.lines().enumerate() {
        let l = l?;
        if l.trim().is_empty() {
            continue;
        }
        let parsed: TraceLine =
            serde_json::from_str(&l).map_err(|e| Error::parse(format!("trace line {}: {e}", n + 1)))?;
        lines.push(parsed);
    }
    let mut it = lines.into_iter();
    let Some(TraceLine::Header {
        scheduler,
        scenario,
        seed,
        instruction,
    }) = it.next()
    else {
        return Err(Error::parse("trace does not start with a header"));
    };
    let mut records = Vec::new();
    for l in it {
        match l {
            TraceLine::Tick(r) => records.push(r),
            TraceLine::Summary {
                events,
                switches,
                brain_query_count,
                success,
                subtasks_done,
                subtasks_total,
                final_world,
                error,
            } => {
                return Ok(EpisodeTrace {
                    scheduler,
                    scenario,
                    seed,
                    instruction,
                    records,
                    events,
                    switches,
                    brain_query_count,
                    success,
                    subtasks_done,
                    subtasks_total,
                    final_world,
                    error,
                })
            }
            TraceLine::Header { .. } => return Err(Error::parse("second header in trace")),
        }
    }
    Err(Error::parse("trace has no summary"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{CerebellumConfig, OracleBrain, OracleCritic, ScriptedCerebellum};
    use crate::scheduler::{run_episode, Agents, SchedulerConfig};
    use crate::world::{ScenarioConfig, ScenarioName};

    #[test]
    fn jsonl_round_trip() {
        let brain = OracleBrain::default();
        let cb = ScriptedCerebellum::new(CerebellumConfig::default(), 1);
        let critic = OracleCritic::default();
        let agents = Agents {
            brain: &brain,
            cerebellum: &cb,
            critic: Some(&critic),
        };
        let t = run_episode(&ScenarioConfig::preset(ScenarioName::Fallen, 1), &agents, &SchedulerConfig::default())
            .unwrap();
        let bytes = t.to_jsonl().unwrap();
        assert_eq!(bytes.iter().filter(|b| **b == b'\n').count(), t.records.len() + 2);
        let back = read_trace(&bytes[..]).unwrap();
        assert_eq!(back, t);
        assert!(read_trace(&b"{\"record\":\"summary\"}\n"[..]).is_err());
    }

    #[test]
    fn stale_audit_flags_old_actions() {
        let g = SubtaskGoal::right_object("cup");
        let rec = |tick, issued, event| TickRecord {
            tick,
            goal: g.text.clone(),
            verdict: None,
            action: ActionPair::NOOP,
            issued_at_tick: issued,
            event,
            reset_applied: false,
            brain_queried: false,
            refilled: false,
            chunk_error: None,
        };
        let mut t = EpisodeTrace {
            scheduler: SchedulerKind::Tri,
            scenario: ScenarioName::Ordered,
            seed: 0,
            instruction: String::new(),
            records: vec![rec(0, 0, None), rec(1, 1, Some(TriggerKind::Anomaly)), rec(2, 1, None)],
            events: vec![],
            switches: vec![],
            brain_query_count: 1,
            success: false,
            subtasks_done: 0,
            subtasks_total: 3,
            final_world: None,
            error: None,
        };
        assert!(stale_actions(&t).is_empty());
        t.records.push(rec(3, 0, None));
        assert_eq!(stale_actions(&t), vec![3]);
    }
}
