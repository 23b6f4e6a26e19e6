//! Scripted low-level controller with switchable failure modes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::skills::{self, feasible, nearest_arm, nearest_feasible_arm};
use super::{decode, ActionChunk, Cerebellum, SubtaskGoal, Verb};
use crate::seed;
use crate::world::{
    ActionKind, ActionPair, ArmState, Category, Gripper, Observation, Side, Vec3, WorldState,
};
use crate::Result;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CerebellumConfig {
    pub horizon: usize,
    /// Chance per chunk that a carried object is let go mid-chunk.
    pub p_drop: f64,
    /// Emit stationary reach attempts when the chosen arm cannot reach.
    pub ood_trap: bool,
    /// Whether cup transfers were ever learned for the left arm. Without it
    /// every untokenized cup transfer goes to the right arm.
    pub left_cup_transfer: bool,
}

impl Default for CerebellumConfig {
    fn default() -> Self {
        CerebellumConfig {
            horizon: 16,
            p_drop: 0.02,
            ood_trap: true,
            left_cup_transfer: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScriptedCerebellum {
    pub config: CerebellumConfig,
    pub seed: u64,
}

impl ScriptedCerebellum {
    pub fn new(config: CerebellumConfig, seed: u64) -> Self {
        ScriptedCerebellum { config, seed }
    }

    /// Arm the controller commits to for `goal` in `world`.
    pub fn select_arm(&self, world: &WorldState, goal: &SubtaskGoal) -> Result<Side> {
        if let Some(arm) = goal.arm {
            return Ok(arm);
        }
        if let Some(h) = world.holder_of(&goal.object) {
            return Ok(h);
        }
        let is_cup_transfer = matches!(goal.verb, Verb::PickAndPlace | Verb::Stack)
            && world
                .object(&goal.object)
                .is_some_and(|o| o.category == Category::Cup);
        if is_cup_transfer {
            if !self.config.left_cup_transfer {
                return Ok(Side::Right);
            }
            // Visual proximity only: reachability is not checked.
            let grasp = world.object(&goal.object).map(|o| o.grasp_point());
            return Ok(nearest_arm(world, &grasp.unwrap_or_default()));
        }
        nearest_feasible_arm(world, goal)
    }
}

fn resolve(world: &WorldState, goal: &SubtaskGoal) -> Option<SubtaskGoal> {
    match goal.verb {
        Verb::FollowInstruction => skills::resolve_instruction(world),
        _ => Some(goal.clone()),
    }
}

impl Cerebellum for ScriptedCerebellum {
    fn horizon(&self) -> usize {
        self.config.horizon
    }

    fn act(&self, obs: &Observation, proprio: &[ArmState; 2], goal: &SubtaskGoal) -> Result<ActionChunk> {
        let h = self.config.horizon;
        let mut world = decode(obs)?;
        for (arm, p) in world.arms.iter_mut().zip(proprio) {
            arm.ee_position = p.ee_position;
            arm.gripper = p.gripper;
        }
        let Some(goal) = resolve(&world, goal) else {
            return Ok(ActionChunk::idle(h, obs.tick));
        };
        if world.object(&goal.object).is_none() {
            return Ok(ActionChunk::failed(
                h,
                obs.tick,
                format!("goal target {} absent from scene", goal.object),
            ));
        }
        let arm = self.select_arm(&world, &goal)?;

        if self.config.ood_trap && !feasible(&world, &goal, arm) && world.holder_of(&goal.object) != Some(arm) {
            let stuck = ActionPair::single(arm, ActionKind::MoveDelta(Vec3::zeros()));
            return Ok(ActionChunk {
                actions: vec![stuck; h],
                horizon: h,
                issued_at_tick: obs.tick,
                error: None,
            });
        }

        let steps = skills::plan(&world, &goal, arm)?;
        let (mut actions, carrying) = skills::rollout(&world, &steps, Some(&goal.object), h);

        if self.config.p_drop > 0.0 {
            let mut rng = seed::rng(&[self.seed, obs.tick, seed::hash_str(&goal.text)]);
            if rng.random::<f64>() < self.config.p_drop {
                let carry: Vec<usize> = (0..actions.len()).filter(|&i| carrying[i]).collect();
                if !carry.is_empty() {
                    let i = carry[carry.len() / 2];
                    let side = if actions[i].left == ActionKind::Noop {
                        Side::Right
                    } else {
                        Side::Left
                    };
                    actions[i] = ActionPair::single(side, ActionKind::SetGripper(Gripper::Open));
                }
            }
        }

        Ok(ActionChunk {
            actions,
            horizon: h,
            issued_at_tick: obs.tick,
            error: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{observe, scenario_init, step, ScenarioConfig, ScenarioName};

    fn world(name: ScenarioName) -> WorldState {
        let mut cfg = ScenarioConfig::preset(name, 2);
        cfg.perturbations.clear();
        scenario_init(&cfg).unwrap()
    }

    fn cerebellum(cfg: CerebellumConfig) -> ScriptedCerebellum {
        ScriptedCerebellum::new(cfg, 9)
    }

    fn chunk(c: &ScriptedCerebellum, w: &WorldState, g: &SubtaskGoal) -> ActionChunk {
        c.act(&observe(w), &w.arms, g).unwrap()
    }

    #[test]
    fn reach_chunk_ends_within_grasp_radius() {
        let c = cerebellum(CerebellumConfig {
            p_drop: 0.0,
            ..Default::default()
        });
        let mut w = world(ScenarioName::Ordered);
        // Start close enough that one chunk reaches the cup.
        let cup = w.object(&"cup".into()).unwrap().grasp_point();
        w.arms[1].ee_position = cup + Vec3::new(0.05, 0.0, 0.1);
        let g = SubtaskGoal::pick_and_place("cup", "bowl_small")
            .with_tokens(Some(Side::Right), Some(Side::Right));
        let ch = chunk(&c, &w, &g);
        assert_eq!(ch.actions.len(), 16);
        let mut sim = w.clone();
        let mut min_d = f64::INFINITY;
        for a in &ch.actions {
            if a.right == ActionKind::SetGripper(Gripper::Closed) {
                break;
            }
            sim = step(&sim, a);
            min_d = min_d.min((sim.arm(Side::Right).ee_position - cup).norm());
        }
        assert!(min_d <= sim.params.grasp_radius, "{min_d}");
    }

    #[test]
    fn p_drop_one_opens_mid_carry() {
        let c = cerebellum(CerebellumConfig {
            p_drop: 1.0,
            ..Default::default()
        });
        let mut w = world(ScenarioName::Ordered);
        let cup = w.object(&"cup".into()).unwrap().grasp_point();
        w.arms[1].ee_position = cup;
        w = step(&w, &ActionPair::single(Side::Right, ActionKind::SetGripper(Gripper::Closed)));
        assert_eq!(w.arm(Side::Right).held, Some("cup".into()));
        let g = SubtaskGoal::pick_and_place("cup", "bowl_small");
        let ch = chunk(&c, &w, &g);
        let open = ch
            .actions
            .iter()
            .position(|a| a.right == ActionKind::SetGripper(Gripper::Open))
            .expect("drop inserted");
        assert!(open > 0 && open < ch.actions.len() - 1);
    }

    #[test]
    fn ood_trap_never_closes_distance() {
        let c = cerebellum(CerebellumConfig {
            p_drop: 0.0,
            ..Default::default()
        });
        let w = world(ScenarioName::LeftCup);
        let g = SubtaskGoal::pick_and_place("cup", "bowl_small")
            .with_tokens(Some(Side::Right), Some(Side::Right));
        let cup = w.object(&"cup".into()).unwrap().grasp_point();
        let ch = chunk(&c, &w, &g);
        let mut sim = w.clone();
        let mut last = (sim.arm(Side::Right).ee_position - cup).norm();
        for a in &ch.actions {
            sim = step(&sim, a);
            let d = (sim.arm(Side::Right).ee_position - cup).norm();
            assert!(d >= last - 1e-12);
            last = d;
        }
    }

    #[test]
    fn no_transfer_sends_cup_to_right_arm() {
        let w = world(ScenarioName::LeftCup);
        let g = SubtaskGoal::pick_and_place("cup", "bowl_small");
        let no = cerebellum(CerebellumConfig {
            left_cup_transfer: false,
            ..Default::default()
        });
        assert_eq!(no.select_arm(&w, &g).unwrap(), Side::Right);
        let yes = cerebellum(CerebellumConfig::default());
        assert_eq!(yes.select_arm(&w, &g).unwrap(), Side::Left);
    }

    #[test]
    fn missing_target_gives_flagged_idle_chunk() {
        let c = cerebellum(CerebellumConfig::default());
        let w = world(ScenarioName::Ordered);
        let ch = chunk(&c, &w, &SubtaskGoal::right_object("bottle_1"));
        assert_eq!(ch.actions.len(), 16);
        assert!(ch.error.is_some());
        assert!(ch.actions.iter().all(|a| *a == ActionPair::NOOP));
    }

    #[test]
    fn chunks_always_have_horizon_length() {
        for h in [1, 5, 16, 40] {
            let c = cerebellum(CerebellumConfig {
                horizon: h,
                ..Default::default()
            });
            for name in ScenarioName::ALL {
                let w = world(name);
                let g = crate::world::script(name.family())[0].clone();
                assert_eq!(chunk(&c, &w, &g).actions.len(), h);
            }
        }
    }
}
