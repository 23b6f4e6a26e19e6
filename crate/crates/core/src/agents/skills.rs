//! Waypoint skills shared by the scripted controller and the oracle critic.
//!
//! A skill looks only at the current (belief) world and returns the
//! remaining waypoint plan, so re-planning from any intermediate state
//! continues where the previous plan left off.

use crate::world::{
    ActionKind, ActionPair, Category, Gripper, ObjectId, ObjectSpec, Side, Vec3, WorldState,
};
use crate::{Error, Result};

use super::{SubtaskGoal, Verb};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlanStep {
    Move { arm: Side, to: Vec3 },
    Grip { arm: Side, state: Gripper },
}

/// Height above a target from which the final straight descent starts.
pub const APPROACH_HEIGHT: f64 = 0.05;
/// Carry clearance above the higher of pick and place points.
pub const CARRY_CLEARANCE: f64 = 0.08;
/// Release gap above a support.
pub const PLACE_GAP: f64 = 0.005;
/// Object base height inside the bag mouth at release.
pub const BAG_RELEASE_HEIGHT: f64 = 0.10;
/// End-effector height at which the bag is let go to shake it open.
pub const BAG_SHAKE_HEIGHT: f64 = 0.16;
/// Where the two arms meet for a handover.
pub const HANDOVER_POINT: Vec3 = Vec3::new(0.0, 0.05, 0.22);
/// Path-length cost charged per gripper toggle.
pub const GRIP_COST: f64 = 0.01;

const EPS: f64 = 1e-9;

fn object<'a>(world: &'a WorldState, id: &ObjectId) -> Result<&'a ObjectSpec> {
    world
        .object(id)
        .ok_or_else(|| Error::Agent(format!("object {id} not in scene")))
}

/// End-effector point at which releasing `obj` lands it on/in `dest`.
pub fn place_point(obj: &ObjectSpec, dest: &ObjectSpec) -> Vec3 {
    let h = obj.category.grasp_height();
    if dest.category == Category::Bag {
        Vec3::new(dest.pose.x, dest.pose.y, BAG_RELEASE_HEIGHT + h)
    } else {
        Vec3::new(dest.pose.x, dest.pose.y, dest.top() + PLACE_GAP + h)
    }
}

/// The point an arm must reach first for `goal`, if any.
pub fn target_point(world: &WorldState, goal: &SubtaskGoal) -> Result<Option<Vec3>> {
    if goal.verb == Verb::FollowInstruction {
        return Ok(None);
    }
    let o = object(world, &goal.object)?;
    Ok(Some(match goal.verb {
        Verb::RightObject => o.base_point(),
        Verb::OpenBag => o.grasp_point(),
        _ if world.holder_of(&o.id).is_some() => match &goal.destination {
            Some(d) => place_point(o, object(world, d)?),
            None => o.grasp_point(),
        },
        _ => o.grasp_point(),
    }))
}

/// The arm can reach every point the goal needs.
pub fn feasible(world: &WorldState, goal: &SubtaskGoal, arm: Side) -> bool {
    let p = &world.params;
    let Some(o) = world.object(&goal.object) else {
        return false;
    };
    let first = match goal.verb {
        Verb::RightObject => o.base_point(),
        _ => o.grasp_point(),
    };
    if !p.can_reach(arm, &first) {
        return false;
    }
    match goal.destination.as_ref().and_then(|d| world.object(d)) {
        Some(d) => p.can_reach(arm, &place_point(o, d)),
        None => true,
    }
}

/// Arm whose end-effector is closest to `point`; ties go to the left arm.
pub fn nearest_arm(world: &WorldState, point: &Vec3) -> Side {
    let dl = (world.arm(Side::Left).ee_position - point).norm();
    let dr = (world.arm(Side::Right).ee_position - point).norm();
    if dr < dl {
        Side::Right
    } else {
        Side::Left
    }
}

/// Nearest arm among those that can complete the goal, else nearest.
pub fn nearest_feasible_arm(world: &WorldState, goal: &SubtaskGoal) -> Result<Side> {
    let t = target_point(world, goal)?.unwrap_or_default();
    let ok: Vec<Side> = Side::BOTH
        .into_iter()
        .filter(|&s| feasible(world, goal, s))
        .collect();
    Ok(match ok.as_slice() {
        [only] => *only,
        _ => nearest_arm(world, &t),
    })
}

/// Greedy reading of the global instruction from the current scene.
///
/// Tableware: the loose object horizontally nearest the plate goes onto the
/// top of the plate's column. Desk: the bag is opened first, then the loose
/// item nearest the bag goes in. An object already in hand always wins.
pub fn resolve_instruction(world: &WorldState) -> Option<SubtaskGoal> {
    let held: Vec<&ObjectId> = world.arms.iter().filter_map(|a| a.held.as_ref()).collect();
    let nearest = |anchor: &ObjectSpec, pool: Vec<&ObjectSpec>| -> Option<ObjectId> {
        if let Some(o) = pool.iter().find(|o| held.contains(&&o.id)) {
            return Some(o.id.clone());
        }
        pool.into_iter()
            .map(|o| {
                let d = (o.pose.x - anchor.pose.x).hypot(o.pose.y - anchor.pose.y);
                (d, o)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0))
            .map(|(_, o)| o.id.clone())
    };
    if let Some(bag) = world.objects.iter().find(|o| o.category == Category::Bag) {
        if !world.bag_open {
            return Some(SubtaskGoal::open_bag(bag.id.as_str()));
        }
        let pool = world
            .objects
            .iter()
            .filter(|o| o.id != bag.id && !o.in_bag)
            .collect();
        return nearest(bag, pool)
            .map(|id| SubtaskGoal::pick_and_place(id.as_str(), bag.id.as_str()));
    }
    let plate = world.objects.iter().find(|o| o.category == Category::Plate)?;
    let mut column = vec![plate.id.clone()];
    while column.len() <= world.objects.len() {
        let cur = column.last().expect("non-empty");
        match world.objects.iter().find(|o| o.stacked_on.as_ref() == Some(cur)) {
            Some(o) => column.push(o.id.clone()),
            None => break,
        }
    }
    let pool = world
        .objects
        .iter()
        .filter(|o| !column.contains(&o.id))
        .collect();
    let pick = nearest(plate, pool)?;
    let dest = column.last().expect("non-empty").clone();
    Some(if world.object(&pick)?.category == Category::Cup {
        SubtaskGoal::pick_and_place(pick.as_str(), dest.as_str())
    } else {
        SubtaskGoal::stack(pick.as_str(), dest.as_str())
    })
}

fn set_down(arm: Side, ee: Vec3, held: &ObjectSpec, out: &mut Vec<PlanStep>) {
    let z = held.category.grasp_height() + PLACE_GAP;
    out.push(PlanStep::Move {
        arm,
        to: Vec3::new(ee.x, ee.y, z),
    });
    out.push(PlanStep::Grip {
        arm,
        state: Gripper::Open,
    });
}

/// Descend onto `target` from above unless already lined up beneath the
/// approach point.
fn approach(arm: Side, ee: Vec3, target: Vec3, out: &mut Vec<PlanStep>) {
    let dxy = (ee.x - target.x).hypot(ee.y - target.y);
    let lined_up = dxy < 1e-6 && ee.z <= target.z + APPROACH_HEIGHT + EPS && ee.z >= target.z - EPS;
    if !lined_up {
        out.push(PlanStep::Move {
            arm,
            to: target + Vec3::new(0.0, 0.0, APPROACH_HEIGHT),
        });
    }
    out.push(PlanStep::Move { arm, to: target });
}

/// Clear the hand: set down a foreign object or open an empty closed gripper.
/// Returns false when the arm already holds `keep`.
fn clear_hand(
    world: &WorldState,
    arm: Side,
    keep: Option<&ObjectId>,
    out: &mut Vec<PlanStep>,
) -> Result<bool> {
    let a = world.arm(arm);
    match &a.held {
        Some(h) if Some(h) == keep => Ok(false),
        Some(h) => {
            set_down(arm, a.ee_position, object(world, h)?, out);
            Ok(true)
        }
        None => {
            if a.gripper == Gripper::Closed {
                out.push(PlanStep::Grip {
                    arm,
                    state: Gripper::Open,
                });
            }
            Ok(true)
        }
    }
}

fn carry(arm: Side, from: Vec3, place: Vec3, carry_z: f64, out: &mut Vec<PlanStep>) {
    let dxy = (from.x - place.x).hypot(from.y - place.y);
    if dxy >= 1e-6 {
        if from.z < carry_z - EPS {
            out.push(PlanStep::Move {
                arm,
                to: Vec3::new(from.x, from.y, carry_z),
            });
        }
        out.push(PlanStep::Move {
            arm,
            to: Vec3::new(place.x, place.y, carry_z),
        });
    }
    out.push(PlanStep::Move { arm, to: place });
    out.push(PlanStep::Grip {
        arm,
        state: Gripper::Open,
    });
}

/// Remaining waypoint plan for `goal` executed by `arm`. Empty when there is
/// nothing left to do.
pub fn plan(world: &WorldState, goal: &SubtaskGoal, arm: Side) -> Result<Vec<PlanStep>> {
    let mut out = Vec::new();
    let goal = match goal.verb {
        Verb::FollowInstruction => match resolve_instruction(world) {
            Some(g) => g,
            None => return Ok(out),
        },
        _ => goal.clone(),
    };
    let o = object(world, &goal.object)?;
    let ee = world.arm(arm).ee_position;
    match goal.verb {
        Verb::PickAndPlace | Verb::Stack => {
            let dest_id = goal
                .destination
                .as_ref()
                .ok_or_else(|| Error::Agent(format!("goal {:?} lacks a destination", goal.text)))?;
            let dest = object(world, dest_id)?;
            let done = if dest.category == Category::Bag {
                o.in_bag
            } else {
                o.stacked_on.as_ref() == Some(dest_id)
            };
            if done && world.holder_of(&o.id).is_none() {
                return Ok(out);
            }
            let place = place_point(o, dest);
            let grasp = o.grasp_point();
            let carry_z = place.z.max(grasp.z) + CARRY_CLEARANCE;
            if !clear_hand(world, arm, Some(&o.id), &mut out)? {
                // The grasp point rides with the hand; anchor on the target.
                let carry_z = place.z + CARRY_CLEARANCE;
                carry(arm, ee, place, carry_z, &mut out);
            } else {
                let from = match out.first() {
                    Some(PlanStep::Move { to, .. }) => *to,
                    _ => ee,
                };
                approach(arm, from, grasp, &mut out);
                out.push(PlanStep::Grip {
                    arm,
                    state: Gripper::Closed,
                });
                carry(arm, grasp, place, carry_z, &mut out);
            }
        }
        Verb::RightObject => {
            if !o.is_fallen() {
                return Ok(out);
            }
            clear_hand(world, arm, None, &mut out)?;
            let from = match out.first() {
                Some(PlanStep::Move { to, .. }) => *to,
                _ => ee,
            };
            approach(arm, from, o.base_point(), &mut out);
            out.push(PlanStep::Grip {
                arm,
                state: Gripper::Closed,
            });
            out.push(PlanStep::Grip {
                arm,
                state: Gripper::Open,
            });
        }
        Verb::OpenBag => {
            if world.bag_open {
                return Ok(out);
            }
            let grasp = o.grasp_point();
            let lift = Vec3::new(grasp.x, grasp.y, BAG_SHAKE_HEIGHT);
            if clear_hand(world, arm, Some(&o.id), &mut out)? {
                let from = match out.first() {
                    Some(PlanStep::Move { to, .. }) => *to,
                    _ => ee,
                };
                approach(arm, from, grasp, &mut out);
                out.push(PlanStep::Grip {
                    arm,
                    state: Gripper::Closed,
                });
            }
            out.push(PlanStep::Move { arm, to: lift });
            out.push(PlanStep::Grip {
                arm,
                state: Gripper::Open,
            });
        }
        Verb::Handover => {
            let receiver = goal.arm.unwrap_or(arm);
            let giver = receiver.other();
            if world.holder_of(&o.id) == Some(receiver) {
                return Ok(out);
            }
            if world.holder_of(&o.id) != Some(giver) {
                let gee = world.arm(giver).ee_position;
                clear_hand(world, giver, None, &mut out)?;
                approach(giver, gee, o.grasp_point(), &mut out);
                out.push(PlanStep::Grip {
                    arm: giver,
                    state: Gripper::Closed,
                });
            }
            clear_hand(world, receiver, None, &mut out)?;
            out.push(PlanStep::Move {
                arm: giver,
                to: HANDOVER_POINT,
            });
            out.push(PlanStep::Move {
                arm: receiver,
                to: HANDOVER_POINT,
            });
            out.push(PlanStep::Grip {
                arm: receiver,
                state: Gripper::Closed,
            });
            out.push(PlanStep::Grip {
                arm: giver,
                state: Gripper::Open,
            });
        }
        Verb::FollowInstruction => unreachable!("resolved above"),
    }
    Ok(out)
}

/// Total end-effector travel plus gripper costs from the current poses.
pub fn path_length(world: &WorldState, steps: &[PlanStep]) -> f64 {
    let mut ee = [world.arms[0].ee_position, world.arms[1].ee_position];
    steps
        .iter()
        .map(|s| match *s {
            PlanStep::Move { arm, to } => {
                let d = (to - ee[arm.index()]).norm();
                ee[arm.index()] = to;
                d
            }
            PlanStep::Grip { .. } => GRIP_COST,
        })
        .sum()
}

/// Primitive actions for the plan, truncated or noop-padded to `horizon`.
/// The second vector marks moves made while the arm holds its target.
pub fn rollout(
    world: &WorldState,
    steps: &[PlanStep],
    target: Option<&ObjectId>,
    horizon: usize,
) -> (Vec<ActionPair>, Vec<bool>) {
    let max = world.params.max_step * (1.0 - 1e-9);
    let mut ee = [world.arms[0].ee_position, world.arms[1].ee_position];
    let mut holding = Side::BOTH.map(|s| target.is_some() && world.arm(s).held.as_ref() == target);
    let mut actions = Vec::with_capacity(horizon);
    let mut carrying = Vec::with_capacity(horizon);
    'outer: for s in steps {
        match *s {
            PlanStep::Move { arm, to } => loop {
                if actions.len() >= horizon {
                    break 'outer;
                }
                let d = to - ee[arm.index()];
                let n = d.norm();
                if n < EPS {
                    break;
                }
                let delta = if n > max { d * (max / n) } else { d };
                ee[arm.index()] += delta;
                actions.push(ActionPair::single(arm, ActionKind::MoveDelta(delta)));
                carrying.push(holding[arm.index()]);
            },
            PlanStep::Grip { arm, state } => {
                if actions.len() >= horizon {
                    break;
                }
                holding[arm.index()] = state == Gripper::Closed;
                actions.push(ActionPair::single(arm, ActionKind::SetGripper(state)));
                carrying.push(false);
            }
        }
    }
    while actions.len() < horizon {
        actions.push(ActionPair::NOOP);
        carrying.push(false);
    }
    (actions, carrying)
}
