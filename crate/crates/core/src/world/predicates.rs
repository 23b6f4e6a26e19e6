//! Ground-truth success predicates.

use super::catalog::script;
use super::{Category, WorldState};
use crate::agents::{SubtaskGoal, Verb};
use crate::{Error, Result};

/// Whether `goal`'s success condition holds in `world`.
///
/// | verb               | holds when |
/// |--------------------|------------|
/// | pick_and_place     | object rests on the destination (inside it, for the bag) and is not held |
/// | stack              | object rests directly on the destination and is not held |
/// | open_bag           | the bag-open flag is set |
/// | right_object       | object is upright (or deformable) |
/// | handover           | object is held by the goal's arm |
/// | follow_instruction | the whole scenario script holds |
pub fn subtask_done(world: &WorldState, goal: &SubtaskGoal) -> Result<bool> {
    if goal.verb == Verb::FollowInstruction {
        return Ok(scenario_complete(world));
    }
    let obj = world
        .object(&goal.object)
        .ok_or_else(|| Error::Evaluation(format!("goal references unknown object {}", goal.object)))?;
    let held = world.holder_of(&obj.id);
    let dest = || {
        let d = goal.destination.as_ref().ok_or_else(|| {
            Error::Evaluation(format!("goal {:?} needs a destination", goal.text))
        })?;
        world
            .object(d)
            .ok_or_else(|| Error::Evaluation(format!("goal references unknown object {d}")))
    };
    Ok(match goal.verb {
        Verb::PickAndPlace | Verb::Stack => {
            let d = dest()?;
            let resting = if d.category == Category::Bag {
                obj.in_bag
            } else {
                obj.stacked_on.as_ref() == Some(&d.id)
            };
            resting && held.is_none()
        }
        Verb::OpenBag => world.bag_open,
        Verb::RightObject => obj.upright || obj.category.is_deformable(),
        Verb::Handover => match goal.arm {
            Some(side) => held == Some(side),
            None => held.is_some(),
        },
        Verb::FollowInstruction => unreachable!("handled above"),
    })
}

/// Every script goal of the scenario's family holds.
pub fn scenario_complete(world: &WorldState) -> bool {
    script(world.scenario.family())
        .iter()
        .all(|g| subtask_done(world, g).unwrap_or(false))
}

/// Number of leading script goals that hold (cumulative subtask success).
pub fn scenario_progress(world: &WorldState) -> usize {
    script(world.scenario.family())
        .iter()
        .take_while(|g| subtask_done(world, g).unwrap_or(false))
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{scenario_init, ObjectId, ScenarioConfig, ScenarioName, Vec3};

    fn world(name: ScenarioName) -> WorldState {
        scenario_init(&ScenarioConfig::preset(name, 7)).unwrap()
    }

    fn put_on(w: &mut WorldState, obj: &str, on: &str) {
        let s = w.object(&on.into()).unwrap().clone();
        let i = w.object_index(&obj.into()).unwrap();
        w.objects[i].pose = Vec3::new(s.pose.x, s.pose.y, s.top());
        w.objects[i].stacked_on = Some(ObjectId::new(on));
    }

    #[test]
    fn stack_predicate_follows_stacking() {
        let mut w = world(ScenarioName::Ordered);
        let goal = SubtaskGoal::stack("bowl_small", "bowl_large");
        assert!(!subtask_done(&w, &goal).unwrap());
        put_on(&mut w, "bowl_small", "bowl_large");
        assert!(subtask_done(&w, &goal).unwrap());
    }

    #[test]
    fn fallen_cup_is_not_righted() {
        let mut w = world(ScenarioName::Fallen);
        let i = w.object_index(&"cup".into()).unwrap();
        w.objects[i].upright = false;
        assert!(!subtask_done(&w, &SubtaskGoal::right_object("cup")).unwrap());
        w.objects[i].upright = true;
        assert!(subtask_done(&w, &SubtaskGoal::right_object("cup")).unwrap());
    }

    #[test]
    fn unknown_object_is_evaluation_error() {
        let w = world(ScenarioName::Ordered);
        let goal = SubtaskGoal::right_object("bottle_1");
        assert!(matches!(subtask_done(&w, &goal), Err(Error::Evaluation(_))));
    }

    #[test]
    fn bag_goals() {
        let mut w = world(ScenarioName::TidyDesk);
        assert!(!subtask_done(&w, &SubtaskGoal::open_bag("bag")).unwrap());
        w.bag_open = true;
        assert!(subtask_done(&w, &SubtaskGoal::open_bag("bag")).unwrap());
        let i = w.object_index(&"tissue".into()).unwrap();
        w.objects[i].in_bag = true;
        assert!(subtask_done(&w, &SubtaskGoal::pick_and_place("tissue", "bag")).unwrap());
        assert_eq!(scenario_progress(&w), 1);
    }

    #[test]
    fn full_script_completes_scenario() {
        let mut w = world(ScenarioName::Scattered);
        assert!(!scenario_complete(&w));
        put_on(&mut w, "bowl_large", "plate");
        put_on(&mut w, "bowl_small", "bowl_large");
        assert_eq!(scenario_progress(&w), 2);
        put_on(&mut w, "cup", "bowl_small");
        assert!(scenario_complete(&w));
    }
}
