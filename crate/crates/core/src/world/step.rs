//! Kinematic transition rules.

use super::{
    ActionKind, ActionPair, Category, Gripper, ObjectId, PerturbationKind, ScenarioConfig, Side,
    StepFlag, Vec3, WorldState,
};
use crate::{Error, Result};

/// Horizontal distance from a support's center at which an object dropped
/// onto it from too high comes to rest.
pub const SPILL_DISTANCE: f64 = 0.08;

/// Advance the world by one tick. Left arm commands apply before right.
pub fn step(world: &WorldState, actions: &ActionPair) -> WorldState {
    let mut w = world.clone();
    w.events.clear();
    for side in Side::BOTH {
        apply(&mut w, side, actions.kind(side));
    }
    w.tick += 1;
    w
}

fn apply(w: &mut WorldState, side: Side, kind: ActionKind) {
    match kind {
        ActionKind::Noop => {}
        ActionKind::MoveDelta(d) => move_arm(w, side, d),
        ActionKind::SetGripper(Gripper::Closed) => close(w, side),
        ActionKind::SetGripper(Gripper::Open) => open(w, side),
        ActionKind::ResetHome => reset_arm(w, side),
    }
}

fn move_arm(w: &mut WorldState, side: Side, mut d: Vec3) {
    let max = w.params.max_step;
    let norm = d.norm();
    if !norm.is_finite() {
        w.events.push(StepFlag::StepClamped { arm: side });
        return;
    }
    if norm > max {
        d *= max / norm;
        w.events.push(StepFlag::StepClamped { arm: side });
    }
    let p = &w.params;
    let target = w.arms[side.index()].ee_position + d;
    let in_box = Vec3::new(
        target.x.clamp(p.workspace_min.x, p.workspace_max.x),
        target.y.clamp(p.workspace_min.y, p.workspace_max.y),
        target.z.clamp(p.workspace_min.z, p.workspace_max.z),
    );
    if in_box != target {
        w.events.push(StepFlag::StepClamped { arm: side });
    }
    let reached = p.clamp_to_reach(side, in_box);
    if reached != in_box {
        w.events.push(StepFlag::OutOfReach { arm: side });
    }
    w.arms[side.index()].ee_position = reached;
    follow(w, side);
}

/// Keep a held object hanging under the end-effector.
fn follow(w: &mut WorldState, side: Side) {
    let arm = &w.arms[side.index()];
    if let Some(id) = arm.held.clone() {
        let ee = arm.ee_position;
        if let Some(i) = w.object_index(&id) {
            let h = w.objects[i].category.grasp_height();
            w.objects[i].pose = ee - Vec3::new(0.0, 0.0, h);
        }
    }
}

enum Contact {
    Handover(usize),
    Grasp(usize),
    Blocked(usize),
    Right(usize),
    Miss(usize),
}

fn close(w: &mut WorldState, side: Side) {
    let ai = side.index();
    if w.arms[ai].gripper == Gripper::Closed {
        return;
    }
    w.arms[ai].gripper = Gripper::Closed;
    let ee = w.arms[ai].ee_position;
    let r = w.params.grasp_radius;
    let other = w.arms[side.other().index()].held.clone();

    let mut best: Option<(f64, Contact)> = None;
    let mut offer = |d: f64, c: Contact| {
        if d <= r && best.as_ref().is_none_or(|(bd, _)| d < *bd) {
            best = Some((d, c));
        }
    };
    for (i, o) in w.objects.iter().enumerate() {
        if o.in_bag {
            continue;
        }
        let held_by_other = other.as_ref() == Some(&o.id);
        if held_by_other {
            offer((ee - o.grasp_point()).norm(), Contact::Handover(i));
        } else if o.is_fallen() {
            offer((ee - o.base_point()).norm(), Contact::Right(i));
            offer((ee - o.grasp_point()).norm(), Contact::Miss(i));
        } else {
            let blocked = w.has_children(&o.id)
                || (o.category == Category::Bag && w.objects.iter().any(|x| x.in_bag));
            let d = (ee - o.grasp_point()).norm();
            offer(d, if blocked { Contact::Blocked(i) } else { Contact::Grasp(i) });
        }
    }

    let Some((_, contact)) = best else { return };
    match contact {
        Contact::Handover(i) => {
            let id = w.objects[i].id.clone();
            w.arms[side.other().index()].held = None;
            w.arms[ai].held = Some(id.clone());
            follow(w, side);
            w.events.push(StepFlag::HandedOver { to: side, object: id });
        }
        Contact::Grasp(i) => {
            let o = &mut w.objects[i];
            o.stacked_on = None;
            o.upright = true;
            let id = o.id.clone();
            w.arms[ai].held = Some(id.clone());
            follow(w, side);
            w.events.push(StepFlag::Grasped { arm: side, object: id });
        }
        Contact::Blocked(i) => {
            let object = w.objects[i].id.clone();
            w.events.push(StepFlag::GraspBlocked { arm: side, object });
        }
        Contact::Right(i) => {
            let o = &mut w.objects[i];
            o.upright = true;
            let object = o.id.clone();
            w.events.push(StepFlag::Righted { arm: side, object });
        }
        Contact::Miss(i) => {
            let object = w.objects[i].id.clone();
            w.events.push(StepFlag::GraspMissed { arm: side, object });
        }
    }
}

fn open(w: &mut WorldState, side: Side) {
    let ai = side.index();
    if w.arms[ai].gripper == Gripper::Open {
        return;
    }
    w.arms[ai].gripper = Gripper::Open;
    if let Some(id) = w.arms[ai].held.take() {
        release(w, &id);
    }
}

fn can_support(cat: Category) -> bool {
    matches!(
        cat,
        Category::Plate | Category::BowlLarge | Category::BowlSmall | Category::Bag
    )
}

/// Settle a just-released object.
fn release(w: &mut WorldState, id: &ObjectId) {
    let Some(i) = w.object_index(id) else { return };
    let p = w.params.clone();
    let pose = w.objects[i].pose;
    let category = w.objects[i].category;

    if category == Category::Bag {
        let opened = pose.z >= p.bag_open_lift;
        let o = &mut w.objects[i];
        o.pose.z = 0.0;
        o.upright = true;
        o.stacked_on = None;
        if opened && !w.bag_open {
            w.bag_open = true;
            w.events.push(StepFlag::BagOpened);
        }
        w.events.push(StepFlag::Placed {
            object: id.clone(),
            on: None,
        });
        return;
    }

    // Highest free support under the release point.
    let mut support: Option<usize> = None;
    for (j, s) in w.objects.iter().enumerate() {
        if j == i || !can_support(s.category) || s.in_bag || !s.upright {
            continue;
        }
        if w.holder_of(&s.id).is_some() {
            continue;
        }
        let is_bag = s.category == Category::Bag;
        if !is_bag && w.has_children(&s.id) {
            continue;
        }
        let tol = if is_bag { p.bag_radius } else { p.place_tolerance };
        let dxy = (pose.x - s.pose.x).hypot(pose.y - s.pose.y);
        if dxy > tol || s.top() > pose.z + 1e-9 {
            continue;
        }
        if support.is_none_or(|k| s.top() > w.objects[k].top()) {
            support = Some(j);
        }
    }

    let rigid = !category.is_deformable();
    match support {
        Some(j) if w.objects[j].category == Category::Bag => {
            let bag_xy = w.objects[j].pose;
            let o = &mut w.objects[i];
            if w.bag_open && pose.z <= p.bag_drop_height {
                o.in_bag = true;
                o.stacked_on = None;
                o.upright = true;
                o.pose = Vec3::new(bag_xy.x, bag_xy.y, 0.0);
                w.events.push(StepFlag::Bagged { object: id.clone() });
            } else {
                // Bounces off the closed bag onto the table.
                o.pose.z = 0.0;
                o.stacked_on = None;
                o.upright = !rigid;
                w.events.push(StepFlag::Dropped { object: id.clone() });
            }
        }
        Some(j) => {
            let s = &w.objects[j];
            let (sid, top, sxy) = (s.id.clone(), s.top(), s.pose);
            let o = &mut w.objects[i];
            if pose.z - top <= p.gentle_drop {
                o.pose = Vec3::new(sxy.x, sxy.y, top);
                o.stacked_on = Some(sid.clone());
                o.upright = true;
                w.events.push(StepFlag::Placed {
                    object: id.clone(),
                    on: Some(sid),
                });
            } else {
                // Tumbles off the support and lands beside it.
                let mut away = Vec3::new(pose.x - sxy.x, pose.y - sxy.y, 0.0);
                if away.norm() < 1e-9 {
                    away = Vec3::new(0.0, -1.0, 0.0);
                }
                let spot = sxy + away.normalize() * SPILL_DISTANCE;
                o.pose = Vec3::new(
                    spot.x.clamp(p.workspace_min.x, p.workspace_max.x),
                    spot.y.clamp(p.workspace_min.y, p.workspace_max.y),
                    0.0,
                );
                o.stacked_on = None;
                o.upright = !rigid;
                w.events.push(StepFlag::Dropped { object: id.clone() });
            }
        }
        None => {
            let o = &mut w.objects[i];
            let gentle = pose.z <= p.gentle_drop;
            o.pose.z = 0.0;
            o.stacked_on = None;
            o.upright = gentle || !rigid;
            w.events.push(if gentle {
                StepFlag::Placed {
                    object: id.clone(),
                    on: None,
                }
            } else {
                StepFlag::Dropped { object: id.clone() }
            });
        }
    }
}

/// Send one arm home; anything it holds is set down upright at its x/y.
fn reset_arm(w: &mut WorldState, side: Side) {
    let ai = side.index();
    let changed = {
        let a = &w.arms[ai];
        a.ee_position != a.home_position || a.gripper != Gripper::Open || a.held.is_some()
    };
    if !changed {
        return;
    }
    if let Some(id) = w.arms[ai].held.take() {
        if let Some(i) = w.object_index(&id) {
            let o = &mut w.objects[i];
            o.pose.z = 0.0;
            o.upright = true;
            o.stacked_on = None;
        }
    }
    let a = &mut w.arms[ai];
    a.gripper = Gripper::Open;
    a.ee_position = a.home_position;
    w.events.push(StepFlag::ResetHome { arm: side });
}

/// Both arms home, grippers open, held objects set down in place.
pub fn reset_robot_state(world: &WorldState) -> WorldState {
    let mut w = world.clone();
    for side in Side::BOTH {
        reset_arm(&mut w, side);
    }
    w
}

/// Indices of every object resting (transitively) on `root`.
fn descendants(w: &WorldState, root: usize) -> Vec<usize> {
    let mut out = Vec::new();
    let mut frontier = vec![root];
    while let Some(k) = frontier.pop() {
        let id = &w.objects[k].id;
        for (j, o) in w.objects.iter().enumerate() {
            if o.stacked_on.as_ref() == Some(id) {
                out.push(j);
                frontier.push(j);
            }
        }
    }
    out
}

/// Displacement used by `displace` events that omit one.
pub const DEFAULT_DISPLACEMENT: Vec3 = Vec3::new(0.05, 0.0, 0.0);

/// Apply every scheduled event due at the current tick.
pub fn inject_perturbations(world: &WorldState, config: &ScenarioConfig) -> Result<WorldState> {
    let mut w = world.clone();
    for ev in config.perturbations.iter().filter(|e| e.at_tick == w.tick) {
        let i = w.object_index(&ev.target).ok_or_else(|| {
            Error::config(format!("perturbation target {} not in world", ev.target))
        })?;
        let holder = w.holder_of(&ev.target);
        match ev.kind {
            PerturbationKind::KnockOver => {
                let falling: Vec<usize> = std::iter::once(i).chain(descendants(&w, i)).collect();
                if let Some(s) = holder {
                    w.arms[s.index()].held = None;
                }
                for k in falling {
                    let o = &mut w.objects[k];
                    o.pose.z = 0.0;
                    o.stacked_on = None;
                    o.in_bag = false;
                    o.upright = false;
                }
            }
            PerturbationKind::Displace => {
                if holder.is_some() {
                    continue;
                }
                let d = ev.displacement.unwrap_or(DEFAULT_DISPLACEMENT);
                let dz = -w.objects[i].pose.z;
                let moved: Vec<usize> = std::iter::once(i).chain(descendants(&w, i)).collect();
                for k in moved {
                    w.objects[k].pose += Vec3::new(d.x, d.y, dz);
                }
                let o = &mut w.objects[i];
                o.stacked_on = None;
                o.in_bag = false;
            }
            PerturbationKind::DropHeld => {
                let Some(s) = holder else { continue };
                let ee = w.arms[s.index()].ee_position;
                w.arms[s.index()].held = None;
                let o = &mut w.objects[i];
                o.pose = Vec3::new(ee.x, ee.y, 0.0);
                o.stacked_on = None;
                o.upright = o.category.is_deformable();
            }
        }
        w.events.push(StepFlag::Perturbed {
            kind: ev.kind,
            object: ev.target.clone(),
        });
    }
    Ok(w)
}
