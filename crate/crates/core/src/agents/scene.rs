//! Rebuild a belief world from a feature vector.

use crate::world::{
    ArmState, FeatureLayout, Gripper, ObjectSpec, Observation, ObservationNoise, Side, Vec3,
    WorldParams, WorldState,
};
use crate::{Error, Result};

/// Decode `obs` into a world whose predicates and skills agents can query.
/// Positions are whatever the features say, so noise carries through.
pub fn decode(obs: &Observation) -> Result<WorldState> {
    let layout = FeatureLayout::for_scenario(obs.scenario);
    let f = &obs.features;
    if f.len() != layout.dim() {
        return Err(Error::Agent(format!(
            "observation has {} features, scenario {} needs {}",
            f.len(),
            obs.scenario,
            layout.dim()
        )));
    }
    let on = |x: f64| x > 0.5;
    let mut held: [Option<usize>; 2] = [None, None];
    let mut objects = Vec::with_capacity(layout.objects.len());
    for (i, (id, category)) in layout.objects.iter().enumerate() {
        let b = layout.object_offset(i);
        if on(f[b + 4]) {
            held[0] = Some(i);
        } else if on(f[b + 5]) {
            held[1] = Some(i);
        }
        let support = f[b + 7].round() as usize;
        let stacked_on = (1..=layout.objects.len())
            .contains(&support)
            .then(|| layout.objects[support - 1].0.clone());
        objects.push(ObjectSpec {
            id: id.clone(),
            category: *category,
            pose: Vec3::new(f[b], f[b + 1], f[b + 2]),
            upright: on(f[b + 3]),
            stacked_on,
            in_bag: on(f[b + 6]),
        });
    }
    let arms = Side::BOTH.map(|side| {
        let b = layout.arm_offset(side);
        let mut arm = ArmState::at_home(side);
        arm.ee_position = Vec3::new(f[b], f[b + 1], f[b + 2]);
        arm.gripper = if on(f[b + 3]) {
            Gripper::Closed
        } else {
            Gripper::Open
        };
        arm.held = held[side.index()].map(|i| layout.objects[i].0.clone());
        arm
    });
    Ok(WorldState {
        scenario: obs.scenario,
        objects,
        arms,
        tick: obs.tick,
        rng_seed: 0,
        bag_open: on(f[layout.bag_open_offset()]),
        noise: ObservationNoise::default(),
        params: WorldParams::default(),
        events: Vec::new(),
    })
}
