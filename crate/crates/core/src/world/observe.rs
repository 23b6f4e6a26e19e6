//! Feature observations.
//!
//! Layout for a scenario with `n` objects (inventory order of its family):
//!
//! | offset              | width | content |
//! |---------------------|-------|---------|
//! | `8*i`               | 8     | object `i`: x, y, z, upright, held_left, held_right, in_bag, support |
//! | `8*n + 4*a`         | 4     | arm `a` (0 = left, 1 = right): ee x, y, z, gripper_closed |
//! | `8*n + 8`           | 1     | bag_open |
//!
//! Flags are 0.0 / 1.0. `support` is the inventory index of the object the
//! item rests on plus one, or 0.0 when it rests on the table or is held.
//! Both tableware and desk scenes have four objects, so every scenario yields
//! 41 features.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::catalog::{inventory, Family};
use super::{Category, Gripper, ObjectId, ScenarioName, Side, WorldState};
use crate::seed;

pub const OBJECT_STRIDE: usize = 8;
pub const ARM_STRIDE: usize = 4;

/// Horizontal radius around the bag inside which its open state may flicker.
pub const FLICKER_RADIUS: f64 = 0.12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub scenario: ScenarioName,
    pub tick: u64,
    pub features: Vec<f64>,
}

/// Index map for a scenario's feature vector.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureLayout {
    pub objects: Vec<(ObjectId, Category)>,
}

impl FeatureLayout {
    pub fn for_family(family: Family) -> Self {
        FeatureLayout {
            objects: inventory(family),
        }
    }

    pub fn for_scenario(name: ScenarioName) -> Self {
        Self::for_family(name.family())
    }

    pub fn dim(&self) -> usize {
        self.objects.len() * OBJECT_STRIDE + 2 * ARM_STRIDE + 1
    }

    pub fn object_offset(&self, i: usize) -> usize {
        i * OBJECT_STRIDE
    }

    pub fn arm_offset(&self, side: Side) -> usize {
        self.objects.len() * OBJECT_STRIDE + side.index() * ARM_STRIDE
    }

    pub fn bag_open_offset(&self) -> usize {
        self.objects.len() * OBJECT_STRIDE + 2 * ARM_STRIDE
    }

    pub fn index_of(&self, id: &ObjectId) -> Option<usize> {
        self.objects.iter().position(|(o, _)| o == id)
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Encode `world` per the documented layout, then apply its seeded noise.
pub fn observe(world: &WorldState) -> Observation {
    let layout = FeatureLayout::for_scenario(world.scenario);
    let mut f = vec![0.0; layout.dim()];
    for (i, (id, _)) in layout.objects.iter().enumerate() {
        let Some(o) = world.object(id) else { continue };
        let base = layout.object_offset(i);
        let holder = world.holder_of(id);
        f[base] = o.pose.x;
        f[base + 1] = o.pose.y;
        f[base + 2] = o.pose.z;
        f[base + 3] = flag(o.upright);
        f[base + 4] = flag(holder == Some(Side::Left));
        f[base + 5] = flag(holder == Some(Side::Right));
        f[base + 6] = flag(o.in_bag);
        f[base + 7] = o
            .stacked_on
            .as_ref()
            .and_then(|s| layout.index_of(s))
            .map_or(0.0, |j| (j + 1) as f64);
    }
    for side in Side::BOTH {
        let arm = world.arm(side);
        let base = layout.arm_offset(side);
        f[base] = arm.ee_position.x;
        f[base + 1] = arm.ee_position.y;
        f[base + 2] = arm.ee_position.z;
        f[base + 3] = flag(arm.gripper == Gripper::Closed);
    }
    f[layout.bag_open_offset()] = flag(world.bag_open);

    if world.noise.level > 0.0 {
        let mut rng = seed::rng(&[world.rng_seed, world.tick, 0x0b5e]);
        let normal = Normal::new(0.0, world.noise.level).expect("noise level is finite and >= 0");
        for i in 0..layout.objects.len() {
            let base = layout.object_offset(i);
            for v in &mut f[base..base + 3] {
                *v += normal.sample(&mut rng);
            }
        }
        for side in Side::BOTH {
            let base = layout.arm_offset(side);
            for v in &mut f[base..base + 3] {
                *v += normal.sample(&mut rng);
            }
        }
    }

    if world.noise.flicker > 0.0 && world.bag_open {
        let bag = world.objects.iter().find(|o| o.category == Category::Bag);
        if let Some(bag) = bag {
            let near = world.arms.iter().any(|a| {
                let d = a.ee_position - bag.pose;
                d.x.hypot(d.y) <= FLICKER_RADIUS
            });
            let mut rng = seed::rng(&[world.rng_seed, world.tick, 0xf11c]);
            if near && rng.random::<f64>() < world.noise.flicker {
                f[layout.bag_open_offset()] = 0.0;
            }
        }
    }

    Observation {
        scenario: world.scenario,
        tick: world.tick,
        features: f,
    }
}
