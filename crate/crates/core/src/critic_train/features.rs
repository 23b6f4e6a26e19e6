//! Goal-relative feature map for the learned critic.
//!
//! | index  | feature |
//! |--------|---------|
//! | 0      | goal predicate holds (0/1) |
//! | 1      | number of fallen rigid objects |
//! | 2      | goal object held by some arm (0/1) |
//! | 3      | goal object upright (0/1) |
//! | 4      | bag open (0/1) |
//! | 5      | remaining scripted path `r` in meters, capped at 1.5 |
//! | 6      | `r^2` |
//! | 7..=27 | Gaussian bumps `exp(-((r - c) / w)^2 / 2)`, `c = 0, 0.05, .., 1.0`, `w = 0.05` |
//!
//! The pooled anomaly head sees the same vector plus three entries: a
//! righting-goal flag `q`, fallen count times `1 - q`, and target-down times
//! `1 - q`.

use crate::agents::{decode, remaining_path, Verb};
use crate::world::{
    family_of_object, goal_from_label, subtask_done, Family, Observation, ScenarioName,
};
use crate::{Error, Result};

pub const RBF_CENTERS: usize = 21;
pub const RBF_WIDTH: f64 = 0.05;
pub const FEATURE_DIM: usize = 7 + RBF_CENTERS;
pub const POOLED_DIM: usize = FEATURE_DIM + 3;
const PATH_CAP: f64 = 1.5;

fn representative(family: Family) -> ScenarioName {
    match family {
        Family::Tableware => ScenarioName::Ordered,
        Family::Desk => ScenarioName::TidyDesk,
    }
}

/// Map raw observation features plus a goal label to the critic's inputs.
pub fn goal_features(raw: &[f64], goal_label: &str) -> Result<Vec<f64>> {
    let goal = goal_from_label(goal_label)
        .ok_or_else(|| Error::Training(format!("label {goal_label:?} is not in any vocabulary")))?;
    let family = family_of_object(&goal.object)
        .ok_or_else(|| Error::Training(format!("unknown object {}", goal.object)))?;
    let obs = Observation {
        scenario: representative(family),
        tick: 0,
        features: raw.to_vec(),
    };
    let world = decode(&obs)?;
    let obj = world
        .object(&goal.object)
        .ok_or_else(|| Error::Training(format!("unknown object {}", goal.object)))?;
    let flag = |b: bool| if b { 1.0 } else { 0.0 };
    let r = remaining_path(&world, &goal)?.min(PATH_CAP);
    let mut f = Vec::with_capacity(FEATURE_DIM);
    f.push(flag(subtask_done(&world, &goal)?));
    f.push(world.objects.iter().filter(|o| o.is_fallen()).count() as f64);
    f.push(flag(world.holder_of(&obj.id).is_some()));
    f.push(flag(obj.upright));
    f.push(flag(world.bag_open));
    f.push(r);
    f.push(r * r);
    for k in 0..RBF_CENTERS {
        let z = (r - k as f64 * 0.05) / RBF_WIDTH;
        f.push((-0.5 * z * z).exp());
    }
    Ok(f)
}

/// Inputs of the anomaly head, from the output of [`goal_features`].
pub fn pooled_features(goal_x: &[f64], goal_label: &str) -> Result<Vec<f64>> {
    let goal = goal_from_label(goal_label)
        .ok_or_else(|| Error::Training(format!("label {goal_label:?} is not in any vocabulary")))?;
    let q = if goal.verb == Verb::RightObject { 1.0 } else { 0.0 };
    let mut f = goal_x.to_vec();
    f.extend([q, goal_x[1] * (1.0 - q), (1.0 - goal_x[3]) * (1.0 - q)]);
    Ok(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{observe, scenario_init, ScenarioConfig};

    #[test]
    fn fixed_width_and_flags() {
        let w = scenario_init(&ScenarioConfig::preset(ScenarioName::Scattered, 1)).unwrap();
        let raw = observe(&w).features;
        let f = goal_features(&raw, "stack the large bowl on the plate").unwrap();
        assert_eq!(f.len(), FEATURE_DIM);
        assert_eq!(f[0], 0.0);
        assert_eq!(f[1], 0.0);
        assert!(f[5] > 0.0);
        assert!(goal_features(&raw, "juggle").is_err());
        let p = pooled_features(&f, "right the cup").unwrap();
        assert_eq!(p.len(), POOLED_DIM);
        assert_eq!(&p[FEATURE_DIM..], &[1.0, 0.0, 0.0]);
    }
}
