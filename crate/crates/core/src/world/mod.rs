//! Deterministic dual-arm tabletop world.
//!
//! The world is a point-kinematic abstraction: objects are poses plus a few
//! discrete flags, arms are end-effector points with a binary gripper. There
//! is no contact solver; grasping, stacking, bagging and falling are rules
//! applied at gripper transitions. All transitions are pure functions of
//! their inputs.

mod catalog;
mod observe;
mod predicates;
mod scenario;
mod step;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use self::catalog::{
    category_of, display_name, family_of_object, goal_from_label, inventory, script, vocabulary,
    Family,
};
pub use self::observe::{
    observe, FeatureLayout, Observation, ARM_STRIDE, FLICKER_RADIUS, OBJECT_STRIDE,
};
pub use self::predicates::{scenario_complete, scenario_progress, subtask_done};
pub use self::scenario::{scenario_init, Instruction, ScenarioConfig, ScenarioName};
pub use self::step::{inject_perturbations, reset_robot_state, step, DEFAULT_DISPLACEMENT};

pub type Vec3 = nalgebra::Vector3<f64>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub const BOTH: [Side; 2] = [Side::Left, Side::Right];

    pub fn index(self) -> usize {
        match self {
            Side::Left => 0,
            Side::Right => 1,
        }
    }

    pub fn other(self) -> Side {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
        }
    }

    /// Side of the workspace midline (x = 0) a point lies on.
    pub fn of_x(x: f64) -> Side {
        if x < 0.0 {
            Side::Left
        } else {
            Side::Right
        }
    }
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gripper {
    Open,
    Closed,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Category {
    Plate,
    BowlLarge,
    BowlSmall,
    Cup,
    Bottle,
    Tissue,
    Bag,
}

impl Category {
    /// End-effector height above the object base for a top grasp.
    pub fn grasp_height(self) -> f64 {
        match self {
            Category::Plate => 0.015,
            Category::BowlLarge => 0.05,
            Category::BowlSmall => 0.04,
            Category::Cup => 0.07,
            Category::Bottle => 0.12,
            Category::Tissue => 0.03,
            Category::Bag => 0.02,
        }
    }

    /// Height of the supporting surface above the object base when
    /// something is stacked on it.
    pub fn thickness(self) -> f64 {
        match self {
            Category::Plate => 0.02,
            Category::BowlLarge => 0.03,
            Category::BowlSmall => 0.03,
            Category::Cup => 0.08,
            Category::Bottle => 0.2,
            Category::Tissue => 0.04,
            Category::Bag => 0.0,
        }
    }

    /// Deformables have no upright/fallen distinction.
    pub fn is_deformable(self) -> bool {
        matches!(self, Category::Tissue | Category::Bag)
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Category::Plate => "plate",
            Category::BowlLarge => "bowl_large",
            Category::BowlSmall => "bowl_small",
            Category::Cup => "cup",
            Category::Bottle => "bottle",
            Category::Tissue => "tissue",
            Category::Bag => "bag",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ObjectId(String);

impl ObjectId {
    pub fn new(id: impl Into<String>) -> Self {
        ObjectId(id.into())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for ObjectId {
    fn from(s: &str) -> Self {
        ObjectId::new(s)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: ObjectId,
    pub category: Category,
    /// Base center in meters; z = 0 is the table surface.
    pub pose: Vec3,
    pub upright: bool,
    pub stacked_on: Option<ObjectId>,
    pub in_bag: bool,
}

impl ObjectSpec {
    pub fn grasp_point(&self) -> Vec3 {
        self.pose + Vec3::new(0.0, 0.0, self.category.grasp_height())
    }

    /// Low side contact used to tip a lying object back up.
    pub fn base_point(&self) -> Vec3 {
        self.pose + Vec3::new(0.0, 0.0, RIGHTING_HEIGHT)
    }

    pub fn top(&self) -> f64 {
        self.pose.z + self.category.thickness()
    }

    /// Rigid, lying on its side and not inside the bag.
    pub fn is_fallen(&self) -> bool {
        !self.upright && !self.category.is_deformable() && !self.in_bag
    }
}

/// End-effector height above the base at which closing the gripper on a
/// lying object rights it instead of grasping.
pub const RIGHTING_HEIGHT: f64 = 0.01;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmState {
    pub side: Side,
    pub ee_position: Vec3,
    pub gripper: Gripper,
    pub held: Option<ObjectId>,
    pub home_position: Vec3,
}

impl ArmState {
    pub fn at_home(side: Side) -> Self {
        let home = home_position(side);
        ArmState {
            side,
            ee_position: home,
            gripper: Gripper::Open,
            held: None,
            home_position: home,
        }
    }
}

pub fn home_position(side: Side) -> Vec3 {
    match side {
        Side::Left => Vec3::new(-0.32, -0.18, 0.22),
        Side::Right => Vec3::new(0.32, -0.18, 0.22),
    }
}

/// Kinematic constants. The defaults are the documented world contract.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldParams {
    /// Max end-effector distance to a grasp point for a grasp to register.
    pub grasp_radius: f64,
    /// Max end-effector travel per tick.
    pub max_step: f64,
    /// Releases with a gap at most this large land gently; higher ones fall.
    pub gentle_drop: f64,
    /// Horizontal tolerance for landing on a support below.
    pub place_tolerance: f64,
    /// Horizontal radius of the bag mouth.
    pub bag_radius: f64,
    /// Max release height above the table that still lands inside the bag.
    pub bag_drop_height: f64,
    /// Releasing the bag from at least this height shakes it open.
    pub bag_open_lift: f64,
    pub workspace_min: Vec3,
    pub workspace_max: Vec3,
    /// The left arm reaches x <= +limit, the right arm x >= -limit.
    pub reach_limit: f64,
}

impl Default for WorldParams {
    fn default() -> Self {
        WorldParams {
            grasp_radius: 0.03,
            max_step: 0.01,
            gentle_drop: 0.04,
            place_tolerance: 0.04,
            bag_radius: 0.07,
            bag_drop_height: 0.25,
            bag_open_lift: 0.08,
            workspace_min: Vec3::new(-0.5, -0.3, 0.0),
            workspace_max: Vec3::new(0.5, 0.4, 0.4),
            reach_limit: 0.15,
        }
    }
}

impl WorldParams {
    pub fn can_reach(&self, side: Side, point: &Vec3) -> bool {
        match side {
            Side::Left => point.x <= self.reach_limit,
            Side::Right => point.x >= -self.reach_limit,
        }
    }

    /// Clamp a point into the reachable box of one arm.
    pub fn clamp_to_reach(&self, side: Side, p: Vec3) -> Vec3 {
        let (mut lo, mut hi) = (self.workspace_min, self.workspace_max);
        match side {
            Side::Left => hi.x = hi.x.min(self.reach_limit),
            Side::Right => lo.x = lo.x.max(-self.reach_limit),
        }
        Vec3::new(
            p.x.clamp(lo.x, hi.x),
            p.y.clamp(lo.y, hi.y),
            p.z.clamp(lo.z, hi.z),
        )
    }
}

/// Optional seeded observation corruption. Both knobs default to off.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ObservationNoise {
    /// Std-dev of additive Gaussian noise on continuous position features.
    pub level: f64,
    /// Probability that an open bag reads as closed while an end-effector
    /// works near it (soft-body visual instability).
    pub flicker: f64,
}

/// Flags raised by the most recent transition.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "flag", rename_all = "snake_case")]
pub enum StepFlag {
    StepClamped { arm: Side },
    OutOfReach { arm: Side },
    Grasped { arm: Side, object: ObjectId },
    GraspMissed { arm: Side, object: ObjectId },
    GraspBlocked { arm: Side, object: ObjectId },
    Righted { arm: Side, object: ObjectId },
    HandedOver { to: Side, object: ObjectId },
    Placed { object: ObjectId, on: Option<ObjectId> },
    Bagged { object: ObjectId },
    Dropped { object: ObjectId },
    BagOpened,
    ResetHome { arm: Side },
    Perturbed { kind: PerturbationKind, object: ObjectId },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PerturbationKind {
    KnockOver,
    Displace,
    DropHeld,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationEvent {
    pub at_tick: u64,
    pub kind: PerturbationKind,
    pub target: ObjectId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub displacement: Option<Vec3>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum ActionKind {
    MoveDelta(Vec3),
    SetGripper(Gripper),
    Noop,
    ResetHome,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrimitiveAction {
    pub arm: Side,
    pub kind: ActionKind,
}

/// One control tick's worth of commands, one per arm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionPair {
    pub left: ActionKind,
    pub right: ActionKind,
}

impl ActionPair {
    pub const NOOP: ActionPair = ActionPair {
        left: ActionKind::Noop,
        right: ActionKind::Noop,
    };

    /// `kind` on `arm`, noop on the other.
    pub fn single(arm: Side, kind: ActionKind) -> Self {
        let mut pair = ActionPair::NOOP;
        *pair.kind_mut(arm) = kind;
        pair
    }

    pub fn kind(&self, arm: Side) -> ActionKind {
        match arm {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    pub fn kind_mut(&mut self, arm: Side) -> &mut ActionKind {
        match arm {
            Side::Left => &mut self.left,
            Side::Right => &mut self.right,
        }
    }

    pub fn action(&self, arm: Side) -> PrimitiveAction {
        PrimitiveAction {
            arm,
            kind: self.kind(arm),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub scenario: ScenarioName,
    pub objects: Vec<ObjectSpec>,
    pub arms: [ArmState; 2],
    pub tick: u64,
    pub rng_seed: u64,
    pub bag_open: bool,
    pub noise: ObservationNoise,
    pub params: WorldParams,
    pub events: Vec<StepFlag>,
}

impl WorldState {
    pub fn object(&self, id: &ObjectId) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| &o.id == id)
    }

    pub fn object_index(&self, id: &ObjectId) -> Option<usize> {
        self.objects.iter().position(|o| &o.id == id)
    }

    pub fn arm(&self, side: Side) -> &ArmState {
        &self.arms[side.index()]
    }

    pub fn holder_of(&self, id: &ObjectId) -> Option<Side> {
        Side::BOTH
            .into_iter()
            .find(|s| self.arms[s.index()].held.as_ref() == Some(id))
    }

    pub fn has_children(&self, id: &ObjectId) -> bool {
        self.objects
            .iter()
            .any(|o| o.stacked_on.as_ref() == Some(id))
    }

    /// Topmost object of the column resting on `id` (possibly `id` itself).
    pub fn column_top(&self, id: &ObjectId) -> Option<usize> {
        let mut top = self.object_index(id)?;
        // stacked_on is a forest, so this walk terminates within |objects|.
        for _ in 0..self.objects.len() {
            let cur = &self.objects[top].id;
            match self
                .objects
                .iter()
                .position(|o| o.stacked_on.as_ref() == Some(cur))
            {
                Some(next) => top = next,
                None => break,
            }
        }
        Some(top)
    }

    /// One line-delimited export record for this tick.
    pub fn record(&self) -> TrajectoryRecord<'_> {
        TrajectoryRecord {
            tick: self.tick,
            objects: &self.objects,
            arms: &self.arms,
            bag_open: self.bag_open,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TrajectoryRecord<'a> {
    pub tick: u64,
    pub objects: &'a [ObjectSpec],
    pub arms: &'a [ArmState; 2],
    pub bag_open: bool,
}
