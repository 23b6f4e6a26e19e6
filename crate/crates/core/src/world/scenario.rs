//! Scenario catalog, seeded layouts and the key-value scenario file.
//!
//! Scenario file schema (TOML, all keys but `name` optional):
//!
//! ```text
//! name = "fallen"          # ordered | scattered | left_cup | fallen | tidy_desk
//! seed = 7                 # integer, default 0
//! noise_level = 0.0        # std-dev of position noise, meters
//! flicker = 0.0            # soft-body flicker probability
//! preset_perturbations = true   # keep the scenario's built-in events
//!
//! [[perturbations]]
//! at_tick = 40
//! kind = "knock_over"      # knock_over | displace | drop_held
//! target = "cup"
//! displacement = [0.05, 0.0, 0.0]   # displace only
//! ```
//!
//! Layout per scenario (base x, y in meters before a seeded +-1 cm jitter;
//! all objects start upright on the table):
//!
//! | scenario  | layout |
//! |-----------|--------|
//! | ordered   | plate -0.12, bowl_large 0.00, bowl_small 0.12, cup 0.26 (left to right, y = 0.10) |
//! | scattered | plate (-0.12, 0.10), bowl_small (0.00, 0.16), bowl_large (0.14, 0.04), cup (0.27, 0.12) |
//! | left_cup  | plate 0.00, bowl_large 0.12, bowl_small 0.24, cup -0.28 (y = 0.10) |
//! | fallen    | as ordered, plus the cup is knocked over at a seeded tick in [30, 120] |
//! | tidy_desk | bag (0.00, 0.12), bottle_1 (0.22, 0.05), bottle_2 (-0.22, 0.05), tissue (0.12, 0.22); flicker 0.3 |

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::catalog::{inventory, Family};
use super::{
    ArmState, ObjectId, ObjectSpec, ObservationNoise, PerturbationEvent, PerturbationKind, Side,
    Vec3, WorldParams, WorldState,
};
use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioName {
    Ordered,
    Scattered,
    LeftCup,
    Fallen,
    TidyDesk,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 5] = [
        ScenarioName::Ordered,
        ScenarioName::Scattered,
        ScenarioName::LeftCup,
        ScenarioName::Fallen,
        ScenarioName::TidyDesk,
    ];

    pub const TABLEWARE: [ScenarioName; 4] = [
        ScenarioName::Ordered,
        ScenarioName::Scattered,
        ScenarioName::LeftCup,
        ScenarioName::Fallen,
    ];

    pub fn family(self) -> Family {
        match self {
            ScenarioName::TidyDesk => Family::Desk,
            _ => Family::Tableware,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::Ordered => "ordered",
            ScenarioName::Scattered => "scattered",
            ScenarioName::LeftCup => "left_cup",
            ScenarioName::Fallen => "fallen",
            ScenarioName::TidyDesk => "tidy_desk",
        }
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| Error::config(format!("unknown scenario name {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub name: ScenarioName,
    pub seed: u64,
    pub perturbations: Vec<PerturbationEvent>,
    pub noise_level: f64,
    pub flicker: f64,
}

impl ScenarioConfig {
    /// The scenario with its built-in perturbations and noise settings.
    pub fn preset(name: ScenarioName, seed: u64) -> Self {
        let mut perturbations = Vec::new();
        if name == ScenarioName::Fallen {
            let mut rng = seed::rng(&[seed, 0xfa11]);
            perturbations.push(PerturbationEvent {
                at_tick: rng.random_range(30..=120),
                kind: PerturbationKind::KnockOver,
                target: ObjectId::new("cup"),
                displacement: None,
            });
        }
        let flicker = if name == ScenarioName::TidyDesk { 0.3 } else { 0.0 };
        ScenarioConfig {
            name,
            seed,
            perturbations,
            noise_level: 0.0,
            flicker,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Raw {
            name: String,
            #[serde(default)]
            seed: u64,
            noise_level: Option<f64>,
            flicker: Option<f64>,
            #[serde(default = "yes")]
            preset_perturbations: bool,
            #[serde(default)]
            perturbations: Vec<PerturbationEvent>,
        }
        fn yes() -> bool {
            true
        }

        let raw: Raw = toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        let name: ScenarioName = raw.name.parse()?;
        let mut cfg = ScenarioConfig::preset(name, raw.seed);
        if !raw.preset_perturbations {
            cfg.perturbations.clear();
        }
        cfg.perturbations.extend(raw.perturbations);
        if let Some(level) = raw.noise_level {
            cfg.noise_level = level;
        }
        if let Some(flicker) = raw.flicker {
            cfg.flicker = flicker;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.noise_level.is_nan() || self.noise_level < 0.0 {
            return Err(Error::config("noise_level must be >= 0"));
        }
        if !(0.0..=1.0).contains(&self.flicker) {
            return Err(Error::config("flicker must lie in [0, 1]"));
        }
        let inv = inventory(self.name.family());
        for p in &self.perturbations {
            if !inv.iter().any(|(id, _)| id == &p.target) {
                return Err(Error::config(format!(
                    "perturbation target {} is not part of scenario {}",
                    p.target, self.name
                )));
            }
        }
        Ok(())
    }
}

/// Global user instruction for a scenario.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instruction {
    pub text: String,
    pub scenario: ScenarioName,
}

impl Instruction {
    pub fn for_scenario(scenario: ScenarioName) -> Self {
        let text = match scenario.family() {
            Family::Tableware => {
                "arrange the tableware: stack the plate and bowls by size and put the cup on top"
            }
            Family::Desk => {
                "tidy up the desk: open the trash bag and put the bottles and the tissue inside"
            }
        };
        Instruction {
            text: text.to_string(),
            scenario,
        }
    }
}

fn base_layout(name: ScenarioName) -> Vec<(f64, f64)> {
    // Coordinates follow the inventory order of the scenario's family.
    match name {
        ScenarioName::Ordered | ScenarioName::Fallen => {
            vec![(-0.12, 0.10), (0.00, 0.10), (0.12, 0.10), (0.26, 0.10)]
        }
        ScenarioName::Scattered => vec![(-0.12, 0.10), (0.14, 0.04), (0.00, 0.16), (0.27, 0.12)],
        ScenarioName::LeftCup => vec![(0.00, 0.10), (0.12, 0.10), (0.24, 0.10), (-0.28, 0.10)],
        ScenarioName::TidyDesk => vec![(0.00, 0.12), (0.22, 0.05), (-0.22, 0.05), (0.12, 0.22)],
    }
}

pub const LAYOUT_JITTER: f64 = 0.01;

pub fn scenario_init(config: &ScenarioConfig) -> Result<WorldState> {
    config.validate()?;
    let mut rng = seed::rng(&[config.seed, 0x1a70]);
    let objects = inventory(config.name.family())
        .into_iter()
        .zip(base_layout(config.name))
        .map(|((id, category), (x, y))| {
            let jx = rng.random_range(-LAYOUT_JITTER..=LAYOUT_JITTER);
            let jy = rng.random_range(-LAYOUT_JITTER..=LAYOUT_JITTER);
            ObjectSpec {
                id,
                category,
                pose: Vec3::new(x + jx, y + jy, 0.0),
                upright: true,
                stacked_on: None,
                in_bag: false,
            }
        })
        .collect();
    Ok(WorldState {
        scenario: config.name,
        objects,
        arms: [ArmState::at_home(Side::Left), ArmState::at_home(Side::Right)],
        tick: 0,
        rng_seed: config.seed,
        bag_open: false,
        noise: ObservationNoise {
            level: config.noise_level,
            flicker: config.flicker,
        },
        params: WorldParams::default(),
        events: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn init(name: ScenarioName, seed: u64) -> WorldState {
        scenario_init(&ScenarioConfig::preset(name, seed)).unwrap()
    }

    #[test]
    fn ordered_is_sorted_left_to_right_and_upright() {
        let w = init(ScenarioName::Ordered, 7);
        let xs: Vec<f64> = w.objects.iter().map(|o| o.pose.x).collect();
        assert!(xs.windows(2).all(|p| p[0] < p[1]), "{xs:?}");
        let cats: Vec<&str> = w.objects.iter().map(|o| o.category.as_str()).collect();
        assert_eq!(cats, ["plate", "bowl_large", "bowl_small", "cup"]);
        assert!(w.objects.iter().all(|o| o.upright));
        assert_eq!(w.tick, 0);
        for arm in &w.arms {
            assert_eq!(arm.ee_position, arm.home_position);
        }
    }

    #[test]
    fn same_seed_same_world() {
        assert_eq!(init(ScenarioName::Ordered, 7), init(ScenarioName::Ordered, 7));
        assert_ne!(init(ScenarioName::Ordered, 7), init(ScenarioName::Ordered, 8));
    }

    #[test]
    fn left_cup_is_left_of_midline() {
        for seed in [3, 4, 5, 99] {
            let w = init(ScenarioName::LeftCup, seed);
            assert!(w.object(&"cup".into()).unwrap().pose.x < 0.0);
        }
    }

    #[test]
    fn unknown_name_is_config_error() {
        assert!(matches!("kitchen".parse::<ScenarioName>(), Err(Error::Config(_))));
        assert!(matches!(
            ScenarioConfig::from_toml_str("name = \"kitchen\""),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn fallen_preset_knocks_the_cup() {
        let cfg = ScenarioConfig::preset(ScenarioName::Fallen, 11);
        assert_eq!(cfg.perturbations.len(), 1);
        let p = &cfg.perturbations[0];
        assert_eq!(p.kind, PerturbationKind::KnockOver);
        assert!((30..=120).contains(&p.at_tick));
    }

    #[test]
    fn parses_scenario_file() {
        let text = r#"
            name = "fallen"
            seed = 7
            preset_perturbations = false

            [[perturbations]]
            at_tick = 40
            kind = "knock_over"
            target = "cup"

            [[perturbations]]
            at_tick = 90
            kind = "displace"
            target = "plate"
            displacement = [0.05, 0.0, 0.0]
        "#;
        let cfg = ScenarioConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.name, ScenarioName::Fallen);
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.perturbations.len(), 2);
        assert_eq!(cfg.perturbations[0].at_tick, 40);
        assert_eq!(cfg.perturbations[1].displacement, Some(Vec3::new(0.05, 0.0, 0.0)));
    }

    #[test]
    fn rejects_foreign_perturbation_target() {
        let text = "name = \"ordered\"\n[[perturbations]]\nat_tick = 1\nkind = \"knock_over\"\ntarget = \"bottle_1\"\n";
        assert!(matches!(ScenarioConfig::from_toml_str(text), Err(Error::Config(_))));
    }
}
