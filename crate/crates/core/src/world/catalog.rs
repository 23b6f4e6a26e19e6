//! Fixed object inventories and subtask vocabularies per task family.

use serde::{Deserialize, Serialize};

use super::{Category, ObjectId};
use crate::agents::SubtaskGoal;

/// Scenarios that share an inventory and a subtask script.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    /// plate, bowl_large, bowl_small, cup
    Tableware,
    /// bag, bottle_1, bottle_2, tissue
    Desk,
}

const TABLEWARE: [(&str, Category); 4] = [
    ("plate", Category::Plate),
    ("bowl_large", Category::BowlLarge),
    ("bowl_small", Category::BowlSmall),
    ("cup", Category::Cup),
];

const DESK: [(&str, Category); 4] = [
    ("bag", Category::Bag),
    ("bottle_1", Category::Bottle),
    ("bottle_2", Category::Bottle),
    ("tissue", Category::Tissue),
];

pub fn inventory(family: Family) -> Vec<(ObjectId, Category)> {
    let table: &[(&str, Category)] = match family {
        Family::Tableware => &TABLEWARE,
        Family::Desk => &DESK,
    };
    table
        .iter()
        .map(|&(id, cat)| (ObjectId::new(id), cat))
        .collect()
}

pub fn family_of_object(id: &ObjectId) -> Option<Family> {
    if TABLEWARE.iter().any(|(i, _)| *i == id.as_str()) {
        Some(Family::Tableware)
    } else if DESK.iter().any(|(i, _)| *i == id.as_str()) {
        Some(Family::Desk)
    } else {
        None
    }
}

pub fn category_of(id: &ObjectId) -> Option<Category> {
    TABLEWARE
        .iter()
        .chain(DESK.iter())
        .find(|(i, _)| *i == id.as_str())
        .map(|&(_, c)| c)
}

/// Human-facing name used in goal texts.
pub fn display_name(id: &ObjectId) -> &str {
    match id.as_str() {
        "plate" => "plate",
        "bowl_large" => "large bowl",
        "bowl_small" => "small bowl",
        "cup" => "cup",
        "bag" => "trash bag",
        "bottle_1" => "first bottle",
        "bottle_2" => "second bottle",
        "tissue" => "tissue",
        other => other,
    }
}

/// Ordered subtask script whose conjunction is episode success.
pub fn script(family: Family) -> Vec<SubtaskGoal> {
    match family {
        Family::Tableware => vec![
            SubtaskGoal::stack("bowl_large", "plate"),
            SubtaskGoal::stack("bowl_small", "bowl_large"),
            SubtaskGoal::pick_and_place("cup", "bowl_small"),
        ],
        Family::Desk => vec![
            SubtaskGoal::open_bag("bag"),
            SubtaskGoal::pick_and_place("bottle_1", "bag"),
            SubtaskGoal::pick_and_place("bottle_2", "bag"),
            SubtaskGoal::pick_and_place("tissue", "bag"),
        ],
    }
}

/// Closed label vocabulary: the script plus recovery goals for every rigid
/// object.
pub fn vocabulary(family: Family) -> Vec<SubtaskGoal> {
    let mut v = script(family);
    for (id, cat) in inventory(family) {
        if !cat.is_deformable() {
            v.push(SubtaskGoal::right_object(id.as_str()));
        }
    }
    v
}

/// Look up a vocabulary goal by its plain text across all families.
pub fn goal_from_label(label: &str) -> Option<SubtaskGoal> {
    [Family::Tableware, Family::Desk]
        .into_iter()
        .flat_map(vocabulary)
        .find(|g| g.plain_text() == label)
}
