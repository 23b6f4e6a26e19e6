use std::fmt;

use serde::{Deserialize, Serialize};

use crate::world::{display_name, ObjectId, Side};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verb {
    PickAndPlace,
    Stack,
    OpenBag,
    RightObject,
    Handover,
    /// The raw global instruction, used by the single-system baseline.
    FollowInstruction,
}

/// Which of the two canonical renderings a brain emits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PromptStyle {
    #[default]
    Plain,
    Structured,
}

/// A semantic sub-goal. `text` is always re-derived from the other fields.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SubtaskGoal {
    pub verb: Verb,
    pub object: ObjectId,
    /// Support or container for transfer verbs.
    pub destination: Option<ObjectId>,
    pub side: Option<Side>,
    pub arm: Option<Side>,
    pub text: String,
}

impl SubtaskGoal {
    fn build(verb: Verb, object: &str, destination: Option<&str>) -> Self {
        let mut g = SubtaskGoal {
            verb,
            object: ObjectId::new(object),
            destination: destination.map(ObjectId::new),
            side: None,
            arm: None,
            text: String::new(),
        };
        g.text = g.render();
        g
    }

    pub fn pick_and_place(object: &str, destination: &str) -> Self {
        Self::build(Verb::PickAndPlace, object, Some(destination))
    }

    pub fn stack(object: &str, destination: &str) -> Self {
        Self::build(Verb::Stack, object, Some(destination))
    }

    pub fn open_bag(bag: &str) -> Self {
        Self::build(Verb::OpenBag, bag, None)
    }

    pub fn right_object(object: &str) -> Self {
        Self::build(Verb::RightObject, object, None)
    }

    /// Pass `object` to the `to` arm.
    pub fn handover(object: &str, to: Side) -> Self {
        Self::build(Verb::Handover, object, None).with_tokens(None, Some(to))
    }

    pub fn follow_instruction(instruction: &str) -> Self {
        SubtaskGoal {
            verb: Verb::FollowInstruction,
            object: ObjectId::new(""),
            destination: None,
            side: None,
            arm: None,
            text: instruction.to_string(),
        }
    }

    /// Set side/arm tokens and re-render.
    pub fn with_tokens(mut self, side: Option<Side>, arm: Option<Side>) -> Self {
        self.side = side;
        self.arm = arm;
        if self.verb != Verb::FollowInstruction {
            self.text = self.render();
        }
        self
    }

    /// Same goal with side/arm tokens stripped.
    pub fn plain(&self) -> Self {
        self.clone().with_tokens(None, None)
    }

    pub fn style(&self) -> PromptStyle {
        if self.side.is_some() || self.arm.is_some() {
            PromptStyle::Structured
        } else {
            PromptStyle::Plain
        }
    }

    /// Plain rendering; the key used for vocabularies and per-goal tables.
    pub fn plain_text(&self) -> String {
        match self.verb {
            Verb::FollowInstruction => self.text.clone(),
            _ => self.plain().text,
        }
    }

    fn render(&self) -> String {
        let obj = match self.side {
            Some(s) => format!("{s} {}", display_name(&self.object)),
            None => display_name(&self.object).to_string(),
        };
        let dest = self
            .destination
            .as_ref()
            .map(|d| display_name(d).to_string())
            .unwrap_or_default();
        let mut text = match self.verb {
            Verb::PickAndPlace => format!("pick and place the {obj}"),
            Verb::Stack => format!("stack the {obj} on the {dest}"),
            Verb::OpenBag => format!("open the {obj}"),
            Verb::RightObject => format!("right the {obj}"),
            Verb::Handover => format!("hand over the {obj}"),
            Verb::FollowInstruction => return self.text.clone(),
        };
        if let Some(arm) = self.arm {
            let prep = if self.verb == Verb::Handover { "to" } else { "with" };
            text.push_str(&format!(" {prep} {arm} arm"));
        }
        text
    }
}

impl fmt::Display for SubtaskGoal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plain_and_structured_renderings() {
        let g = SubtaskGoal::pick_and_place("cup", "bowl_small");
        assert_eq!(g.text, "pick and place the cup");
        let s = g.clone().with_tokens(Some(Side::Left), Some(Side::Left));
        assert_eq!(s.text, "pick and place the left cup with left arm");
        assert_eq!(s.plain_text(), g.text);
        assert_eq!(s.plain(), g);
        assert_eq!(
            SubtaskGoal::stack("bowl_small", "bowl_large").text,
            "stack the small bowl on the large bowl"
        );
        assert_eq!(SubtaskGoal::right_object("cup").text, "right the cup");
        assert_eq!(SubtaskGoal::open_bag("bag").text, "open the trash bag");
        assert_eq!(
            SubtaskGoal::handover("cup", Side::Left).text,
            "hand over the cup to left arm"
        );
    }

    #[test]
    fn text_is_a_function_of_fields() {
        let a = SubtaskGoal::stack("bowl_large", "plate").with_tokens(Some(Side::Right), None);
        let b = SubtaskGoal::stack("bowl_large", "plate").with_tokens(Some(Side::Right), None);
        assert_eq!(a, b);
        assert_eq!(a.text, "stack the right large bowl on the plate");
    }

    #[test]
    fn instruction_goal_keeps_text() {
        let g = SubtaskGoal::follow_instruction("tidy up");
        assert_eq!(g.text, "tidy up");
        assert_eq!(g.plain_text(), "tidy up");
        assert_eq!(g.clone().with_tokens(Some(Side::Left), None).text, "tidy up");
    }
}
