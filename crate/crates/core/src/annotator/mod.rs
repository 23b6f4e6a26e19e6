//! Subtask segmentation of raw end-effector trajectories.
//!
//! Kinematic keyframes (per-arm RDP plus gripper toggles) are thinned by a
//! greedy temporal filter, each span between kept keyframes is labeled at
//! its midpoint by a [`Retriever`], and equal neighbours are merged.

mod io;
mod keyframes;
mod pipeline;
mod rdp;
mod retriever;
pub mod synthetic;

use serde::{Deserialize, Serialize};

pub use self::io::{
    parse_annotated, parse_trajectory, read_annotated, read_trajectory, write_annotated,
    write_trajectory, ANNOTATED_HEADER,
};
pub use self::keyframes::{gripper_events, proximity_filter, sort_keyframes};
pub use self::pipeline::{annotate, boundary_recall, candidate_keyframes};
pub use self::rdp::{perpendicular_distance, rdp_keyframes};
pub use self::retriever::{NoisyRetriever, OracleRetriever, Retrieval, Retriever};

use crate::world::{Side, Vec3};
use crate::{Error, Result};

/// Default RDP tolerance in meters.
pub const DEFAULT_EPSILON: f64 = 0.02;
/// Default minimum spacing between kept keyframes, in frames.
pub const DEFAULT_DELTA_T: usize = 30;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryFrame {
    pub left: Vec3,
    pub right: Vec3,
    pub left_closed: bool,
    pub right_closed: bool,
}

impl TrajectoryFrame {
    pub fn position(&self, side: Side) -> Vec3 {
        match side {
            Side::Left => self.left,
            Side::Right => self.right,
        }
    }

    pub fn closed(&self, side: Side) -> bool {
        match side {
            Side::Left => self.left_closed,
            Side::Right => self.right_closed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RawTrajectory {
    pub id: String,
    pub frames: Vec<TrajectoryFrame>,
    /// Informational only.
    pub frame_rate_hz: f64,
}

impl RawTrajectory {
    pub fn new(id: impl Into<String>, frames: Vec<TrajectoryFrame>) -> Result<Self> {
        let t = RawTrajectory {
            id: id.into(),
            frames,
            frame_rate_hz: 20.0,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames.len() < 2 {
            return Err(Error::Annotation(format!(
                "trajectory {} has {} frames, needs at least 2",
                self.id,
                self.frames.len()
            )));
        }
        let finite = self
            .frames
            .iter()
            .all(|f| f.left.iter().chain(f.right.iter()).all(|v| v.is_finite()));
        if !finite {
            return Err(Error::Annotation(format!(
                "trajectory {} has non-finite positions",
                self.id
            )));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn positions(&self, side: Side) -> Vec<Vec3> {
        self.frames.iter().map(|f| f.position(side)).collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KeySource {
    // Declared first so gripper keyframes sort ahead at equal indices.
    Gripper,
    Geometric,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Keyframe {
    pub frame_index: usize,
    pub source: KeySource,
    pub arm: Side,
}

/// Inclusive frame range with one label.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segment {
    pub start: usize,
    pub end: usize,
    pub label: String,
    pub anomaly: bool,
}

impl Segment {
    /// Number of frames covered.
    pub fn frames(&self) -> usize {
        self.end - self.start + 1
    }

    pub fn contains(&self, frame: usize) -> bool {
        (self.start..=self.end).contains(&frame)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedEpisode {
    pub source: String,
    pub segments: Vec<Segment>,
}

impl AnnotatedEpisode {
    /// Segments start at 0, tile the frames without gaps, end at
    /// `last_frame` when given, and neighbours carry different labels.
    pub fn validate(&self, last_frame: Option<usize>) -> Result<()> {
        let bad = |m: String| Err(Error::Annotation(format!("episode {}: {m}", self.source)));
        let Some(first) = self.segments.first() else {
            return bad("no segments".into());
        };
        if first.start != 0 {
            return bad(format!("first segment starts at {}", first.start));
        }
        for s in &self.segments {
            if s.end < s.start {
                return bad(format!("segment {}..{} is reversed", s.start, s.end));
            }
            if s.label.is_empty() {
                return bad(format!("segment {}..{} has no label", s.start, s.end));
            }
        }
        for w in self.segments.windows(2) {
            if w[1].start != w[0].end + 1 {
                return bad(format!("gap or overlap at frame {}", w[1].start));
            }
            if w[1].label == w[0].label {
                return bad(format!("repeated label {:?} at frame {}", w[1].label, w[1].start));
            }
        }
        if let Some(last) = last_frame {
            let end = self.segments.last().map(|s| s.end);
            if end != Some(last) {
                return bad(format!("ends at {end:?}, expected {last}"));
            }
        }
        Ok(())
    }

    pub fn last_frame(&self) -> Option<usize> {
        self.segments.last().map(|s| s.end)
    }

    /// Start frames of every segment after the first.
    pub fn boundaries(&self) -> Vec<usize> {
        self.segments.iter().skip(1).map(|s| s.start).collect()
    }

    pub fn segment_at(&self, frame: usize) -> Option<&Segment> {
        self.segments.iter().find(|s| s.contains(frame))
    }
}
