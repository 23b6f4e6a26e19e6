//! Text formats.
//!
//! Raw trajectory, one frame per line, fields separated by ASCII whitespace:
//!
//! ```text
//! #trajectory id=<id>
//! <lx> <ly> <lz> <rx> <ry> <rz> <left_closed> <right_closed>
//! ```
//!
//! Positions are decimal floats (written in shortest round-trip form),
//! gripper flags are `0` (open) or `1` (closed). Lines starting with `#`
//! other than the header are comments; blank lines are skipped.
//!
//! Annotated episode:
//!
//! ```text
//! #annotated-episode v1 source=<id>
//! <start>\t<end>\t<anomaly 0|1>\t<label>
//! ```
//!
//! Frame bounds are inclusive. The label is the rest of the line after the
//! third tab and may contain spaces but not tabs or newlines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{AnnotatedEpisode, RawTrajectory, Segment, TrajectoryFrame};
use crate::world::Vec3;
use crate::{Error, Result};

pub const ANNOTATED_HEADER: &str = "#annotated-episode v1";
const TRAJECTORY_HEADER: &str = "#trajectory";

pub fn write_trajectory(traj: &RawTrajectory) -> String {
    let mut out = format!("{TRAJECTORY_HEADER} id={}\n", traj.id);
    for f in &traj.frames {
        let _ = writeln!(
            out,
            "{} {} {} {} {} {} {} {}",
            f.left.x,
            f.left.y,
            f.left.z,
            f.right.x,
            f.right.y,
            f.right.z,
            u8::from(f.left_closed),
            u8::from(f.right_closed)
        );
    }
    out
}

fn flag(s: &str, line: usize) -> Result<bool> {
    match s {
        "0" => Ok(false),
        "1" => Ok(true),
        _ => Err(Error::parse(format!("line {line}: gripper flag {s:?} is not 0 or 1"))),
    }
}

/// Parse a trajectory; `fallback_id` names it when the header is absent.
pub fn parse_trajectory(text: &str, fallback_id: &str) -> Result<RawTrajectory> {
    let mut id = fallback_id.to_string();
    let mut frames = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.trim();
        let ln = n + 1;
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(TRAJECTORY_HEADER) {
            if let Some(v) = rest.trim().strip_prefix("id=") {
                id = v.to_string();
            }
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_ascii_whitespace().collect();
        if fields.len() != 8 {
            return Err(Error::parse(format!(
                "line {ln}: expected 8 fields, found {}",
                fields.len()
            )));
        }
        let mut xs = [0.0; 6];
        for (x, s) in xs.iter_mut().zip(&fields[..6]) {
            *x = s
                .parse()
                .map_err(|_| Error::parse(format!("line {ln}: bad number {s:?}")))?;
        }
        frames.push(TrajectoryFrame {
            left: Vec3::new(xs[0], xs[1], xs[2]),
            right: Vec3::new(xs[3], xs[4], xs[5]),
            left_closed: flag(fields[6], ln)?,
            right_closed: flag(fields[7], ln)?,
        });
    }
    let t = RawTrajectory {
        id,
        frames,
        frame_rate_hz: 20.0,
    };
    t.validate()?;
    Ok(t)
}

pub fn write_annotated(ep: &AnnotatedEpisode) -> String {
    let mut out = format!("{ANNOTATED_HEADER} source={}\n", ep.source);
    for s in &ep.segments {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            s.start,
            s.end,
            u8::from(s.anomaly),
            s.label
        );
    }
    out
}

pub fn parse_annotated(text: &str) -> Result<AnnotatedEpisode> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse("empty annotated episode"))?;
    let source = header
        .strip_prefix(ANNOTATED_HEADER)
        .and_then(|r| r.trim().strip_prefix("source="))
        .ok_or_else(|| Error::parse(format!("bad header {header:?}")))?
        .to_string();
    let mut segments = Vec::new();
    for (n, line) in lines.enumerate() {
        let ln = n + 2;
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.splitn(4, '\t').collect();
        if parts.len() != 4 {
            return Err(Error::parse(format!("line {ln}: expected 4 tab-separated fields")));
        }
        let num = |s: &str| {
            s.parse::<usize>()
                .map_err(|_| Error::parse(format!("line {ln}: bad frame index {s:?}")))
        };
        segments.push(Segment {
            start: num(parts[0])?,
            end: num(parts[1])?,
            anomaly: flag(parts[2], ln)?,
            label: parts[3].to_string(),
        });
    }
    let ep = AnnotatedEpisode { source, segments };
    ep.validate(None)?;
    Ok(ep)
}

pub fn read_trajectory(path: &Path) -> Result<RawTrajectory> {
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    parse_trajectory(&fs::read_to_string(path)?, &stem)
}

pub fn read_annotated(path: &Path) -> Result<AnnotatedEpisode> {
    parse_annotated(&fs::read_to_string(path)?)
}
