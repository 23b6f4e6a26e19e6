use super::{KeySource, Keyframe, RawTrajectory};
use crate::world::Side;

/// One keyframe per arm at every frame whose gripper state differs from
/// the previous frame.
pub fn gripper_events(traj: &RawTrajectory) -> Vec<Keyframe> {
    let mut out = Vec::new();
    for (i, w) in traj.frames.windows(2).enumerate() {
        for arm in Side::BOTH {
            if w[0].closed(arm) != w[1].closed(arm) {
                out.push(Keyframe {
                    frame_index: i + 1,
                    source: KeySource::Gripper,
                    arm,
                });
            }
        }
    }
    out
}

/// Order by frame, then gripper before geometric, then left before right.
pub fn sort_keyframes(keyframes: &mut [Keyframe]) {
    keyframes.sort_by_key(|k| (k.frame_index, k.source, k.arm));
}

/// Greedy left-to-right scan keeping a keyframe when it lies at least
/// `delta_t` frames after the last kept one. The first keyframe is always
/// kept. Input must be sorted (see [`sort_keyframes`]), so at a shared index
/// the gripper keyframe is the one that survives.
pub fn proximity_filter(keyframes: &[Keyframe], delta_t: usize) -> Vec<Keyframe> {
    let mut out: Vec<Keyframe> = Vec::new();
    for k in keyframes {
        match out.last() {
            Some(last) if k.frame_index < last.frame_index + delta_t.max(1) => {}
            _ => out.push(*k),
        }
    }
    out
}
