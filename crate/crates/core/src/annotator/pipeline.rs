use super::{
    gripper_events, proximity_filter, rdp_keyframes, sort_keyframes, AnnotatedEpisode, KeySource,
    Keyframe, RawTrajectory, Retriever, Segment,
};
use crate::world::Side;
use crate::Result;

/// Sorted union of per-arm RDP keyframes and gripper toggles.
pub fn candidate_keyframes(traj: &RawTrajectory, epsilon: f64) -> Result<Vec<Keyframe>> {
    traj.validate()?;
    let mut all = gripper_events(traj);
    for arm in Side::BOTH {
        for i in rdp_keyframes(&traj.positions(arm), epsilon)? {
            all.push(Keyframe {
                frame_index: i,
                source: KeySource::Geometric,
                arm,
            });
        }
    }
    sort_keyframes(&mut all);
    Ok(all)
}

/// Segment a trajectory into contiguous labeled subtasks.
pub fn annotate(
    traj: &RawTrajectory,
    retriever: &dyn Retriever,
    epsilon: f64,
    delta_t: usize,
) -> Result<AnnotatedEpisode> {
    let last = traj.len() - 1;
    let kept = proximity_filter(&candidate_keyframes(traj, epsilon)?, delta_t);
    let mut starts: Vec<usize> = kept
        .iter()
        .map(|k| k.frame_index)
        .filter(|&i| i < last)
        .collect();
    starts.dedup();
    if starts.first() != Some(&0) {
        starts.insert(0, 0);
    }

    let mut segments: Vec<Segment> = Vec::new();
    for (k, &start) in starts.iter().enumerate() {
        let end = starts.get(k + 1).map_or(last, |n| n - 1);
        let hit = retriever.retrieve(start + (end - start) / 2, traj)?;
        match segments.last_mut() {
            Some(prev) if prev.label == hit.label => {
                prev.end = end;
                prev.anomaly |= hit.anomalous;
            }
            _ => segments.push(Segment {
                start,
                end,
                label: hit.label,
                anomaly: hit.anomalous,
            }),
        }
    }
    let ep = AnnotatedEpisode {
        source: traj.id.clone(),
        segments,
    };
    ep.validate(Some(last))?;
    Ok(ep)
}

/// Fraction of true boundaries matched by a recovered boundary within
/// `tolerance` frames. `None` when there are no true boundaries.
pub fn boundary_recall(truth: &[usize], found: &[usize], tolerance: usize) -> Option<f64> {
    if truth.is_empty() {
        return None;
    }
    let hit = truth
        .iter()
        .filter(|&&t| found.iter().any(|&f| f.abs_diff(t) <= tolerance))
        .count();
    Some(hit as f64 / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::annotator::synthetic::{generate, SyntheticConfig};
    use crate::annotator::{NoisyRetriever, OracleRetriever, TrajectoryFrame};
    use crate::world::Vec3;

    #[test]
    fn single_segment_covers_everything() {
        let frames: Vec<TrajectoryFrame> = (0..40)
            .map(|i| TrajectoryFrame {
                left: Vec3::new(i as f64 * 0.01, 0.0, 0.0),
                right: Vec3::zeros(),
                left_closed: false,
                right_closed: false,
            })
            .collect();
        let t = RawTrajectory::new("one", frames).unwrap();
        let truth = vec![Segment {
            start: 0,
            end: 39,
            label: "wipe the table".into(),
            anomaly: false,
        }];
        let ep = annotate(&t, &OracleRetriever::new(truth.clone(), None), 0.02, 30).unwrap();
        assert_eq!(ep.segments, truth);
    }

    #[test]
    fn recovers_planted_segments() {
        for seed in 0..20 {
            let s = generate(&SyntheticConfig::default(), seed);
            let r = OracleRetriever::new(s.truth.clone(), None);
            let ep = annotate(&s.trajectory, &r, 0.02, 30).unwrap();
            let labels: Vec<&str> = ep.segments.iter().map(|x| x.label.as_str()).collect();
            let want: Vec<&str> = s.truth.iter().map(|x| x.label.as_str()).collect();
            assert_eq!(labels, want, "seed {seed}");
            let truth_b: Vec<usize> = s.truth.iter().skip(1).map(|x| x.start).collect();
            for b in ep.boundaries() {
                assert!(truth_b.iter().any(|t| t.abs_diff(b) <= 30), "seed {seed}: {b}");
            }
        }
    }

    #[test]
    fn noisy_labels_still_form_valid_episodes() {
        for seed in 0..20 {
            let s = generate(&SyntheticConfig::default(), seed);
            let r = NoisyRetriever {
                inner: OracleRetriever::new(s.truth.clone(), None),
                rho: 0.2,
                seed,
            };
            let ep = annotate(&s.trajectory, &r, 0.02, 30).unwrap();
            ep.validate(Some(s.trajectory.len() - 1)).unwrap();
        }
    }

    #[test]
    fn recall_helper() {
        assert_eq!(boundary_recall(&[], &[3], 2), None);
        assert_eq!(boundary_recall(&[10, 50], &[12, 90], 5), Some(0.5));
    }
}
