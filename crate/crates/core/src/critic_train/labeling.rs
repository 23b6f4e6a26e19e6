//! Per-frame training targets from annotated episodes.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::value::{quantize, value_target, ValueToken};
use crate::annotator::{AnnotatedEpisode, Segment};
use crate::{Error, Result};

pub const DEFAULT_ANOMALY_WINDOW: usize = 20;

/// One supervised example. `goal` is the plain text of the active subtask.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledFrame {
    pub features: Vec<f64>,
    pub goal: String,
    pub target: ValueToken,
    pub source_episode: String,
    pub frame_index: usize,
}

/// Robust per-label maximum segment length, in frames.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LmaxTable(pub BTreeMap<String, u64>);

impl LmaxTable {
    pub fn get(&self, label: &str) -> Option<u64> {
        self.0.get(label).copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Segment length `L = end - start`: the frame offset of its last frame.
pub fn segment_length(s: &Segment) -> u64 {
    (s.end - s.start) as u64
}

/// Nearest-rank 90th percentile: the `ceil(0.9 n)`-th smallest value.
pub fn nearest_rank_p90(values: &[u64]) -> Option<u64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_unstable();
    let rank = (9 * v.len()).div_ceil(10);
    Some(v[rank - 1])
}

/// Per-label p90 over nominal segments. A label seen only in anomalous
/// segments falls back to all of its segments. Entries are at least 1.
pub fn compute_lmax(corpus: &[AnnotatedEpisode]) -> Result<LmaxTable> {
    if corpus.iter().all(|e| e.segments.is_empty()) {
        return Err(Error::Labeling("empty corpus".into()));
    }
    let mut nominal: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    let mut all: BTreeMap<&str, Vec<u64>> = BTreeMap::new();
    for s in corpus.iter().flat_map(|e| &e.segments) {
        all.entry(&s.label).or_default().push(segment_length(s));
        if !s.anomaly {
            nominal.entry(&s.label).or_default().push(segment_length(s));
        }
    }
    let table = all
        .iter()
        .map(|(label, lens)| {
            let pool = nominal.get(label).unwrap_or(lens);
            let p = nearest_rank_p90(pool).expect("non-empty by construction");
            (label.to_string(), p.max(1))
        })
        .collect();
    Ok(LmaxTable(table))
}

/// Target token for every frame of `episode`, in frame order.
///
/// Anomalous segments get the anomaly token on their last
/// `min(window, frames)` frames and nominal value targets before that.
pub fn label_targets(
    episode: &AnnotatedEpisode,
    lmax: &LmaxTable,
    window: usize,
) -> Result<Vec<(usize, String, ValueToken)>> {
    if window == 0 {
        return Err(Error::Labeling("anomaly window must be >= 1".into()));
    }
    let mut out = Vec::new();
    for s in &episode.segments {
        let lm = lmax
            .get(&s.label)
            .ok_or_else(|| Error::Labeling(format!("no L_max entry for {:?}", s.label)))?;
        let len = segment_length(s);
        let n = s.frames();
        let flagged_from = if s.anomaly { n - window.min(n) } else { n };
        for t in 0..n {
            let target = if t >= flagged_from {
                ValueToken::Anomaly
            } else {
                ValueToken::Progress(quantize(value_target(t as u64, len, lm)?)?)
            };
            out.push((s.start + t, s.label.clone(), target));
        }
    }
    Ok(out)
}

/// Attach per-frame features to the targets of `episode`.
pub fn label_episode(
    episode: &AnnotatedEpisode,
    features: &[Vec<f64>],
    lmax: &LmaxTable,
    window: usize,
) -> Result<Vec<LabeledFrame>> {
    let targets = label_targets(episode, lmax, window)?;
    if let Some((last, _, _)) = targets.last() {
        if *last >= features.len() {
            return Err(Error::Labeling(format!(
                "episode {} covers frame {last} but only {} feature rows",
                episode.source,
                features.len()
            )));
        }
    }
    Ok(targets
        .into_iter()
        .map(|(frame, goal, target)| LabeledFrame {
            features: features[frame].clone(),
            goal,
            target,
            source_episode: episode.source.clone(),
            frame_index: frame,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(start: usize, end: usize, label: &str, anomaly: bool) -> Segment {
        Segment {
            start,
            end,
            label: label.into(),
            anomaly,
        }
    }

    fn ep(segments: Vec<Segment>) -> AnnotatedEpisode {
        AnnotatedEpisode {
            source: "e".into(),
            segments,
        }
    }

    #[test]
    fn p90_examples() {
        assert_eq!(nearest_rank_p90(&[10]), Some(10));
        assert_eq!(nearest_rank_p90(&(1..=10).collect::<Vec<_>>()), Some(9));
        assert_eq!(nearest_rank_p90(&[]), None);
    }

    #[test]
    fn p90_matches_enumeration() {
        // Smallest v with at least 90% of samples <= v.
        for n in 1..60u64 {
            let vals: Vec<u64> = (0..n).map(|i| (i * 37 + 11) % 101).collect();
            let mut sorted = vals.clone();
            sorted.sort();
            let want = *sorted
                .iter()
                .find(|&&v| 10 * sorted.iter().filter(|&&x| x <= v).count() as u64 >= 9 * n)
                .unwrap();
            assert_eq!(nearest_rank_p90(&vals), Some(want), "n={n}");
        }
    }

    #[test]
    fn lmax_per_label_and_order_invariant() {
        let a = ep(vec![seg(0, 10, "x", false), seg(11, 30, "y", false)]);
        let b = ep(vec![seg(0, 4, "x", false), seg(5, 5, "y", true)]);
        let t = compute_lmax(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(t.get("x"), Some(10));
        assert_eq!(t.get("y"), Some(19));
        assert_eq!(compute_lmax(&[b, a]).unwrap(), t);
        assert!(compute_lmax(&[]).is_err());
    }

    #[test]
    fn anomaly_only_label_falls_back_to_all_segments() {
        let t = compute_lmax(&[ep(vec![seg(0, 7, "z", true)])]).unwrap();
        assert_eq!(t.get("z"), Some(7));
    }

    #[test]
    fn nominal_ramp() {
        let e = ep(vec![seg(0, 10, "x", false)]);
        let lmax = LmaxTable([("x".to_string(), 10)].into());
        let bins: Vec<u8> = label_targets(&e, &lmax, 20)
            .unwrap()
            .iter()
            .map(|(_, _, t)| t.bin().unwrap().get())
            .collect();
        assert_eq!(bins, (0..=10).map(|i| i * 10).collect::<Vec<u8>>());
    }

    #[test]
    fn anomaly_window_counts() {
        for (n, expect_from) in [(50usize, 30usize), (5, 0), (20, 0)] {
            let e = ep(vec![seg(0, n - 1, "x", true)]);
            let lmax = LmaxTable([("x".to_string(), 40)].into());
            let t = label_targets(&e, &lmax, 20).unwrap();
            assert_eq!(t.len(), n);
            for (f, _, tok) in &t {
                assert_eq!(tok.is_anomaly(), *f >= expect_from, "n={n} f={f}");
            }
        }
    }

    #[test]
    fn missing_lmax_entry_is_error() {
        let e = ep(vec![seg(0, 3, "x", false)]);
        assert!(label_targets(&e, &LmaxTable::default(), 20).is_err());
    }
}
