use rand::Rng;

use super::{RawTrajectory, Segment};
use crate::seed;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Retrieval {
    pub label: String,
    /// The queried moment belongs to a failed attempt.
    pub anomalous: bool,
}

/// Maps a frame to one entry of a closed label vocabulary.
pub trait Retriever: Send + Sync {
    fn vocabulary(&self) -> &[String];

    fn retrieve(&self, frame: usize, traj: &RawTrajectory) -> Result<Retrieval>;
}

/// Reads labels from a known ground-truth segmentation.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleRetriever {
    pub truth: Vec<Segment>,
    pub vocabulary: Vec<String>,
}

impl OracleRetriever {
    /// Vocabulary defaults to the distinct labels of `truth`, in order of
    /// first appearance.
    pub fn new(truth: Vec<Segment>, vocabulary: Option<Vec<String>>) -> Self {
        let vocabulary = vocabulary.unwrap_or_else(|| {
            let mut v: Vec<String> = Vec::new();
            for s in &truth {
                if !v.contains(&s.label) {
                    v.push(s.label.clone());
                }
            }
            v
        });
        OracleRetriever { truth, vocabulary }
    }
}

impl Retriever for OracleRetriever {
    fn vocabulary(&self) -> &[String] {
        &self.vocabulary
    }

    fn retrieve(&self, frame: usize, _: &RawTrajectory) -> Result<Retrieval> {
        if self.vocabulary.is_empty() {
            return Err(Error::Annotation("empty label vocabulary".into()));
        }
        let seg = self
            .truth
            .iter()
            .find(|s| s.contains(frame))
            .ok_or_else(|| Error::Annotation(format!("frame {frame} outside ground truth")))?;
        Ok(Retrieval {
            label: seg.label.clone(),
            anomalous: seg.anomaly,
        })
    }
}

/// The oracle, except that each query independently returns a wrong
/// vocabulary entry with probability `rho`.
#[derive(Clone, Debug, PartialEq)]
pub struct NoisyRetriever {
    pub inner: OracleRetriever,
    pub rho: f64,
    pub seed: u64,
}

impl Retriever for NoisyRetriever {
    fn vocabulary(&self) -> &[String] {
        self.inner.vocabulary()
    }

    fn retrieve(&self, frame: usize, traj: &RawTrajectory) -> Result<Retrieval> {
        let truth = self.inner.retrieve(frame, traj)?;
        let mut rng = seed::rng(&[self.seed, seed::hash_str(&traj.id), frame as u64]);
        if rng.random::<f64>() >= self.rho {
            return Ok(truth);
        }
        let wrong: Vec<&String> = self.vocabulary().iter().filter(|l| **l != truth.label).collect();
        if wrong.is_empty() {
            return Ok(truth);
        }
        Ok(Retrieval {
            label: wrong[rng.random_range(0..wrong.len())].clone(),
            anomalous: truth.anomalous,
        })
    }
}
