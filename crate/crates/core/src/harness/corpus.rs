//! Critic training corpus: demonstrations, annotation, labeling.

use std::collections::{BTreeSet, VecDeque};
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::campaign::sha256_hex;
use crate::agents::{
    anomaly_visible, next_script_goal, oracle_tokens, Cerebellum, CerebellumConfig, ScriptedCerebellum,
};
use crate::annotator::{
    annotate, write_annotated, write_trajectory, AnnotatedEpisode, NoisyRetriever, OracleRetriever,
    RawTrajectory, Retriever, Segment, TrajectoryFrame, DEFAULT_EPSILON,
};
use crate::critic_train::{compute_lmax, label_episode, write_frames, LabeledFrame, LmaxTable, DEFAULT_ANOMALY_WINDOW};
use crate::seed;
use crate::world::{
    inject_perturbations, observe, scenario_complete, scenario_init, step, subtask_done, vocabulary,
    ActionPair, Gripper, ScenarioConfig, ScenarioName, Side,
};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CorpusConfig {
    pub scenarios: Vec<ScenarioName>,
    pub episodes_per_scenario: usize,
    pub seed: u64,
    /// Drop probability of the demonstrating controller.
    pub p_drop: f64,
    /// Ticks the demonstrator keeps its goal after an accident appears.
    pub reaction_delay: u64,
    pub max_ticks: u64,
    pub epsilon: f64,
    pub delta_t: usize,
    pub anomaly_window: usize,
    /// Label corruption rate of the retriever; 0 uses the oracle.
    pub retriever_rho: f64,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            scenarios: ScenarioName::ALL.to_vec(),
            episodes_per_scenario: 20,
            seed: 7,
            p_drop: 0.05,
            reaction_delay: DEFAULT_ANOMALY_WINDOW as u64,
            max_ticks: 1500,
            epsilon: DEFAULT_EPSILON,
            delta_t: 5,
            anomaly_window: DEFAULT_ANOMALY_WINDOW,
            retriever_rho: 0.0,
        }
    }
}

impl CorpusConfig {
    pub fn validate(&self) -> Result<()> {
        if self.scenarios.is_empty() || self.episodes_per_scenario == 0 {
            return Err(Error::config("corpus needs at least one scenario and episode"));
        }
        if !(0.0..=1.0).contains(&self.p_drop) || !(0.0..=1.0).contains(&self.retriever_rho) {
            return Err(Error::config("p_drop and retriever_rho must lie in [0, 1]"));
        }
        if self.delta_t == 0 || self.anomaly_window == 0 {
            return Err(Error::config("delta_t and anomaly_window must be at least 1"));
        }
        Ok(())
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: CorpusConfig =
            toml::from_str(text).map_err(|e| Error::config(format!("corpus config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }
}

/// One demonstrator rollout and the goal segmentation it actually followed.
#[derive(Clone, Debug, PartialEq)]
pub struct Demonstration {
    pub scenario: ScenarioName,
    pub trajectory: RawTrajectory,
    pub features: Vec<Vec<f64>>,
    pub truth: Vec<Segment>,
}

fn close_segment(truth: &mut Vec<Segment>, start: usize, end: usize, label: String, anomaly: bool) {
    match truth.last_mut() {
        Some(prev) if prev.label == label => {
            prev.end = end;
            prev.anomaly |= anomaly;
        }
        _ => truth.push(Segment {
            start,
            end,
            label,
            anomaly,
        }),
    }
}

/// Ground-truth demonstrator: structured oracle goals, switched when the
/// simulator reports one done or `reaction_delay` ticks after an accident
/// becomes visible. Only a segment abandoned over an accident is anomalous;
/// one that completes anyway is not. Segments carry the plain goal text.
pub fn demonstrate(id: &str, scenario: &ScenarioConfig, cfg: &CorpusConfig) -> Result<Demonstration> {
    let cb = ScriptedCerebellum::new(
        CerebellumConfig {
            p_drop: cfg.p_drop,
            ..Default::default()
        },
        scenario.seed,
    );
    let mut world = inject_perturbations(&scenario_init(scenario)?, scenario)?;
    let mut goal = oracle_tokens(&world, next_script_goal(&world)?)?;
    let mut buffer: VecDeque<ActionPair> = VecDeque::new();
    let mut frames = Vec::new();
    let mut features = Vec::new();
    let mut truth = Vec::new();
    let mut seg_start = 0usize;
    let mut accident_since: Option<u64> = None;

    let snapshot = |w: &crate::world::WorldState| TrajectoryFrame {
        left: w.arm(Side::Left).ee_position,
        right: w.arm(Side::Right).ee_position,
        left_closed: w.arm(Side::Left).gripper == Gripper::Closed,
        right_closed: w.arm(Side::Right).gripper == Gripper::Closed,
    };

    while world.tick < cfg.max_ticks && !scenario_complete(&world) {
        let t = world.tick;
        let reacted = accident_since.is_some_and(|s| t - s >= cfg.reaction_delay);
        if subtask_done(&world, &goal)? || reacted {
            let i = frames.len();
            if i > seg_start {
                close_segment(&mut truth, seg_start, i - 1, goal.plain_text(), reacted);
                seg_start = i;
            }
            goal = oracle_tokens(&world, next_script_goal(&world)?)?;
            buffer.clear();
            accident_since = None;
        }
        if accident_since.is_none() && anomaly_visible(&world, &goal) {
            accident_since = Some(t);
        }
        if buffer.is_empty() {
            buffer.extend(cb.act(&observe(&world), &world.arms, &goal)?.actions);
        }
        let action = buffer
            .pop_front()
            .ok_or_else(|| Error::Agent("controller returned an empty chunk".into()))?;
        frames.push(snapshot(&world));
        features.push(observe(&world).features);
        world = inject_perturbations(&step(&world, &action), scenario)?;
    }
    frames.push(snapshot(&world));
    features.push(observe(&world).features);
    close_segment(&mut truth, seg_start, frames.len() - 1, goal.plain_text(), accident_since.is_some());

    Ok(Demonstration {
        scenario: scenario.name,
        trajectory: RawTrajectory::new(id, frames)?,
        features,
        truth,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub trajectories: Vec<RawTrajectory>,
    /// Segmentation the demonstrator followed, one per trajectory.
    pub truth: Vec<AnnotatedEpisode>,
    /// Segmentation recovered by the annotator.
    pub annotated: Vec<AnnotatedEpisode>,
    pub lmax: LmaxTable,
    pub frames: Vec<LabeledFrame>,
}

pub fn episode_id(scenario: ScenarioName, episode: usize) -> String {
    format!("{scenario}-{episode:03}")
}

/// Demonstrate, annotate and label. Episode `e` of the `k`-th scenario is
/// seeded with `mix(seed, k, e)`.
pub fn make_training_corpus(cfg: &CorpusConfig) -> Result<Corpus> {
    cfg.validate()?;
    let mut trajectories = Vec::new();
    let mut truth = Vec::new();
    let mut annotated = Vec::new();
    let mut features = Vec::new();
    for (k, &name) in cfg.scenarios.iter().enumerate() {
        let vocab: Vec<String> = vocabulary(name.family()).iter().map(|g| g.plain_text()).collect();
        for e in 0..cfg.episodes_per_scenario {
            let ep_seed = seed::mix(&[cfg.seed, k as u64, e as u64]);
            let id = episode_id(name, e);
            let demo = demonstrate(&id, &ScenarioConfig::preset(name, ep_seed), cfg)?;
            let oracle = OracleRetriever::new(demo.truth.clone(), Some(vocab.clone()));
            let noisy;
            let retriever: &dyn Retriever = if cfg.retriever_rho > 0.0 {
                noisy = NoisyRetriever {
                    inner: oracle.clone(),
                    rho: cfg.retriever_rho,
                    seed: ep_seed,
                };
                &noisy
            } else {
                &oracle
            };
            annotated.push(annotate(&demo.trajectory, retriever, cfg.epsilon, cfg.delta_t)?);
            truth.push(AnnotatedEpisode {
                source: id,
                segments: demo.truth,
            });
            trajectories.push(demo.trajectory);
            features.push(demo.features);
        }
    }
    let lmax = compute_lmax(&annotated)?;
    let mut frames = Vec::new();
    for (ep, f) in annotated.iter().zip(&features) {
        frames.extend(label_episode(ep, f, &lmax, cfg.anomaly_window)?);
    }
    Ok(Corpus {
        trajectories,
        truth,
        annotated,
        lmax,
        frames,
    })
}

/// Deterministic episode-level split: every `k`-th distinct source episode
/// (in sorted order, starting with the last of each block) is held out.
pub fn split_heldout(frames: &[LabeledFrame], k: usize) -> (Vec<LabeledFrame>, Vec<LabeledFrame>) {
    let sources: BTreeSet<&str> = frames.iter().map(|f| f.source_episode.as_str()).collect();
    let held: BTreeSet<&str> = sources
        .iter()
        .enumerate()
        .filter(|(i, _)| k > 0 && i % k == k - 1)
        .map(|(_, s)| *s)
        .collect();
    frames
        .iter()
        .cloned()
        .partition(|f| !held.contains(f.source_episode.as_str()))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub config: CorpusConfig,
    pub episodes: usize,
    pub frames: usize,
    pub anomaly_frames: usize,
    pub files: Vec<(String, String)>,
}

/// Writes `trajectories/*.traj`, `annotated/*.ann`, `truth/*.ann`,
/// `frames.jsonl`, `lmax.json` and `manifest.json` with sha256 digests.
pub fn write_corpus(dir: &Path, cfg: &CorpusConfig, corpus: &Corpus) -> Result<CorpusManifest> {
    for sub in ["trajectories", "annotated", "truth"] {
        fs::create_dir_all(dir.join(sub))?;
    }
    let mut files = Vec::new();
    let mut put = |rel: String, bytes: Vec<u8>| -> Result<()> {
        fs::write(dir.join(&rel), &bytes)?;
        files.push((rel, sha256_hex(&bytes)));
        Ok(())
    };
    for ((t, a), g) in corpus.trajectories.iter().zip(&corpus.annotated).zip(&corpus.truth) {
        put(format!("trajectories/{}.traj", t.id), write_trajectory(t).into_bytes())?;
        put(format!("annotated/{}.ann", a.source), write_annotated(a).into_bytes())?;
        put(format!("truth/{}.ann", g.source), write_annotated(g).into_bytes())?;
    }
    let mut buf = Vec::new();
    write_frames(&mut buf, &corpus.frames)?;
    put("frames.jsonl".into(), buf)?;
    put("lmax.json".into(), serde_json::to_vec_pretty(&corpus.lmax)?)?;
    let manifest = CorpusManifest {
        config: cfg.clone(),
        episodes: corpus.trajectories.len(),
        frames: corpus.frames.len(),
        anomaly_frames: corpus.frames.iter().filter(|f| f.target.is_anomaly()).count(),
        files,
    };
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    fs::write(dir.join("manifest.json"), text)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenarios: Vec<ScenarioName>, n: usize) -> CorpusConfig {
        CorpusConfig {
            scenarios,
            episodes_per_scenario: n,
            ..Default::default()
        }
    }

    #[test]
    fn ordered_labels_stay_in_vocabulary() {
        let c = make_training_corpus(&small(vec![ScenarioName::Ordered], 5)).unwrap();
        let vocab: Vec<String> = vocabulary(ScenarioName::Ordered.family())
            .iter()
            .map(|g| g.plain_text())
            .collect();
        for ep in &c.annotated {
            for s in &ep.segments {
                assert!(vocab.contains(&s.label), "{}", s.label);
            }
        }
        for (t, ep) in c.trajectories.iter().zip(&c.annotated) {
            ep.validate(Some(t.len() - 1)).unwrap();
        }
    }

    #[test]
    fn fallen_episodes_carry_anomaly_frames() {
        let c = make_training_corpus(&small(vec![ScenarioName::Fallen], 4)).unwrap();
        assert!(c.frames.iter().any(|f| f.target.is_anomaly()));
        assert!(c.truth.iter().any(|e| e.segments.iter().any(|s| s.anomaly)));
    }

    #[test]
    fn fixed_seed_gives_identical_bytes() {
        let cfg = small(vec![ScenarioName::Fallen, ScenarioName::TidyDesk], 2);
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        let ma = write_corpus(a.path(), &cfg, &make_training_corpus(&cfg).unwrap()).unwrap();
        let mb = write_corpus(b.path(), &cfg, &make_training_corpus(&cfg).unwrap()).unwrap();
        assert_eq!(ma, mb);
        assert_eq!(
            fs::read(a.path().join("frames.jsonl")).unwrap(),
            fs::read(b.path().join("frames.jsonl")).unwrap()
        );
    }

    #[test]
    fn split_is_by_episode() {
        let c = make_training_corpus(&small(vec![ScenarioName::Ordered], 5)).unwrap();
        let (train, held) = split_heldout(&c.frames, 5);
        assert_eq!(train.len() + held.len(), c.frames.len());
        let hs: BTreeSet<_> = held.iter().map(|f| &f.source_episode).collect();
        assert_eq!(hs.len(), 1);
        assert!(train.iter().all(|f| !hs.contains(&f.source_episode)));
    }
}
