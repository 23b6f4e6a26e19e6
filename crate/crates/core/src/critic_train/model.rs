//! Learned critic: a pooled anomaly head shared by every goal, plus one
//! multinomial logistic regression over the 101 progress bins per goal.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::features::{goal_features, pooled_features};
use super::labeling::LabeledFrame;
use super::value::{ValueToken, NUM_BINS, NUM_CLASSES};
use crate::agents::{Critic, CriticVerdict, SubtaskGoal};
use crate::seed;
use crate::world::{goal_from_label, Observation};
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub l2: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 60,
            learning_rate: 0.05,
            batch_size: 64,
            l2: 1e-5,
            seed: 0,
        }
    }
}

/// Standardizer plus a `classes x (dim + 1)` weight matrix; the last column
/// is the bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoalModel {
    pub classes: usize,
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
    pub weights: Vec<f64>,
    pub examples: usize,
}

impl GoalModel {
    fn dim(&self) -> usize {
        self.mean.len()
    }

    fn standardize(&self, x: &[f64], out: &mut Vec<f64>) {
        out.clear();
        out.extend(x.iter().zip(&self.mean).zip(&self.scale).map(|((v, m), s)| (v - m) / s));
        out.push(1.0);
    }

    fn logits(&self, z: &[f64], out: &mut [f64]) {
        let w = self.dim() + 1;
        for (c, o) in out.iter_mut().take(self.classes).enumerate() {
            let row = &self.weights[c * w..(c + 1) * w];
            *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
        }
    }

    /// Argmax class; ties go to the lowest index.
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut z = Vec::with_capacity(self.dim() + 1);
        self.standardize(x, &mut z);
        let mut logits = [0.0; NUM_CLASSES];
        self.logits(&z, &mut logits);
        let mut best = 0;
        for c in 1..self.classes {
            if logits[c] > logits[best] {
                best = c;
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub corpus_id: String,
    pub config: TrainConfig,
    /// Per epoch: anomaly-head cross-entropy plus the frame-weighted mean of
    /// the per-goal bin cross-entropies.
    pub loss_history: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LearnedCritic {
    /// Two classes: progress, anomaly.
    pub anomaly_head: GoalModel,
    /// Progress bins per goal label.
    pub models: BTreeMap<String, GoalModel>,
    pub meta: TrainingMeta,
}

fn softmax_in_place(v: &mut [f64]) {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - m).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

const HEAD_SEED: u64 = 0x68656164;

struct Adam {
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    const B1: f64 = 0.9;
    const B2: f64 = 0.999;

    fn new(n: usize) -> Self {
        Adam {
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    fn step(&mut self, w: &mut [f64], g: &[f64], lr: f64) {
        self.t += 1;
        let c1 = 1.0 - Self::B1.powi(self.t);
        let c2 = 1.0 - Self::B2.powi(self.t);
        for i in 0..w.len() {
            self.m[i] = Self::B1 * self.m[i] + (1.0 - Self::B1) * g[i];
            self.v[i] = Self::B2 * self.v[i] + (1.0 - Self::B2) * g[i] * g[i];
            w[i] -= lr * (self.m[i] / c1) / ((self.v[i] / c2).sqrt() + 1e-8);
        }
    }
}

fn fit_standardizer(xs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mut mean = vec![0.0; d];
    for x in xs {
        for (m, v) in mean.iter_mut().zip(x) {
            *m += v / n;
        }
    }
    let mut var = vec![0.0; d];
    for x in xs {
        for ((s, v), m) in var.iter_mut().zip(x).zip(&mean) {
            *s += (v - m) * (v - m) / n;
        }
    }
    let scale = var
        .into_iter()
        .map(|s| if s.sqrt() > 1e-9 { s.sqrt() } else { 1.0 })
        .collect();
    (mean, scale)
}

/// Gradient step bookkeeping for one goal; returns per-epoch mean losses.
fn fit_goal(
    xs: &[Vec<f64>],
    ys: &[usize],
    classes: usize,
    cfg: &TrainConfig,
    goal_seed: u64,
) -> (GoalModel, Vec<f64>) {
    let (mean, scale) = fit_standardizer(xs);
    let d = mean.len() + 1;
    let mut model = GoalModel {
        classes,
        mean,
        scale,
        weights: vec![0.0; classes * d],
        examples: xs.len(),
    };
    let z: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            let mut z = Vec::with_capacity(d);
            model.standardize(x, &mut z);
            z
        })
        .collect();
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = seed::rng(&[cfg.seed, goal_seed]);
    let mut adam = Adam::new(model.weights.len());
    let mut grad = vec![0.0; model.weights.len()];
    let mut buf = [0.0; NUM_CLASSES];
    let probs = &mut buf[..classes];
    let mut losses = Vec::with_capacity(cfg.epochs);
    let batch = cfg.batch_size.max(1);
    for _ in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            let inv = 1.0 / chunk.len() as f64;
            for &i in chunk {
                model.logits(&z[i], probs);
                softmax_in_place(probs);
                epoch_loss -= probs[ys[i]].max(1e-300).ln();
                probs[ys[i]] -= 1.0;
                for (c, p) in probs.iter().enumerate() {
                    if p.abs() < 1e-12 {
                        continue;
                    }
                    let row = &mut grad[c * d..(c + 1) * d];
                    for (g, zi) in row.iter_mut().zip(&z[i]) {
                        *g += p * zi * inv;
                    }
                }
            }
            for (g, w) in grad.iter_mut().zip(&model.weights) {
                *g += cfg.l2 * w;
            }
            adam.step(&mut model.weights, &grad, cfg.learning_rate);
        }
        losses.push(epoch_loss / xs.len() as f64);
    }
    (model, losses)
}

/// Train one classifier per goal label with default hyper-parameters.
pub fn train_critic(frames: &[LabeledFrame], epochs: usize, seed: u64) -> Result<LearnedCritic> {
    let cfg = TrainConfig {
        epochs,
        seed,
        ..TrainConfig::default()
    };
    train_critic_with(frames, &cfg, "unnamed")
}

pub fn train_critic_with(
    frames: &[LabeledFrame],
    cfg: &TrainConfig,
    corpus_id: &str,
) -> Result<LearnedCritic> {
    if frames.is_empty() {
        return Err(Error::Training("no training frames".into()));
    }
    let mut head_x = Vec::with_capacity(frames.len());
    let mut head_y = Vec::with_capacity(frames.len());
    let mut by_goal: BTreeMap<&str, (Vec<Vec<f64>>, Vec<usize>)> = BTreeMap::new();
    for f in frames {
        let x = goal_features(&f.features, &f.goal)?;
        head_x.push(pooled_features(&x, &f.goal)?);
        head_y.push(f.target.is_anomaly() as usize);
        if let ValueToken::Progress(b) = f.target {
            let e = by_goal.entry(&f.goal).or_default();
            e.0.push(x);
            e.1.push(usize::from(b.get()));
        }
    }
    let (anomaly_head, mut history) = fit_goal(&head_x, &head_y, 2, cfg, HEAD_SEED);
    let progress_frames: usize = by_goal.values().map(|(xs, _)| xs.len()).sum();
    let mut models = BTreeMap::new();
    for (goal, (xs, ys)) in &by_goal {
        let (model, losses) = fit_goal(xs, ys, NUM_BINS, cfg, seed::hash_str(goal));
        let w = xs.len() as f64 / progress_frames as f64;
        for (h, l) in history.iter_mut().zip(&losses) {
            *h += w * l;
        }
        models.insert(goal.to_string(), model);
    }
    for (e, l) in history.iter().enumerate() {
        log::debug!("epoch {e}: loss {l:.5}");
    }
    let tail = &history[history.len() - history.len() / 4..];
    if tail.windows(2).any(|w| w[1] > w[0] + 1e-9) {
        log::warn!("training loss rose during the final quarter of epochs");
    }
    Ok(LearnedCritic {
        anomaly_head,
        models,
        meta: TrainingMeta {
            corpus_id: corpus_id.to_string(),
            config: cfg.clone(),
            loss_history: history,
        },
    })
}

impl LearnedCritic {
    /// Model for `goal_label`, else the best-trained model sharing its verb.
    pub fn model_for(&self, goal_label: &str) -> Result<&GoalModel> {
        if let Some(m) = self.models.get(goal_label) {
            return Ok(m);
        }
        let missing = || Error::Evaluation(format!("no model for goal {goal_label:?}"));
        let verb = goal_from_label(goal_label).ok_or_else(missing)?.verb;
        self.models
            .iter()
            .filter(|(g, _)| goal_from_label(g).is_some_and(|g| g.verb == verb))
            .max_by_key(|(_, m)| m.examples)
            .map(|(_, m)| m)
            .ok_or_else(missing)
    }

    pub fn predict(&self, raw: &[f64], goal_label: &str) -> Result<ValueToken> {
        let x = goal_features(raw, goal_label)?;
        if self.anomaly_head.predict(&pooled_features(&x, goal_label)?) == 1 {
            return Ok(ValueToken::Anomaly);
        }
        ValueToken::from_class(self.model_for(goal_label)?.predict(&x))
    }

    pub fn predict_frame(&self, frame: &LabeledFrame) -> Result<ValueToken> {
        self.predict(&frame.features, &frame.goal)
    }
}

impl Critic for LearnedCritic {
    fn eval(&self, obs: &Observation, goal: &SubtaskGoal) -> Result<CriticVerdict> {
        Ok(CriticVerdict {
            output: self.predict(&obs.features, &goal.plain_text())?,
            evaluated_at_tick: obs.tick,
        })
    }
}

/// Anomaly-vs-progress confusion counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub true_anomaly: usize,
    pub false_anomaly: usize,
    pub missed_anomaly: usize,
    pub true_progress: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub frames: usize,
    /// Mean |predicted bin - target bin| over frames where both are bins.
    pub bin_mae: Option<f64>,
    /// `None` when nothing was predicted as an anomaly.
    pub anomaly_precision: Option<f64>,
    /// `None` when the held-out set has no anomaly frames.
    pub anomaly_recall: Option<f64>,
    pub confusion: Confusion,
}

/// Score any predictor against labeled frames.
pub fn evaluate<F>(frames: &[LabeledFrame], mut predict: F) -> Result<Metrics>
where
    F: FnMut(&LabeledFrame) -> Result<ValueToken>,
{
    if frames.is_empty() {
        return Err(Error::Evaluation("empty held-out set".into()));
    }
    let mut c = Confusion::default();
    let (mut abs, mut n) = (0u64, 0u64);
    for f in frames {
        let p = predict(f)?;
        match (f.target, p) {
            (ValueToken::Anomaly, ValueToken::Anomaly) => c.true_anomaly += 1,
            (ValueToken::Anomaly, ValueToken::Progress(_)) => c.missed_anomaly += 1,
            (ValueToken::Progress(_), ValueToken::Anomaly) => c.false_anomaly += 1,
            (ValueToken::Progress(t), ValueToken::Progress(q)) => {
                c.true_progress += 1;
                abs += u64::from(t.get().abs_diff(q.get()));
                n += 1;
            }
        }
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| a as f64 / b as f64);
    Ok(Metrics {
        frames: frames.len(),
        bin_mae: (n > 0).then(|| abs as f64 / n as f64),
        anomaly_precision: ratio(c.true_anomaly, c.true_anomaly + c.false_anomaly),
        anomaly_recall: ratio(c.true_anomaly, c.true_anomaly + c.missed_anomaly),
        confusion: c,
    })
}

pub fn eval_critic(critic: &LearnedCritic, heldout: &[LabeledFrame]) -> Result<Metrics> {
    evaluate(heldout, |f| critic.predict_frame(f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::critic_train::Bin;
    use crate::world::{observe, scenario_init, ScenarioConfig, ScenarioName};

    fn frame(target: ValueToken) -> LabeledFrame {
        LabeledFrame {
            features: vec![],
            goal: "g".into(),
            target,
            source_episode: "e".into(),
            frame_index: 0,
        }
    }

    fn bin(b: u32) -> ValueToken {
        ValueToken::Progress(Bin::new(b).unwrap())
    }

    #[test]
    fn perfect_predictor_scores_perfectly() {
        let frames: Vec<_> = [bin(3), bin(90), ValueToken::Anomaly].map(frame).to_vec();
        let m = evaluate(&frames, |f| Ok(f.target)).unwrap();
        assert_eq!(m.bin_mae, Some(0.0));
        assert_eq!(m.anomaly_precision, Some(1.0));
        assert_eq!(m.anomaly_recall, Some(1.0));
    }

    #[test]
    fn constant_predictor_mae_by_enumeration() {
        let frames: Vec<_> = (0..=100).map(|b| frame(bin(b))).collect();
        let m = evaluate(&frames, |_| Ok(bin(50))).unwrap();
        let want: f64 = (0..=100i32).map(|b| (b - 50).abs() as f64).sum::<f64>() / 101.0;
        assert!((m.bin_mae.unwrap() - want).abs() < 1e-12);
        assert_eq!(m.anomaly_recall, None);
        assert_eq!(m.anomaly_precision, None);
    }

    fn corpus_frames(goal: &str, targets: &[ValueToken]) -> Vec<LabeledFrame> {
        let w = scenario_init(&ScenarioConfig::preset(ScenarioName::Ordered, 1)).unwrap();
        let raw = observe(&w).features;
        targets
            .iter()
            .enumerate()
            .map(|(i, t)| LabeledFrame {
                features: raw.clone(),
                goal: goal.into(),
                target: *t,
                source_episode: "e".into(),
                frame_index: i,
            })
            .collect()
    }

    #[test]
    fn anomaly_only_goal_always_predicts_anomaly() {
        let frames = corpus_frames("right the cup", &[ValueToken::Anomaly; 12]);
        let critic = train_critic(&frames, 20, 1).unwrap();
        for f in &frames {
            assert_eq!(critic.predict_frame(f).unwrap(), ValueToken::Anomaly);
        }
    }

    #[test]
    fn training_is_deterministic() {
        let mut targets = vec![bin(10); 5];
        targets.extend([bin(70); 5]);
        let frames = corpus_frames("stack the large bowl on the plate", &targets);
        let a = train_critic(&frames, 10, 5).unwrap();
        let b = train_critic(&frames, 10, 5).unwrap();
        assert_eq!(a, b);
        assert!(train_critic(&[], 10, 5).is_err());
    }

    #[test]
    fn unseen_goal_borrows_a_same_verb_model() {
        let frames = corpus_frames("right the cup", &[bin(40); 12]);
        let critic = train_critic(&frames, 20, 1).unwrap();
        let raw = &frames[0].features;
        assert_eq!(critic.predict(raw, "right the small bowl").unwrap(), bin(40));
        assert!(critic.predict(raw, "pick and place the cup").is_err());
    }
}
